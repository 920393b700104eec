"""Hot numeric kernels: bilinear resampling, TPS map evaluation, k-means assignment.

Each kernel has a pure-numpy implementation and, when numba is importable, an
@njit-compiled twin. The active path is chosen at import time; set
``MASKFORGE_NUMBA=0`` to force the numpy fallback (see benchmarks/bench_kernels.py
for the speed difference).
"""

from __future__ import annotations

import os

import numpy as np

_flag = os.environ.get("MASKFORGE_NUMBA", "1").strip().lower()
_WANT_NUMBA = _flag not in ("0", "false", "no", "off")

USING_NUMBA = False
if _WANT_NUMBA:
    try:
        from numba import njit as _njit

        USING_NUMBA = True
    except ImportError:
        USING_NUMBA = False

# Snap sub-pixel coordinates this close to an integer onto it, so identity and
# integer-translation warps reproduce pixels bit-exactly.
_SNAP = 1e-9


# ---------------------------------------------------------------------------
# numpy implementations
# ---------------------------------------------------------------------------

def _bilinear_weights_np(mx, my, h, w):
    x0 = np.floor(mx)
    y0 = np.floor(my)
    fx = mx - x0
    fy = my - y0
    # snap near-integer coordinates
    hi_x = fx > 1.0 - _SNAP
    hi_y = fy > 1.0 - _SNAP
    x0 = x0 + hi_x
    y0 = y0 + hi_y
    fx = np.where(hi_x | (fx < _SNAP), 0.0, fx)
    fy = np.where(hi_y | (fy < _SNAP), 0.0, fy)
    return x0.astype(np.int64), y0.astype(np.int64), fx, fy


def sample_rgba_np(img, mx, my):
    """Bilinear-sample an RGBA image at (mx, my); outside pixels are transparent."""
    h, w = img.shape[:2]
    x0, y0, fx, fy = _bilinear_weights_np(mx, my, h, w)
    out = np.zeros(mx.shape + (4,), dtype=np.float64)
    # a sample is valid if every contributing texel exists
    x1 = np.where(fx > 0.0, x0 + 1, x0)
    y1 = np.where(fy > 0.0, y0 + 1, y0)
    valid = (x0 >= 0) & (y0 >= 0) & (x1 <= w - 1) & (y1 <= h - 1)
    xv0 = np.clip(x0, 0, w - 1)
    yv0 = np.clip(y0, 0, h - 1)
    xv1 = np.clip(x1, 0, w - 1)
    yv1 = np.clip(y1, 0, h - 1)
    w00 = (1.0 - fx) * (1.0 - fy)
    w10 = fx * (1.0 - fy)
    w01 = (1.0 - fx) * fy
    w11 = fx * fy
    acc = (
        img[yv0, xv0] * w00[..., None]
        + img[yv0, xv1] * w10[..., None]
        + img[yv1, xv0] * w01[..., None]
        + img[yv1, xv1] * w11[..., None]
    )
    out[valid] = acc[valid]
    return out


def sample_rgb_clamp_np(img, mx, my):
    """Bilinear-sample an RGB image at (mx, my) with edge clamping."""
    h, w = img.shape[:2]
    x0, y0, fx, fy = _bilinear_weights_np(mx, my, h, w)
    x1 = np.where(fx > 0.0, x0 + 1, x0)
    y1 = np.where(fy > 0.0, y0 + 1, y0)
    xv0 = np.clip(x0, 0, w - 1)
    yv0 = np.clip(y0, 0, h - 1)
    xv1 = np.clip(x1, 0, w - 1)
    yv1 = np.clip(y1, 0, h - 1)
    w00 = (1.0 - fx) * (1.0 - fy)
    w10 = fx * (1.0 - fy)
    w01 = (1.0 - fx) * fy
    w11 = fx * fy
    return (
        img[yv0, xv0] * w00[..., None]
        + img[yv0, xv1] * w10[..., None]
        + img[yv1, xv0] * w01[..., None]
        + img[yv1, xv1] * w11[..., None]
    )


def sample_labels_np(labels, mx, my, fill):
    """Nearest-neighbor sample of an integer label map; `fill` outside."""
    h, w = labels.shape
    xi = np.round(mx).astype(np.int64)
    yi = np.round(my).astype(np.int64)
    valid = (xi >= 0) & (yi >= 0) & (xi < w) & (yi < h)
    out = np.full(mx.shape, fill, dtype=labels.dtype)
    out[valid] = labels[yi[valid], xi[valid]]
    return out


def affine_map_np(inv, out_w, out_h):
    """Source coordinates for every output pixel under the inverse affine `inv` (2x3)."""
    xs = np.arange(out_w, dtype=np.float64)
    ys = np.arange(out_h, dtype=np.float64)
    X, Y = np.meshgrid(xs, ys)
    mx = inv[0, 0] * X + inv[0, 1] * Y + inv[0, 2]
    my = inv[1, 0] * X + inv[1, 1] * Y + inv[1, 2]
    return mx, my


def tps_map_np(ctrl, wx, wy, ax, ay, out_w, out_h, step=1):
    """Evaluate a TPS coordinate map on a grid with node spacing `step`.

    Returns (mx, my) of shape (ceil((out_h-1)/step)+1, ceil((out_w-1)/step)+1)
    holding the warp value at node (i*step, j*step). step=1 is per-pixel.
    """
    nx = (out_w - 1) // step + 1 if out_w > 1 else 1
    ny = (out_h - 1) // step + 1 if out_h > 1 else 1
    xs = np.arange(nx, dtype=np.float64) * step
    ys = np.arange(ny, dtype=np.float64) * step
    X, Y = np.meshgrid(xs, ys)
    pts = np.stack([X.ravel(), Y.ravel()], axis=1)
    d2 = ((pts[:, None, :] - ctrl[None, :, :]) ** 2).sum(axis=2)
    u = d2 * np.log(np.where(d2 > 0.0, d2, 1.0))
    mx = ax[0] + ax[1] * pts[:, 0] + ax[2] * pts[:, 1] + u @ wx
    my = ay[0] + ay[1] * pts[:, 0] + ay[2] * pts[:, 1] + u @ wy
    return mx.reshape(ny, nx), my.reshape(ny, nx)


def kmeans_assign_np(pts, cents):
    """Assign each point to its nearest centroid. Returns (labels, squared dists)."""
    d2 = ((pts[:, None, :] - cents[None, :, :]) ** 2).sum(axis=2)
    labels = np.argmin(d2, axis=1)
    return labels.astype(np.int64), d2[np.arange(pts.shape[0]), labels]


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

if USING_NUMBA:

    @_njit(cache=True)
    def _sample_rgba_nb(img, mx, my):
        h, w = img.shape[:2]
        oh, ow = mx.shape
        out = np.zeros((oh, ow, 4), dtype=np.float64)
        for j in range(oh):
            for i in range(ow):
                x = mx[j, i]
                y = my[j, i]
                x0 = np.floor(x)
                y0 = np.floor(y)
                fx = x - x0
                fy = y - y0
                if fx > 1.0 - _SNAP:
                    x0 += 1.0
                    fx = 0.0
                elif fx < _SNAP:
                    fx = 0.0
                if fy > 1.0 - _SNAP:
                    y0 += 1.0
                    fy = 0.0
                elif fy < _SNAP:
                    fy = 0.0
                ix = int(x0)
                iy = int(y0)
                ix1 = ix + 1 if fx > 0.0 else ix
                iy1 = iy + 1 if fy > 0.0 else iy
                if ix < 0 or iy < 0 or ix1 > w - 1 or iy1 > h - 1:
                    continue
                w00 = (1.0 - fx) * (1.0 - fy)
                w10 = fx * (1.0 - fy)
                w01 = (1.0 - fx) * fy
                w11 = fx * fy
                for c in range(4):
                    out[j, i, c] = (
                        img[iy, ix, c] * w00
                        + img[iy, ix1, c] * w10
                        + img[iy1, ix, c] * w01
                        + img[iy1, ix1, c] * w11
                    )
        return out

    @_njit(cache=True)
    def _sample_rgb_clamp_nb(img, mx, my):
        h, w = img.shape[:2]
        oh, ow = mx.shape
        nc = img.shape[2]
        out = np.empty((oh, ow, nc), dtype=np.float64)
        for j in range(oh):
            for i in range(ow):
                x = mx[j, i]
                y = my[j, i]
                x0 = np.floor(x)
                y0 = np.floor(y)
                fx = x - x0
                fy = y - y0
                if fx > 1.0 - _SNAP:
                    x0 += 1.0
                    fx = 0.0
                elif fx < _SNAP:
                    fx = 0.0
                if fy > 1.0 - _SNAP:
                    y0 += 1.0
                    fy = 0.0
                elif fy < _SNAP:
                    fy = 0.0
                ix = int(x0)
                iy = int(y0)
                ix1 = ix + 1 if fx > 0.0 else ix
                iy1 = iy + 1 if fy > 0.0 else iy
                ix = min(max(ix, 0), w - 1)
                iy = min(max(iy, 0), h - 1)
                ix1 = min(max(ix1, 0), w - 1)
                iy1 = min(max(iy1, 0), h - 1)
                w00 = (1.0 - fx) * (1.0 - fy)
                w10 = fx * (1.0 - fy)
                w01 = (1.0 - fx) * fy
                w11 = fx * fy
                for c in range(nc):
                    out[j, i, c] = (
                        img[iy, ix, c] * w00
                        + img[iy, ix1, c] * w10
                        + img[iy1, ix, c] * w01
                        + img[iy1, ix1, c] * w11
                    )
        return out

    @_njit(cache=True)
    def _sample_labels_nb(labels, mx, my, fill):
        h, w = labels.shape
        oh, ow = mx.shape
        out = np.full((oh, ow), fill, dtype=labels.dtype)
        for j in range(oh):
            for i in range(ow):
                xi = int(np.round(mx[j, i]))
                yi = int(np.round(my[j, i]))
                if 0 <= xi < w and 0 <= yi < h:
                    out[j, i] = labels[yi, xi]
        return out

    @_njit(cache=True)
    def _tps_map_nb(ctrl, wx, wy, ax, ay, out_w, out_h, step):
        nx = (out_w - 1) // step + 1 if out_w > 1 else 1
        ny = (out_h - 1) // step + 1 if out_h > 1 else 1
        n = ctrl.shape[0]
        mx = np.empty((ny, nx), dtype=np.float64)
        my = np.empty((ny, nx), dtype=np.float64)
        for j in range(ny):
            y = float(j * step)
            for i in range(nx):
                x = float(i * step)
                sx = ax[0] + ax[1] * x + ax[2] * y
                sy = ay[0] + ay[1] * x + ay[2] * y
                for c in range(n):
                    dx = x - ctrl[c, 0]
                    dy = y - ctrl[c, 1]
                    d2 = dx * dx + dy * dy
                    if d2 > 0.0:
                        u = d2 * np.log(d2)
                        sx += wx[c] * u
                        sy += wy[c] * u
                mx[j, i] = sx
                my[j, i] = sy
        return mx, my

    @_njit(cache=True)
    def _kmeans_assign_nb(pts, cents):
        m = pts.shape[0]
        k = cents.shape[0]
        labels = np.empty(m, dtype=np.int64)
        dists = np.empty(m, dtype=np.float64)
        for i in range(m):
            best = 0
            bd = 1e300
            for c in range(k):
                d0 = pts[i, 0] - cents[c, 0]
                d1 = pts[i, 1] - cents[c, 1]
                d2 = pts[i, 2] - cents[c, 2]
                d = d0 * d0 + d1 * d1 + d2 * d2
                if d < bd:
                    bd = d
                    best = c
            labels[i] = best
            dists[i] = bd
        return labels, dists

    def tps_map_nb(ctrl, wx, wy, ax, ay, out_w, out_h, step=1):
        return _tps_map_nb(ctrl, wx, wy, ax, ay, out_w, out_h, step)

    sample_rgba = _sample_rgba_nb
    sample_rgb_clamp = _sample_rgb_clamp_nb
    sample_labels = _sample_labels_nb
    tps_map = tps_map_nb
    kmeans_assign = _kmeans_assign_nb
else:
    sample_rgba = sample_rgba_np
    sample_rgb_clamp = sample_rgb_clamp_np
    sample_labels = sample_labels_np
    tps_map = tps_map_np
    kmeans_assign = kmeans_assign_np

affine_map = affine_map_np


def upsample_map(node_mx, node_my, out_w, out_h, step):
    """Bilinearly interpolate coarse TPS node maps back to full resolution.

    Exact for affine maps, so identity and similarity warps survive the
    coarse-grid shortcut unchanged.
    """
    if step == 1:
        return node_mx[:out_h, :out_w], node_my[:out_h, :out_w]
    xs = np.arange(out_w, dtype=np.float64) / step
    ys = np.arange(out_h, dtype=np.float64) / step
    ix = np.minimum(xs.astype(np.int64), node_mx.shape[1] - 2)
    iy = np.minimum(ys.astype(np.int64), node_mx.shape[0] - 2)
    ix = np.maximum(ix, 0)
    iy = np.maximum(iy, 0)
    tx = xs - ix
    ty = ys - iy
    TX = tx[None, :]
    TY = ty[:, None]
    IX = ix[None, :]
    IY = iy[:, None]
    out = []
    for nodes in (node_mx, node_my):
        v00 = nodes[IY, IX]
        v10 = nodes[IY, IX + 1]
        v01 = nodes[IY + 1, IX]
        v11 = nodes[IY + 1, IX + 1]
        out.append(
            v00 * (1 - TX) * (1 - TY)
            + v10 * TX * (1 - TY)
            + v01 * (1 - TX) * TY
            + v11 * TX * TY
        )
    return out[0], out[1]


def warmup():
    """Trigger JIT compilation of every kernel so timed paths never pay it."""
    img4 = np.zeros((4, 4, 4), dtype=np.float64)
    img3 = np.zeros((4, 4, 3), dtype=np.float64)
    lab = np.zeros((4, 4), dtype=np.uint8)
    mx = np.ones((2, 2), dtype=np.float64)
    my = np.ones((2, 2), dtype=np.float64)
    sample_rgba(img4, mx, my)
    sample_rgb_clamp(img3, mx, my)
    sample_labels(lab, mx, my, np.uint8(0))
    ctrl = np.array([[0.0, 0.0], [3.0, 0.0], [0.0, 3.0]])
    z = np.zeros(3)
    tps_map(ctrl, z, z, np.array([0.0, 1.0, 0.0]), np.array([0.0, 0.0, 1.0]), 4, 4, 1)
    kmeans_assign(np.zeros((2, 3)), np.zeros((1, 3)))
