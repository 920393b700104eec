"""Color primitives: sRGB <-> CIELAB conversion, LAB cosine similarity, alpha compositing.

Images are float64 numpy arrays in [0, 1]: RGB is (H, W, 3), RGBA masks are
(H, W, 4) with straight (non-premultiplied) alpha. A pixel with A=0 carries no
makeup regardless of its RGB values. LAB uses the D65 white point, 2 degree
observer.
"""

from __future__ import annotations

import numpy as np

# sRGB <-> XYZ matrices for D65 (IEC 61966-2-1)
_RGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
_XYZ_TO_RGB = np.array(
    [
        [3.2404542, -1.5371385, -0.4985314],
        [-0.9692660, 1.8760108, 0.0415560],
        [0.0556434, -0.2040259, 1.0572252],
    ]
)
_D65 = np.array([0.95047, 1.0, 1.08883])

_LAB_EPS = 216.0 / 24389.0
_LAB_KAPPA = 24389.0 / 27.0

# LAB vectors with norm below this are degenerate (near-black) and treated as
# identical to anything, i.e. similarity 1 -> alpha 0.
DEGENERATE_NORM = 1e-9


def srgb_to_linear(c: np.ndarray) -> np.ndarray:
    c = np.asarray(c, dtype=np.float64)
    return np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)


def linear_to_srgb(c: np.ndarray) -> np.ndarray:
    c = np.asarray(c, dtype=np.float64)
    return np.where(c <= 0.0031308, c * 12.92, 1.055 * np.maximum(c, 0.0) ** (1.0 / 2.4) - 0.055)


def srgb_to_lab(img: np.ndarray) -> np.ndarray:
    """Convert sRGB values in [0, 1] to CIELAB (D65). Works on any (..., 3) array."""
    img = np.asarray(img, dtype=np.float64)
    if img.shape[-1] != 3:
        raise ValueError(f"expected (..., 3) sRGB array, got shape {img.shape}")
    xyz = srgb_to_linear(img) @ _RGB_TO_XYZ.T
    t = xyz / _D65
    f = np.where(t > _LAB_EPS, np.cbrt(t), (_LAB_KAPPA * t + 16.0) / 116.0)
    L = 116.0 * f[..., 1] - 16.0
    a = 500.0 * (f[..., 0] - f[..., 1])
    b = 200.0 * (f[..., 1] - f[..., 2])
    return np.stack([L, a, b], axis=-1)


def lab_to_srgb(lab: np.ndarray) -> np.ndarray:
    """Inverse of :func:`srgb_to_lab`; round-trips within 1e-4 per channel."""
    lab = np.asarray(lab, dtype=np.float64)
    if lab.shape[-1] != 3:
        raise ValueError(f"expected (..., 3) LAB array, got shape {lab.shape}")
    fy = (lab[..., 0] + 16.0) / 116.0
    fx = fy + lab[..., 1] / 500.0
    fz = fy - lab[..., 2] / 200.0
    f = np.stack([fx, fy, fz], axis=-1)
    f3 = f ** 3
    t = np.where(f3 > _LAB_EPS, f3, (116.0 * f - 16.0) / _LAB_KAPPA)
    xyz = t * _D65
    rgb = xyz @ _XYZ_TO_RGB.T
    return np.clip(linear_to_srgb(rgb), 0.0, 1.0)


def lab_cosine_similarity(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Cosine similarity between LAB vectors, broadcasting over leading dims.

    Vectors with norm < 1e-9 (degenerate black pixels) compare as identical:
    similarity 1.
    """
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    dot = (p * q).sum(axis=-1)
    np_ = np.linalg.norm(p, axis=-1)
    nq = np.linalg.norm(q, axis=-1)
    degenerate = (np_ < DEGENERATE_NORM) | (nq < DEGENERATE_NORM)
    denom = np.where(degenerate, 1.0, np_ * nq)
    sim = np.where(degenerate, 1.0, dot / denom)
    if sim.ndim == 0:
        return float(sim)
    return sim


def blend_over(fg: np.ndarray, bg: np.ndarray) -> np.ndarray:
    """Straight-alpha over: out = A*fg_rgb + (1-A)*bg_rgb, per channel."""
    fg = np.asarray(fg, dtype=np.float64)
    bg = np.asarray(bg, dtype=np.float64)
    a = fg[..., 3:4]
    return a * fg[..., :3] + (1.0 - a) * bg


def composite_mask(mask: np.ndarray, base: np.ndarray) -> np.ndarray:
    """Alpha-composite an RGBA mask over an RGB base image of the same size."""
    mask = np.asarray(mask, dtype=np.float64)
    base = np.asarray(base, dtype=np.float64)
    if mask.shape[:2] != base.shape[:2]:
        raise ValueError(
            f"mask dims {mask.shape[:2]} do not match base dims {base.shape[:2]}"
        )
    return blend_over(mask, base)


def over_rgba(fg: np.ndarray, bg: np.ndarray) -> np.ndarray:
    """Porter-Duff 'over' for two straight-alpha RGBA layers."""
    fg = np.asarray(fg, dtype=np.float64)
    bg = np.asarray(bg, dtype=np.float64)
    af = fg[..., 3:4]
    ab = bg[..., 3:4]
    ao = af + ab * (1.0 - af)
    rgb = fg[..., :3] * af + bg[..., :3] * ab * (1.0 - af)
    safe = np.where(ao > 0.0, ao, 1.0)
    return np.concatenate([rgb / safe, ao], axis=-1)


def new_mask(width: int, height: int) -> np.ndarray:
    """Fully transparent RGBA mask."""
    return np.zeros((height, width, 4), dtype=np.float64)
