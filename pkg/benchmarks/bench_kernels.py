#!/usr/bin/env python3
"""Benchmark the hot kernels: numba JIT path vs pure-numpy fallback.

Both implementations are always importable, so this times them side by side in
one process, then times the end-to-end per-frame apply path. Usage:

    python3 benchmarks/bench_kernels.py [--size 256] [--frames 50]

To run the whole package on the numpy path instead, set MASKFORGE_NUMBA=0.
"""

import argparse
import time

import numpy as np

from maskforge import _kernels, geometry, synthesis, video
from maskforge.geometry import LandmarkSet


def timeit(fn, repeats=10):
    fn()  # warm (JIT compile / cache fill)
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - t0) / repeats * 1000.0


def bench_kernels(size):
    rng = np.random.default_rng(0)
    img4 = rng.random((size, size, 4))
    img3 = rng.random((size, size, 3))
    labels = rng.integers(0, 19, (size, size)).astype(np.uint8)
    mx = rng.uniform(0, size - 1, (size, size))
    my = rng.uniform(0, size - 1, (size, size))
    ctrl = rng.uniform(0, size, (68, 2))
    wx = rng.normal(0, 0.01, 68)
    wy = rng.normal(0, 0.01, 68)
    ax = np.array([0.0, 1.0, 0.0])
    ay = np.array([0.0, 0.0, 1.0])
    pts = rng.normal(0, 20, (20_000, 3))
    cents = rng.normal(0, 20, (6, 3))

    rows = [
        ("sample_rgba", lambda: _kernels.sample_rgba(img4, mx, my),
         lambda: _kernels.sample_rgba_np(img4, mx, my)),
        ("sample_rgb_clamp", lambda: _kernels.sample_rgb_clamp(img3, mx, my),
         lambda: _kernels.sample_rgb_clamp_np(img3, mx, my)),
        ("sample_labels", lambda: _kernels.sample_labels(labels, mx, my, np.uint8(0)),
         lambda: _kernels.sample_labels_np(labels, mx, my, np.uint8(0))),
        ("tps_map step=1", lambda: _kernels.tps_map(ctrl, wx, wy, ax, ay, size, size, 1),
         lambda: _kernels.tps_map_np(ctrl, wx, wy, ax, ay, size, size, 1)),
        ("tps_map step=4", lambda: _kernels.tps_map(ctrl, wx, wy, ax, ay, size, size, 4),
         lambda: _kernels.tps_map_np(ctrl, wx, wy, ax, ay, size, size, 4)),
        ("kmeans_assign 20k", lambda: _kernels.kmeans_assign(pts, cents),
         lambda: _kernels.kmeans_assign_np(pts, cents)),
    ]
    print(f"\nkernels at {size}x{size} (ms per call)")
    print(f"{'kernel':20s} {'numba':>9s} {'numpy':>9s} {'speedup':>8s}")
    for name, jit_fn, np_fn in rows:
        t_jit = timeit(jit_fn) if _kernels.USING_NUMBA else float("nan")
        t_np = timeit(np_fn)
        ratio = t_np / t_jit if _kernels.USING_NUMBA else float("nan")
        print(f"{name:20s} {t_jit:9.2f} {t_np:9.2f} {ratio:7.1f}x")


def bench_frame_apply(size, frames):
    canon = geometry.default_canonical()
    lib = synthesis.default_library()
    style = synthesis.sample_style(lib, 21, regions=("eyeshadow", "lipstick"))
    mask = synthesis.render_style_mask(style, lib, canon)
    scale = 0.92 * size / 1024.0
    pts = (canon.reference_landmarks.points - [512, 560]) * scale + size / 2.0
    frame_img = np.full((size, size, 3), 0.6)
    inputs = [
        video.FrameInput(
            image=frame_img,
            landmarks=LandmarkSet(pts + [3.0 * np.sin(i / 9.0), 1.5 * np.cos(i / 7.0)]),
        )
        for i in range(frames)
    ]
    _, report = video.run_video(mask, inputs, canon, video.VideoConfig(workers=1))
    path = "numba" if _kernels.USING_NUMBA else "numpy"
    print(
        f"\nper-frame apply at {size}x{size} ({path} path): "
        f"{report.fps:.1f} fps, p50 {report.p50_ms:.1f} ms, p95 {report.p95_ms:.1f} ms"
    )


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--size", type=int, default=256)
    ap.add_argument("--frames", type=int, default=50)
    args = ap.parse_args()
    print(f"active kernel path: {'numba' if _kernels.USING_NUMBA else 'numpy'}")
    bench_kernels(args.size)
    bench_frame_apply(args.size, args.frames)
