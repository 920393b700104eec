"""Real-time application of a fixed makeup mask to video frames.

The mask is extracted once and never mutated; each frame only needs a TPS fit
from the canonical layout to the frame's landmarks, a warp, a parsing gate,
and an alpha composite. Identical inputs always produce identical outputs, so
a constant mask stays flicker-free across a clip.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels, geometry
from .geometry import CanonicalLayout, LandmarkSet
from .parsing import DEFAULT_FACE_LABELS, ParsingMask

log = logging.getLogger("maskforge.video")

# coordinate-map lattice spacing for per-frame TPS evaluation; node-to-node
# interpolation is exact for affine warps and subpixel for face deformations
VIDEO_TPS_GRID_STEP = 4


@dataclass(frozen=True)
class FrameInput:
    image: np.ndarray  # (H, W, 3)
    landmarks: LandmarkSet
    parsing: ParsingMask | None = None
    timestamp_ms: float = 0.0


@dataclass(frozen=True)
class SmootherState:
    """EMA damping of landmark jitter. beta=0 (default) is a passthrough,
    matching the claim that a fixed mask already gives temporal consistency."""

    beta: float = 0.0
    ema: LandmarkSet | None = None

    def __post_init__(self):
        if not (0.0 <= self.beta < 1.0):
            raise ValueError(f"beta must be in [0, 1), got {self.beta}")


def smooth_landmarks(state: SmootherState, lm: LandmarkSet) -> tuple[LandmarkSet, SmootherState]:
    """out = beta * previous + (1 - beta) * current; returns (smoothed, new state)."""
    if state.ema is not None and state.ema.layout_id != lm.layout_id:
        raise ValueError(
            f"landmark layout {lm.layout_id!r} does not match smoother state "
            f"{state.ema.layout_id!r}"
        )
    if state.beta == 0.0 or state.ema is None:
        out = lm
    else:
        pts = state.beta * state.ema.points + (1.0 - state.beta) * lm.points
        out = LandmarkSet(pts, lm.layout_id)
    return out, replace(state, ema=out)


@dataclass
class ApplyOptions:
    alpha_scale: float = 1.0  # in [0, 2]; mask alpha is scaled then clamped to 1
    face_labels: tuple[str, ...] = DEFAULT_FACE_LABELS
    grid_step: int = VIDEO_TPS_GRID_STEP


def apply_to_frame(
    mask: np.ndarray,
    frame: FrameInput,
    canon: CanonicalLayout | None = None,
    options: ApplyOptions | None = None,
) -> tuple[np.ndarray, bool]:
    """Warp a canonical-frame mask onto one frame and composite it.

    Alpha is zeroed outside the frame's face-region parsing labels. Returns
    (image, ok); degenerate landmarks return the frame untouched with ok=False
    so live pipelines degrade gracefully instead of raising.
    """
    canon = canon or geometry.default_canonical()
    options = options or ApplyOptions()
    h, w = frame.image.shape[:2]
    try:
        warp = geometry.tps_fit(canon.reference_landmarks.points, frame.landmarks.points)
        warped = geometry.tps_warp_image(mask, warp, (w, h), grid_step=options.grid_step)
    except ValueError as e:
        log.warning("degenerate landmarks, passing frame through: %s", e)
        return frame.image.copy(), False
    alpha = warped[..., 3]
    if options.alpha_scale != 1.0:
        alpha = np.minimum(alpha * options.alpha_scale, 1.0)
    if frame.parsing is not None:
        alpha = alpha * frame.parsing.member_mask(options.face_labels)
    out = frame.image * (1.0 - alpha[..., None]) + warped[..., :3] * alpha[..., None]
    return out, True


@dataclass
class TimingReport:
    fps: float
    p50_ms: float
    p95_ms: float
    frames: int
    failures: int = 0

    def to_json(self) -> dict:
        return {
            "fps": self.fps,
            "p50_ms": self.p50_ms,
            "p95_ms": self.p95_ms,
            "frames": self.frames,
            "failures": self.failures,
        }


@dataclass
class VideoConfig:
    beta: float = 0.0
    alpha_scale: float = 1.0
    face_labels: tuple[str, ...] = DEFAULT_FACE_LABELS
    grid_step: int = VIDEO_TPS_GRID_STEP
    workers: int = 1


def run_video(
    mask: np.ndarray,
    frames: list[FrameInput],
    canon: CanonicalLayout | None = None,
    config: VideoConfig | None = None,
) -> tuple[list[np.ndarray], TimingReport]:
    """Stream frames through landmark smoothing and mask application.

    Landmark smoothing is the only stateful stage and runs sequentially;
    application is pure per frame, so outputs are independent of worker count.
    """
    if not frames:
        raise ValueError("empty frame sequence")
    canon = canon or geometry.default_canonical()
    config = config or VideoConfig()
    options = ApplyOptions(
        alpha_scale=config.alpha_scale,
        face_labels=config.face_labels,
        grid_step=config.grid_step,
    )
    _kernels.warmup()

    state = SmootherState(beta=config.beta)
    smoothed: list[FrameInput] = []
    for fr in frames:
        lm, state = smooth_landmarks(state, fr.landmarks)
        smoothed.append(replace(fr, landmarks=lm))

    outputs: list[np.ndarray | None] = [None] * len(smoothed)
    latencies = np.zeros(len(smoothed))
    oks = np.ones(len(smoothed), dtype=bool)

    def work(i: int) -> None:
        t0 = time.perf_counter()
        img, ok = apply_to_frame(mask, smoothed[i], canon, options)
        latencies[i] = (time.perf_counter() - t0) * 1000.0
        outputs[i] = img
        oks[i] = ok

    t_start = time.perf_counter()
    if config.workers <= 1:
        for i in range(len(smoothed)):
            work(i)
    else:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            list(pool.map(work, range(len(smoothed))))
    wall = time.perf_counter() - t_start

    report = TimingReport(
        fps=len(smoothed) / wall if wall > 0 else float("inf"),
        p50_ms=float(np.percentile(latencies, 50)),
        p95_ms=float(np.percentile(latencies, 95)),
        frames=len(smoothed),
        failures=int((~oks).sum()),
    )
    return [img for img in outputs if img is not None], report
