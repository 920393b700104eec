"""Unsupervised eye-makeup mask extraction from real photos.

Pipeline: warp the photo to the canonical layout, cluster periocular LAB
colors with k-means, estimate the skin tone as the count-weighted mean of the
top-s clusters, then set per-pixel opacity to
``clamp(1 - cos_sim(pixel_lab, skin_tone), 0, 1)`` gated by the eye-region
parsing mask. Both eyes are clustered independently.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import _kernels, color, geometry
from .geometry import CanonicalLayout, LandmarkSet
from .parsing import BROW_LABELS, EYE_LABELS, ParsingMask, warp_parsing

# periocular clustering rectangle: eye landmark bbox expanded by this factor
PERIOCULAR_MARGIN = 2.2
# parsing labels on which extracted eye makeup may sit
DEFAULT_GATE_LABELS = ("skin",)


@dataclass(frozen=True)
class ClusterParams:
    """k-means configuration for skin-tone estimation (paper defaults k=6, s=2)."""

    k: int = 6
    s: int = 2
    seed: int = 0
    max_iters: int = 100
    tol: float = 1e-4  # LAB units

    def __post_init__(self):
        if self.k < 2:
            raise ValueError(f"k must be >= 2, got {self.k}")
        if not (1 <= self.s <= self.k):
            raise ValueError(f"s must be in [1, k], got s={self.s}, k={self.k}")


@dataclass(frozen=True)
class ClusterModel:
    centroids: np.ndarray  # (k, 3) LAB
    counts: np.ndarray  # (k,) pixels per cluster


@dataclass(frozen=True)
class SkinTone:
    lab: np.ndarray  # (3,)


@dataclass
class ExtractionStats:
    skin_tone_lab: dict[str, list[float]] = field(default_factory=dict)
    cluster_counts: dict[str, list[int]] = field(default_factory=dict)
    elapsed_ms: float = 0.0


def _kmeans_pp_seed(pts: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = pts.shape[0]
    centroids = np.empty((k, 3), dtype=np.float64)
    centroids[0] = pts[rng.integers(n)]
    d2 = ((pts - centroids[0]) ** 2).sum(axis=1)
    for i in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            idx = rng.integers(n)
        else:
            idx = rng.choice(n, p=d2 / total)
        centroids[i] = pts[idx]
        d2 = np.minimum(d2, ((pts - centroids[i]) ** 2).sum(axis=1))
    return centroids


def kmeans_lab(img_lab: np.ndarray, roi: np.ndarray, params: ClusterParams) -> ClusterModel:
    """Lloyd's k-means over the LAB pixels selected by the boolean `roi` mask.

    k-means++ seeding from params.seed; deterministic for a fixed seed. Empty
    clusters are re-seeded to the point farthest from its assigned centroid.
    """
    pts = np.ascontiguousarray(img_lab[roi], dtype=np.float64)
    if pts.shape[0] < params.k:
        raise ValueError(
            f"ROI has {pts.shape[0]} pixels, need at least k={params.k} to cluster"
        )
    rng = np.random.default_rng(params.seed)
    centroids = _kmeans_pp_seed(pts, params.k, rng)
    labels = np.zeros(pts.shape[0], dtype=np.int64)
    for _ in range(params.max_iters):
        labels, dists = _kernels.kmeans_assign(pts, centroids)
        counts = np.bincount(labels, minlength=params.k)
        new_centroids = np.empty_like(centroids)
        for d in range(3):
            sums = np.bincount(labels, weights=pts[:, d], minlength=params.k)
            new_centroids[:, d] = np.where(counts > 0, sums / np.maximum(counts, 1), 0.0)
        for c in np.flatnonzero(counts == 0):
            far = int(np.argmax(dists))
            new_centroids[c] = pts[far]
            dists[far] = 0.0
        shift = np.abs(new_centroids - centroids).max()
        centroids = new_centroids
        if shift < params.tol:
            break
    labels, _ = _kernels.kmeans_assign(pts, centroids)
    counts = np.bincount(labels, minlength=params.k)
    return ClusterModel(centroids=centroids, counts=counts)


def estimate_skin_tone(model: ClusterModel, s: int) -> SkinTone:
    """Count-weighted mean of the s most frequent centroids (ties: darker first)."""
    if model.centroids.shape[0] < s:
        raise ValueError(f"model has {model.centroids.shape[0]} clusters, need {s}")
    # sort by count desc, then by L asc
    order = np.lexsort((model.centroids[:, 0], -model.counts))[:s]
    w = model.counts[order].astype(np.float64)
    tone = (model.centroids[order] * w[:, None]).sum(axis=0) / w.sum()
    return SkinTone(lab=tone)


def compute_alpha_map(img_lab: np.ndarray, tone: SkinTone, chroma_only: bool = False) -> np.ndarray:
    """Per-pixel opacity: clamp(1 - cos_sim(pixel, skin tone), 0, 1).

    chroma_only drops the L channel from the similarity (experimentation
    toggle; the default follows the full 3-vector formula).
    """
    ref = np.asarray(tone.lab, dtype=np.float64)
    px = np.asarray(img_lab, dtype=np.float64)
    if chroma_only:
        px = px[..., 1:]
        ref = ref[1:]
    sim = color.lab_cosine_similarity(px, ref)
    return np.clip(1.0 - sim, 0.0, 1.0)


def _expand_bbox(pts: np.ndarray, margin: float, w: int, h: int):
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    c = (lo + hi) / 2.0
    half = (hi - lo) / 2.0 * margin
    x0 = max(int(np.floor(c[0] - half[0])), 0)
    y0 = max(int(np.floor(c[1] - half[1])), 0)
    x1 = min(int(np.ceil(c[0] + half[0])), w - 1)
    y1 = min(int(np.ceil(c[1] + half[1])), h - 1)
    return x0, y0, x1, y1


def extract_eye_mask(
    photo: np.ndarray,
    lm: LandmarkSet,
    parsing: ParsingMask,
    params: ClusterParams | None = None,
    canon: CanonicalLayout | None = None,
    chroma_only: bool = False,
) -> np.ndarray:
    """Extract an RGBA eye-makeup mask in the canonical frame. See module docs."""
    mask, _ = extract_eye_mask_with_stats(photo, lm, parsing, params, canon, chroma_only)
    return mask


def extract_eye_mask_with_stats(
    photo: np.ndarray,
    lm: LandmarkSet,
    parsing: ParsingMask,
    params: ClusterParams | None = None,
    canon: CanonicalLayout | None = None,
    chroma_only: bool = False,
) -> tuple[np.ndarray, ExtractionStats]:
    t0 = time.perf_counter()
    params = params or ClusterParams()
    canon = canon or geometry.default_canonical()
    if parsing.labels.shape != photo.shape[:2]:
        raise ValueError(
            f"parsing dims {parsing.labels.shape} do not match photo dims {photo.shape[:2]}"
        )
    if not parsing.has_any(EYE_LABELS):
        raise ValueError("parsing lacks eye region")

    T = geometry.fit_canonical_affine(lm, canon)
    dims = (canon.width, canon.height)
    warped = geometry.apply_affine(photo, T, dims)
    warped_parsing = warp_parsing(parsing, T, dims)

    excluded = warped_parsing.member_mask(EYE_LABELS + BROW_LABELS)
    gate_ok = warped_parsing.member_mask(DEFAULT_GATE_LABELS)

    alpha = np.zeros((canon.height, canon.width), dtype=np.float64)
    stats = ExtractionStats()
    for side in ("eye_left", "eye_right"):
        pts = canon.reference_landmarks.group(side)
        x0, y0, x1, y1 = _expand_bbox(pts, PERIOCULAR_MARGIN, canon.width, canon.height)
        rect_rgb = warped[y0 : y1 + 1, x0 : x1 + 1]
        rect_lab = color.srgb_to_lab(rect_rgb)
        roi = ~excluded[y0 : y1 + 1, x0 : x1 + 1]
        model = kmeans_lab(rect_lab, roi, params)
        tone = estimate_skin_tone(model, params.s)
        rect_alpha = compute_alpha_map(rect_lab, tone, chroma_only)
        rect_alpha *= gate_ok[y0 : y1 + 1, x0 : x1 + 1]
        region = alpha[y0 : y1 + 1, x0 : x1 + 1]
        np.maximum(region, rect_alpha, out=region)
        stats.skin_tone_lab[side] = [float(v) for v in tone.lab]
        stats.cluster_counts[side] = [int(c) for c in model.counts]

    mask = np.concatenate([warped, alpha[..., None]], axis=2)
    stats.elapsed_ms = (time.perf_counter() - t0) * 1000.0
    return mask, stats
