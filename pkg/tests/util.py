"""Synthetic face fixtures shared across the test suite.

Faces are flat-colored per parsing region and derived from the canonical
landmark layout under a similarity transform, so landmarks, parsing, and
pixels are mutually consistent by construction.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from maskforge import geometry, imageio, parsing
from maskforge.geometry import CanonicalLayout, LandmarkSet

# light to deep skin tones, sRGB
SKIN_TONES = [
    (0.95, 0.80, 0.69),
    (0.87, 0.68, 0.53),
    (0.78, 0.57, 0.44),
    (0.66, 0.48, 0.36),
    (0.55, 0.37, 0.26),
    (0.45, 0.30, 0.22),
    (0.35, 0.24, 0.18),
]

BACKGROUND = (0.08, 0.09, 0.11)
SCLERA = (0.93, 0.92, 0.90)
BROW = (0.25, 0.17, 0.10)
MOUTH = (0.25, 0.10, 0.10)


@dataclass
class FaceSample:
    image: np.ndarray
    landmarks: LandmarkSet
    parsing: parsing.ParsingMask
    skin: tuple[float, float, float]


def similarity_transform(size: int, scale: float = 0.92, angle_deg: float = 0.0,
                         translate: tuple[float, float] = (0.0, 0.0)) -> np.ndarray:
    """Canonical frame -> size x size face frame, as a 2x3 similarity."""
    s = scale * size / 1024.0
    a = math.radians(angle_deg)
    ca, sa = s * math.cos(a), s * math.sin(a)
    # rotate/scale about the canonical face center, then recenter
    cx, cy = 512.0, 560.0
    tx = size / 2.0 + translate[0] - (ca * cx - sa * cy)
    ty = size / 2.0 + translate[1] - (sa * cx + ca * cy)
    return np.array([[ca, -sa, tx], [sa, ca, ty]])


def landmarks_for(size: int, canon: CanonicalLayout, scale: float = 0.92,
                  angle_deg: float = 0.0, translate=(0.0, 0.0)) -> LandmarkSet:
    T = similarity_transform(size, scale, angle_deg, translate)
    pts = geometry.apply_affine_points(T, canon.reference_landmarks.points)
    return LandmarkSet(pts, canon.reference_landmarks.layout_id)


def paint_face(pmask: parsing.ParsingMask, skin: tuple[float, float, float]) -> np.ndarray:
    """Flat-color a face from its parsing labels."""
    skin_arr = np.array(skin)
    lip = 0.55 * skin_arr + 0.45 * np.array([0.70, 0.30, 0.32])
    colors = {
        0: np.array(BACKGROUND),
        1: skin_arr,
        2: np.array(BROW),
        3: np.array(BROW),
        4: np.array(SCLERA),
        5: np.array(SCLERA),
        10: skin_arr,
        11: np.array(MOUTH),
        12: lip,
        13: lip,
    }
    h, w = pmask.labels.shape
    img = np.empty((h, w, 3), dtype=np.float64)
    img[:] = BACKGROUND
    for label, rgb in colors.items():
        img[pmask.labels == label] = rgb
    return img


def make_face(size: int = 256, seed: int = 0, canon: CanonicalLayout | None = None) -> FaceSample:
    """A deterministic synthetic face with mild pose jitter and a varied skin tone."""
    canon = canon or geometry.default_canonical()
    rng = np.random.default_rng(seed)
    skin = SKIN_TONES[int(rng.integers(len(SKIN_TONES)))]
    lm = landmarks_for(
        size,
        canon,
        scale=float(rng.uniform(0.86, 0.96)),
        angle_deg=float(rng.uniform(-4.0, 4.0)),
        translate=(float(rng.uniform(-6, 6)), float(rng.uniform(-6, 6))),
    )
    pmask = parsing.parsing_from_landmarks(lm, size, size)
    img = paint_face(pmask, skin)
    return FaceSample(image=img, landmarks=lm, parsing=pmask, skin=skin)


def write_face_files(sample: FaceSample, out_dir: Path, stem: str) -> dict:
    """Write image / landmarks / parsing files; returns a manifest entry."""
    out_dir.mkdir(parents=True, exist_ok=True)
    img_path = out_dir / f"{stem}.png"
    lm_path = out_dir / f"{stem}.json"
    seg_path = out_dir / f"{stem}_seg.png"
    imageio.write_rgb(img_path, sample.image)
    geometry.save_landmarks(lm_path, sample.landmarks)
    imageio.write_labels(seg_path, sample.parsing.labels)
    return {"image": str(img_path), "landmarks": str(lm_path), "parsing": str(seg_path)}


def write_manifest(entries: list[dict], path: Path) -> Path:
    with open(path, "w") as f:
        for e in entries:
            f.write(json.dumps(e) + "\n")
    return path
