"""Desk-scale evaluation: PSNR transfer fidelity and mask-level errors.

The transfer protocol synthesizes the same style onto two faces, extracts the
mask back from the first face's after-image with the k-means path, applies it
to the second face, and scores the result against the second after-image.
The published 40+ dB numbers belong to the trained neural extractor; the
unsupervised path here is held to a separate desk-scale bar.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import extraction, geometry, imageio, parsing, synthesis, video
from .extraction import ClusterParams
from .geometry import CanonicalLayout
from .synthesis import StyleLibrary

IOU_ALPHA_THRESHOLD = 0.1
DEFAULT_EVAL_PAIRS = 200
# the unsupervised extractor targets the eyeshadow region, so protocol styles do too
EVAL_REGIONS = ("eyeshadow",)


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """10*log10(1/MSE) over [0,1] channels; math.inf when images are identical."""
    if a.shape != b.shape:
        raise ValueError(f"image dims differ: {a.shape} vs {b.shape}")
    mse = float(np.mean((np.asarray(a, dtype=np.float64) - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def alpha_mae(pred: np.ndarray, gt: np.ndarray, region: np.ndarray | None = None) -> float:
    """Mean |alpha difference|, optionally restricted to a boolean region."""
    diff = np.abs(pred[..., 3] - gt[..., 3])
    if region is not None:
        if not region.any():
            return 0.0
        diff = diff[region]
    return float(diff.mean())


def mask_iou(pred: np.ndarray, gt: np.ndarray, threshold: float = IOU_ALPHA_THRESHOLD) -> float:
    p = pred[..., 3] > threshold
    g = gt[..., 3] > threshold
    union = np.logical_or(p, g).sum()
    if union == 0:
        return 1.0
    return float(np.logical_and(p, g).sum() / union)


@dataclass
class EvalReport:
    psnr_db: float
    alpha_mae: float
    mask_iou: float
    n_pairs: int
    skipped: int = 0
    per_pair: list[dict] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "psnr_db": None if math.isinf(self.psnr_db) else self.psnr_db,
            "psnr_infinite": math.isinf(self.psnr_db),
            "alpha_mae": self.alpha_mae,
            "mask_iou": self.mask_iou,
            "n_pairs": self.n_pairs,
            "skipped": self.skipped,
        }

    def write_json(self, path: str | os.PathLike) -> None:
        with open(path, "w") as f:
            json.dump(self.to_json(), f, indent=2, sort_keys=True)

    def write_csv(self, path: str | os.PathLike) -> None:
        with open(path, "w", newline="") as f:
            writer = csv.DictWriter(
                f, fieldnames=["pair", "psnr_db", "mse", "alpha_mae", "mask_iou"]
            )
            writer.writeheader()
            for row in self.per_pair:
                writer.writerow(row)


def _eye_gate_region(canon: CanonicalLayout) -> np.ndarray:
    """Union of both periocular rectangles in the canonical frame."""
    region = np.zeros((canon.height, canon.width), dtype=bool)
    for side in ("eye_left", "eye_right"):
        pts = canon.reference_landmarks.group(side)
        x0, y0, x1, y1 = extraction._expand_bbox(
            pts, extraction.PERIOCULAR_MARGIN, canon.width, canon.height
        )
        region[y0 : y1 + 1, x0 : x1 + 1] = True
    return region


def extraction_gate(
    lm, pmask: parsing.ParsingMask, canon: CanonicalLayout
) -> np.ndarray:
    """Canonical-frame region the extractor may mark opaque: periocular
    rectangles intersected with skin-labeled pixels."""
    T = geometry.fit_canonical_affine(lm, canon)
    warped = parsing.warp_parsing(pmask, T, (canon.width, canon.height))
    return _eye_gate_region(canon) & warped.member_mask(extraction.DEFAULT_GATE_LABELS)


def synthetic_transfer_eval(
    faces_manifest: str | os.PathLike,
    lib: StyleLibrary | None = None,
    seed: int = 0,
    n_pairs: int = DEFAULT_EVAL_PAIRS,
    params: ClusterParams | None = None,
    canon: CanonicalLayout | None = None,
    workers: int = 1,
    use_gt_mask: bool = False,
    regions: tuple[str, ...] = EVAL_REGIONS,
) -> EvalReport:
    """Paired-synthesis transfer protocol over faces drawn from a manifest.

    Each round samples two distinct faces and one style, renders the style onto
    both, extracts the mask from face 1's after-image (or short-circuits with
    the ground-truth mask when use_gt_mask=True), applies it to face 2, and
    compares against face 2's after-image. PSNR aggregates over pooled MSE so
    identical-pair rounds stay well-defined.
    """
    lib = lib or synthesis.default_library()
    canon = canon or geometry.default_canonical()
    params = params or ClusterParams()
    entries = synthesis._load_manifest(faces_manifest)
    if len(entries) < 2:
        raise ValueError(f"transfer protocol needs at least 2 faces, got {len(entries)}")
    base = os.path.dirname(os.fspath(faces_manifest))

    def resolve(p):
        return p if os.path.isabs(p) else os.path.join(base, p)

    faces = []
    for e in entries:
        faces.append(
            {
                "image": imageio.read_rgb(resolve(e["image"])),
                "landmarks": geometry.load_landmarks(resolve(e["landmarks"])),
                "parsing": (
                    parsing.load_parsing(resolve(e["parsing"]))
                    if e.get("parsing")
                    else None
                ),
            }
        )

    rng = np.random.default_rng(seed)
    rounds = []
    for i in range(n_pairs):
        a, b = rng.choice(len(faces), size=2, replace=False)
        rounds.append((int(a), int(b), int(rng.integers(2**31))))

    def eval_round(idx: int):
        a, b, style_seed = rounds[idx]
        fa, fb = faces[a], faces[b]
        style = synthesis.sample_style(lib, style_seed, regions=regions)
        style_mask = synthesis.render_style_mask(style, lib, canon)
        after_a, _ = synthesis.generate_pair(fa["image"], fa["landmarks"], style_mask, canon)
        after_b, _ = synthesis.generate_pair(fb["image"], fb["landmarks"], style_mask, canon)
        pa = fa["parsing"] or parsing.parsing_from_landmarks(
            fa["landmarks"], after_a.shape[1], after_a.shape[0]
        )
        if use_gt_mask:
            extracted = style_mask
        else:
            extracted = extraction.extract_eye_mask(
                after_a, fa["landmarks"], pa, params, canon
            )
        gate = extraction_gate(fa["landmarks"], pa, canon)
        if use_gt_mask:
            pb = None  # oracle checks the warp+composite identity, ungated
        else:
            pb = fb["parsing"] or parsing.parsing_from_landmarks(
                fb["landmarks"], fb["image"].shape[1], fb["image"].shape[0]
            )
        frame = video.FrameInput(image=fb["image"], landmarks=fb["landmarks"], parsing=pb)
        transferred, ok = video.apply_to_frame(
            extracted, frame, canon, video.ApplyOptions(grid_step=1)
        )
        if not ok:
            return None
        mse = float(np.mean((transferred - after_b) ** 2))
        return {
            "pair": idx,
            "mse": mse,
            "psnr_db": math.inf if mse == 0.0 else 10.0 * math.log10(1.0 / mse),
            "alpha_mae": alpha_mae(extracted, style_mask, gate),
            "mask_iou": mask_iou(extracted, style_mask),
        }

    if workers <= 1:
        results = [eval_round(i) for i in range(n_pairs)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(eval_round, range(n_pairs)))

    rows = [r for r in results if r is not None]
    skipped = n_pairs - len(rows)
    if not rows:
        raise RuntimeError("all evaluation pairs failed")
    pooled_mse = float(np.mean([r["mse"] for r in rows]))
    report = EvalReport(
        psnr_db=math.inf if pooled_mse == 0.0 else 10.0 * math.log10(1.0 / pooled_mse),
        alpha_mae=float(np.mean([r["alpha_mae"] for r in rows])),
        mask_iou=float(np.mean([r["mask_iou"] for r in rows])),
        n_pairs=len(rows),
        skipped=skipped,
        per_pair=[
            {**r, "psnr_db": "inf" if math.isinf(r["psnr_db"]) else round(r["psnr_db"], 6)}
            for r in rows
        ],
    )
    return report
