"""Procedural makeup-style synthesis and graphics-rendered training pairs.

Styles are sampled from a library of grayscale shape templates (drawn in the
canonical frame) plus named color palettes. Rendering composites per-region
RGBA layers back-to-front in physical application order: blush, eyeshadow,
eyeliner, lipstick. Pairing warps a rendered mask onto a natural face with a
thin-plate spline and alpha-blends it; the mask itself never sees a face, so
masks stay identity-free by construction.
"""

from __future__ import annotations

import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import color, geometry, imageio
from .geometry import CanonicalLayout, LandmarkSet

log = logging.getLogger("maskforge.synthesis")

REGIONS = ("blush", "eyeshadow", "eyeliner", "lipstick")  # composite order
FINISHES = ("matte", "gloss", "shimmer")

OPACITY_RANGE = (0.2, 0.95)  # fully opaque excluded: extraction needs skin show-through
GLOSS_LIGHTNESS = 0.25
GLOSS_RIDGE_FRAC = 0.5  # ridge eligibility: coverage >= frac * max coverage
GLOSS_BAND_ROWS = 2  # half-height of the specular band around the ridge line
SHIMMER_DENSITY = 0.02
SHIMMER_LIGHTNESS = 0.35


@dataclass(frozen=True)
class ShapeTemplate:
    id: str
    region: str
    coverage: np.ndarray  # (H, W) float64 in [0, 1], canonical frame


@dataclass(frozen=True)
class RegionStyle:
    template_id: str
    color: tuple[float, float, float]
    opacity: float
    finish: str


@dataclass(frozen=True)
class MakeupStyle:
    """Procedural description of one full-face look."""

    regions: dict[str, RegionStyle]
    seed: int = 0  # drives shimmer speckle placement

    def __post_init__(self):
        if not self.regions:
            raise ValueError("style must cover at least one region")
        for name, rs in self.regions.items():
            if rs.opacity <= 0.0:
                raise ValueError(f"region {name!r} has non-positive opacity")

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "regions": {
                k: {
                    "template_id": v.template_id,
                    "color": list(v.color),
                    "opacity": v.opacity,
                    "finish": v.finish,
                }
                for k, v in self.regions.items()
            },
        }

    @staticmethod
    def from_json(doc: dict) -> "MakeupStyle":
        return MakeupStyle(
            regions={
                k: RegionStyle(
                    template_id=v["template_id"],
                    color=tuple(float(c) for c in v["color"]),
                    opacity=float(v["opacity"]),
                    finish=v.get("finish", "matte"),
                )
                for k, v in doc["regions"].items()
            },
            seed=int(doc.get("seed", 0)),
        )


@dataclass
class StyleLibrary:
    templates: dict[str, ShapeTemplate]
    palettes: dict[str, list[tuple[str, tuple[float, float, float]]]]
    seed: int = 0

    def __post_init__(self):
        regions = {t.region for t in self.templates.values()}
        for r in regions:
            if r not in REGIONS:
                raise ValueError(f"template region {r!r} not one of {REGIONS}")

    def regions(self) -> list[str]:
        present = {t.region for t in self.templates.values()}
        return [r for r in REGIONS if r in present]

    def templates_for(self, region: str) -> list[ShapeTemplate]:
        return sorted(
            (t for t in self.templates.values() if t.region == region),
            key=lambda t: t.id,
        )


def load_library(path: str | os.PathLike) -> StyleLibrary:
    """Load a style library directory: template PNGs described by library.json."""
    root = Path(path)
    with open(root / "library.json") as f:
        doc = json.load(f)
    templates = {}
    for entry in doc["templates"]:
        cov = imageio.read_gray(root / entry["file"])
        templates[entry["id"]] = ShapeTemplate(
            id=entry["id"], region=entry["region"], coverage=cov
        )
    palettes = {
        region: [(name, tuple(float(c) for c in rgb)) for name, rgb in colors.items()]
        for region, colors in doc["palettes"].items()
    }
    return StyleLibrary(templates=templates, palettes=palettes, seed=int(doc.get("seed", 0)))


_DEFAULT_LIBRARY = None


def default_library() -> StyleLibrary:
    """The packaged style library (>=4 editable templates per region)."""
    global _DEFAULT_LIBRARY
    if _DEFAULT_LIBRARY is None:
        from importlib.resources import files

        _DEFAULT_LIBRARY = load_library(str(files("maskforge").joinpath("assets/styles")))
    return _DEFAULT_LIBRARY


def sample_style(
    lib: StyleLibrary, seed: int, regions: tuple[str, ...] | None = None
) -> MakeupStyle:
    """Deterministically sample one style: per region a uniform template, a
    palette color, opacity ~ U(0.2, 0.95), and a uniform finish."""
    wanted = list(regions) if regions is not None else lib.regions()
    if not wanted or not lib.templates:
        raise ValueError("style library has no templates for the requested regions")
    rng = np.random.default_rng(seed)
    chosen: dict[str, RegionStyle] = {}
    for region in REGIONS:
        if region not in wanted:
            continue
        templates = lib.templates_for(region)
        if not templates:
            raise ValueError(f"library has no templates for region {region!r}")
        tpl = templates[rng.integers(len(templates))]
        palette = lib.palettes.get(region, [("white", (1.0, 1.0, 1.0))])
        _, rgb = palette[rng.integers(len(palette))]
        opacity = float(rng.uniform(*OPACITY_RANGE))
        finish = FINISHES[rng.integers(len(FINISHES))]
        chosen[region] = RegionStyle(tpl.id, rgb, opacity, finish)
    return MakeupStyle(regions=chosen, seed=seed)


def _gloss_band(cov: np.ndarray) -> np.ndarray:
    """Thin specular band: rows around each column's coverage maximum."""
    peak = cov.max()
    band = np.zeros(cov.shape, dtype=bool)
    if peak <= 0.0:
        return band
    eligible = cov >= GLOSS_RIDGE_FRAC * peak
    cols = np.flatnonzero(eligible.any(axis=0))
    ridge_rows = np.argmax(cov[:, cols], axis=0)
    for dy in range(-GLOSS_BAND_ROWS, GLOSS_BAND_ROWS + 1):
        rows = np.clip(ridge_rows + dy, 0, cov.shape[0] - 1)
        band[rows, cols] = True
    return band & eligible


def _finish_rgb(cov: np.ndarray, rs: RegionStyle, region_index: int, seed: int) -> np.ndarray:
    h, w = cov.shape
    rgb = np.broadcast_to(np.asarray(rs.color, dtype=np.float64), (h, w, 3)).copy()
    if rs.finish == "gloss":
        ridge = _gloss_band(cov)
        rgb[ridge] = np.clip(rgb[ridge] + GLOSS_LIGHTNESS, 0.0, 1.0)
    elif rs.finish == "shimmer":
        rng = np.random.default_rng(np.uint64(seed * 1000003 + region_index))
        speckle = (rng.random((h, w)) < SHIMMER_DENSITY) & (cov > 0.0)
        rgb[speckle] = np.clip(rgb[speckle] + SHIMMER_LIGHTNESS, 0.0, 1.0)
    return rgb


def render_style_mask(style: MakeupStyle, lib: StyleLibrary, canon: CanonicalLayout) -> np.ndarray:
    """Render a style to a canonical-frame RGBA mask (identity-free: no face input)."""
    out = color.new_mask(canon.width, canon.height)
    for idx, region in enumerate(REGIONS):
        rs = style.regions.get(region)
        if rs is None:
            continue
        tpl = lib.templates.get(rs.template_id)
        if tpl is None:
            raise KeyError(f"unknown template id {rs.template_id!r}")
        if tpl.coverage.shape != (canon.height, canon.width):
            raise ValueError(
                f"template {tpl.id!r} is {tpl.coverage.shape}, canonical frame is "
                f"{(canon.height, canon.width)}"
            )
        layer = np.empty((canon.height, canon.width, 4), dtype=np.float64)
        layer[..., :3] = _finish_rgb(tpl.coverage, rs, idx, style.seed)
        layer[..., 3] = tpl.coverage * rs.opacity
        out = color.over_rgba(layer, out)
    return out


def generate_pair(
    face: np.ndarray,
    face_lm: LandmarkSet,
    style_mask: np.ndarray,
    canon: CanonicalLayout,
    grid_step: int = 1,
) -> tuple[np.ndarray, np.ndarray]:
    """Warp a canonical style mask onto a face and alpha-blend it.

    Returns (after_image, gt_mask_in_face_frame); by definition the after image
    is exactly composite_mask(gt_mask_in_face_frame, face).
    """
    h, w = face.shape[:2]
    warp = geometry.tps_fit(canon.reference_landmarks.points, face_lm.points)
    warped = geometry.tps_warp_image(style_mask, warp, (w, h), grid_step=grid_step)
    after = color.composite_mask(warped, face)
    return after, warped


def build_average_alpha(masks) -> np.ndarray:
    """Per-pixel mean of the alpha channels of a collection of RGBA masks."""
    masks = list(masks)
    if not masks:
        raise ValueError("need at least one mask")
    shape = masks[0].shape[:2]
    acc = np.zeros(shape, dtype=np.float64)
    for m in masks:
        if m.shape[:2] != shape:
            raise ValueError(f"mask dims {m.shape[:2]} do not match first mask {shape}")
        acc += m[..., 3]
    return acc / len(masks)


@dataclass
class DatasetResult:
    manifest_path: Path
    rows: list[dict] = field(default_factory=list)
    failures: int = 0


def _load_manifest(path: str | os.PathLike) -> list[dict]:
    entries = []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if line:
                entries.append(json.loads(line))
    return entries


def generate_dataset(
    faces_manifest: str | os.PathLike,
    lib: StyleLibrary,
    n_styles_per_face: int = 3,
    out_dir: str | os.PathLike = "dataset",
    base_seed: int = 0,
    canon: CanonicalLayout | None = None,
    workers: int = 1,
    regions: tuple[str, ...] | None = None,
) -> DatasetResult:
    """Render pseudo-ground-truth pairs for every face in a JSONL manifest.

    Each manifest line is {"image": path, "landmarks": path}. Three styles per
    face is the usual setting. After-images are composited from the 8-bit
    quantized mask so that written pairs recompose exactly. Unreadable entries
    are skipped and logged; more than 10% failures aborts.
    """
    canon = canon or geometry.default_canonical()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = _load_manifest(faces_manifest)
    base = Path(faces_manifest).parent

    def resolve(p):
        q = Path(p)
        return q if q.is_absolute() else base / q

    def one_face(i: int, entry: dict) -> list[dict]:
        face = imageio.read_rgb(resolve(entry["image"]))
        lm = geometry.load_landmarks(resolve(entry["landmarks"]))
        rows = []
        for j in range(n_styles_per_face):
            seed = base_seed + i * n_styles_per_face + j
            style = sample_style(lib, seed, regions=regions)
            style_mask = render_style_mask(style, lib, canon)
            _, warped = generate_pair(face, lm, style_mask, canon)
            mask_q = imageio.quantize(warped)
            after = color.composite_mask(mask_q, face)
            stem = f"{Path(entry['image']).stem}_s{j}"
            imageio.write_rgb(out / f"{stem}_after.png", after)
            imageio.write_rgba(out / f"{stem}_mask.png", mask_q)
            rows.append(
                {
                    "face": str(resolve(entry["image"])),
                    "landmarks": str(resolve(entry["landmarks"])),
                    "seed": seed,
                    # dataset-internal paths are relative so datasets relocate cleanly
                    "after_png": f"{stem}_after.png",
                    "mask_png": f"{stem}_mask.png",
                }
            )
        return rows

    results: list[list[dict] | None] = [None] * len(entries)
    failures = 0
    if workers <= 1:
        for i, entry in enumerate(entries):
            try:
                results[i] = one_face(i, entry)
            except Exception as e:
                log.warning("skipping face %s: %s", entry.get("image"), e)
                failures += 1
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futs = {pool.submit(one_face, i, e): (i, e) for i, e in enumerate(entries)}
            for fut, (i, entry) in futs.items():
                try:
                    results[i] = fut.result()
                except Exception as e:
                    log.warning("skipping face %s: %s", entry.get("image"), e)
                    failures += 1
    if entries and failures > 0.1 * len(entries):
        raise RuntimeError(
            f"{failures}/{len(entries)} faces failed (>10%); aborting dataset generation"
        )
    rows = [row for chunk in results if chunk for row in chunk]
    manifest_path = out / "manifest.jsonl"
    with open(manifest_path, "w") as f:
        for row in rows:
            f.write(json.dumps(row) + "\n")
    return DatasetResult(manifest_path=manifest_path, rows=rows, failures=failures)
