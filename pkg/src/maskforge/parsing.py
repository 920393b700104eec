"""Face parsing masks: integer label maps gating where makeup may appear.

Labels follow the CelebAMask-HQ convention by default; a sidecar JSON may remap
ids to names for other parsers. Also provides a landmark-driven synthesizer so
synthetic faces and tests do not need an external parser.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np
from PIL import Image, ImageDraw

from . import geometry
from .geometry import LandmarkSet

# CelebAMask-HQ ids
DEFAULT_LABEL_NAMES = {
    0: "background",
    1: "skin",
    2: "l_brow",
    3: "r_brow",
    4: "l_eye",
    5: "r_eye",
    6: "eye_g",
    7: "l_ear",
    8: "r_ear",
    9: "ear_r",
    10: "nose",
    11: "mouth",
    12: "u_lip",
    13: "l_lip",
    14: "neck",
    15: "neck_l",
    16: "cloth",
    17: "hair",
    18: "hat",
}

EYE_LABELS = ("l_eye", "r_eye")
BROW_LABELS = ("l_brow", "r_brow")
LIP_LABELS = ("u_lip", "l_lip")
# where video application may place makeup (skin includes eyelids)
DEFAULT_FACE_LABELS = ("skin", "nose", "l_brow", "r_brow", "u_lip", "l_lip")


@dataclass(frozen=True)
class ParsingMask:
    """8-bit label map plus the id -> name mapping it uses."""

    labels: np.ndarray  # (H, W) uint8
    names: dict[int, str]

    def __post_init__(self):
        arr = np.asarray(self.labels)
        if arr.ndim != 2:
            raise ValueError(f"parsing mask must be (H, W), got {arr.shape}")
        object.__setattr__(self, "labels", arr.astype(np.uint8))

    def ids_for(self, names: tuple[str, ...] | list[str]) -> list[int]:
        wanted = set(names)
        return [i for i, n in self.names.items() if n in wanted]

    def member_mask(self, names: tuple[str, ...] | list[str]) -> np.ndarray:
        """Boolean map of pixels whose label name is in `names`."""
        ids = self.ids_for(names)
        if not ids:
            return np.zeros(self.labels.shape, dtype=bool)
        return np.isin(self.labels, ids)

    def has_any(self, names: tuple[str, ...] | list[str]) -> bool:
        return bool(self.member_mask(names).any())


def load_parsing(path: str | os.PathLike, names_path: str | os.PathLike | None = None) -> ParsingMask:
    """Load a parsing PNG; id -> name mapping from a sidecar JSON if given."""
    from .imageio import read_labels

    names = dict(DEFAULT_LABEL_NAMES)
    if names_path is not None:
        with open(names_path) as f:
            doc = json.load(f)
        names = {int(k): str(v) for k, v in doc.items()}
    return ParsingMask(read_labels(path), names)


def names_from_json(doc: dict | None) -> dict[int, str]:
    if not doc:
        return dict(DEFAULT_LABEL_NAMES)
    return {int(k): str(v) for k, v in doc.items()}


def warp_parsing(parsing: ParsingMask, T: np.ndarray, out_dims: tuple[int, int]) -> ParsingMask:
    """Nearest-neighbor warp of a label map into a new frame (background outside)."""
    warped = geometry.apply_affine(parsing.labels, T, out_dims)
    return ParsingMask(warped, parsing.names)


def _fill(draw: ImageDraw.ImageDraw, pts: np.ndarray, value: int) -> None:
    draw.polygon([(float(x), float(y)) for x, y in pts], fill=value)


def parsing_from_landmarks(lm: LandmarkSet, width: int, height: int) -> ParsingMask:
    """Synthesize a CelebAMask-HQ-style parsing map from 68-point landmarks.

    Good enough to gate extraction/application on synthetic or lab data; real
    deployments should feed masks from an actual parser.
    """
    img = Image.new("L", (width, height), 0)
    draw = ImageDraw.Draw(img)
    jaw = lm.group("jaw")
    brow_l = lm.group("brow_left")
    brow_r = lm.group("brow_right")
    # face skin: jaw line closed through a forehead arc above the brows
    brow_top = np.vstack([brow_l, brow_r])
    forehead_lift = 0.55 * (jaw[:, 1].max() - brow_top[:, 1].min())
    forehead = np.column_stack(
        [brow_top[:, 0], brow_top[:, 1] - forehead_lift]
    )
    order = np.argsort(forehead[:, 0])[::-1]
    face_poly = np.vstack([jaw, forehead[order]])
    _fill(draw, face_poly, 1)  # skin
    iod = float(np.linalg.norm(lm.centroid("eye_right") - lm.centroid("eye_left")))
    brow_band = max(3.0, 0.05 * iod)
    for name, value in (("brow_left", 2), ("brow_right", 3)):
        pts = lm.group(name)
        band = np.vstack([pts, (pts + np.array([0.0, brow_band]))[::-1]])
        _fill(draw, band, value)
    _fill(draw, lm.group("eye_left"), 4)
    _fill(draw, lm.group("eye_right"), 5)
    _fill(draw, lm.group("nose")[3:], 10)
    outer = lm.group("lips_outer")
    inner = lm.group("lips_inner")
    _fill(draw, outer, 12)  # upper lip fill first, lower overwrites below
    lower = np.vstack([outer[6:], inner[4:][::-1]])
    _fill(draw, lower, 13)
    _fill(draw, inner, 11)  # inner mouth
    return ParsingMask(np.asarray(img, dtype=np.uint8), dict(DEFAULT_LABEL_NAMES))
