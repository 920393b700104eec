#!/usr/bin/env python3
"""Regenerate the packaged assets: canonical face layout + default style library.

Run from the repo root:

    python3 tools/build_assets.py

Outputs land in src/maskforge/assets/. The canonical frame is 1024x1024 with
horizontal eyes 320 px apart; templates are editable grayscale PNGs drawn in
that frame, so users can add looks by dropping files next to library.json.
"""

import json
import math
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

OUT = Path(__file__).resolve().parent.parent / "src" / "maskforge" / "assets"
SIZE = 1024

# ---------------------------------------------------------------------------
# canonical 68-point layout (ibug ordering, left/right are image-relative)
# ---------------------------------------------------------------------------

def canonical_points():
    pts = []
    # jaw 0-16: lower half of an ellipse
    for i in range(17):
        phi = math.radians(180.0 + i * 180.0 / 16.0)
        pts.append((512.0 + 330.0 * math.cos(phi), 430.0 - 440.0 * math.sin(phi)))
    # brows 17-21 (image-left), 22-26 (image-right)
    left_brow = []
    for i in range(5):
        t = i / 4.0
        left_brow.append((262.0 + 180.0 * t, 352.0 - 14.0 * math.sin(math.pi * t)))
    pts.extend(left_brow)
    pts.extend([(1024.0 - x, y) for x, y in reversed(left_brow)])
    # nose bridge 27-30 and base 31-35
    pts.extend([(512.0, 420.0), (512.0, 455.0), (512.0, 490.0), (512.0, 525.0)])
    pts.extend([(468.0, 558.0), (489.0, 566.0), (512.0, 572.0), (535.0, 566.0), (556.0, 558.0)])
    # eyes: offsets sum to zero so the centroid is exact; inter-ocular = 320
    eye_off = [(-46, 0), (-17, -16), (13, -17), (46, -1), (15, 16), (-11, 18)]
    left_eye = [(352.0 + dx, 420.0 + dy) for dx, dy in eye_off]
    pts.extend(left_eye)  # 36-41: outer, top, top, inner, bottom, bottom
    mirror = [3, 2, 1, 0, 5, 4]  # inner, top, top, outer, bottom, bottom
    pts.extend([(1024.0 - left_eye[m][0], left_eye[m][1]) for m in mirror])  # 42-47
    # lips 48-59 outer, 60-67 inner
    pts.extend(
        [
            (432.0, 690.0), (455.0, 672.0), (483.0, 664.0), (512.0, 668.0),
            (541.0, 664.0), (569.0, 672.0), (592.0, 690.0), (570.0, 712.0),
            (542.0, 722.0), (512.0, 724.0), (482.0, 722.0), (454.0, 712.0),
        ]
    )
    pts.extend(
        [
            (444.0, 690.0), (482.0, 682.0), (512.0, 684.0), (542.0, 682.0),
            (580.0, 690.0), (542.0, 698.0), (512.0, 700.0), (482.0, 698.0),
        ]
    )
    return np.array(pts)


REGION_ANCHORS = {
    "eye_left": list(range(36, 42)),
    "eye_right": list(range(42, 48)),
    "lips": list(range(48, 68)),
    "brow_left": list(range(17, 22)),
    "brow_right": list(range(22, 27)),
    "cheek_left": [36, 48],
    "cheek_right": [45, 54],
}


def write_canonical(pts):
    doc = {
        "version": 1,
        "layout_id": "ibug68",
        "width": SIZE,
        "height": SIZE,
        "points": [[round(x, 2), round(y, 2)] for x, y in pts],
        "region_anchors": REGION_ANCHORS,
    }
    path = OUT / "canonical_layout_v1.json"
    path.write_text(json.dumps(doc, indent=1))
    print("wrote", path)


# ---------------------------------------------------------------------------
# shape templates
# ---------------------------------------------------------------------------

def gaussian_blur(img, sigma):
    if sigma <= 0:
        return img
    radius = max(int(3 * sigma), 1)
    x = np.arange(-radius, radius + 1)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    k /= k.sum()
    tmp = np.apply_along_axis(lambda r: np.convolve(r, k, mode="same"), 1, img)
    return np.apply_along_axis(lambda c: np.convolve(c, k, mode="same"), 0, tmp)


def ellipse_falloff(cx, cy, rx, ry, angle_deg=0.0, power=1.5, peak=0.9):
    ys, xs = np.mgrid[0:SIZE, 0:SIZE].astype(np.float64)
    dx = xs - cx
    dy = ys - cy
    a = math.radians(angle_deg)
    u = (dx * math.cos(a) + dy * math.sin(a)) / rx
    v = (-dx * math.sin(a) + dy * math.cos(a)) / ry
    r2 = u * u + v * v
    return peak * np.clip(1.0 - r2, 0.0, 1.0) ** power


def mirrored(fn):
    """Apply a per-eye builder at both eyes; mirror the geometry for the right."""
    left = fn(352.0, 420.0, 1.0)
    right = fn(672.0, 420.0, -1.0)
    return np.maximum(left, right)


def eyeshadow_templates():
    return {
        "eyeshadow_soft": mirrored(
            lambda ex, ey, s: ellipse_falloff(ex, ey - 26, 64, 16, -6 * s, 1.5, 0.9)
        ),
        # pressed-powder look: full-strength plateau with a quick edge falloff
        "eyeshadow_defined": mirrored(
            lambda ex, ey, s: np.clip(
                ellipse_falloff(ex, ey - 28, 62, 14, -4 * s, 1.0, 3.0), 0.0, 1.0
            )
        ),
        "eyeshadow_wide": mirrored(
            lambda ex, ey, s: ellipse_falloff(ex + 8 * s, ey - 27, 84, 18, -9 * s, 1.3, 0.85)
        ),
        "eyeshadow_winged": mirrored(
            lambda ex, ey, s: np.maximum(
                ellipse_falloff(ex, ey - 25, 60, 15, -5 * s, 1.5, 0.9),
                ellipse_falloff(ex + 52 * s, ey - 34, 34, 12, -18 * s, 1.4, 0.8),
            )
        ),
        "eyeshadow_halo": mirrored(
            lambda ex, ey, s: ellipse_falloff(ex, ey - 27, 70, 18, 0.0, 0.8, 0.95)
        ),
    }


def _liner_curve(ex, ey, s, length, lift, wing):
    # quadratic through outer corner -> lid apex -> inner corner, lifted above the lash line
    outer = np.array([ex - s * 48.0, ey - 4.0 - lift])
    apex = np.array([ex - s * 2.0, ey - 20.0 - lift])
    inner = np.array([ex + s * 44.0, ey - 5.0 - lift])
    ts = np.linspace(0.0, 1.0, 60)
    curve = (
        (1 - ts)[:, None] ** 2 * outer
        + 2 * ((1 - ts) * ts)[:, None] * apex
        + ts[:, None] ** 2 * inner
    )
    if wing > 0:
        tip = outer + np.array([-s * wing, -wing * 0.6])
        ws = np.linspace(0.0, 1.0, 20)[:, None]
        curve = np.vstack([outer * (1 - ws) + tip * ws, curve])
    return curve * length


def liner_template(width, lift=0.0, wing=0.0, sigma=1.6):
    img = Image.new("F", (SIZE, SIZE), 0.0)
    draw = ImageDraw.Draw(img)
    for ex, s in ((352.0, 1.0), (672.0, -1.0)):
        curve = _liner_curve(ex, 420.0, s, 1.0, lift, wing)
        draw.line([tuple(p) for p in curve], fill=1.0, width=width, joint="curve")
    cov = np.asarray(img, dtype=np.float64)
    return np.clip(gaussian_blur(cov, sigma), 0.0, 1.0)


def eyeliner_templates():
    return {
        "eyeliner_thin": liner_template(4, lift=0.0, sigma=1.2) * 0.95,
        "eyeliner_bold": liner_template(8, lift=1.0, sigma=1.6) * 0.95,
        "eyeliner_winged": liner_template(6, lift=0.5, wing=26.0, sigma=1.4) * 0.95,
        "eyeliner_smudged": liner_template(7, lift=2.0, sigma=4.0) * 0.8,
    }


def blush_templates():
    # cheek anchors: midpoint of eye outer corner and mouth corner, per side
    lmid = ((306.0 + 432.0) / 2, (420.0 + 690.0) / 2)
    rmid = ((718.0 + 592.0) / 2, (420.0 + 690.0) / 2)

    def both(rx, ry, angle, power, peak, dy=0.0):
        return np.maximum(
            ellipse_falloff(lmid[0], lmid[1] + dy, rx, ry, angle, power, peak),
            ellipse_falloff(rmid[0], rmid[1] + dy, rx, ry, -angle, power, peak),
        )

    return {
        "blush_round": both(70, 62, 0.0, 1.8, 0.65),
        "blush_oval": both(95, 58, -18.0, 1.6, 0.6),
        "blush_high": both(62, 50, -12.0, 1.8, 0.7, dy=-28.0),
        "blush_wide": both(105, 70, -8.0, 2.2, 0.55),
    }


def lip_polygons(pts):
    outer = [tuple(p) for p in pts[48:60]]
    inner = [tuple(p) for p in pts[60:68]]
    return outer, inner


def lipstick_template(pts, sigma, peak=1.0, ombre=False):
    img = Image.new("F", (SIZE, SIZE), 0.0)
    draw = ImageDraw.Draw(img)
    outer, _ = lip_polygons(pts)
    draw.polygon(outer, fill=1.0)
    cov = np.asarray(img, dtype=np.float64)
    cov = np.clip(gaussian_blur(cov, sigma), 0.0, 1.0)
    if ombre:
        cx, cy = 512.0, 694.0
        ys, xs = np.mgrid[0:SIZE, 0:SIZE].astype(np.float64)
        fade = np.clip(1.0 - np.hypot(xs - cx, ys - cy) / 110.0, 0.35, 1.0)
        cov = cov * fade
    return cov * peak


def lipstick_templates(pts):
    return {
        "lipstick_crisp": lipstick_template(pts, 1.0),
        "lipstick_soft": lipstick_template(pts, 4.0),
        "lipstick_ombre": lipstick_template(pts, 2.0, ombre=True),
        "lipstick_sheer": lipstick_template(pts, 3.0, peak=0.8),
    }


# eyeshadow shades stay chroma-distinct from skin tones: the cosine-similarity
# transparency model cannot see near-skin browns or near-black shades
PALETTES = {
    "eyeshadow": {
        "plum": [0.35, 0.12, 0.33],
        "navy": [0.08, 0.10, 0.32],
        "forest": [0.08, 0.25, 0.15],
        "teal": [0.05, 0.32, 0.36],
        "violet": [0.28, 0.14, 0.45],
        "berry": [0.45, 0.10, 0.30],
        "ocean": [0.06, 0.22, 0.42],
    },
    "eyeliner": {
        "black": [0.05, 0.04, 0.05],
        "espresso": [0.22, 0.13, 0.08],
        "navy": [0.08, 0.12, 0.30],
        "plum": [0.30, 0.12, 0.30],
    },
    "blush": {
        "rose": [0.85, 0.44, 0.48],
        "coral": [0.92, 0.48, 0.38],
        "berry": [0.65, 0.25, 0.35],
        "peach": [0.95, 0.60, 0.45],
    },
    "lipstick": {
        "red": [0.75, 0.12, 0.16],
        "rosewood": [0.62, 0.32, 0.33],
        "fuchsia": [0.80, 0.20, 0.45],
        "brick": [0.60, 0.22, 0.16],
        "mauve": [0.58, 0.38, 0.42],
        "wine": [0.42, 0.10, 0.18],
    },
}


def write_library(pts):
    styles = OUT / "styles"
    styles.mkdir(parents=True, exist_ok=True)
    groups = {
        "eyeshadow": eyeshadow_templates(),
        "eyeliner": eyeliner_templates(),
        "blush": blush_templates(),
        "lipstick": lipstick_templates(pts),
    }
    entries = []
    for region, templates in groups.items():
        for tid, cov in sorted(templates.items()):
            arr = np.floor(np.clip(cov, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)
            fname = f"{tid}.png"
            Image.fromarray(arr, mode="L").save(styles / fname)
            entries.append({"id": tid, "region": region, "file": fname})
            print("wrote", styles / fname)
    doc = {"version": 1, "seed": 0, "templates": entries, "palettes": PALETTES}
    (styles / "library.json").write_text(json.dumps(doc, indent=1))
    print("wrote", styles / "library.json")


if __name__ == "__main__":
    OUT.mkdir(parents=True, exist_ok=True)
    pts = canonical_points()
    write_canonical(pts)
    write_library(pts)
