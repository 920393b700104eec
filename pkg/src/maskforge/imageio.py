"""PNG read/write for RGB images, RGBA masks, and 8-bit grayscale maps.

Pixels are stored as value/255; writes quantize with round-half-up. RGBA PNGs
carry straight alpha.
"""

from __future__ import annotations

import os

import numpy as np
from PIL import Image


def _to_uint8(img: np.ndarray) -> np.ndarray:
    return np.floor(np.clip(img, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)


def read_rgb(path: str | os.PathLike) -> np.ndarray:
    """Read a PNG (or any PIL-readable image) as (H, W, 3) float64 in [0, 1]."""
    with Image.open(path) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.float64)
    return arr / 255.0


def read_rgba(path: str | os.PathLike) -> np.ndarray:
    """Read an RGBA PNG as (H, W, 4) float64 with straight alpha."""
    with Image.open(path) as im:
        arr = np.asarray(im.convert("RGBA"), dtype=np.float64)
    return arr / 255.0


def read_gray(path: str | os.PathLike) -> np.ndarray:
    """Read a single-channel 8-bit PNG as (H, W) float64 in [0, 1]."""
    with Image.open(path) as im:
        arr = np.asarray(im.convert("L"), dtype=np.float64)
    return arr / 255.0


def read_labels(path: str | os.PathLike) -> np.ndarray:
    """Read an 8-bit label map PNG as (H, W) uint8, values untouched."""
    with Image.open(path) as im:
        return np.asarray(im.convert("L"), dtype=np.uint8).copy()


def write_rgb(path: str | os.PathLike, img: np.ndarray) -> None:
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected (H, W, 3) image, got shape {img.shape}")
    Image.fromarray(_to_uint8(img), mode="RGB").save(path, format="PNG")


def write_rgba(path: str | os.PathLike, mask: np.ndarray) -> None:
    if mask.ndim != 3 or mask.shape[2] != 4:
        raise ValueError(f"expected (H, W, 4) mask, got shape {mask.shape}")
    Image.fromarray(_to_uint8(mask), mode="RGBA").save(path, format="PNG")


def write_gray(path: str | os.PathLike, img: np.ndarray) -> None:
    if img.ndim != 2:
        raise ValueError(f"expected (H, W) image, got shape {img.shape}")
    Image.fromarray(_to_uint8(img), mode="L").save(path, format="PNG")


def write_labels(path: str | os.PathLike, labels: np.ndarray) -> None:
    Image.fromarray(labels.astype(np.uint8), mode="L").save(path, format="PNG")


def quantize(img: np.ndarray) -> np.ndarray:
    """Round-trip an image through 8-bit quantization without touching disk."""
    return _to_uint8(img).astype(np.float64) / 255.0


def png_bytes_rgba(mask: np.ndarray) -> bytes:
    """Encode an RGBA mask as PNG bytes (used by the HTTP service)."""
    import io as _io

    buf = _io.BytesIO()
    Image.fromarray(_to_uint8(mask), mode="RGBA").save(buf, format="PNG")
    return buf.getvalue()


def png_bytes_rgb(img: np.ndarray) -> bytes:
    import io as _io

    buf = _io.BytesIO()
    Image.fromarray(_to_uint8(img), mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def decode_image(data: bytes) -> np.ndarray:
    """Decode image bytes to float64; (H, W, 3) or (H, W, 4) depending on mode."""
    import io as _io

    with Image.open(_io.BytesIO(data)) as im:
        if im.mode in ("RGBA", "LA", "PA"):
            arr = np.asarray(im.convert("RGBA"), dtype=np.float64)
        elif im.mode == "L":
            return np.asarray(im, dtype=np.uint8).copy()
        else:
            arr = np.asarray(im.convert("RGB"), dtype=np.float64)
    return arr / 255.0
