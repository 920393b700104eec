"""Stateless HTTP facade over extraction, synthesis, and application.

Images travel as base64 PNG in JSON bodies; responses with image payloads are
raw PNG bytes. The style library and canonical layout are immutable shared
state loaded at startup; there are no sessions. Run with:

    uvicorn maskforge.service:app
"""

from __future__ import annotations

import base64
import binascii
import hashlib
import json
import time
from contextlib import asynccontextmanager

import numpy as np
from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse, PlainTextResponse
from pydantic import BaseModel

from . import _kernels, extraction, geometry, imageio, parsing, synthesis, video

MAX_PAYLOAD_BYTES = 16 * 1024 * 1024


@asynccontextmanager
async def _lifespan(_app):
    _kernels.warmup()  # JIT compile before the first timed request
    yield


app = FastAPI(title="maskforge", version="0.1.0", lifespan=_lifespan)

# the companion browser UI is served from its own origin
from fastapi.middleware.cors import CORSMiddleware  # noqa: E402

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_methods=["*"],
    allow_headers=["*"],
    expose_headers=["X-Extract-Stats", "X-Style", "X-Warning"],
)

_canon = geometry.default_canonical()
_library = synthesis.default_library()


class ApiError(Exception):
    def __init__(self, status: int, reason: str):
        self.status = status
        self.reason = reason


@app.exception_handler(ApiError)
def _api_error(_request: Request, exc: ApiError):
    return JSONResponse(status_code=exc.status, content={"error": exc.reason})


def _decode_b64(field: str, data: str) -> bytes:
    if data is None:
        raise ApiError(400, f"missing field {field!r}")
    try:
        raw = base64.b64decode(data, validate=True)
    except (binascii.Error, ValueError):
        raise ApiError(400, f"field {field!r} is not valid base64")
    if len(raw) > MAX_PAYLOAD_BYTES:
        raise ApiError(413, f"field {field!r} exceeds {MAX_PAYLOAD_BYTES} bytes")
    return raw


# content-addressed decode cache: interactive clients resend the same mask on
# every request, and decoding a 1024x1024 RGBA PNG dominates apply latency
_DECODE_CACHE: dict[str, np.ndarray] = {}
_DECODE_CACHE_MAX = 16


def _decode_image(field: str, data: str) -> np.ndarray:
    raw = _decode_b64(field, data)
    key = hashlib.sha256(raw).hexdigest()
    cached = _DECODE_CACHE.get(key)
    if cached is not None:
        return cached
    try:
        img = imageio.decode_image(raw)
    except Exception:
        raise ApiError(400, f"field {field!r} is not a decodable image")
    if len(_DECODE_CACHE) >= _DECODE_CACHE_MAX:
        _DECODE_CACHE.pop(next(iter(_DECODE_CACHE)))
    _DECODE_CACHE[key] = img
    return img


def _landmarks(doc: dict) -> geometry.LandmarkSet:
    try:
        return geometry.landmarks_from_json(doc)
    except (KeyError, TypeError, ValueError) as e:
        raise ApiError(400, f"bad landmarks: {e}")


class ExtractRequest(BaseModel):
    photo_b64: str
    landmarks: dict
    parsing_b64: str
    labels: dict | None = None
    params: dict | None = None


class ApplyRequest(BaseModel):
    mask_b64: str
    frame_b64: str
    landmarks: dict
    parsing_b64: str | None = None
    labels: dict | None = None
    options: dict | None = None


class SynthesizeRequest(BaseModel):
    seed: int | None = None
    style: dict | None = None


@app.get("/healthz", response_class=PlainTextResponse)
def healthz() -> str:
    return "ok"


@app.get("/v1/styles")
def styles():
    return {
        "templates": [
            {"id": t.id, "region": t.region} for t in sorted(
                _library.templates.values(), key=lambda t: t.id
            )
        ],
        "palettes": {
            region: {name: list(rgb) for name, rgb in colors}
            for region, colors in _library.palettes.items()
        },
    }


@app.post("/v1/synthesize")
def synthesize(req: SynthesizeRequest) -> Response:
    if req.style is not None:
        try:
            style = synthesis.MakeupStyle.from_json(req.style)
        except (KeyError, TypeError, ValueError) as e:
            raise ApiError(400, f"bad style: {e}")
    else:
        style = synthesis.sample_style(_library, req.seed or 0)
    try:
        mask = synthesis.render_style_mask(style, _library, _canon)
    except KeyError as e:
        raise ApiError(404, str(e.args[0]))
    return Response(
        content=imageio.png_bytes_rgba(mask),
        media_type="image/png",
        headers={"X-Style": json.dumps(style.to_json(), sort_keys=True)},
    )


@app.post("/v1/extract")
def extract(req: ExtractRequest) -> Response:
    photo = _decode_image("photo_b64", req.photo_b64)
    if photo.ndim != 3:
        raise ApiError(400, "photo must be a color image")
    labels_raw = _decode_image("parsing_b64", req.parsing_b64)
    if labels_raw.ndim != 2:
        raise ApiError(400, "parsing must be a single-channel label PNG")
    pmask = parsing.ParsingMask(labels_raw, parsing.names_from_json(req.labels))
    lm = _landmarks(req.landmarks)
    p = req.params or {}
    try:
        params = extraction.ClusterParams(
            k=int(p.get("k", 6)), s=int(p.get("s", 2)), seed=int(p.get("seed", 0))
        )
    except ValueError as e:
        raise ApiError(400, str(e))
    t0 = time.perf_counter()
    try:
        mask, stats = extraction.extract_eye_mask_with_stats(
            photo[..., :3], lm, pmask, params, _canon,
            chroma_only=bool(p.get("chroma_only", False)),
        )
    except ValueError as e:
        if "parsing lacks eye region" in str(e):
            raise ApiError(422, "parsing lacks eye region")
        raise ApiError(400, str(e))
    stats.elapsed_ms = (time.perf_counter() - t0) * 1000.0
    return Response(
        content=imageio.png_bytes_rgba(mask),
        media_type="image/png",
        headers={
            "X-Extract-Stats": json.dumps(
                {
                    "skin_tone_lab": stats.skin_tone_lab,
                    "cluster_counts": stats.cluster_counts,
                    "elapsed_ms": stats.elapsed_ms,
                },
                sort_keys=True,
            )
        },
    )


@app.post("/v1/apply")
def apply(req: ApplyRequest) -> Response:
    mask = _decode_image("mask_b64", req.mask_b64)
    if mask.ndim != 3 or mask.shape[2] != 4:
        raise ApiError(400, "mask must be an RGBA image")
    frame_img = _decode_image("frame_b64", req.frame_b64)
    if frame_img.ndim != 3:
        raise ApiError(400, "frame must be a color image")
    pmask = None
    if req.parsing_b64 is not None:
        labels_raw = _decode_image("parsing_b64", req.parsing_b64)
        if labels_raw.ndim != 2:
            raise ApiError(400, "parsing must be a single-channel label PNG")
        pmask = parsing.ParsingMask(labels_raw, parsing.names_from_json(req.labels))
    lm = _landmarks(req.landmarks)
    opts = req.options or {}
    alpha_scale = float(opts.get("alpha_scale", 1.0))
    if not (0.0 <= alpha_scale <= 2.0):
        raise ApiError(400, f"alpha_scale must be in [0, 2], got {alpha_scale}")
    frame = video.FrameInput(image=frame_img[..., :3], landmarks=lm, parsing=pmask)
    out, ok = video.apply_to_frame(
        mask, frame, _canon, video.ApplyOptions(alpha_scale=alpha_scale)
    )
    headers = {}
    if not ok:
        headers["X-Warning"] = "degenerate landmarks; frame passed through"
    return Response(content=imageio.png_bytes_rgb(out), media_type="image/png", headers=headers)


if __name__ == "__main__":
    import uvicorn

    uvicorn.run(app, host="127.0.0.1", port=8000)
