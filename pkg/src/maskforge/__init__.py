"""maskforge: identity-free RGBA makeup masks.

Extract semi-transparent makeup masks from reference photos, synthesize
pseudo-ground-truth training pairs procedurally, and apply masks to faces or
video in real time. See the CLI (`maskforge --help`) and the HTTP facade in
maskforge.service.
"""

from ._kernels import USING_NUMBA
from .color import (
    blend_over,
    composite_mask,
    lab_cosine_similarity,
    lab_to_srgb,
    srgb_to_lab,
)
from .extraction import ClusterParams, extract_eye_mask
from .geometry import (
    CanonicalLayout,
    LandmarkSet,
    TpsWarp,
    apply_affine,
    crop_region,
    default_canonical,
    fit_canonical_affine,
    paste_region,
    tps_fit,
    tps_warp_image,
)
from .metrics import psnr, synthetic_transfer_eval
from .parsing import ParsingMask, parsing_from_landmarks
from .synthesis import (
    MakeupStyle,
    StyleLibrary,
    build_average_alpha,
    default_library,
    generate_dataset,
    generate_pair,
    render_style_mask,
    sample_style,
)
from .video import FrameInput, SmootherState, apply_to_frame, run_video, smooth_landmarks

__version__ = "0.1.0"

__all__ = [
    "USING_NUMBA",
    "blend_over",
    "composite_mask",
    "lab_cosine_similarity",
    "lab_to_srgb",
    "srgb_to_lab",
    "ClusterParams",
    "extract_eye_mask",
    "CanonicalLayout",
    "LandmarkSet",
    "TpsWarp",
    "apply_affine",
    "crop_region",
    "default_canonical",
    "fit_canonical_affine",
    "paste_region",
    "tps_fit",
    "tps_warp_image",
    "psnr",
    "synthetic_transfer_eval",
    "ParsingMask",
    "parsing_from_landmarks",
    "MakeupStyle",
    "StyleLibrary",
    "build_average_alpha",
    "default_library",
    "generate_dataset",
    "generate_pair",
    "render_style_mask",
    "sample_style",
    "FrameInput",
    "SmootherState",
    "apply_to_frame",
    "run_video",
    "smooth_landmarks",
    "__version__",
]
