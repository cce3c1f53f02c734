"""Raster primitives shared by the whole toolkit.

Conventions
-----------
- An *image* is a float32 ndarray of shape (H, W, 3), RGB, row-major with
  the origin at the top-left. Rendering math always runs on linear-light
  samples; sRGB encoding/decoding happens only at the I/O boundary.
- A *scalar field* (disparity map, defocus map, alpha matte) is a float32
  ndarray of shape (H, W).
- Color files are 8-bit PNG/JPEG in sRGB. Scalar fields are stored as
  16-bit PNG with value/65535 normalization.

All functions are pure: inputs are never mutated, so arrays can be shared
freely across threads.
"""

from __future__ import annotations

import logging
from pathlib import Path

import cv2
import numpy as np

logger = logging.getLogger(__name__)

FILTERS = ("nearest", "bilinear", "bicubic", "area")

_CV_FILTERS = {
    "nearest": cv2.INTER_NEAREST,
    "bilinear": cv2.INTER_LINEAR,
    "bicubic": cv2.INTER_CUBIC,
    "area": cv2.INTER_AREA,
}

# Rec. 601 luma weights, used for metrics and sharpness statistics.
LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114], dtype=np.float64)


def validate_image(img: np.ndarray, name: str = "image") -> np.ndarray:
    """Check the (H, W, 3) finite-float contract and return a float32 view."""
    arr = np.asarray(img)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"{name} must have shape (H, W, 3), got {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} must be non-empty, got {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite samples")
    return arr.astype(np.float32, copy=False)


def validate_field(field: np.ndarray, name: str = "field") -> np.ndarray:
    """Check the (H, W) finite-float contract and return a float32 view."""
    arr = np.asarray(field)
    if arr.ndim != 2:
        raise ValueError(f"{name} must have shape (H, W), got {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} must be non-empty, got {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite samples")
    return arr.astype(np.float32, copy=False)


def validate_alpha(alpha: np.ndarray, name: str = "alpha") -> np.ndarray:
    """Alpha mattes are scalar fields constrained to [0, 1]."""
    arr = validate_field(alpha, name)
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ValueError(f"{name} samples must lie in [0, 1]")
    return arr


def _clamp01_with_warning(arr: np.ndarray, what: str) -> np.ndarray:
    out_of_range = int(np.count_nonzero((arr < 0.0) | (arr > 1.0)))
    if out_of_range:
        logger.warning("clamped %d out-of-range %s samples to [0, 1]", out_of_range, what)
        arr = np.clip(arr, 0.0, 1.0)
    return arr


def srgb_to_linear(img: np.ndarray) -> np.ndarray:
    """Decode sRGB-encoded samples to linear light (IEC 61966-2-1 EOTF).

    Out-of-range inputs are clamped to [0, 1] with a logged warning count.
    Inverse of :func:`linear_to_srgb` to within 1e-6 per sample.
    """
    arr = np.asarray(img, dtype=np.float64)
    if not np.isfinite(arr).all():
        raise ValueError("srgb_to_linear input contains non-finite samples")
    arr = _clamp01_with_warning(arr, "sRGB")
    lin = np.where(arr <= 0.04045, arr / 12.92, ((arr + 0.055) / 1.055) ** 2.4)
    return lin.astype(np.float32)


def linear_to_srgb(img: np.ndarray) -> np.ndarray:
    """Encode linear-light samples to sRGB. Clamps to [0, 1] with a warning count."""
    arr = np.asarray(img, dtype=np.float64)
    if not np.isfinite(arr).all():
        raise ValueError("linear_to_srgb input contains non-finite samples")
    arr = _clamp01_with_warning(arr, "linear")
    srgb = np.where(arr <= 0.0031308, arr * 12.92, 1.055 * arr ** (1.0 / 2.4) - 0.055)
    return srgb.astype(np.float32)


def resize(img: np.ndarray, width: int, height: int, filter: str = "bilinear") -> np.ndarray:
    """Resample an image or scalar field to (width, height).

    `filter` is one of nearest | bilinear | bicubic | area. Constant inputs
    map to the same constant under every filter. Deterministic: identical
    inputs give bitwise-identical outputs.
    """
    if filter not in _CV_FILTERS:
        raise ValueError(f"unknown filter {filter!r}, expected one of {FILTERS}")
    if width < 1 or height < 1:
        raise ValueError(f"target dimensions must be >= 1, got {width}x{height}")
    arr = np.asarray(img, dtype=np.float32)
    if arr.ndim not in (2, 3):
        raise ValueError(f"resize expects (H, W) or (H, W, C), got {arr.shape}")
    if arr.shape[0] == height and arr.shape[1] == width:
        return arr.copy()
    out = cv2.resize(arr, (width, height), interpolation=_CV_FILTERS[filter])
    return out


def luma(img: np.ndarray) -> np.ndarray:
    """Rec. 601 weighted luma of an (H, W, 3) image, float64."""
    arr = validate_image(img)
    return arr.astype(np.float64) @ LUMA_WEIGHTS


# ---------------------------------------------------------------------------
# File I/O. cv2 stores BGR; everything above this line is RGB, so the swap
# happens exactly here.
# ---------------------------------------------------------------------------


def encode_u8(img_srgb: np.ndarray) -> np.ndarray:
    """Quantize sRGB-encoded floats in [0, 1] to uint8 (half-up rounding)."""
    arr = np.clip(np.asarray(img_srgb, dtype=np.float64), 0.0, 1.0)
    return np.floor(arr * 255.0 + 0.5).astype(np.uint8)


def decode_u8(img_u8: np.ndarray) -> np.ndarray:
    """uint8 samples to sRGB-encoded float32 in [0, 1]."""
    return (np.asarray(img_u8, dtype=np.float32) / 255.0).astype(np.float32)


def read_image(path: str | Path) -> np.ndarray:
    """Read an 8-bit PNG/JPEG as a linear-light float32 RGB image."""
    return srgb_to_linear(read_image_srgb(path))


def read_image_srgb(path: str | Path) -> np.ndarray:
    """Read an 8-bit PNG/JPEG as sRGB-encoded float32 RGB (no linearization)."""
    raw = cv2.imread(str(path), cv2.IMREAD_COLOR)
    if raw is None:
        raise IOError(f"cannot decode image file: {path}")
    return decode_u8(cv2.cvtColor(raw, cv2.COLOR_BGR2RGB))


def write_image(path: str | Path, img_linear: np.ndarray) -> None:
    """Write a linear-light image as 8-bit sRGB PNG or JPEG (by extension)."""
    write_image_srgb(path, linear_to_srgb(validate_image(img_linear)))


def write_image_srgb(path: str | Path, img_srgb: np.ndarray) -> None:
    """Write sRGB-encoded float32 RGB samples as an 8-bit file."""
    u8 = encode_u8(img_srgb)
    ok = cv2.imwrite(str(path), cv2.cvtColor(u8, cv2.COLOR_RGB2BGR))
    if not ok:
        raise IOError(f"cannot write image file: {path}")


def read_field_png16(path: str | Path, scale: float = 1.0) -> np.ndarray:
    """Read a 16-bit grayscale PNG as a float32 field: value / 65535 * scale."""
    raw = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise IOError(f"cannot decode field file: {path}")
    if raw.ndim != 2:
        raise IOError(f"expected single-channel field PNG, got shape {raw.shape}: {path}")
    if raw.dtype == np.uint16:
        norm = raw.astype(np.float32) / 65535.0
    elif raw.dtype == np.uint8:
        norm = raw.astype(np.float32) / 255.0
    else:
        raise IOError(f"unsupported field dtype {raw.dtype}: {path}")
    return (norm * np.float32(scale)).astype(np.float32)


def read_png_raw(path: str | Path) -> np.ndarray:
    """Read a PNG without any decoding conventions (raw dtype, BGR untouched)."""
    raw = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise IOError(f"cannot decode file: {path}")
    return raw


def quantize_u16(field: np.ndarray, scale: float = 1.0) -> np.ndarray:
    """The exact uint16 quantization used by :func:`write_field_png16`."""
    norm = np.clip(np.asarray(field, dtype=np.float64) / scale, 0.0, 1.0)
    return np.floor(norm * 65535.0 + 0.5).astype(np.uint16)


def write_field_png16(path: str | Path, field: np.ndarray, scale: float = 1.0) -> None:
    """Write a float32 field as 16-bit PNG, quantizing value/scale into [0, 65535]."""
    arr = validate_field(field)
    if scale <= 0:
        raise ValueError("scale must be positive")
    u16 = quantize_u16(arr, scale)
    ok = cv2.imwrite(str(path), u16)
    if not ok:
        raise IOError(f"cannot write field file: {path}")
