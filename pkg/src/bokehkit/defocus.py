"""Disparity -> defocus radius -> binary focus mask.

The defocus radius at a pixel is ``r = K * |d - d_f|`` where ``d`` is the
pixel's disparity in [0, 1], ``d_f`` the disparity of the focal plane, and
``K`` the blur intensity (pixels of radius per unit disparity gap). A pixel
counts as in-focus when its radius falls below a visibility threshold
``tau`` (default: one pixel), and the resulting binary mask can be
majority-vote downsampled to the resolutions attention layers work at.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .image import validate_field, write_field_png16

logger = logging.getLogger(__name__)

DEFAULT_FOCUS_THRESHOLD = 1.0


@dataclass(frozen=True)
class LensParams:
    """Blur intensity `k` (>= 0) and focal disparity `d_f` in [0, 1]."""

    k: float
    d_f: float

    def __post_init__(self):
        if not np.isfinite(self.k) or self.k < 0.0:
            raise ValueError(f"blur intensity k must be finite and >= 0, got {self.k}")
        if not np.isfinite(self.d_f) or not 0.0 <= self.d_f <= 1.0:
            raise ValueError(f"focal disparity d_f must lie in [0, 1], got {self.d_f}")


@dataclass(frozen=True)
class FocusMask:
    """Binary in-focus mask plus the radius threshold that produced it."""

    values: np.ndarray  # (H, W) uint8 in {0, 1}
    tau: float

    def __post_init__(self):
        arr = np.asarray(self.values)
        if arr.ndim != 2:
            raise ValueError(f"mask must be 2-D, got shape {arr.shape}")
        if not np.isin(arr, (0, 1)).all():
            raise ValueError("mask values must be 0 or 1")
        object.__setattr__(self, "values", arr.astype(np.uint8))

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]


def compute_defocus(disparity: np.ndarray, lens: LensParams) -> np.ndarray:
    """Per-pixel blur radius ``r = k * |d - d_f|`` in pixels (float32, exact).

    Disparity samples outside [0, 1] are treated as normalization defects:
    they are clamped, and the clamp count is logged as a warning. With
    ``k == 0`` the result is exactly all-zero (the all-in-focus condition).
    """
    d = validate_field(disparity, "disparity")
    out_of_range = int(np.count_nonzero((d < 0.0) | (d > 1.0)))
    if out_of_range:
        logger.warning("clamped %d out-of-range disparity samples to [0, 1]", out_of_range)
        d = np.clip(d, 0.0, 1.0)
    return (np.float32(lens.k) * np.abs(d - np.float32(lens.d_f))).astype(np.float32)


def binarize_focus(defocus: np.ndarray, tau: float = DEFAULT_FOCUS_THRESHOLD) -> FocusMask:
    """Threshold a defocus map into {in-focus: 1, defocused: 0}.

    The boundary rule is strict: ``r < tau`` is in focus, ``r == tau`` is not.
    An all-zero defocus map therefore yields an all-ones mask for any tau > 0.
    """
    if not np.isfinite(tau) or tau < 0.0:
        raise ValueError(f"tau must be finite and >= 0, got {tau}")
    r = validate_field(defocus, "defocus")
    if r.min() < 0.0:
        raise ValueError("defocus radii must be >= 0")
    return FocusMask(values=(r < np.float32(tau)).astype(np.uint8), tau=float(tau))


def downsample_mask(mask: FocusMask, width: int, height: int) -> FocusMask:
    """Majority-vote downsample to (width, height); ties go to in-focus (1).

    Target dimensions must divide the source dimensions evenly so each output
    cell owns a whole block of source pixels.
    """
    src = mask.values
    h, w = src.shape
    if width < 1 or height < 1:
        raise ValueError("target dimensions must be >= 1")
    if width > w or height > h:
        raise ValueError(f"target {width}x{height} exceeds source {w}x{h}")
    if w % width != 0 or h % height != 0:
        raise ValueError(f"target {width}x{height} must divide source {w}x{h} evenly")
    by, bx = h // height, w // width
    blocks = src.reshape(height, by, width, bx)
    ones = blocks.sum(axis=(1, 3), dtype=np.int64)
    out = (2 * ones >= by * bx).astype(np.uint8)
    return FocusMask(values=out, tau=mask.tau)


def export_defocus(path: str | Path, defocus: np.ndarray, lens: LensParams,
                   tau: float = DEFAULT_FOCUS_THRESHOLD) -> None:
    """Write a defocus map as 16-bit PNG plus a JSON sidecar.

    Radii are normalized by the lens blur intensity (or 1.0 when k == 0) so
    the full 16-bit range is used; the sidecar records k, d_f, tau, and the
    normalization scale needed to recover radii in pixels.
    """
    scale = lens.k if lens.k > 0 else 1.0
    write_field_png16(path, defocus, scale=scale)
    sidecar = Path(str(path) + ".json")
    meta = {"k": lens.k, "d_f": lens.d_f, "tau": float(tau), "scale": scale}
    sidecar.write_text(json.dumps(meta, sort_keys=True) + "\n")
