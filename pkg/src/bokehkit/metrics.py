"""Full-reference quality metrics: PSNR and SSIM.

PSNR runs over all channels against a peak of 1.0 and caps exact matches at
99 dB so corpus means stay finite. SSIM follows the canonical formulation:
11x11 Gaussian window (sigma 1.5), C1 = (0.01 * peak)^2, C2 = (0.03 * peak)^2,
weighted (non-sample) local statistics, computed on Rec. 601 luma, mean over
the valid window positions.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.signal import convolve2d

from .image import luma, validate_image

PSNR_CAP_DB = 99.0
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5


def psnr(a: np.ndarray, b: np.ndarray, peak: float = 1.0) -> float:
    """10 * log10(peak^2 / MSE) in dB; identical images report the 99 dB cap."""
    a = validate_image(a, "a")
    b = validate_image(b, "b")
    if a.shape != b.shape:
        raise ValueError(f"image shapes disagree: {a.shape} vs {b.shape}")
    mse = float(np.mean((a.astype(np.float64) - b.astype(np.float64)) ** 2))
    if mse == 0.0:
        return PSNR_CAP_DB
    return min(10.0 * np.log10(peak * peak / mse), PSNR_CAP_DB)


def _ssim_kernel() -> np.ndarray:
    r = SSIM_WINDOW // 2
    x = np.arange(-r, r + 1, dtype=np.float64)
    g = np.exp(-0.5 * (x / SSIM_SIGMA) ** 2)
    g /= g.sum()
    return np.outer(g, g)


_KERNEL = _ssim_kernel()


def ssim(a: np.ndarray, b: np.ndarray, peak: float = 1.0) -> float:
    """Mean local SSIM on luma. Requires both dimensions >= the 11 px window."""
    a = validate_image(a, "a")
    b = validate_image(b, "b")
    if a.shape != b.shape:
        raise ValueError(f"image shapes disagree: {a.shape} vs {b.shape}")
    if min(a.shape[0], a.shape[1]) < SSIM_WINDOW:
        raise ValueError(f"images must be at least {SSIM_WINDOW}px on each side")
    x = luma(a)
    y = luma(b)
    c1 = (0.01 * peak) ** 2
    c2 = (0.03 * peak) ** 2
    mu_x = convolve2d(x, _KERNEL, mode="valid")
    mu_y = convolve2d(y, _KERNEL, mode="valid")
    var_x = convolve2d(x * x, _KERNEL, mode="valid") - mu_x ** 2
    var_y = convolve2d(y * y, _KERNEL, mode="valid") - mu_y ** 2
    cov = convolve2d(x * y, _KERNEL, mode="valid") - mu_x * mu_y
    num = (2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2)
    den = (mu_x ** 2 + mu_y ** 2 + c1) * (var_x + var_y + c2)
    return float(np.mean(num / den))


@dataclass
class MetricReport:
    """Per-image PSNR/SSIM rows plus their corpus means."""

    names: list[str] = field(default_factory=list)
    psnr_values: list[float] = field(default_factory=list)
    ssim_values: list[float] = field(default_factory=list)

    def add(self, name: str, psnr_db: float, ssim_score: float) -> None:
        self.names.append(name)
        self.psnr_values.append(psnr_db)
        self.ssim_values.append(ssim_score)

    @property
    def mean_psnr(self) -> float:
        return float(np.mean(self.psnr_values)) if self.psnr_values else float("nan")

    @property
    def mean_ssim(self) -> float:
        return float(np.mean(self.ssim_values)) if self.ssim_values else float("nan")

    def summary(self) -> dict:
        return {"count": len(self.names), "psnr_mean": self.mean_psnr,
                "ssim_mean": self.mean_ssim}

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["name", "psnr_db", "ssim"])
            for name, p, s in zip(self.names, self.psnr_values, self.ssim_values):
                writer.writerow([name, f"{p:.6f}", f"{s:.6f}"])

    def write_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.summary(), sort_keys=True, indent=2) + "\n")


def evaluate_pairs(pairs: list[tuple[str, np.ndarray, np.ndarray]]) -> MetricReport:
    """Score (name, result, reference) triples; pure per pair, so callers may
    fan the loop out across workers if they want."""
    report = MetricReport()
    for name, img, ref in pairs:
        report.add(name, psnr(img, ref), ssim(img, ref))
    return report
