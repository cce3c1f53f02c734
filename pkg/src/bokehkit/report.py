"""Figure rendering for the eval report path.

Writes small matplotlib summaries next to the delimited metric output:
score histograms and a PSNR-vs-SSIM scatter. Uses the Agg backend so the
CLI stays headless.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .metrics import MetricReport  # noqa: E402

_RC = {
    "figure.figsize": (5.0, 3.4),
    "figure.dpi": 120,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 9,
}


def render_metric_figures(report: MetricReport, out_dir: str | Path) -> list[Path]:
    """Render histogram + scatter figures for a metric report. Returns paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    with plt.rc_context(_RC):
        for metric, values, unit in (("psnr", report.psnr_values, "dB"),
                                     ("ssim", report.ssim_values, "")):
            fig, ax = plt.subplots()
            ax.hist(values, bins=min(30, max(5, len(values))), color="#4878cf",
                    edgecolor="white")
            label = metric.upper() + (f" [{unit}]" if unit else "")
            ax.set_xlabel(label)
            ax.set_ylabel("images")
            ax.set_title(f"{metric.upper()} distribution "
                         f"(mean {getattr(report, f'mean_{metric}'):.4f})")
            fig.tight_layout()
            path = out_dir / f"{metric}_hist.png"
            fig.savefig(path)
            plt.close(fig)
            written.append(path)

        fig, ax = plt.subplots()
        ax.scatter(report.psnr_values, report.ssim_values, s=12, alpha=0.7,
                   color="#d65f5f")
        ax.set_xlabel("PSNR [dB]")
        ax.set_ylabel("SSIM")
        ax.set_title("per-image PSNR vs SSIM")
        fig.tight_layout()
        path = out_dir / "psnr_vs_ssim.png"
        fig.savefig(path)
        plt.close(fig)
        written.append(path)
    return written
