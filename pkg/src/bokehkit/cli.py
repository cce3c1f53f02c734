"""Single entry point: render / synth / bench / degrade / eval / serve.

Exit codes: 0 success, 1 runtime error (one-line diagnostic on stderr),
2 usage error (argparse). All subcommands are deterministic given their
flags and seed; `--threads` bounds the render worker pool, and the
BOKEHKIT_LOG environment variable sets the log level.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .defocus import DEFAULT_FOCUS_THRESHOLD, LensParams, compute_defocus
from .degrade import apply_trace, default_preset, identity_preset, sample_trace
from .image import (read_field_png16, read_image, read_image_srgb, write_image,
                    write_image_srgb)
from .metrics import evaluate_pairs
from .render import RenderConfig, render_scatter
from .report import render_metric_figures
from .synth import (build_benchmark, derive_seed, make_demo_assets, read_manifest,
                    synthesize_corpus, verify_sample)

logger = logging.getLogger("bokehkit")

_IMAGE_EXTENSIONS = (".png", ".jpg", ".jpeg")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bokehkit",
                                     description="physically-based depth-of-field toolkit")
    parser.add_argument("--version", action="version", version=f"bokehkit {__version__}")
    parser.add_argument("--threads", type=int, default=None,
                        help="bound all worker pools (default: available parallelism)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("render", help="render a bokeh image from a photo + disparity map")
    p.add_argument("--image", required=True, help="input photo (8-bit PNG/JPEG)")
    p.add_argument("--disparity", required=True, help="disparity map (16-bit PNG, value/65535)")
    p.add_argument("--k", type=float, required=True, help="blur intensity in pixels")
    p.add_argument("--df", type=float, required=True, help="focal disparity in [0, 1]")
    p.add_argument("--out", required=True, help="output PNG path")

    p = sub.add_parser("synth", help="synthesize manifested LQ/HQ bokeh training samples")
    p.add_argument("--assets", required=True, help="asset catalog directory")
    p.add_argument("--out", required=True, help="output dataset directory")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--size", type=int, default=512, help="sample resolution (default 512)")
    p.add_argument("--tau", type=float, default=DEFAULT_FOCUS_THRESHOLD,
                   help="focus-mask radius threshold in pixels")
    p.add_argument("--verify", action="store_true",
                   help="re-check stored defocus/mask consistency after writing")

    p = sub.add_parser("bench", help="degrade an HQ corpus into an LQ/HQ benchmark")
    p.add_argument("--corpus", required=True, help="directory or listing file of HQ images")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, required=True)

    p = sub.add_parser("degrade", help="run the degradation chain on an image or directory")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--preset", choices=("default", "identity"), default="default")

    p = sub.add_parser("eval", help="PSNR/SSIM of a results directory against references")
    p.add_argument("--results", required=True)
    p.add_argument("--reference", required=True)
    p.add_argument("--manifest", default=None,
                   help="optional benchmark manifest pairing results with references")
    p.add_argument("--out", required=True, help="report directory (CSV, JSON, figures)")
    p.add_argument("--json", action="store_true", help="print the JSON summary to stdout")

    p = sub.add_parser("serve", help="start the interactive refocus HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8639)

    p = sub.add_parser("demo-assets", help="generate a tiny synthetic asset catalog")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--size", type=int, default=512)

    return parser


def _cmd_render(args) -> int:
    img = read_image(args.image)
    disparity = read_field_png16(args.disparity)
    if img.shape[:2] != disparity.shape:
        raise ValueError(f"image {img.shape[:2]} and disparity {disparity.shape} disagree")
    if args.k < 0:
        raise ValueError("k must be >= 0")
    lens = LensParams(k=args.k, d_f=args.df)
    radii = compute_defocus(disparity, lens)
    cfg = RenderConfig(max_radius=max(64.0, args.k))
    write_image(args.out, render_scatter(img, radii, cfg))
    logger.info("wrote %s", args.out)
    return 0


def _cmd_synth(args) -> int:
    manifest = synthesize_corpus(args.assets, args.out, count=args.count, seed=args.seed,
                                 size=args.size, tau=args.tau)
    if args.verify:
        _, records = read_manifest(manifest)
        for rec in records:
            verify_sample(rec, Path(args.out))
        logger.info("verified %d samples", len(records))
    print(manifest)
    return 0


def _cmd_bench(args) -> int:
    manifest = build_benchmark(args.corpus, args.out, seed=args.seed)
    print(manifest)
    return 0


def _cmd_degrade(args) -> int:
    src = Path(args.input)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    files = [src] if src.is_file() else sorted(
        p for ext in _IMAGE_EXTENSIONS for p in src.glob(f"*{ext}"))
    if not files:
        raise ValueError(f"no input images at {src}")
    preset = identity_preset if args.preset == "identity" else default_preset
    with open(out / "traces.jsonl", "w") as fh:
        for i, path in enumerate(files):
            hq = read_image_srgb(path)
            cfg = preset(derive_seed(args.seed, i))
            trace = sample_trace(cfg, width=hq.shape[1], height=hq.shape[0])
            lq = apply_trace(hq, trace)
            name = path.stem + ".png"
            write_image_srgb(out / name, lq)
            fh.write(json.dumps({"name": name, "trace": trace.to_json()},
                                sort_keys=True) + "\n")
    logger.info("degraded %d images into %s", len(files), out)
    return 0


def _collect_pairs(args) -> list[tuple[str, Path, Path]]:
    results = Path(args.results)
    reference = Path(args.reference)
    if args.manifest:
        pairs = []
        with open(args.manifest) as fh:
            for line in fh:
                row = json.loads(line)
                if row.get("type") != "sample":
                    continue
                name = row.get("name") or Path(row["lq"]).name
                pairs.append((name, results / name, reference / name))
        missing = [str(p) for _, a, b in pairs for p in (a, b) if not p.is_file()]
        if missing:
            raise FileNotFoundError(f"manifest references missing files: {missing}")
        return pairs
    names = sorted(
        {p.name for ext in _IMAGE_EXTENSIONS for p in results.glob(f"*{ext}")}
        & {p.name for ext in _IMAGE_EXTENSIONS for p in reference.glob(f"*{ext}")})
    if not names:
        raise ValueError(f"no common image filenames between {results} and {reference}")
    return [(n, results / n, reference / n) for n in names]


def _cmd_eval(args) -> int:
    pairs = _collect_pairs(args)
    # Metrics run on the sRGB-encoded samples, the space the files live in.
    loaded = [(name, read_image_srgb(a), read_image_srgb(b)) for name, a, b in pairs]
    report = evaluate_pairs(loaded)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report.write_csv(out / "metrics.csv")
    report.write_json(out / "summary.json")
    figures = render_metric_figures(report, out)
    logger.info("evaluated %d pairs; report in %s (%d figures)",
                len(loaded), out, len(figures))
    if args.json:
        print(json.dumps(report.summary(), sort_keys=True))
    else:
        print(f"count={report.summary()['count']} psnr_mean={report.mean_psnr:.4f} "
              f"ssim_mean={report.mean_ssim:.4f}")
    return 0


def _cmd_serve(args) -> int:
    from .service import serve

    serve(host=args.host, port=args.port)
    return 0


def _cmd_demo_assets(args) -> int:
    index = make_demo_assets(args.out, seed=args.seed, size=args.size)
    print(index)
    return 0


_HANDLERS = {
    "render": _cmd_render,
    "synth": _cmd_synth,
    "bench": _cmd_bench,
    "degrade": _cmd_degrade,
    "eval": _cmd_eval,
    "serve": _cmd_serve,
    "demo-assets": _cmd_demo_assets,
}


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=os.environ.get("BOKEHKIT_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads is not None:
        if args.threads < 1:
            parser.error("--threads must be >= 1")
        import numba

        numba.set_num_threads(args.threads)
    try:
        return _HANDLERS[args.command](args)
    except Exception as exc:  # noqa: BLE001 - single diagnostic line, nonzero exit
        print(f"bokehkit: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
