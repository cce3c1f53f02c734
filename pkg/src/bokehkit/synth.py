"""Dataset factory: sampled layered scenes -> manifested LQ/HQ training pairs.

Each sample composes one background and two foreground mattes into a layered
scene, renders the high-quality bokeh ground truth plus its disparity and
defocus maps, derives the binary focus mask, and degrades the sharp
composite into the low-quality input. Every byte is a deterministic function
of (assets, root seed): per-sample seeds are split hierarchically from the
root so individual samples can be regenerated in isolation.

Consistency contract for emitted artifacts: the stored defocus map is
computed from the *stored* (quantized) disparity and the stored mask from
the *stored* defocus map, so re-deriving either from disk reproduces the
artifact bit for bit.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import cv2
import numpy as np

from . import image as img_io
from .defocus import DEFAULT_FOCUS_THRESHOLD, LensParams, binarize_focus, compute_defocus, export_defocus
from .degrade import DegradationConfig, DegradationTrace, apply_trace, default_preset, sample_trace
from .render import LayeredScene, RenderConfig, SceneLayer, render_ground_truth, render_layered

logger = logging.getLogger(__name__)

PIPELINE_VERSION = "bokehkit-synth-1"

MAX_BLUR_INTENSITY = 32.0
BG_RAMP_MAX = 0.5
FG_MARGIN = 0.05

_IMAGE_EXTENSIONS = (".png", ".jpg", ".jpeg")


class AssetCatalog:
    """Directory-backed asset index: RGB backgrounds + RGBA foreground mattes.

    Layout: ``<root>/backgrounds/*.png|jpg`` and ``<root>/foregrounds/*.png``
    (foregrounds must carry an alpha channel). An ``index.json`` listing
    relative paths takes precedence over globbing when present.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)
        index = self.root / "index.json"
        if index.is_file():
            data = json.loads(index.read_text())
            self.backgrounds = sorted(data["backgrounds"])
            self.foregrounds = sorted(data["foregrounds"])
            missing = [p for p in self.backgrounds + self.foregrounds
                       if not (self.root / p).is_file()]
            if missing:
                raise FileNotFoundError(f"index.json references missing assets: {missing}")
        else:
            self.backgrounds = sorted(
                str(p.relative_to(self.root)) for ext in _IMAGE_EXTENSIONS
                for p in (self.root / "backgrounds").glob(f"*{ext}"))
            self.foregrounds = sorted(
                str(p.relative_to(self.root)) for p in (self.root / "foregrounds").glob("*.png"))

    def require(self, n_backgrounds: int = 1, n_foregrounds: int = 2) -> None:
        if len(self.backgrounds) < n_backgrounds or len(self.foregrounds) < n_foregrounds:
            raise ValueError(
                f"catalog at {self.root} needs >= {n_backgrounds} background(s) and "
                f">= {n_foregrounds} foreground(s); found {len(self.backgrounds)} / "
                f"{len(self.foregrounds)}")

    def load_background(self, asset_id: str, size: int) -> np.ndarray:
        """Background as linear RGB resized to size x size."""
        path = self.root / asset_id
        try:
            color = img_io.read_image(path)
        except IOError as exc:
            raise IOError(f"failed to decode background asset {asset_id!r}: {exc}") from exc
        return img_io.resize(color, size, size, "area" if color.shape[0] >= size else "bicubic")

    def load_foreground(self, asset_id: str, size: int) -> tuple[np.ndarray, np.ndarray]:
        """Foreground as (linear RGB, alpha) resized to size x size."""
        path = self.root / asset_id
        raw = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
        if raw is None or raw.ndim != 3 or raw.shape[2] != 4:
            raise IOError(f"failed to decode foreground asset {asset_id!r} "
                          f"(expected RGBA PNG): {path}")
        rgb = cv2.cvtColor(raw[..., :3], cv2.COLOR_BGR2RGB)
        color = img_io.srgb_to_linear(img_io.decode_u8(rgb))
        alpha = raw[..., 3].astype(np.float32) / 255.0
        filt = "area" if raw.shape[0] >= size else "bicubic"
        color = img_io.resize(color, size, size, filt)
        alpha = np.clip(img_io.resize(alpha, size, size, filt), 0.0, 1.0)
        return color, alpha


@dataclass(frozen=True)
class SceneSpec:
    """Everything sampled for one training scene."""

    background_id: str
    foreground_ids: tuple[str, str]
    bg_ramp: tuple[float, float]  # disparity at (top row, bottom row)
    fg_disparities: tuple[float, float]  # sorted ascending (far, near)
    k: float
    d_f: float
    flip: bool

    def __post_init__(self):
        if not 0.0 <= self.k <= MAX_BLUR_INTENSITY:
            raise ValueError(f"k must lie in [0, {MAX_BLUR_INTENSITY}], got {self.k}")
        for d in (*self.bg_ramp, *self.fg_disparities, self.d_f):
            if not 0.0 <= d <= 1.0:
                raise ValueError(f"disparities must lie in [0, 1], got {d}")
        if len(self.foreground_ids) != 2:
            raise ValueError("exactly two foregrounds per scene")

    def to_json(self) -> dict:
        return {"background_id": self.background_id,
                "foreground_ids": list(self.foreground_ids),
                "bg_ramp": list(self.bg_ramp),
                "fg_disparities": list(self.fg_disparities),
                "k": self.k, "d_f": self.d_f, "flip": self.flip}

    @classmethod
    def from_json(cls, data: dict) -> "SceneSpec":
        return cls(background_id=data["background_id"],
                   foreground_ids=tuple(data["foreground_ids"]),
                   bg_ramp=tuple(data["bg_ramp"]),
                   fg_disparities=tuple(data["fg_disparities"]),
                   k=data["k"], d_f=data["d_f"], flip=data["flip"])


@dataclass
class SampleRecord:
    """Manifest row: artifact paths plus the recipe that produced them."""

    sample_id: str
    paths: dict[str, str]
    scene: SceneSpec
    trace: DegradationTrace
    tau: float
    pipeline_version: str = PIPELINE_VERSION

    def to_json(self) -> dict:
        return {"type": "sample", "sample_id": self.sample_id, "paths": self.paths,
                "scene": self.scene.to_json(), "trace": self.trace.to_json(),
                "tau": self.tau, "pipeline_version": self.pipeline_version}

    @classmethod
    def from_json(cls, data: dict) -> "SampleRecord":
        return cls(sample_id=data["sample_id"], paths=dict(data["paths"]),
                   scene=SceneSpec.from_json(data["scene"]),
                   trace=DegradationTrace.from_json(data["trace"]),
                   tau=data["tau"],
                   pipeline_version=data.get("pipeline_version", PIPELINE_VERSION))


def derive_seed(root_seed: int, *path: int) -> int:
    """Hierarchical seed split (corpus -> sample -> stage); deterministic."""
    ss = np.random.SeedSequence([int(root_seed), *[int(p) for p in path]])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def sample_scene(rng_seed: int, catalog: AssetCatalog) -> SceneSpec:
    """Draw one SceneSpec: assets, disparities, blur intensity, focus, flip.

    Foreground disparities sit strictly above the background ramp maximum so
    the scene's back-to-front ordering invariant holds by construction; the
    focal disparity lands on one of the three layers (a ramp position when
    the background is picked).
    """
    catalog.require()
    rng = np.random.default_rng(rng_seed)
    background_id = str(rng.choice(np.asarray(catalog.backgrounds)))
    fg_pick = rng.choice(len(catalog.foregrounds), size=2, replace=False)
    foreground_ids = (catalog.foregrounds[int(fg_pick[0])], catalog.foregrounds[int(fg_pick[1])])
    ramp = rng.uniform(0.0, BG_RAMP_MAX, size=2)
    ramp_max = float(ramp.max())
    fg = np.sort(rng.uniform(ramp_max + FG_MARGIN, 1.0, size=2))
    k = float(rng.uniform(0.0, MAX_BLUR_INTENSITY))
    focus_layer = int(rng.integers(0, 3))  # 0 = background, 1/2 = foregrounds
    if focus_layer == 0:
        d_f = float(rng.uniform(ramp.min(), ramp.max()))
    else:
        d_f = float(fg[focus_layer - 1])
    flip = bool(rng.integers(0, 2))
    return SceneSpec(background_id=background_id, foreground_ids=foreground_ids,
                     bg_ramp=(float(ramp[0]), float(ramp[1])),
                     fg_disparities=(float(fg[0]), float(fg[1])),
                     k=k, d_f=d_f, flip=flip)


def build_scene(spec: SceneSpec, catalog: AssetCatalog, size: int) -> LayeredScene:
    """Materialize a SceneSpec into a renderable layer stack."""
    bg_color = catalog.load_background(spec.background_id, size)
    ramp = np.linspace(spec.bg_ramp[0], spec.bg_ramp[1], size, dtype=np.float32)
    bg_disparity = np.broadcast_to(ramp[:, None], (size, size)).copy()
    layers = [(bg_color, np.ones((size, size), np.float32), bg_disparity)]
    for fg_id, d in zip(spec.foreground_ids, spec.fg_disparities):
        color, alpha = catalog.load_foreground(fg_id, size)
        layers.append((color, alpha, np.full((size, size), d, np.float32)))
    if spec.flip:
        layers = [(np.ascontiguousarray(np.flip(c, axis=1)),
                   np.ascontiguousarray(np.flip(a, axis=1)),
                   np.ascontiguousarray(np.flip(d, axis=1))) for c, a, d in layers]
    scene_layers = tuple(SceneLayer(color=c, alpha=a, disparity=d) for c, a, d in layers)
    return LayeredScene(layers=scene_layers, lens=LensParams(k=spec.k, d_f=spec.d_f))


def synthesize(spec: SceneSpec, deg_cfg: DegradationConfig, catalog: AssetCatalog,
               out_dir: str | Path, sample_id: str, size: int = 512,
               tau: float = DEFAULT_FOCUS_THRESHOLD) -> SampleRecord:
    """Render, degrade and write one sample's full artifact set."""
    out_dir = Path(out_dir)
    sample_dir = out_dir / sample_id
    sample_dir.mkdir(parents=True, exist_ok=True)
    scene = build_scene(spec, catalog, size)
    lens = scene.lens

    sharp_scene = LayeredScene(layers=scene.layers, lens=LensParams(k=0.0, d_f=spec.d_f))
    hq_sharp = render_layered(sharp_scene, RenderConfig())
    bokeh, disparity, _ = render_ground_truth(scene)

    paths = {name: f"{sample_id}/{name}.png" for name in
             ("lq_allinfocus", "hq_allinfocus", "hq_bokeh", "disparity", "defocus", "focus_mask")}

    img_io.write_image(out_dir / paths["hq_allinfocus"], hq_sharp)
    img_io.write_image(out_dir / paths["hq_bokeh"], bokeh)

    # Quantize-then-derive so every stored map re-checks bitwise from disk.
    img_io.write_field_png16(out_dir / paths["disparity"], disparity, scale=1.0)
    disparity_disk = img_io.read_field_png16(out_dir / paths["disparity"], scale=1.0)
    defocus = compute_defocus(disparity_disk, lens)
    scale = lens.k if lens.k > 0 else 1.0
    export_defocus(out_dir / paths["defocus"], defocus, lens, tau=tau)
    defocus_disk = img_io.read_field_png16(out_dir / paths["defocus"], scale=scale)
    mask = binarize_focus(defocus_disk, tau)
    cv2.imwrite(str(out_dir / paths["focus_mask"]), mask.values * np.uint8(255))

    hq_srgb = img_io.linear_to_srgb(hq_sharp)
    trace = sample_trace(deg_cfg, width=size, height=size)
    lq = apply_trace(hq_srgb, trace)
    img_io.write_image_srgb(out_dir / paths["lq_allinfocus"], lq)

    return SampleRecord(sample_id=sample_id, paths=paths, scene=spec, trace=trace, tau=tau)


def verify_sample(record: SampleRecord, root: str | Path) -> None:
    """Re-derive the stored defocus map and focus mask from disk.

    Raises AssertionError when a stored artifact disagrees with what the
    stored disparity implies, or FileNotFoundError when a referenced file is
    missing.
    """
    root = Path(root)
    for name, rel in record.paths.items():
        if not (root / rel).is_file():
            raise FileNotFoundError(f"sample {record.sample_id}: missing artifact {rel}")
    lens = LensParams(k=record.scene.k, d_f=record.scene.d_f)
    scale = lens.k if lens.k > 0 else 1.0

    disparity = img_io.read_field_png16(root / record.paths["disparity"], scale=1.0)
    expected_defocus_u16 = img_io.quantize_u16(compute_defocus(disparity, lens), scale=scale)
    stored_defocus_u16 = img_io.read_png_raw(root / record.paths["defocus"])
    if not np.array_equal(expected_defocus_u16, stored_defocus_u16):
        raise AssertionError(f"sample {record.sample_id}: stored defocus map does not "
                             "match the stored disparity")

    defocus = img_io.read_field_png16(root / record.paths["defocus"], scale=scale)
    expected_mask = binarize_focus(defocus, record.tau).values
    stored_mask = (img_io.read_png_raw(root / record.paths["focus_mask"]) > 0).astype(np.uint8)
    if not np.array_equal(expected_mask, stored_mask):
        raise AssertionError(f"sample {record.sample_id}: stored focus mask does not "
                             "match the stored defocus map")


def write_manifest(path: str | Path, header: dict, records: list[SampleRecord]) -> None:
    with open(path, "w") as fh:
        fh.write(json.dumps({"type": "header", **header}, sort_keys=True) + "\n")
        for rec in sorted(records, key=lambda r: r.sample_id):
            fh.write(json.dumps(rec.to_json(), sort_keys=True) + "\n")


def read_manifest(path: str | Path) -> tuple[dict, list[SampleRecord]]:
    header: dict = {}
    records: list[SampleRecord] = []
    with open(path) as fh:
        for line in fh:
            data = json.loads(line)
            if data.get("type") == "header":
                header = data
            elif data.get("type") == "sample":
                records.append(SampleRecord.from_json(data))
    return header, records


def synthesize_corpus(assets_dir: str | Path, out_dir: str | Path, count: int, seed: int,
                      size: int = 512, tau: float = DEFAULT_FOCUS_THRESHOLD) -> Path:
    """The `synth` entry point: `count` manifested samples under `out_dir`."""
    if count < 1:
        raise ValueError("count must be >= 1")
    catalog = AssetCatalog(assets_dir)
    catalog.require()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    records = []
    for i in range(count):
        spec = sample_scene(derive_seed(seed, i, 0), catalog)
        deg_cfg = default_preset(derive_seed(seed, i, 1))
        rec = synthesize(spec, deg_cfg, catalog, out_dir, sample_id=f"{i:06d}",
                         size=size, tau=tau)
        records.append(rec)
        logger.info("synthesized sample %s (k=%.2f d_f=%.3f)", rec.sample_id,
                    spec.k, spec.d_f)
    manifest = out_dir / "manifest.jsonl"
    render_cfg = RenderConfig(max_radius=max(64.0, MAX_BLUR_INTENSITY))
    write_manifest(manifest, {"pipeline_version": PIPELINE_VERSION, "root_seed": seed,
                              "count": count, "size": size, "tau": tau,
                              "rng": "numpy-pcg64",
                              "render_config": render_cfg.to_json()}, records)
    return manifest


def build_benchmark(corpus: str | Path, out_dir: str | Path, seed: int,
                    deg_cfg_factory=default_preset) -> Path:
    """Degrade a directory (or listing file) of HQ images into LQ/HQ pairs.

    Writes ``lq/``, ``hq/`` and a JSONL manifest with per-image traces,
    ready for the `eval` subcommand.
    """
    corpus = Path(corpus)
    if corpus.is_dir():
        files = sorted(p for ext in _IMAGE_EXTENSIONS for p in corpus.glob(f"*{ext}"))
    elif corpus.is_file():
        base = corpus.parent
        files = [base / line.strip() for line in corpus.read_text().splitlines() if line.strip()]
        missing = [str(p) for p in files if not p.is_file()]
        if missing:
            raise FileNotFoundError(f"corpus listing references missing files: {missing}")
    else:
        raise FileNotFoundError(f"corpus not found: {corpus}")
    if not files:
        raise ValueError(f"corpus at {corpus} contains no images")

    out_dir = Path(out_dir)
    (out_dir / "lq").mkdir(parents=True, exist_ok=True)
    (out_dir / "hq").mkdir(parents=True, exist_ok=True)
    rows = []
    for i, src in enumerate(files):
        hq = img_io.read_image_srgb(src)
        cfg = deg_cfg_factory(derive_seed(seed, i))
        trace = sample_trace(cfg, width=hq.shape[1], height=hq.shape[0])
        lq = apply_trace(hq, trace)
        name = src.stem + ".png"
        img_io.write_image_srgb(out_dir / "hq" / name, hq)
        img_io.write_image_srgb(out_dir / "lq" / name, lq)
        rows.append({"type": "sample", "name": name, "lq": f"lq/{name}", "hq": f"hq/{name}",
                     "trace": trace.to_json()})
    manifest = out_dir / "manifest.jsonl"
    with open(manifest, "w") as fh:
        fh.write(json.dumps({"type": "header", "pipeline_version": PIPELINE_VERSION,
                             "root_seed": seed, "count": len(files),
                             "rng": "numpy-pcg64"}, sort_keys=True) + "\n")
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")
    return manifest


def make_demo_assets(out_dir: str | Path, seed: int = 0, n_backgrounds: int = 3,
                     n_foregrounds: int = 4, size: int = 512) -> Path:
    """Generate a tiny synthetic asset catalog (smooth backgrounds, blob mattes).

    Stands in for real matte/landscape collections so the synthesizer and the
    demo CLI run out of the box.
    """
    out_dir = Path(out_dir)
    bg_dir = out_dir / "backgrounds"
    fg_dir = out_dir / "foregrounds"
    bg_dir.mkdir(parents=True, exist_ok=True)
    fg_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)

    for i in range(n_backgrounds):
        low = rng.random((size // 16, size // 16, 3)).astype(np.float32)
        base = img_io.resize(low, size, size, "bicubic")
        yy = np.linspace(0, 1, size, dtype=np.float32)[:, None, None]
        tint = rng.random(3).astype(np.float32)
        img = np.clip(0.65 * base + 0.35 * (tint * (0.4 + 0.6 * yy)), 0.0, 1.0)
        img_io.write_image(bg_dir / f"bg_{i:03d}.png", img)

    for i in range(n_foregrounds):
        yy, xx = np.mgrid[0:size, 0:size].astype(np.float32) / size
        alpha = np.zeros((size, size), np.float32)
        for _ in range(int(rng.integers(2, 5))):
            cy, cx = rng.uniform(0.25, 0.75, 2)
            ry, rx = rng.uniform(0.08, 0.28, 2)
            blob = ((yy - cy) / ry) ** 2 + ((xx - cx) / rx) ** 2
            alpha = np.maximum(alpha, np.clip(1.5 - blob, 0.0, 1.0))
        alpha = np.clip(alpha, 0.0, 1.0)
        low = rng.random((size // 8, size // 8, 3)).astype(np.float32)
        color = np.clip(img_io.resize(low, size, size, "bicubic"), 0.0, 1.0)
        srgb = img_io.encode_u8(img_io.linear_to_srgb(color))
        rgba = np.dstack([cv2.cvtColor(srgb, cv2.COLOR_RGB2BGR),
                          np.floor(alpha * 255.0 + 0.5).astype(np.uint8)])
        cv2.imwrite(str(fg_dir / f"fg_{i:03d}.png"), rgba)

    index = {"backgrounds": sorted(f"backgrounds/{p.name}" for p in bg_dir.glob("*.png")),
             "foregrounds": sorted(f"foregrounds/{p.name}" for p in fg_dir.glob("*.png"))}
    index_path = out_dir / "index.json"
    index_path.write_text(json.dumps(index, indent=2, sort_keys=True) + "\n")
    return index_path
