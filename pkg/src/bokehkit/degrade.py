"""Seeded LQ synthesis: blur -> resample -> noise -> JPEG, repeated.

The chain runs `rounds` passes over display-referred (sRGB-encoded) float
images, then upscales back to the target resolution, mimicking second-order
real-world degradation pipelines while staying fully reproducible: every
sampled parameter is recorded in a :class:`DegradationTrace`, and replaying
a trace reproduces the degraded image bitwise.

Space conventions: blur, resampling and JPEG operate on the sRGB-encoded
samples (where the corruptions occur in a camera pipeline); sensor noise is
injected in linear light, converting in and out around that stage. JPEG uses
baseline sequential mode with 4:4:4 sampling; quality 100 is treated as a
lossless passthrough, consistent with sigma = 0 and scale = 1 skipping their
stages.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import cv2
import numpy as np

from .image import decode_u8, encode_u8, linear_to_srgb, resize, srgb_to_linear, validate_image

PIPELINE_VERSION = "bokehkit-degrade-1"
RNG_ALGORITHM = "numpy-pcg64"

_JPEG_BASE_PARAMS = [cv2.IMWRITE_JPEG_QUALITY, 100,
                     cv2.IMWRITE_JPEG_SAMPLING_FACTOR, cv2.IMWRITE_JPEG_SAMPLING_FACTOR_444]


def _check_range(lo: float, hi: float, name: str, minimum: float = 0.0) -> None:
    if not (np.isfinite(lo) and np.isfinite(hi)) or lo > hi or lo < minimum:
        raise ValueError(f"invalid {name} range ({lo}, {hi})")


@dataclass(frozen=True)
class DegradationConfig:
    """Sampling ranges for one degradation run. All ranges are inclusive."""

    seed: int
    rounds: int = 2
    blur_sigma: tuple[float, float] = (0.2, 3.0)
    blur_kernels: tuple[int, ...] = (7, 9, 11, 13, 15, 17, 19, 21)
    resample_scale: tuple[float, float] = (0.25, 1.2)
    resample_filters: tuple[str, ...] = ("bilinear", "bicubic", "area")
    noise_gaussian_sigma: tuple[float, float] = (0.0, 0.04)
    noise_poisson_scale: tuple[float, float] = (250.0, 2500.0)
    jpeg_quality: tuple[int, int] = (30, 95)
    final_size: tuple[int, int] | None = None  # (w, h); None keeps input dims

    def __post_init__(self):
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        _check_range(*self.blur_sigma, "blur sigma")
        _check_range(*self.resample_scale, "resample scale", minimum=1e-3)
        _check_range(*self.noise_gaussian_sigma, "gaussian noise sigma")
        _check_range(*self.noise_poisson_scale, "poisson scale")
        qlo, qhi = self.jpeg_quality
        if not (1 <= qlo <= qhi <= 100):
            raise ValueError(f"jpeg quality range must sit in [1, 100], got {self.jpeg_quality}")
        if not self.blur_kernels or any(k < 3 or k % 2 == 0 for k in self.blur_kernels):
            raise ValueError("blur kernel sizes must be odd and >= 3")
        if not self.resample_filters:
            raise ValueError("resample filter set must be non-empty")


@dataclass
class DegradationTrace:
    """Ordered record of every sampled parameter for one image.

    Applying the trace to the same input reproduces the degraded output
    bitwise; noise stages store their own child seed so replay never
    depends on the config seed.
    """

    input_size: tuple[int, int]  # (w, h)
    stages: list[dict] = field(default_factory=list)
    version: str = PIPELINE_VERSION
    rng: str = RNG_ALGORITHM

    def to_json(self) -> dict:
        return {"version": self.version, "rng": self.rng,
                "input_size": list(self.input_size), "stages": self.stages}

    @classmethod
    def from_json(cls, data: dict) -> "DegradationTrace":
        return cls(input_size=tuple(data["input_size"]), stages=list(data["stages"]),
                   version=data.get("version", PIPELINE_VERSION),
                   rng=data.get("rng", RNG_ALGORITHM))

    def to_jsonl(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def from_jsonl(cls, line: str) -> "DegradationTrace":
        return cls.from_json(json.loads(line))


def sample_trace(cfg: DegradationConfig, width: int, height: int) -> DegradationTrace:
    """Draw all stage parameters for an image of the given size.

    The draw order is fixed (blur, resample, noise, jpeg per round, then the
    final resize) so a given seed always yields the same trace.
    """
    rng = np.random.default_rng(cfg.seed)
    trace = DegradationTrace(input_size=(width, height))
    cur_w, cur_h = width, height
    for _ in range(cfg.rounds):
        sigma = float(rng.uniform(*cfg.blur_sigma))
        ksize = int(rng.choice(np.asarray(cfg.blur_kernels)))
        trace.stages.append({"stage": "blur", "sigma": sigma, "ksize": ksize})

        scale = float(rng.uniform(*cfg.resample_scale))
        filt = str(rng.choice(np.asarray(cfg.resample_filters)))
        cur_w = max(1, int(round(cur_w * scale)))
        cur_h = max(1, int(round(cur_h * scale)))
        trace.stages.append({"stage": "resample", "scale": scale, "filter": filt,
                             "width": cur_w, "height": cur_h})

        kind = str(rng.choice(np.asarray(["gaussian", "poisson"])))
        noise_seed = int(rng.integers(0, 2 ** 63))
        if kind == "gaussian":
            sigma_n = float(rng.uniform(*cfg.noise_gaussian_sigma))
            trace.stages.append({"stage": "noise", "kind": "gaussian",
                                 "sigma": sigma_n, "seed": noise_seed})
        else:
            pscale = float(rng.uniform(*cfg.noise_poisson_scale))
            trace.stages.append({"stage": "noise", "kind": "poisson",
                                 "scale": pscale, "seed": noise_seed})

        quality = int(rng.integers(cfg.jpeg_quality[0], cfg.jpeg_quality[1] + 1))
        trace.stages.append({"stage": "jpeg", "quality": quality})

    final_w, final_h = cfg.final_size if cfg.final_size else (width, height)
    trace.stages.append({"stage": "resize_final", "width": final_w, "height": final_h,
                         "filter": "bicubic"})
    return trace


def apply_trace(img: np.ndarray, trace: DegradationTrace) -> np.ndarray:
    """Execute a recorded stage list on an sRGB-encoded float image."""
    img = validate_image(img, "image")
    if (img.shape[1], img.shape[0]) != tuple(trace.input_size):
        raise ValueError(f"trace was recorded for {trace.input_size}, "
                         f"image is {(img.shape[1], img.shape[0])}")
    out = img
    for stage in trace.stages:
        out = _apply_stage(out, stage)
    return np.clip(out, 0.0, 1.0).astype(np.float32)


def _apply_stage(img: np.ndarray, stage: dict) -> np.ndarray:
    kind = stage["stage"]
    if kind == "blur":
        if stage["sigma"] <= 0.0:
            return img
        k = stage["ksize"]
        return cv2.GaussianBlur(img, (k, k), stage["sigma"])
    if kind == "resample":
        w, h = stage["width"], stage["height"]
        if (img.shape[1], img.shape[0]) == (w, h):
            return img
        return resize(img, w, h, stage["filter"])
    if kind == "noise":
        return _apply_noise(img, stage)
    if kind == "jpeg":
        if stage["quality"] >= 100:
            return img
        return _jpeg_roundtrip(img, stage["quality"])
    if kind == "resize_final":
        w, h = stage["width"], stage["height"]
        if (img.shape[1], img.shape[0]) == (w, h):
            return img
        return resize(np.clip(img, 0.0, 1.0), w, h, stage["filter"])
    raise ValueError(f"unknown degradation stage {kind!r}")


def _apply_noise(img: np.ndarray, stage: dict) -> np.ndarray:
    # Sensor noise lives in linear light; hop spaces around this stage only.
    if stage["kind"] == "gaussian":
        if stage["sigma"] <= 0.0:
            return img
        rng = np.random.default_rng(stage["seed"])
        lin = srgb_to_linear(np.clip(img, 0.0, 1.0)).astype(np.float64)
        lin += rng.normal(0.0, stage["sigma"], size=lin.shape)
        return linear_to_srgb(np.clip(lin, 0.0, 1.0))
    if stage["kind"] == "poisson":
        if stage["scale"] <= 0.0:
            return img
        rng = np.random.default_rng(stage["seed"])
        lin = srgb_to_linear(np.clip(img, 0.0, 1.0)).astype(np.float64)
        lam = np.clip(lin, 0.0, 1.0) * stage["scale"]
        lin = rng.poisson(lam).astype(np.float64) / stage["scale"]
        return linear_to_srgb(np.clip(lin, 0.0, 1.0))
    raise ValueError(f"unknown noise kind {stage['kind']!r}")


def _jpeg_roundtrip(img: np.ndarray, quality: int) -> np.ndarray:
    u8 = encode_u8(np.clip(img, 0.0, 1.0))
    params = list(_JPEG_BASE_PARAMS)
    params[1] = int(quality)
    ok, buf = cv2.imencode(".jpg", cv2.cvtColor(u8, cv2.COLOR_RGB2BGR), params)
    if not ok:
        raise RuntimeError("JPEG encoding failed")
    dec = cv2.imdecode(buf, cv2.IMREAD_COLOR)
    return decode_u8(cv2.cvtColor(dec, cv2.COLOR_BGR2RGB))


def degrade(hq: np.ndarray, cfg: DegradationConfig) -> tuple[np.ndarray, DegradationTrace]:
    """Degrade an sRGB-encoded HQ image; returns (lq, trace).

    Identical (image, config) pairs produce bitwise-identical results;
    :func:`replay` on the returned trace reproduces `lq` exactly.
    """
    hq = validate_image(hq, "hq")
    trace = sample_trace(cfg, width=hq.shape[1], height=hq.shape[0])
    return apply_trace(hq, trace), trace


def replay(hq: np.ndarray, trace: DegradationTrace) -> np.ndarray:
    """Re-run a recorded trace; bitwise-equal to the original degrade output."""
    return apply_trace(hq, trace)


def default_preset(seed: int) -> DegradationConfig:
    """The documented benchmark preset used by the `bench` CLI path."""
    return DegradationConfig(seed=seed)


def identity_preset(seed: int) -> DegradationConfig:
    """Every stage pinned to its identity value; useful for plumbing checks."""
    return DegradationConfig(
        seed=seed,
        blur_sigma=(0.0, 0.0),
        resample_scale=(1.0, 1.0),
        noise_gaussian_sigma=(0.0, 0.0),
        noise_poisson_scale=(0.0, 0.0),
        jpeg_quality=(100, 100),
    )
