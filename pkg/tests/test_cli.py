import hashlib
import json
from pathlib import Path

import numpy as np
import pytest

from bokehkit.cli import main
from bokehkit.image import (read_image_srgb, srgb_to_linear, write_field_png16,
                            write_image, write_image_srgb)


def _dir_checksum(root: Path) -> str:
    digest = hashlib.sha256()
    for path in sorted(root.rglob("*")):
        if path.is_file():
            digest.update(str(path.relative_to(root)).encode())
            digest.update(path.read_bytes())
    return digest.hexdigest()


@pytest.fixture
def photo(tmp_path, rng):
    img_path = tmp_path / "photo.png"
    disp_path = tmp_path / "disp.png"
    u8 = rng.integers(0, 256, (48, 48, 3)).astype(np.uint8)
    write_image(img_path, srgb_to_linear(u8.astype(np.float32) / 255.0))
    disparity = np.full((48, 48), 0.8, np.float32)
    disparity[:, 24:] = 0.3
    write_field_png16(disp_path, disparity)
    return img_path, disp_path, u8


class TestHelp:
    @pytest.mark.parametrize("cmd", ["render", "synth", "bench", "degrade", "eval",
                                     "serve", "demo-assets"])
    def test_subcommand_help_exits_zero(self, cmd, capsys):
        with pytest.raises(SystemExit) as exc:
            main([cmd, "--help"])
        assert exc.value.code == 0
        assert cmd in capsys.readouterr().out

    def test_unknown_flag_exits_two(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["render", "--bogus"])
        assert exc.value.code == 2

    def test_missing_subcommand_exits_two(self):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == 2


class TestRenderCommand:
    def test_k_zero_identity(self, tmp_path, photo):
        img_path, disp_path, u8 = photo
        out = tmp_path / "out.png"
        code = main(["render", "--image", str(img_path), "--disparity", str(disp_path),
                     "--k", "0", "--df", "0.5", "--out", str(out)])
        assert code == 0
        produced = (read_image_srgb(out) * 255).round().astype(np.uint8)
        assert np.array_equal(produced, u8)

    def test_blurs_defocused_plane(self, tmp_path, photo):
        img_path, disp_path, u8 = photo
        out = tmp_path / "out.png"
        code = main(["render", "--image", str(img_path), "--disparity", str(disp_path),
                     "--k", "12", "--df", "0.8", "--out", str(out)])
        assert code == 0
        produced = (read_image_srgb(out) * 255).round().astype(np.uint8)
        assert np.array_equal(produced[:, :12], u8[:, :12])
        assert not np.array_equal(produced[:, 36:], u8[:, 36:])

    def test_runtime_error_exit_code(self, tmp_path, capsys):
        code = main(["render", "--image", str(tmp_path / "missing.png"),
                     "--disparity", str(tmp_path / "missing.png"),
                     "--k", "1", "--df", "0.5", "--out", str(tmp_path / "o.png")])
        assert code == 1
        assert "bokehkit: error:" in capsys.readouterr().err


class TestSynthCommand:
    def test_deterministic_checksums(self, tmp_path, demo_assets):
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        for out in (out_a, out_b):
            code = main(["synth", "--assets", str(demo_assets), "--out", str(out),
                         "--count", "2", "--seed", "7", "--size", "64"])
            assert code == 0
        assert _dir_checksum(out_a) == _dir_checksum(out_b)


class TestDegradeCommand:
    def test_directory_mode(self, tmp_path, rng):
        src = tmp_path / "src"
        src.mkdir()
        for i in range(2):
            write_image_srgb(src / f"im{i}.png", rng.random((32, 32, 3)).astype(np.float32))
        out = tmp_path / "out"
        code = main(["degrade", "--input", str(src), "--out", str(out), "--seed", "3"])
        assert code == 0
        assert len(list(out.glob("*.png"))) == 2
        traces = (out / "traces.jsonl").read_text().splitlines()
        assert len(traces) == 2


class TestEvalCommand:
    def test_directory_against_itself(self, tmp_path, rng, capsys):
        imgs = tmp_path / "imgs"
        imgs.mkdir()
        for i in range(3):
            write_image_srgb(imgs / f"im{i}.png", rng.random((32, 32, 3)).astype(np.float32))
        out = tmp_path / "report"
        code = main(["eval", "--results", str(imgs), "--reference", str(imgs),
                     "--out", str(out), "--json"])
        assert code == 0
        summary = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
        assert summary["psnr_mean"] == 99.0
        assert summary["ssim_mean"] == pytest.approx(1.0, abs=1e-9)
        assert (out / "metrics.csv").is_file()
        assert (out / "summary.json").is_file()
        for fig in ("psnr_hist.png", "ssim_hist.png", "psnr_vs_ssim.png"):
            assert (out / fig).is_file(), fig

    def test_bench_then_eval_manifest(self, tmp_path, rng):
        corpus = tmp_path / "corpus"
        corpus.mkdir()
        for i in range(2):
            write_image_srgb(corpus / f"im{i}.png", rng.random((48, 48, 3)).astype(np.float32))
        bench = tmp_path / "bench"
        assert main(["bench", "--corpus", str(corpus), "--out", str(bench),
                     "--seed", "5"]) == 0
        report = tmp_path / "report"
        code = main(["eval", "--results", str(bench / "lq"),
                     "--reference", str(bench / "hq"),
                     "--manifest", str(bench / "manifest.jsonl"),
                     "--out", str(report)])
        assert code == 0
        rows = (report / "metrics.csv").read_text().splitlines()
        assert len(rows) == 3
