import numba
import numpy as np
import pytest

from bokehkit.defocus import LensParams, compute_defocus
from bokehkit.render import (LayeredScene, RenderConfig, SceneLayer, max_abs_laplacian,
                             render_ground_truth, render_layer_blur, render_layered,
                             render_scatter, visible_disparity)

from .oracles import dense_scatter_oracle, layered_render_oracle, visibility_oracle


def _const_layer(shape, color, alpha=1.0, disparity=0.5):
    h, w = shape
    return SceneLayer(color=np.full((h, w, 3), color, np.float32),
                      alpha=np.full((h, w), alpha, np.float32),
                      disparity=np.full((h, w), disparity, np.float32))


def _two_layer_scene(rng, size=32, k=8.0, focus="fg"):
    bg_color = rng.random((size, size, 3)).astype(np.float32)
    bg_disp = np.full((size, size), 0.2, np.float32)
    fg_color = rng.random((size, size, 3)).astype(np.float32)
    yy, xx = np.mgrid[0:size, 0:size]
    cy, cx = rng.integers(size // 4, 3 * size // 4, 2)
    fg_alpha = np.clip(2.0 - np.hypot(yy - cy, xx - cx) / (size / 5), 0, 1).astype(np.float32)
    fg_disp = np.full((size, size), 0.8, np.float32)
    d_f = 0.8 if focus == "fg" else 0.2
    layers = (SceneLayer(color=bg_color, alpha=np.ones((size, size), np.float32),
                         disparity=bg_disp),
              SceneLayer(color=fg_color, alpha=fg_alpha, disparity=fg_disp))
    return LayeredScene(layers=layers, lens=LensParams(k=k, d_f=d_f))


class TestRenderScatter:
    def test_constant_image_is_preserved(self, rng):
        img = np.full((24, 24, 3), 0.37, np.float32)
        radii = (rng.random((24, 24)) * 5).astype(np.float32)
        out = render_scatter(img, radii)
        assert np.abs(out - 0.37).max() < 1e-6

    def test_zero_radius_is_bitwise_identity(self, rng):
        img = rng.random((16, 16, 3)).astype(np.float32)
        out = render_scatter(img, np.zeros((16, 16), np.float32))
        assert np.array_equal(out, img)

    def test_point_spread_matches_dense_oracle(self):
        img = np.zeros((33, 33, 3), np.float32)
        img[16, 16] = 1.0
        radii = np.full((33, 33), 3.0, np.float32)
        out = render_scatter(img, radii)
        expected = dense_scatter_oracle(img.astype(np.float64), radii)
        assert np.abs(out - expected).max() < 1e-5

    def test_variable_radius_matches_dense_oracle(self, rng):
        img = rng.random((20, 20, 3)).astype(np.float32)
        radii = (rng.random((20, 20)) * 6).astype(np.float32)
        out = render_scatter(img, radii)
        expected = dense_scatter_oracle(img.astype(np.float64), radii)
        assert np.abs(out - expected).max() < 1e-5

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ValueError):
            render_scatter(np.zeros((4, 4, 3), np.float32), np.zeros((5, 5), np.float32))

    def test_radius_cap_enforced(self):
        img = np.zeros((8, 8, 3), np.float32)
        radii = np.full((8, 8), 10.0, np.float32)
        with pytest.raises(ValueError):
            render_scatter(img, radii, RenderConfig(max_radius=4.0))

    def test_sub_half_pixel_radius_only_self(self, rng):
        img = rng.random((12, 12, 3)).astype(np.float32)
        out = render_scatter(img, np.full((12, 12), 0.4, np.float32))
        assert np.abs(out - img).max() < 1e-6

    def test_focal_invariance_bitwise(self, rng):
        # left half on the focal plane, right half defocused
        img = rng.random((24, 40, 3)).astype(np.float32)
        disparity = np.full((24, 40), 0.9, np.float32)
        disparity[:, 20:] = 0.3
        radii = compute_defocus(disparity, LensParams(k=8.0, d_f=0.9))
        out = render_scatter(img, radii)
        margin = int(np.ceil(8.0 * 0.6 + 0.5)) + 1
        sharp_region = out[:, :20 - margin]
        assert np.array_equal(sharp_region, img[:, :20 - margin])

    def test_deterministic_across_thread_counts(self, rng):
        img = rng.random((20, 20, 3)).astype(np.float32)
        radii = (rng.random((20, 20)) * 4).astype(np.float32)
        old = numba.get_num_threads()
        try:
            numba.set_num_threads(1)
            single = render_scatter(img, radii)
            numba.set_num_threads(2)
            multi = render_scatter(img, radii)
        finally:
            numba.set_num_threads(old)
        assert np.array_equal(single, multi)

    def test_energy_conservation_constant_disparity(self, rng):
        for k in (2.0, 4.0, 8.0, 16.0):
            img = (rng.random((96, 96, 3)) * 0.6 + 0.2).astype(np.float32)
            out = render_scatter(img, np.full((96, 96), k, np.float32))
            rel = abs(float(out.mean()) - float(img.mean())) / float(img.mean())
            assert rel < 1e-3, k


class TestRenderLayerBlur:
    def test_opaque_layer_on_focal_plane_unchanged(self, rng):
        layer = SceneLayer(color=rng.random((16, 16, 3)).astype(np.float32),
                           alpha=np.ones((16, 16), np.float32),
                           disparity=np.full((16, 16), 0.6, np.float32))
        premul, alpha = render_layer_blur(layer, LensParams(k=16.0, d_f=0.6))
        assert np.array_equal(premul, layer.color)
        assert np.array_equal(alpha, layer.alpha)

    def test_opaque_constant_disparity_reduces_to_scatter(self, rng):
        color = rng.random((20, 20, 3)).astype(np.float32)
        layer = SceneLayer(color=color, alpha=np.ones((20, 20), np.float32),
                           disparity=np.full((20, 20), 0.25, np.float32))
        lens = LensParams(k=8.0, d_f=0.75)
        premul, alpha = render_layer_blur(layer, lens)
        radii = compute_defocus(layer.disparity, lens)
        expected = render_scatter(color, radii)
        assert np.abs(premul - expected).max() < 1e-6
        assert np.abs(alpha - 1.0).max() < 1e-7

    def test_half_opaque_constant_layer(self):
        layer = _const_layer((16, 16), color=0.8, alpha=0.5, disparity=0.2)
        _, alpha = render_layer_blur(layer, LensParams(k=6.0, d_f=0.9))
        assert np.abs(alpha - 0.5).max() < 1e-6


class TestRenderLayered:
    def test_k_zero_equals_sharp_compositing(self, rng):
        scene = _two_layer_scene(rng, k=0.0)
        out = render_layered(scene)
        bg, fg = scene.layers
        expected = (fg.color * fg.alpha[..., None]
                    + (1.0 - fg.alpha[..., None]) * bg.color)
        assert np.abs(out - expected).max() < 1e-6

    def test_fully_covering_foreground_hides_background(self, rng):
        bg = _const_layer((16, 16), 0.9, 1.0, 0.1)
        fg = SceneLayer(color=rng.random((16, 16, 3)).astype(np.float32),
                        alpha=np.ones((16, 16), np.float32),
                        disparity=np.full((16, 16), 0.8, np.float32))
        scene = LayeredScene(layers=(bg, fg), lens=LensParams(k=6.0, d_f=0.1))
        out = render_layered(scene)
        premul, _ = render_layer_blur(fg, scene.lens)
        assert np.abs(out - premul).max() < 1e-7

    def test_single_layer_equals_layer_blur(self, rng):
        layer = SceneLayer(color=rng.random((16, 16, 3)).astype(np.float32),
                           alpha=np.ones((16, 16), np.float32),
                           disparity=np.full((16, 16), 0.3, np.float32))
        scene = LayeredScene(layers=(layer,), lens=LensParams(k=5.0, d_f=0.9))
        out = render_layered(scene)
        premul, _ = render_layer_blur(layer, scene.lens)
        assert np.array_equal(out, premul)

    @pytest.mark.parametrize("focus", ["fg", "bg"])
    def test_matches_dense_layered_oracle(self, rng, focus):
        scene = _two_layer_scene(rng, size=32, k=8.0, focus=focus)
        out = render_layered(scene)
        layers = [(l.color, l.alpha, l.disparity) for l in scene.layers]
        expected = layered_render_oracle(layers, scene.lens.k, scene.lens.d_f)
        assert np.abs(out - expected).max() < 2e-3

    def test_deterministic(self, rng):
        scene = _two_layer_scene(rng, k=4.0)
        assert np.array_equal(render_layered(scene), render_layered(scene))

    def test_empty_scene_rejected(self):
        with pytest.raises(ValueError):
            LayeredScene(layers=(), lens=LensParams(k=1.0, d_f=0.5))

    def test_disparity_ordering_enforced(self):
        back = _const_layer((8, 8), 0.5, 1.0, disparity=0.9)
        front = _const_layer((8, 8), 0.5, 0.5, disparity=0.1)
        with pytest.raises(ValueError):
            LayeredScene(layers=(back, front), lens=LensParams(k=1.0, d_f=0.5))

    def test_transparent_back_layer_rejected(self):
        layer = _const_layer((8, 8), 0.5, alpha=0.7)
        with pytest.raises(ValueError):
            LayeredScene(layers=(layer,), lens=LensParams(k=1.0, d_f=0.5))


class TestGroundTruth:
    def test_single_opaque_layer_on_focal_plane(self, rng):
        layer = SceneLayer(color=rng.random((12, 12, 3)).astype(np.float32),
                           alpha=np.ones((12, 12), np.float32),
                           disparity=np.full((12, 12), 0.4, np.float32))
        scene = LayeredScene(layers=(layer,), lens=LensParams(k=10.0, d_f=0.4))
        bokeh, disparity, defocus = render_ground_truth(scene)
        assert np.array_equal(bokeh, layer.color)
        assert np.array_equal(defocus, np.zeros((12, 12), np.float32))
        assert np.array_equal(disparity, layer.disparity)

    def test_k_zero_equals_sharp_composite(self, rng):
        scene = _two_layer_scene(rng, k=0.0)
        bokeh, _, defocus = render_ground_truth(scene)
        assert np.array_equal(bokeh, render_layered(scene))
        assert np.all(defocus == 0.0)

    def test_visible_disparity_matches_oracle(self, rng):
        scene = _two_layer_scene(rng, size=24, k=6.0)
        got = visible_disparity(scene)
        layers = [(l.color, l.alpha, l.disparity) for l in scene.layers]
        expected = visibility_oracle(layers)
        assert np.array_equal(got.astype(np.float64), expected)


class TestSharpnessStatistic:
    def test_monotone_in_blur_intensity(self, rng):
        img = (rng.random((48, 48, 3)) * 0.5 + 0.25).astype(np.float32)
        img[20:28, 20:28] = 0.95  # a sharp patch
        values = []
        for k in (0.0, 2.0, 4.0, 8.0):
            out = render_scatter(img, np.full((48, 48), k, np.float32))
            values.append(max_abs_laplacian(out))
        assert all(values[i + 1] <= values[i] + 1e-9 for i in range(len(values) - 1))
