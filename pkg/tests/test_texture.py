import math

import numpy as np
import pytest

from bipar.family import sample_texture, sample_z
from bipar.mesh import Mesh, MeshError
from bipar.texture import (
    TextureImage,
    apply_texture,
    eval_texture,
    fit_texture_pca,
    load_png,
    load_texture_model,
    project_texture,
    sample_bilinear,
    save_png,
    save_texture_model,
    texture_metrics,
)


def const_image(value, size=4):
    return TextureImage(np.full((size, size, 3), value, dtype=np.float64))


class TestTexturePca:
    def test_black_white_pair(self):
        model = fit_texture_pca([const_image(0.0), const_image(1.0)], 1)
        assert np.allclose(model.mean_image().pixels, 0.5)
        comp = model.basis.components[0]
        ones = np.ones(comp.size) / np.sqrt(comp.size)
        assert np.allclose(comp, ones, atol=1e-9)
        # oracle: singular value of the centered 2 x d matrix
        assert abs(model.singular_values[0] - np.sqrt(2) * 0.5 * np.sqrt(comp.size)) <= 1e-9

    def test_identical_images_zero_singular(self):
        model = fit_texture_pca([const_image(0.3)] * 4, 1)
        assert np.allclose(model.singular_values, 0.0)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            fit_texture_pca([const_image(0.0, 4), const_image(1.0, 8)], 1)

    def test_training_round_trip(self, small_config):
        images = [sample_texture(small_config, sample_z(small_config, i)) for i in range(20)]
        model = fit_texture_pca(images, 19)
        for img in images[:6]:
            coeffs = project_texture(model, img)
            back = eval_texture(model, coeffs)
            rmse = math.sqrt(float(np.mean((back.pixels - img.pixels) ** 2)))
            assert rmse <= 1e-6

    def test_family_textures_affine_rank(self, small_config):
        images = [sample_texture(small_config, sample_z(small_config, i)) for i in range(30)]
        model = fit_texture_pca(images, small_config.factor_count)
        data = np.stack([im.pixels.ravel() for im in images])
        centered = data - data.mean(axis=0)
        recon = centered @ model.basis.components.T @ model.basis.components
        assert ((centered - recon) ** 2).sum() <= 1e-9 * (centered**2).sum()


class TestEvalTexture:
    def test_zero_coeffs_mean(self):
        model = fit_texture_pca([const_image(0.0), const_image(1.0)], 1)
        out = eval_texture(model, np.zeros(1))
        assert np.allclose(out.pixels, 0.5)

    def test_affinity_before_clamp(self):
        model = fit_texture_pca([const_image(0.0), const_image(1.0)], 1)
        rng = np.random.default_rng(1)
        a, b = rng.normal(0, 2, (2, 1))
        t = 0.3
        lhs = eval_texture(model, (1 - t) * a + t * b, clamp=False).pixels
        rhs = (1 - t) * eval_texture(model, a, clamp=False).pixels + t * eval_texture(model, b, clamp=False).pixels
        assert np.abs(lhs - rhs).max() <= 1e-10

    def test_clamped_to_one(self):
        model = fit_texture_pca([const_image(0.0), const_image(1.0)], 1)
        out = eval_texture(model, np.array([1e6]))
        assert out.pixels.max() == 1.0

    def test_length_mismatch(self):
        model = fit_texture_pca([const_image(0.0), const_image(1.0)], 1)
        with pytest.raises(ValueError):
            eval_texture(model, np.zeros(5))


def distinct_corner_2x2():
    px = np.zeros((2, 2, 3))
    px[0, 0] = [1.0, 0.0, 0.0]
    px[0, 1] = [0.0, 1.0, 0.0]
    px[1, 0] = [0.0, 0.0, 1.0]
    px[1, 1] = [1.0, 1.0, 0.0]
    return TextureImage(px)


class TestSampling:
    def test_texel_center_exact(self):
        tex = distinct_corner_2x2()
        assert np.allclose(sample_bilinear(tex, (0.25, 0.25)), [1.0, 0.0, 0.0])
        assert np.allclose(sample_bilinear(tex, (0.75, 0.25)), [0.0, 1.0, 0.0])

    def test_midpoint_average(self):
        tex = distinct_corner_2x2()
        expected = tex.pixels.reshape(4, 3).mean(axis=0)
        assert np.allclose(sample_bilinear(tex, (0.5, 0.5)), expected)

    def test_constant_everywhere(self):
        tex = const_image(0.42, 8)
        rng = np.random.default_rng(2)
        for _ in range(20):
            uv = rng.uniform(-0.5, 1.5, 2)  # includes clamp region
            assert np.allclose(sample_bilinear(tex, uv), 0.42)

    def test_continuity_across_texel_boundary(self):
        rng = np.random.default_rng(3)
        tex = TextureImage(rng.uniform(0, 1, (8, 8, 3)))
        u = 2.0 / 8.0  # boundary between texels 1 and 2 (centers at 1.5/8, 2.5/8)
        eps = 1e-9
        a = sample_bilinear(tex, (u - eps, 0.3))
        b = sample_bilinear(tex, (u + eps, 0.3))
        assert np.abs(a - b).max() <= 1e-7

    def test_textured_mesh_binding(self):
        mesh = Mesh(np.zeros((2, 3)), np.zeros((0, 3), dtype=np.int64), np.array([[0.25, 0.25], [0.75, 0.75]]))
        bound = apply_texture(mesh, distinct_corner_2x2())
        assert np.allclose(bound.sample_at_vertex(0), [1.0, 0.0, 0.0])
        assert np.allclose(bound.sample_at_vertex(1), [1.0, 1.0, 0.0])

    def test_missing_uvs_rejected(self):
        mesh = Mesh(np.zeros((2, 3)), np.zeros((0, 3), dtype=np.int64))
        with pytest.raises(MeshError):
            apply_texture(mesh, const_image(0.5))


class TestMetrics:
    def test_identical(self):
        mse, psnr = texture_metrics(const_image(0.5), const_image(0.5))
        assert mse == 0.0 and psnr == math.inf

    def test_black_vs_white(self):
        mse, psnr = texture_metrics(const_image(0.0), const_image(1.0))
        assert mse == 1.0 and psnr == 0.0

    def test_against_double_loop_oracle(self):
        rng = np.random.default_rng(4)
        a = TextureImage(rng.uniform(0, 1, (5, 7, 3)))
        b = TextureImage(rng.uniform(0, 1, (5, 7, 3)))
        mse, psnr = texture_metrics(a, b)
        acc = 0.0
        count = 0
        for y in range(5):
            for x in range(7):
                for c in range(3):
                    d = a.pixels[y, x, c] - b.pixels[y, x, c]
                    acc += d * d
                    count += 1
        oracle = acc / count
        assert abs(mse - oracle) <= 1e-12
        assert abs(psnr - 10 * math.log10(1 / oracle)) <= 1e-9

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            texture_metrics(const_image(0.0, 4), const_image(0.0, 8))


class TestPngIO:
    def test_round_trip_quantized(self, tmp_path):
        rng = np.random.default_rng(5)
        tex = TextureImage(rng.uniform(0, 1, (6, 6, 3)))
        path = tmp_path / "t.png"
        save_png(tex, path)
        back = load_png(path)
        assert back.width == 6 and back.height == 6
        assert np.abs(back.pixels - tex.pixels).max() <= 0.5 / 255.0 + 1e-12

    def test_model_persistence(self, tmp_path, small_config):
        images = [sample_texture(small_config, sample_z(small_config, i)) for i in range(8)]
        model = fit_texture_pca(images, 4)
        save_texture_model(model, tmp_path / "tm")
        back = load_texture_model(tmp_path / "tm")
        assert np.array_equal(back.basis.mean, model.basis.mean)
        assert np.array_equal(back.basis.components, model.basis.components)
        assert (back.width, back.height) == (model.width, model.height)
