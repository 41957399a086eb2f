import numpy as np
import pytest

from bipar.family import factor_displacements
from bipar.mesh import Mesh
from bipar.shape import (
    eval_shape,
    fit_pca,
    interpolate_params,
    load_shape_model,
    project_shape,
    save_shape_model,
)

TET_FACES = np.array([[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]])


def mesh_from(verts):
    verts = np.asarray(verts, dtype=np.float64).reshape(-1, 3)
    return Mesh(verts, TET_FACES, np.zeros((len(verts), 2)))


def power_iteration_top_singular(mat, iters=3000):
    """Hand-rolled top right-singular pair of a small matrix: power
    iteration on mat^T mat (the oracle, no numpy.linalg)."""
    dims = mat.shape[1]
    v = np.full(dims, 1.0 / np.sqrt(dims))
    for _ in range(iters):
        w = mat.T @ (mat @ v)
        norm = np.sqrt(float(w @ w))
        if norm == 0.0:
            return 0.0, v
        v = w / norm
    sigma = np.sqrt(float(v @ (mat.T @ (mat @ v))))
    return sigma, v


class TestFitPca:
    def test_two_mesh_case_against_power_iteration(self):
        a = mesh_from(np.zeros((4, 3)))
        b = mesh_from(np.ones((4, 3)))
        model = fit_pca([a, b], 1)
        assert np.allclose(model.mean_mesh.vertices, 0.5)
        data = np.stack([np.zeros(12), np.ones(12)])
        centered = data - data.mean(axis=0)
        sigma, v = power_iteration_top_singular(centered)
        comp = model.components[0]
        # sign convention: largest-magnitude entry positive
        assert comp[np.argmax(np.abs(comp))] > 0
        assert np.allclose(np.abs(comp), np.abs(v), atol=1e-9)
        assert abs(model.singular_values[0] - sigma) <= 1e-9
        # stated closed form: sqrt(2) * ||0.5 * ones(12)||
        assert abs(model.singular_values[0] - np.sqrt(2) * np.linalg.norm(0.5 * np.ones(12))) <= 1e-12

    def test_identical_meshes_zero_variance(self):
        m = mesh_from(np.arange(12, dtype=float))
        model = fit_pca([m] * 5, 2)
        assert np.array_equal(model.mean_mesh.vertices, m.vertices)
        assert np.allclose(model.singular_values, 0.0)
        # completion still yields orthonormal rows
        gram = model.components @ model.components.T
        assert np.abs(gram - np.eye(2)).max() <= 1e-8

    def test_affine_family_residual(self, small_config, small_samples):
        meshes = [s.mesh for s in small_samples]
        model = fit_pca(meshes, small_config.factor_count)
        data = np.stack([m.vertices.ravel() for m in meshes])
        centered = data - data.mean(axis=0)
        recon = centered @ model.components.T @ model.components
        total = float((centered**2).sum())
        resid = float(((centered - recon) ** 2).sum())
        assert resid <= 1e-9 * total

    def test_topology_mismatch_names_offender(self):
        a = mesh_from(np.zeros((4, 3)))
        bad = Mesh(np.zeros((4, 3)), TET_FACES[:3], np.zeros((4, 2)))
        with pytest.raises(ValueError, match="mesh 2"):
            fit_pca([a, a, bad], 1)

    def test_component_count_clamped(self):
        a = mesh_from(np.zeros((4, 3)))
        b = mesh_from(np.ones((4, 3)))
        model = fit_pca([a, b], 10)
        assert model.n_components == 1
        assert model.basis.clamped

    def test_deterministic(self, small_samples):
        meshes = [s.mesh for s in small_samples[:10]]
        m1 = fit_pca(meshes, 4)
        m2 = fit_pca(meshes, 4)
        assert np.array_equal(m1.components, m2.components)
        assert np.array_equal(m1.singular_values, m2.singular_values)


class TestEvalProject:
    def test_zero_beta_is_mean(self, small_model):
        out = eval_shape(small_model, np.zeros(small_model.n_components))
        assert np.array_equal(out.vertices, small_model.mean_mesh.vertices)

    def test_single_axis(self, small_model):
        beta = np.zeros(small_model.n_components)
        beta[0] = 2.5
        out = eval_shape(small_model, beta)
        expected = small_model.mean_mesh.vertices + 2.5 * small_model.components[0].reshape(-1, 3)
        assert np.allclose(out.vertices, expected, atol=1e-12)

    def test_dimension_mismatch(self, small_model):
        with pytest.raises(ValueError):
            eval_shape(small_model, np.zeros(3))

    def test_project_mean_is_zero(self, small_model):
        beta = project_shape(small_model, small_model.mean_mesh)
        assert np.abs(beta).max() <= 1e-9

    def test_project_recovers_single_component(self, small_model):
        target = small_model.mean_mesh.with_vertices(
            small_model.mean_mesh.vertices + 2.0 * small_model.components[0].reshape(-1, 3)
        )
        beta = project_shape(small_model, target)
        expected = np.zeros(small_model.n_components)
        expected[0] = 2.0
        assert np.abs(beta - expected).max() <= 1e-8

    def test_training_round_trip(self, small_model, small_samples):
        for s in small_samples[:20]:
            beta = project_shape(small_model, s.mesh)
            back = eval_shape(small_model, beta)
            rmse = np.sqrt(np.mean((back.vertices - s.mesh.vertices) ** 2))
            assert rmse <= 1e-6

    def test_affinity_of_eval(self, small_model):
        rng = np.random.default_rng(17)
        n = small_model.n_components
        for _ in range(20):
            a, b = rng.normal(0, 1, (2, n))
            t = rng.uniform()
            lhs = eval_shape(small_model, interpolate_params(a, b, t)).vertices
            rhs = (1 - t) * eval_shape(small_model, a).vertices + t * eval_shape(small_model, b).vertices
            assert np.abs(lhs - rhs).max() <= 1e-10

    def test_project_then_eval_identity_on_coefficients(self, small_model):
        rng = np.random.default_rng(23)
        beta = rng.normal(0, 1, small_model.n_components)
        back = project_shape(small_model, eval_shape(small_model, beta))
        assert np.abs(back - beta).max() <= 1e-8


class TestInterpolate:
    def test_endpoints_exact(self):
        a, b = np.array([2.0, 0.0]), np.array([0.0, 2.0])
        assert np.array_equal(interpolate_params(a, b, 0.0), a)
        assert np.array_equal(interpolate_params(a, b, 1.0), b)

    def test_midpoint(self):
        assert np.allclose(interpolate_params(np.array([2.0, 0.0]), np.array([0.0, 2.0]), 0.5), [1.0, 1.0])

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            interpolate_params(np.zeros(2), np.zeros(3), 0.5)


class TestModelInvariants:
    def test_orthonormality(self, small_model):
        gram = small_model.components @ small_model.components.T
        assert np.abs(gram - np.eye(small_model.n_components)).max() <= 1e-8

    def test_variance_nonincreasing(self, small_model):
        sv = small_model.singular_values
        assert np.all(np.diff(sv) <= 1e-12)

    def test_factor_deltas_match_columns(self, small_config):
        from bipar.family import make_sample

        a_mat = factor_displacements(small_config)
        z = np.zeros(small_config.factor_count)
        z2 = z.copy()
        z2[1] = 0.37
        m0 = make_sample(small_config, 0, z).mesh
        m1 = make_sample(small_config, 0, z2).mesh
        delta = m1.vertices - m0.vertices
        assert np.abs(delta - 0.37 * a_mat[1]).max() <= 1e-12


class TestPersistence:
    def test_round_trip(self, tmp_path, small_model):
        save_shape_model(small_model, tmp_path / "model")
        back = load_shape_model(tmp_path / "model")
        assert np.array_equal(back.mean_mesh.vertices, small_model.mean_mesh.vertices)
        assert np.array_equal(back.components, small_model.components)
        assert np.allclose(back.singular_values, small_model.singular_values)
        assert back.basis.sample_count == small_model.basis.sample_count
