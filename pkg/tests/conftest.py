import numpy as np
import pytest

from bipar.family import FamilyConfig, generate_template, sample_family
from bipar.shape import fit_pca


@pytest.fixture(scope="session")
def small_config():
    """Low-resolution family for fast unit tests."""
    return FamilyConfig(seed=77, ring_segments=6, axial_segments=3, sphere_rings=4, sample_count=20)


@pytest.fixture(scope="session")
def default_config():
    return FamilyConfig(seed=20240)


@pytest.fixture(scope="session")
def small_rig(small_config):
    return generate_template(small_config)


@pytest.fixture(scope="session")
def small_samples(small_config):
    return sample_family(small_config, 60)


@pytest.fixture(scope="session")
def small_model(small_config, small_samples):
    """Shape model over the small family, well past the family's true rank."""
    return fit_pca([s.mesh for s in small_samples], 40)


def random_mesh(rng: np.random.Generator, n_verts=None, n_faces=None):
    """Arbitrary valid mesh for property tests."""
    from bipar.mesh import Mesh

    n_verts = n_verts or int(rng.integers(4, 40))
    n_faces = n_faces or int(rng.integers(1, 50))
    verts = rng.normal(0.0, 10.0, (n_verts, 3)) * 10.0 ** rng.integers(-6, 6)
    faces = []
    while len(faces) < n_faces:
        tri = rng.choice(n_verts, 3, replace=False)
        faces.append(tri)
    uvs = rng.uniform(0.0, 1.0, (n_verts, 2))
    return Mesh(verts, np.asarray(faces), uvs)


def random_unit_axis_angles(rng: np.random.Generator, count: int, max_angle: float):
    axes = rng.normal(size=(count, 3))
    axes /= np.linalg.norm(axes, axis=1, keepdims=True)
    angles = rng.uniform(0.0, max_angle, count)
    return (axes * angles[:, None]).ravel()
