"""Linear statistical shape space over topologically consistent T-pose meshes.

A mesh is expressed as a mean plus a weighted sum of orthonormal vertex
displacement components; coefficients are raw PCA scores (no per-component
variance normalization).
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from bipar import pca
from bipar.mesh import Mesh, check_consistency, load_mesh, save_mesh


@dataclass(frozen=True)
class ShapeModel:
    """Mean mesh plus orthonormal displacement basis over flattened vertices."""

    mean_mesh: Mesh
    basis: pca.LinearBasis

    @property
    def n_components(self) -> int:
        return self.basis.n_components

    @property
    def vertex_count(self) -> int:
        return self.mean_mesh.vertex_count

    @property
    def singular_values(self) -> np.ndarray:
        return self.basis.singular_values

    @property
    def components(self) -> np.ndarray:
        return self.basis.components

    def sigmas(self) -> np.ndarray:
        return self.basis.sigmas()


def fit_pca(meshes: "list[Mesh]", n_components: int) -> ShapeModel:
    """PCA over the vertex arrays of topology-consistent meshes.

    The mean is the per-vertex arithmetic mean; components are the top
    right-singular vectors of the centered data matrix with the
    largest-entry-positive sign convention.
    """
    if len(meshes) < 2:
        raise ValueError(f"need at least 2 meshes, got {len(meshes)}")
    ref = meshes[0]
    for i, m in enumerate(meshes[1:], start=1):
        ok, report = check_consistency(ref, m)
        if not ok:
            raise ValueError(f"mesh {i} is topology-inconsistent with mesh 0: {report}")
    data = np.stack([m.vertices.ravel() for m in meshes])
    basis = pca.fit_linear_basis(data, n_components)
    mean_mesh = ref.with_vertices(basis.mean.reshape(-1, 3))
    return ShapeModel(mean_mesh=mean_mesh, basis=basis)


def eval_shape(model: ShapeModel, beta: np.ndarray) -> Mesh:
    """Mesh at shape coefficients beta: mean + sum(beta_i * component_i)."""
    flat = pca.evaluate(model.basis, beta)
    return model.mean_mesh.with_vertices(flat.reshape(-1, 3))


def project_shape(model: ShapeModel, mesh: Mesh) -> np.ndarray:
    """Coefficients of a mesh by orthogonal projection onto the basis."""
    ok, report = check_consistency(model.mean_mesh, mesh)
    if not ok:
        raise ValueError(f"mesh is topology-inconsistent with the model: {report}")
    return pca.project(model.basis, mesh.vertices.ravel())


def interpolate_params(a: np.ndarray, b: np.ndarray, t: float) -> np.ndarray:
    """(1 - t) * a + t * b with exact endpoints at t in {0, 1}."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    if t == 0.0:
        return a.copy()
    if t == 1.0:
        return b.copy()
    return (1.0 - t) * a + t * b


_HEADER_NAME = "shape_model.json"
_COMPONENTS_NAME = "shape_components.bin"
_MEAN_NAME = "mean.obj"


def save_shape_model(model: ShapeModel, dirpath) -> None:
    """Persist as a directory: mean mesh in OBJ plus a flat little-endian
    float64 component matrix with a JSON header."""
    os.makedirs(dirpath, exist_ok=True)
    save_mesh(model.mean_mesh, os.path.join(dirpath, _MEAN_NAME))
    model.components.astype("<f8").tofile(os.path.join(dirpath, _COMPONENTS_NAME))
    header = {
        "n_components": model.n_components,
        "N": model.vertex_count,
        "singular_values": model.singular_values.tolist(),
        "sample_count": model.basis.sample_count,
        "clamped": model.basis.clamped,
    }
    with open(os.path.join(dirpath, _HEADER_NAME), "w") as fh:
        json.dump(header, fh)


def load_shape_model(dirpath) -> ShapeModel:
    with open(os.path.join(dirpath, _HEADER_NAME)) as fh:
        header = json.load(fh)
    mean_mesh = load_mesh(os.path.join(dirpath, _MEAN_NAME))
    n, big_n = header["n_components"], header["N"]
    comps = np.fromfile(os.path.join(dirpath, _COMPONENTS_NAME), dtype="<f8")
    if comps.size != n * big_n * 3:
        raise ValueError(f"component file holds {comps.size} floats, expected {n * big_n * 3}")
    if mean_mesh.vertex_count != big_n:
        raise ValueError(f"mean mesh has {mean_mesh.vertex_count} vertices, header says {big_n}")
    basis = pca.LinearBasis(
        mean=mean_mesh.vertices.ravel().copy(),
        components=comps.reshape(n, big_n * 3),
        singular_values=np.asarray(header["singular_values"], dtype=np.float64),
        sample_count=int(header.get("sample_count", 2)),
        clamped=bool(header.get("clamped", False)),
    )
    return ShapeModel(mean_mesh=mean_mesh, basis=basis)
