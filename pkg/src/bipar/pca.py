"""Shared PCA kernel used by both the shape space and the texture space.

One implementation, two call sites: mean + top right-singular vectors of the
centered data matrix, with a deterministic sign convention and a Gram-matrix
path for the common many-dims / few-samples regime.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)

# singular values below this fraction of the largest are treated as zero rank
_RANK_TOL = 1e-10


@dataclass(frozen=True)
class LinearBasis:
    """Result of a PCA fit over flattened samples.

    components has orthonormal rows ordered by non-increasing singular value;
    singular values are those of the centered data matrix. clamped records
    whether the requested component count exceeded min(samples - 1, dims).
    """

    mean: np.ndarray
    components: np.ndarray
    singular_values: np.ndarray
    sample_count: int
    clamped: bool

    @property
    def n_components(self) -> int:
        return len(self.components)

    def sigmas(self) -> np.ndarray:
        """Per-component standard deviations: singular values / sqrt(n-1)."""
        return self.singular_values / np.sqrt(max(self.sample_count - 1, 1))


def _complete_basis(rows: list[np.ndarray], count: int, dims: int) -> list[np.ndarray]:
    """Extend `rows` to `count` orthonormal vectors using canonical basis
    vectors orthogonalized against what is already there (deterministic)."""
    out = list(rows)
    e = 0
    while len(out) < count and e < dims:
        cand = np.zeros(dims)
        cand[e] = 1.0
        e += 1
        for r in out:
            cand -= (r @ cand) * r
        norm = np.linalg.norm(cand)
        if norm > 0.5:  # canonical vector not (mostly) inside the current span
            out.append(cand / norm)
    if len(out) < count:
        raise RuntimeError("could not complete orthonormal basis")
    return out


def _apply_sign_convention(components: np.ndarray) -> np.ndarray:
    """Flip rows so each one's largest-magnitude entry is positive."""
    for row in components:
        j = int(np.argmax(np.abs(row)))
        if row[j] < 0:
            np.negative(row, out=row)
    return components


def fit_linear_basis(data: np.ndarray, n_components: int) -> LinearBasis:
    """PCA over data rows (samples x dims).

    Requested counts beyond min(samples - 1, dims) are clamped with a
    warning. Zero-variance directions receive deterministic completion
    vectors (singular value 0) so the orthonormality contract always holds.
    """
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2 or len(data) < 2:
        raise ValueError(f"need a (samples >= 2, dims) matrix, got shape {data.shape}")
    if n_components < 1:
        raise ValueError(f"n_components must be >= 1, got {n_components}")
    samples, dims = data.shape

    bound = min(samples - 1, dims)
    clamped = n_components > bound
    if clamped:
        log.warning("n_components=%d exceeds min(samples-1, dims)=%d; clamping", n_components, bound)
        n_components = bound

    mean = data.mean(axis=0) + 0.0  # +0.0 canonicalizes any -0.0 entries
    centered = data - mean

    if dims > samples:
        # Gram path: eigen-decompose the (samples x samples) inner products
        gram = centered @ centered.T
        evals, evecs = np.linalg.eigh(gram)
        order = np.argsort(evals)[::-1]
        evals, evecs = evals[order], evecs[:, order]
        svals = np.sqrt(np.clip(evals, 0.0, None))
    else:
        _, svals, vt = np.linalg.svd(centered, full_matrices=False)
        evecs = None

    smax = svals[0] if len(svals) else 0.0
    rows: list[np.ndarray] = []
    kept_svals: list[float] = []
    for i in range(min(n_components, len(svals))):
        if smax > 0 and svals[i] > _RANK_TOL * smax:
            if evecs is not None:
                row = centered.T @ evecs[:, i] / svals[i]
                row /= np.linalg.norm(row)
            else:
                row = vt[i].copy()
            # polish against previously kept rows (Gram path can drift for
            # small singular values)
            for prev in rows:
                row -= (prev @ row) * prev
            row /= np.linalg.norm(row)
            rows.append(row)
            kept_svals.append(float(svals[i]))
        else:
            break

    if len(rows) < n_components:
        rows = _complete_basis(rows, n_components, dims)
        kept_svals += [0.0] * (n_components - len(kept_svals))

    components = _apply_sign_convention(np.stack(rows))
    components.setflags(write=False)
    mean.setflags(write=False)
    sv = np.asarray(kept_svals)
    sv.setflags(write=False)
    return LinearBasis(mean=mean, components=components, singular_values=sv, sample_count=samples, clamped=clamped)


def evaluate(basis: LinearBasis, coeffs: np.ndarray) -> np.ndarray:
    """mean + coeffs @ components (flattened)."""
    coeffs = np.asarray(coeffs, dtype=np.float64).ravel()
    if len(coeffs) != basis.n_components:
        raise ValueError(f"expected {basis.n_components} coefficients, got {len(coeffs)}")
    return basis.mean + coeffs @ basis.components


def project(basis: LinearBasis, flat: np.ndarray) -> np.ndarray:
    """Orthogonal projection of a flattened sample onto the component rows."""
    flat = np.asarray(flat, dtype=np.float64).ravel()
    if len(flat) != len(basis.mean):
        raise ValueError(f"expected {len(basis.mean)} dims, got {len(flat)}")
    return basis.components @ (flat - basis.mean)
