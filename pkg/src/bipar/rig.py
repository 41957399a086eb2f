"""Landmark patches, joint localization, eye-socket fitting, skeleton.

Joints live at the center of the axis-aligned bounding box of the union of
two landmark patches; eye sockets are fit as 3D circles and eyeballs are
reconstructed from two precomputed ratio constants.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from bipar.mesh import Mesh


class DegenerateInputError(ValueError):
    """Geometry too degenerate to fit (collinear points, ambiguous normal)."""


NUM_JOINTS = 23


@dataclass(frozen=True)
class LandmarkSet:
    """Named vertex-index patches on the shared topology."""

    patches: dict[str, np.ndarray]

    def __post_init__(self):
        clean = {}
        for name, idx in self.patches.items():
            arr = np.asarray(idx, dtype=np.int64).ravel()
            if arr.size == 0:
                raise ValueError(f"patch {name!r} is empty")
            arr.setflags(write=False)
            clean[name] = arr
        object.__setattr__(self, "patches", clean)

    def validate_for(self, vertex_count: int) -> None:
        for name, idx in self.patches.items():
            if idx.min() < 0 or idx.max() >= vertex_count:
                raise ValueError(f"patch {name!r} references vertex {int(idx.max())} outside [0, {vertex_count})")

    def to_json(self) -> dict:
        return {"patches": {name: idx.tolist() for name, idx in self.patches.items()}}

    @classmethod
    def from_json(cls, doc: dict) -> "LandmarkSet":
        return cls({name: np.asarray(v, dtype=np.int64) for name, v in doc["patches"].items()})

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=1)

    @classmethod
    def load(cls, path) -> "LandmarkSet":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def _normalize_rows(w: np.ndarray) -> np.ndarray:
    """Rows scaled to sum exactly 1.0: after dividing by the row sum, the
    largest entry absorbs the remainder so the sequential sum is exact."""
    w = np.array(w, dtype=np.float64)
    if (w < 0).any():
        raise ValueError("skinning weights must be nonnegative")
    sums = w.sum(axis=1)
    if (sums <= 0).any():
        raise ValueError("skinning weight rows must have positive sum")
    w /= sums[:, None]
    top = np.argmax(w, axis=1)
    rows = np.arange(len(w))
    others = w.sum(axis=1) - w[rows, top]
    w[rows, top] = 1.0 - others
    return w


@dataclass(frozen=True)
class Skeleton:
    """Joint tree with rest locations and skinning weights.

    parents[k] is the parent joint index (root: -1) and precedes k, so the
    joint order is topological. joint_patches names, per joint, the two
    landmark patches whose union bounding box localizes it. rest_joints and
    weights may be None until computed/loaded.
    """

    joint_names: tuple[str, ...]
    parents: np.ndarray
    joint_patches: tuple[tuple[str, str], ...]
    rest_joints: np.ndarray | None = None
    weights: np.ndarray | None = None

    def __post_init__(self):
        parents = np.asarray(self.parents, dtype=np.int64)
        k = len(self.joint_names)
        if parents.shape != (k,):
            raise ValueError(f"parents must have shape ({k},)")
        if len(self.joint_patches) != k:
            raise ValueError("joint_patches must align with joint_names")
        roots = np.flatnonzero(parents < 0)
        if len(roots) != 1:
            raise ValueError(f"expected exactly one root, found {len(roots)}")
        for i, p in enumerate(parents):
            if p >= i:
                raise ValueError(f"parent index {p} of joint {i} must precede it (topological order)")
        parents.setflags(write=False)
        object.__setattr__(self, "parents", parents)
        object.__setattr__(self, "joint_names", tuple(self.joint_names))
        object.__setattr__(self, "joint_patches", tuple(tuple(p) for p in self.joint_patches))
        if self.rest_joints is not None:
            rj = np.ascontiguousarray(np.asarray(self.rest_joints, dtype=np.float64))
            if rj.shape != (k, 3):
                raise ValueError(f"rest_joints must be ({k}, 3)")
            rj.setflags(write=False)
            object.__setattr__(self, "rest_joints", rj)
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=np.float64)
            if w.ndim != 2 or w.shape[1] != k:
                raise ValueError(f"weights must be (N, {k})")
            w = _normalize_rows(w)
            w.setflags(write=False)
            object.__setattr__(self, "weights", w)

    @property
    def num_joints(self) -> int:
        return len(self.joint_names)

    def index_of(self, name: str) -> int:
        try:
            return self.joint_names.index(name)
        except ValueError:
            raise KeyError(f"unknown joint {name!r}") from None

    def children(self, k: int) -> list[int]:
        return [int(i) for i in np.flatnonzero(self.parents == k)]

    def to_json(self) -> dict:
        doc = {
            "joints": [
                {"name": n, "parent": int(p), "patch_a": pa, "patch_b": pb}
                for n, p, (pa, pb) in zip(self.joint_names, self.parents, self.joint_patches)
            ]
        }
        if self.weights is not None:
            doc["weights"] = {"encoding": "dense-row-major", "data": self.weights.ravel().tolist()}
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "Skeleton":
        joints = doc["joints"]
        names = [j["name"] for j in joints]
        parents = [j["parent"] for j in joints]
        patches = [(j["patch_a"], j["patch_b"]) for j in joints]
        weights = None
        if "weights" in doc:
            enc = doc["weights"]
            if enc.get("encoding") != "dense-row-major":
                raise ValueError(f"unsupported weight encoding {enc.get('encoding')!r}")
            flat = np.asarray(enc["data"], dtype=np.float64)
            weights = flat.reshape(-1, len(names))
        return cls(tuple(names), np.asarray(parents), tuple(patches), weights=weights)

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh)

    @classmethod
    def load(cls, path) -> "Skeleton":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def joint_from_patches(mesh: Mesh, lm: LandmarkSet, patch_a: str, patch_b: str) -> np.ndarray:
    """Center of the axis-aligned bounding box of the two patches' union."""
    pts = []
    for name in (patch_a, patch_b):
        if name not in lm.patches:
            raise KeyError(f"unknown patch {name!r}")
        pts.append(mesh.vertices[lm.patches[name]])
    union = np.concatenate(pts, axis=0)
    return 0.5 * (union.min(axis=0) + union.max(axis=0))


def compute_rest_joints(mesh: Mesh, lm: LandmarkSet, sk: Skeleton) -> Skeleton:
    """Skeleton with rest joints localized from the mesh's landmark patches."""
    joints = np.stack([joint_from_patches(mesh, lm, pa, pb) for pa, pb in sk.joint_patches])
    return replace(sk, rest_joints=joints)


def _plane_fit(points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Total-least-squares plane: (centroid, unit normal) via the smallest
    principal direction of the covariance. Raises on (near-)collinear input."""
    centroid = points.mean(axis=0)
    centered = points - centroid
    cov = centered.T @ centered
    evals, evecs = np.linalg.eigh(cov)
    scale = float(evals[-1])
    if scale <= 0.0 or evals[1] <= 1e-12 * scale:
        raise DegenerateInputError("points are collinear; plane normal is ambiguous")
    return centroid, evecs[:, 0]


def fit_socket_circle(
    points: np.ndarray, outward: np.ndarray | None = None
) -> tuple[np.ndarray, float, np.ndarray]:
    """Least-squares 3D circle through >= 3 non-collinear points.

    Plane via total least squares, then an algebraic (Kasa) circle fit in
    plane coordinates refined by one Gauss-Newton pass. Exact for points on
    a true circle. Returns (center, radius, unit normal); the normal sign is
    chosen to point along ``outward`` (default +z).
    """
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if len(points) < 3:
        raise DegenerateInputError(f"need at least 3 points, got {len(points)}")
    centroid, normal = _plane_fit(points)

    # orthonormal in-plane basis
    seed = np.array([1.0, 0.0, 0.0]) if abs(normal[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(normal, seed)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(normal, e1)

    local = (points - centroid) @ np.stack([e1, e2], axis=1)
    x, y = local[:, 0], local[:, 1]

    # Kasa: 2*cx*x + 2*cy*y + c = x^2 + y^2
    a_mat = np.stack([2 * x, 2 * y, np.ones_like(x)], axis=1)
    rhs = x * x + y * y
    (cx, cy, c), *_ = np.linalg.lstsq(a_mat, rhs, rcond=None)
    r = float(np.sqrt(max(c + cx * cx + cy * cy, 0.0)))

    # one Gauss-Newton pass on the geometric residual dist - r
    dx, dy = x - cx, y - cy
    dist = np.hypot(dx, dy)
    if (dist > 0).all() and r > 0:
        jac = np.stack([-dx / dist, -dy / dist, -np.ones_like(dist)], axis=1)
        res = dist - r
        step, *_ = np.linalg.lstsq(jac, -res, rcond=None)
        cx, cy, r = cx + step[0], cy + step[1], r + step[2]

    center = centroid + cx * e1 + cy * e2
    if outward is None:
        outward = np.array([0.0, 0.0, 1.0])
    d = float(normal @ np.asarray(outward, dtype=np.float64))
    if d < 0:
        normal = -normal
    elif d == 0:
        nz = np.flatnonzero(normal)
        if len(nz) and normal[nz[0]] < 0:
            normal = -normal
    return center, float(r), normal


@dataclass(frozen=True)
class EyeballFit:
    """Eye socket circle plus the sphere reconstructed behind it.

    eye_center is constructed as socket_center - depth * socket_normal.
    """

    socket_center: np.ndarray
    socket_radius: float
    socket_normal: np.ndarray
    eye_center: np.ndarray
    eye_radius: float
    depth: float

    def to_json(self) -> dict:
        return {
            "socket_center": self.socket_center.tolist(),
            "socket_radius": self.socket_radius,
            "socket_normal": self.socket_normal.tolist(),
            "eye_center": self.eye_center.tolist(),
            "eye_radius": self.eye_radius,
            "depth": self.depth,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "EyeballFit":
        return cls(
            socket_center=np.asarray(doc["socket_center"], dtype=np.float64),
            socket_radius=float(doc["socket_radius"]),
            socket_normal=np.asarray(doc["socket_normal"], dtype=np.float64),
            eye_center=np.asarray(doc["eye_center"], dtype=np.float64),
            eye_radius=float(doc["eye_radius"]),
            depth=float(doc["depth"]),
        )


def reconstruct_eyeball(o_s: np.ndarray, r_s: float, n: np.ndarray, c1: float, c2: float) -> EyeballFit:
    """Eyeball sphere from socket circle and ratio constants:
    radius = c1 * r_s, depth = c2 * r_s, center = o_s - depth * n."""
    o_s = np.asarray(o_s, dtype=np.float64).reshape(3)
    n = np.asarray(n, dtype=np.float64).reshape(3)
    if r_s <= 0:
        raise ValueError(f"socket radius must be positive, got {r_s}")
    if c1 <= 0 or c2 < 0:
        raise ValueError(f"need c1 > 0 and c2 >= 0, got c1={c1}, c2={c2}")
    if abs(np.linalg.norm(n) - 1.0) > 1e-9:
        raise ValueError(f"normal must be unit length, got |n|={np.linalg.norm(n)}")
    r_e = c1 * r_s
    d_e = c2 * r_s
    return EyeballFit(
        socket_center=o_s,
        socket_radius=float(r_s),
        socket_normal=n,
        eye_center=o_s - d_e * n,
        eye_radius=float(r_e),
        depth=float(d_e),
    )


def estimate_eye_constants(fits: "list[tuple[float, float, float]]") -> tuple[float, float]:
    """Mean ratio constants over (eye radius, depth, socket radius) triples:
    c1 = mean(r_e / r_s), c2 = mean(d_e / r_s)."""
    if len(fits) == 0:
        raise ValueError("need at least one (r_e, d_e, r_s) triple")
    c1s, c2s = [], []
    for r_e, d_e, r_s in fits:
        if r_s <= 0:
            raise ValueError(f"socket radius must be positive, got {r_s}")
        c1s.append(r_e / r_s)
        c2s.append(d_e / r_s)
    return float(np.mean(c1s)), float(np.mean(c2s))


_DEFAULT_TREE: tuple[tuple[str, str], ...] = (
    ("pelvis", ""),
    ("spine1", "pelvis"),
    ("spine2", "spine1"),
    ("chest", "spine2"),
    ("neck", "chest"),
    ("head", "neck"),
    ("tail_root", "pelvis"),
    ("clavicle_L", "chest"),
    ("shoulder_L", "clavicle_L"),
    ("elbow_L", "shoulder_L"),
    ("wrist_L", "elbow_L"),
    ("clavicle_R", "chest"),
    ("shoulder_R", "clavicle_R"),
    ("elbow_R", "shoulder_R"),
    ("wrist_R", "elbow_R"),
    ("hip_L", "pelvis"),
    ("knee_L", "hip_L"),
    ("ankle_L", "knee_L"),
    ("toe_L", "ankle_L"),
    ("hip_R", "pelvis"),
    ("knee_R", "hip_R"),
    ("ankle_R", "knee_R"),
    ("toe_R", "ankle_R"),
)


def default_skeleton() -> Skeleton:
    """The 23-joint biped tree rooted at the pelvis, rest locations and
    weights unfilled. Patch names follow the ``<joint>_a`` / ``<joint>_b``
    convention."""
    names = tuple(n for n, _ in _DEFAULT_TREE)
    index = {n: i for i, n in enumerate(names)}
    parents = np.array([index[p] if p else -1 for _, p in _DEFAULT_TREE], dtype=np.int64)
    patches = tuple((f"{n}_a", f"{n}_b") for n in names)
    return Skeleton(names, parents, patches)
