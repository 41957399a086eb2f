"""Axis-angle pose, kinematic-chain transforms, and linear blend skinning.

A pose is a flat vector of K axis-angle triples (radians times unit axis).
Global joint transforms compose local rotations about each joint along the
tree; skinning applies rest-relative transforms as a convex per-vertex blend.
The rest pose is the all-zero vector (T-pose).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from bipar.mesh import Mesh
from bipar.rig import Skeleton

# below this rotation angle the sin/cos ratios switch to their series forms
_SMALL_ANGLE = 1e-12


def _sin_cos_ratios(angle: float) -> tuple[float, float]:
    """(sin(a)/a, (1-cos(a))/a^2), series-safe near zero."""
    if angle < _SMALL_ANGLE:
        a2 = angle * angle
        return 1.0 - a2 / 6.0, 0.5 - a2 / 24.0
    return np.sin(angle) / angle, (1.0 - np.cos(angle)) / (angle * angle)


def _cross_matrix(v: np.ndarray) -> np.ndarray:
    return np.array(
        [
            [0.0, -v[2], v[1]],
            [v[2], 0.0, -v[0]],
            [-v[1], v[0], 0.0],
        ]
    )


def rodrigues(theta: np.ndarray) -> np.ndarray:
    """Rotation matrix of an axis-angle 3-vector (total function).

    R = I + (sin a / a) K + ((1 - cos a) / a^2) K^2 with K the cross-product
    matrix of theta; the zero vector maps to the exact identity.
    """
    theta = np.asarray(theta, dtype=np.float64).reshape(3)
    angle = float(np.linalg.norm(theta))
    if angle == 0.0:
        return np.eye(3)
    k = _cross_matrix(theta)
    sa, cb = _sin_cos_ratios(angle)
    return np.eye(3) + sa * k + cb * (k @ k)


def rodrigues_jacobian(theta: np.ndarray) -> np.ndarray:
    """d rodrigues / d theta as a (3, 3, 3) tensor: out[m] = dR/dtheta_m.

    Uses dR = c_a' theta_m K + a [e_m]x + c_b' theta_m K^2 + b ([e_m]x K + K [e_m]x)
    with series-safe coefficient derivatives near zero angle.
    """
    theta = np.asarray(theta, dtype=np.float64).reshape(3)
    angle = float(np.linalg.norm(theta))
    k = _cross_matrix(theta)
    k2 = k @ k
    sa, cb = _sin_cos_ratios(angle)
    if angle < 1e-4:
        # (a'(phi)/phi, b'(phi)/phi) by series; exact at phi = 0
        a2 = angle * angle
        ca = -1.0 / 3.0 + a2 / 30.0
        cbp = -1.0 / 12.0 + a2 / 180.0
    else:
        ca = (angle * np.cos(angle) - np.sin(angle)) / angle**3
        cbp = (angle * np.sin(angle) - 2.0 * (1.0 - np.cos(angle))) / angle**4
    out = np.empty((3, 3, 3))
    for m in range(3):
        em = np.zeros(3)
        em[m] = 1.0
        km = _cross_matrix(em)
        out[m] = ca * theta[m] * k + sa * km + cbp * theta[m] * k2 + cb * (km @ k + k @ km)
    return out


@dataclass(frozen=True)
class JointTransforms:
    """Per-joint 4x4 rigid transforms.

    globals_[k] composes the local rotations from the root down to joint k;
    rest_relative[k] is globals_[k] with the rest-pose transform removed, so
    it is the identity at the zero pose.
    """

    globals_: np.ndarray
    rest_relative: np.ndarray

    @property
    def num_joints(self) -> int:
        return len(self.globals_)


def _rigid_inverse(t: np.ndarray) -> np.ndarray:
    """Inverse of a rigid 4x4 (rotation transposed, translation rotated back)."""
    out = np.eye(4)
    r = t[:3, :3]
    out[:3, :3] = r.T
    out[:3, 3] = -(r.T @ t[:3, 3])
    return out


def _chain_globals(sk: Skeleton, rotations: np.ndarray) -> np.ndarray:
    """Compose local [R_k | offset_k] factors root-to-leaf. The local
    translation is the joint offset relative to its parent (root: absolute)."""
    joints = sk.rest_joints
    out = np.empty((sk.num_joints, 4, 4))
    for k in range(sk.num_joints):
        p = sk.parents[k]
        local = np.eye(4)
        local[:3, :3] = rotations[k]
        local[:3, 3] = joints[k] - joints[p] if p >= 0 else joints[k]
        out[k] = out[p] @ local if p >= 0 else local
    return out


def forward_kinematics(sk: Skeleton, pose: np.ndarray) -> JointTransforms:
    """Global and rest-relative joint transforms for a flat 3K pose vector."""
    if sk.rest_joints is None:
        raise ValueError("skeleton rest joints are not filled")
    pose = np.asarray(pose, dtype=np.float64).ravel()
    k = sk.num_joints
    if pose.shape != (3 * k,):
        raise ValueError(f"pose must have length {3 * k}, got {pose.shape}")
    rotations = np.stack([rodrigues(pose[3 * j : 3 * j + 3]) for j in range(k)])
    globals_ = _chain_globals(sk, rotations)
    rest = _chain_globals(sk, np.broadcast_to(np.eye(3), (k, 3, 3)))
    rest_relative = np.einsum("kij,kjl->kil", globals_, np.stack([_rigid_inverse(t) for t in rest]))
    globals_.setflags(write=False)
    rest_relative.setflags(write=False)
    return JointTransforms(globals_=globals_, rest_relative=rest_relative)


def apply_lbs(mesh: Mesh, sk: Skeleton, transforms: JointTransforms) -> Mesh:
    """Linear blend skinning: each vertex is the weight-blended image of its
    rest position under the per-joint rest-relative transforms. Topology and
    UVs pass through unchanged."""
    if sk.weights is None:
        raise ValueError("skeleton has no skinning weights")
    if sk.weights.shape[0] != mesh.vertex_count:
        raise ValueError(f"weights cover {sk.weights.shape[0]} vertices, mesh has {mesh.vertex_count}")
    blended = np.tensordot(sk.weights, transforms.rest_relative, axes=(1, 0))  # (N, 4, 4)
    v = mesh.vertices
    posed = np.einsum("nij,nj->ni", blended[:, :3, :3], v) + blended[:, :3, 3]
    return mesh.with_vertices(posed)


def pose_mesh(mesh: Mesh, sk: Skeleton, pose: np.ndarray) -> Mesh:
    """Full pose operator: forward kinematics then linear blend skinning."""
    return apply_lbs(mesh, sk, forward_kinematics(sk, pose))


def extract_joints(transforms: JointTransforms, rest_joints: np.ndarray) -> np.ndarray:
    """Posed joint locations: the rest-relative transform applied to each
    rest joint (equivalently the global transform's translation)."""
    rest_joints = np.asarray(rest_joints, dtype=np.float64)
    g = transforms.rest_relative
    return np.einsum("kij,kj->ki", g[:, :3, :3], rest_joints) + g[:, :3, 3]


@dataclass(frozen=True)
class RetargetMap:
    """Joint-name correspondence with a fixed per-pair conjugation rotation.

    Each pair carries (src, dst, conjugate_axis_angle); the source joint's
    axis-angle is rotated by the conjugation before assignment, which equals
    conjugating the rotation matrix itself.
    """

    pairs: tuple[tuple[str, str, np.ndarray], ...]

    def to_json(self) -> dict:
        return {
            "pairs": [
                {"src": s, "dst": d, "conjugate_axis_angle": c.tolist()} for s, d, c in self.pairs
            ]
        }

    @classmethod
    def from_json(cls, doc: dict) -> "RetargetMap":
        return cls(
            tuple(
                (p["src"], p["dst"], np.asarray(p.get("conjugate_axis_angle", [0.0, 0.0, 0.0]), dtype=np.float64))
                for p in doc["pairs"]
            )
        )

    @classmethod
    def identity(cls, names: "list[str]") -> "RetargetMap":
        zero = np.zeros(3)
        return cls(tuple((n, n, zero) for n in names))

    def inverse(self) -> "RetargetMap":
        return RetargetMap(tuple((d, s, -c) for s, d, c in self.pairs))


def retarget_pose(
    src_pose: np.ndarray,
    mapping: RetargetMap,
    src_names: "list[str]",
    dst_names: "list[str]",
) -> np.ndarray:
    """Transfer per-joint axis-angles between skeletons.

    Each mapped destination joint receives the source joint's axis-angle
    rotated by the pair's conjugation; unmapped destinations stay at zero.
    """
    src_pose = np.asarray(src_pose, dtype=np.float64).ravel()
    if src_pose.shape != (3 * len(src_names),):
        raise ValueError(f"source pose must have length {3 * len(src_names)}, got {src_pose.shape}")
    src_index = {n: i for i, n in enumerate(src_names)}
    dst_index = {n: i for i, n in enumerate(dst_names)}
    out = np.zeros(3 * len(dst_names))
    for src, dst, conj in mapping.pairs:
        if src not in src_index:
            raise KeyError(f"unknown source joint {src!r}")
        if dst not in dst_index:
            raise KeyError(f"unknown destination joint {dst!r}")
        theta = src_pose[3 * src_index[src] : 3 * src_index[src] + 3]
        out[3 * dst_index[dst] : 3 * dst_index[dst] + 3] = rodrigues(conj) @ theta
    return out


def save_pose_sequence(frames: np.ndarray, path, fps: float = 30.0) -> None:
    """Pose sequence JSON: {"fps": f, "frames": [[3K floats], ...]}."""
    frames = np.asarray(frames, dtype=np.float64)
    if frames.ndim == 1:
        frames = frames[None, :]
    with open(path, "w") as fh:
        json.dump({"fps": fps, "frames": frames.tolist()}, fh)


def load_pose_sequence(path) -> tuple[np.ndarray, float]:
    with open(path) as fh:
        doc = json.load(fh)
    return np.asarray(doc["frames"], dtype=np.float64), float(doc.get("fps", 30.0))
