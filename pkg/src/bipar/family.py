"""Deterministic synthetic biped family with known ground truth.

Every sample is ``template + A @ z`` for a fixed displacement matrix A, so
PCA recovery, joint localization, eye constants, and pose fitting are all
oracle-checkable. The generator also ships an independent naive posing
implementation (explicit per-vertex 4x4 products) used as the forward
kinematics / skinning oracle.

Randomness comes from xorshift64* so fixtures reproduce across languages:
    state ^= state >> 12; state ^= state << 25; state ^= state >> 27
    output = (state * 0x2545F4914F6CDD1D) mod 2^64
    uniform = (output >> 11) * 2^-53
Sample i of a family seeds its stream with ``config.seed XOR i`` (the
constant 0x9E3779B97F4A7C15 replaces a zero state).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from bipar.mesh import Mesh
from bipar.rig import LandmarkSet, Skeleton, default_skeleton
from bipar.texture import TextureImage

_MASK64 = (1 << 64) - 1
_XS_MULT = 0x2545F4914F6CDD1D
_SEED_FALLBACK = 0x9E3779B97F4A7C15


class XorShift64Star:
    """Marsaglia xorshift64* stream; see the module docstring for constants."""

    def __init__(self, seed: int):
        self.state = (seed & _MASK64) or _SEED_FALLBACK

    def next_u64(self) -> int:
        x = self.state
        x ^= x >> 12
        x ^= (x << 25) & _MASK64
        x ^= x >> 27
        self.state = x
        return (x * _XS_MULT) & _MASK64

    def uniform(self) -> float:
        return (self.next_u64() >> 11) * 2.0**-53

    def uniform_in(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.uniform()


FACTOR_NAMES = ("arm_length", "leg_length", "torso_girth", "head_scale", "ear_length", "belly_offset")

_DEFAULT_RANGES = {
    "arm_length": (-0.6, 0.6),
    "leg_length": (-0.6, 0.6),
    "torso_girth": (-1.0, 1.0),
    "head_scale": (-0.25, 0.25),
    "ear_length": (-0.8, 0.8),
    "belly_offset": (-1.0, 1.0),
}


@dataclass(frozen=True)
class FamilyConfig:
    """Configuration of one synthetic family.

    ring_segments / axial_segments / sphere_rings control the vertex count;
    factors is the ordered subset of FACTOR_NAMES in use, with uniform
    sampling ranges; eye_c1 / eye_c2 are the embedded eyeball constants.
    """

    seed: int = 20240
    ring_segments: int = 8
    axial_segments: int = 5
    sphere_rings: int = 6
    factors: tuple[str, ...] = FACTOR_NAMES
    factor_ranges: dict = field(default_factory=lambda: dict(_DEFAULT_RANGES))
    eye_c1: float = 0.6
    eye_c2: float = 0.35
    sample_count: int = 50
    falloff_band: float = 0.0
    texture_size: int = 32

    def __post_init__(self):
        if len(self.factors) < 1:
            raise ValueError("need at least one shape factor")
        for name in self.factors:
            if name not in FACTOR_NAMES:
                raise ValueError(f"unknown factor {name!r}")
            lo, hi = self.factor_ranges[name]
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise ValueError(f"bad range for {name!r}: ({lo}, {hi})")
        if self.ring_segments < 3 or self.axial_segments < 1 or self.sphere_rings < 2:
            raise ValueError("resolution too low")

    @property
    def factor_count(self) -> int:
        return len(self.factors)

    def ranges_array(self) -> np.ndarray:
        return np.array([self.factor_ranges[n] for n in self.factors])

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "ring_segments": self.ring_segments,
            "axial_segments": self.axial_segments,
            "sphere_rings": self.sphere_rings,
            "factors": list(self.factors),
            "factor_ranges": {k: list(v) for k, v in self.factor_ranges.items()},
            "eye_c1": self.eye_c1,
            "eye_c2": self.eye_c2,
            "sample_count": self.sample_count,
            "falloff_band": self.falloff_band,
            "texture_size": self.texture_size,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "FamilyConfig":
        kwargs = dict(doc)
        if "factors" in kwargs:
            kwargs["factors"] = tuple(kwargs["factors"])
        if "factor_ranges" in kwargs:
            kwargs["factor_ranges"] = {k: tuple(v) for k, v in kwargs["factor_ranges"].items()}
        return cls(**kwargs)


@dataclass(frozen=True)
class EyeGroundTruth:
    socket_center: np.ndarray
    socket_radius: float
    socket_normal: np.ndarray
    eye_radius: float
    depth: float
    patch: str


@dataclass(frozen=True)
class FamilySample:
    """One family member with its full ground truth."""

    index: int
    mesh: Mesh
    z: np.ndarray
    joints: np.ndarray
    rigid_labels: np.ndarray
    eyes: tuple[EyeGroundTruth, EyeGroundTruth]


# ---------------------------------------------------------------------------
# template geometry


def _perp_basis(axis: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    seed = np.array([1.0, 0.0, 0.0]) if abs(axis[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(axis, seed)
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(axis, e1)


class _Piece:
    def __init__(self, kind, verts, faces, owner, t, tube_ends=None, tag=""):
        self.kind = kind  # "tube" | "sphere" | "markers" | "ring"
        self.verts = np.asarray(verts, dtype=np.float64)
        self.faces = np.asarray(faces, dtype=np.int64).reshape(-1, 3)
        self.owner = owner
        self.t = np.asarray(t, dtype=np.float64)
        self.tube_ends = tube_ends  # (parent joint idx, child joint idx) for bone tubes
        self.tag = tag


def _tube(p0, p1, r0, r1, rings, axial) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    p0, p1 = np.asarray(p0, float), np.asarray(p1, float)
    axis = p1 - p0
    length = np.linalg.norm(axis)
    axis = axis / length
    e1, e2 = _perp_basis(axis)
    verts, ts = [], []
    for a in range(axial + 1):
        t = a / axial
        center = p0 + t * (p1 - p0)
        radius = r0 + t * (r1 - r0)
        for s in range(rings):
            ang = 2.0 * math.pi * s / rings
            verts.append(center + radius * (math.cos(ang) * e1 + math.sin(ang) * e2))
            ts.append(t)
    faces = []
    for a in range(axial):
        for s in range(rings):
            s1 = (s + 1) % rings
            i00, i01 = a * rings + s, a * rings + s1
            i10, i11 = (a + 1) * rings + s, (a + 1) * rings + s1
            faces.append((i00, i01, i11))
            faces.append((i00, i11, i10))
    return np.asarray(verts), np.asarray(faces), np.asarray(ts)


def _sphere(center, radius, lat_rings, segs) -> tuple[np.ndarray, np.ndarray]:
    center = np.asarray(center, float)
    verts = [center + radius * np.array([0.0, 1.0, 0.0])]
    for i in range(1, lat_rings):
        phi = math.pi * i / lat_rings
        y = math.cos(phi)
        r = math.sin(phi)
        for s in range(segs):
            ang = 2.0 * math.pi * s / segs
            verts.append(center + radius * np.array([r * math.cos(ang), y, r * math.sin(ang)]))
    verts.append(center + radius * np.array([0.0, -1.0, 0.0]))
    top, bottom = 0, len(verts) - 1
    ring0 = lambda i: 1 + (i - 1) * segs  # noqa: E731
    faces = []
    for s in range(segs):
        s1 = (s + 1) % segs
        faces.append((top, ring0(1) + s1, ring0(1) + s))
    for i in range(1, lat_rings - 1):
        for s in range(segs):
            s1 = (s + 1) % segs
            a, b = ring0(i) + s, ring0(i) + s1
            c, d = ring0(i + 1) + s, ring0(i + 1) + s1
            faces.append((a, b, d))
            faces.append((a, d, c))
    for s in range(segs):
        s1 = (s + 1) % segs
        faces.append((bottom, ring0(lat_rings - 1) + s, ring0(lat_rings - 1) + s1))
    return np.asarray(verts), np.asarray(faces)


_MARKER_DELTA = 0.008
_EYE_RING_POINTS = 12


class _Family:
    """Template geometry plus the affine ground-truth structure."""

    def __init__(self, config: FamilyConfig):
        self.config = config
        self.skeleton_proto = default_skeleton()
        names = self.skeleton_proto.joint_names
        self.jindex = {n: i for i, n in enumerate(names)}
        self.joints0 = self._joint_table()
        self._build_pieces()
        self._assemble()
        self._build_factors()

    # -- canonical T-pose joint locations
    def _joint_table(self) -> np.ndarray:
        j = {
            "pelvis": (0.0, 1.00, 0.0),
            "spine1": (0.0, 1.12, 0.0),
            "spine2": (0.0, 1.24, 0.0),
            "chest": (0.0, 1.36, 0.0),
            "neck": (0.0, 1.48, 0.0),
            "head": (0.0, 1.60, 0.0),
            "tail_root": (0.0, 0.96, -0.10),
        }
        for side, sx in (("L", 1.0), ("R", -1.0)):
            j[f"clavicle_{side}"] = (sx * 0.06, 1.42, 0.0)
            j[f"shoulder_{side}"] = (sx * 0.20, 1.42, 0.0)
            j[f"elbow_{side}"] = (sx * 0.46, 1.42, 0.0)
            j[f"wrist_{side}"] = (sx * 0.72, 1.42, 0.0)
            j[f"hip_{side}"] = (sx * 0.11, 0.94, 0.0)
            j[f"knee_{side}"] = (sx * 0.11, 0.52, 0.0)
            j[f"ankle_{side}"] = (sx * 0.11, 0.10, 0.0)
            j[f"toe_{side}"] = (sx * 0.11, 0.04, 0.12)
        return np.array([j[n] for n in self.skeleton_proto.joint_names])

    def _bone_radius(self, child: str) -> float:
        if child.startswith(("spine", "chest", "neck")):
            return 0.095
        if child.startswith(("clavicle", "shoulder")):
            return 0.05
        if child.startswith(("hip", "knee")):
            return 0.06
        if child == "head":
            return 0.05
        if child == "tail_root":
            return 0.04
        return 0.04

    def _build_pieces(self):
        cfg = self.config
        sk = self.skeleton_proto
        J = self.joints0
        head = self.jindex["head"]
        pieces: list[_Piece] = []

        for k in range(sk.num_joints):
            p = sk.parents[k]
            if p < 0:
                continue
            v, f, t = _tube(J[p], J[k], self._bone_radius(sk.joint_names[k]), self._bone_radius(sk.joint_names[k]), cfg.ring_segments, cfg.axial_segments)
            pieces.append(_Piece("tube", v, f, int(p), t, tube_ends=(int(p), k), tag=f"bone:{sk.joint_names[k]}"))

        # leaf extensions
        head_center = J[head] + np.array([0.0, 0.12, 0.0])
        v, f = _sphere(head_center, 0.13, cfg.sphere_rings, cfg.ring_segments)
        pieces.append(_Piece("sphere", v, f, head, np.zeros(len(v)), tag="head_sphere"))
        self.head_center = head_center

        for side, sx in (("L", 1.0), ("R", -1.0)):
            w = self.jindex[f"wrist_{side}"]
            v, f = _sphere(J[w] + np.array([sx * 0.055, 0.0, 0.0]), 0.05, max(cfg.sphere_rings - 2, 2), cfg.ring_segments)
            pieces.append(_Piece("sphere", v, f, w, np.zeros(len(v)), tag=f"hand_{side}"))
            toe = self.jindex[f"toe_{side}"]
            v, f = _sphere(J[toe] + np.array([0.0, 0.0, 0.045]), 0.035, max(cfg.sphere_rings - 2, 2), cfg.ring_segments)
            pieces.append(_Piece("sphere", v, f, toe, np.zeros(len(v)), tag=f"toecap_{side}"))
            base = J[head] + np.array([sx * 0.06, 0.22, 0.0])
            tip = base + np.array([sx * 0.03, 0.10, 0.0])
            v, f, t = _tube(base, tip, 0.03, 0.006, cfg.ring_segments, cfg.axial_segments)
            pieces.append(_Piece("tube", v, f, head, t, tag=f"ear_{side}"))

        tail = self.jindex["tail_root"]
        v, f, t = _tube(J[tail], J[tail] + np.array([0.0, -0.04, -0.28]), 0.035, 0.008, cfg.ring_segments, cfg.axial_segments)
        pieces.append(_Piece("tube", v, f, tail, t, tag="tail"))

        # eye-socket marker rings (circle vertices, not in any face)
        self.eye_params = {}
        for side, sx in (("L", 1.0), ("R", -1.0)):
            center = J[head] + np.array([sx * 0.055, 0.06, 0.115])
            radius = 0.028
            normal = np.array([0.0, 0.0, 1.0])
            angs = [2.0 * math.pi * m / _EYE_RING_POINTS for m in range(_EYE_RING_POINTS)]
            ring = np.stack([center + radius * (math.cos(a) * np.array([1.0, 0.0, 0.0]) + math.sin(a) * np.array([0.0, 1.0, 0.0])) for a in angs])
            pieces.append(_Piece("ring", ring, np.zeros((0, 3)), head, np.zeros(len(ring)), tag=f"eye_socket_{side}"))
            self.eye_params[side] = (center, radius, normal)

        # joint localization markers: one vertex pair symmetric about each joint
        delta = np.full(3, _MARKER_DELTA)
        for k, name in enumerate(sk.joint_names):
            mk = np.stack([J[k] - delta, J[k] + delta])
            pieces.append(_Piece("markers", mk, np.zeros((0, 3)), k, np.zeros(2), tag=f"marker:{name}"))

        self.pieces = pieces

    def _assemble(self):
        cfg = self.config
        verts, faces, uvs, owners = [], [], [], []
        offset = 0
        grid = math.ceil(math.sqrt(len(self.pieces)))
        self.piece_slices = []
        self.patches: dict[str, np.ndarray] = {}
        # fractional per-row weights toward the child joint near a tube's end
        blend_rows: list[tuple[int, int, float]] = []  # (vertex, child joint, weight)

        for pi, piece in enumerate(self.pieces):
            n = len(piece.verts)
            cell = np.array([pi % grid, pi // grid], dtype=np.float64)
            if piece.kind == "tube":
                local_uv = np.stack([np.tile(np.arange(cfg.ring_segments) / cfg.ring_segments, len(piece.verts) // cfg.ring_segments), piece.t], axis=1)
            elif piece.kind == "sphere":
                local_uv = np.linspace(0.0, 1.0, n)[:, None] * np.ones((1, 2))
            else:
                local_uv = np.full((n, 2), 0.5)
            uvs.append((cell + 0.04 + 0.92 * local_uv) / grid)
            verts.append(piece.verts)
            faces.append(piece.faces + offset)
            owners.append(np.full(n, piece.owner, dtype=np.int64))
            self.piece_slices.append(slice(offset, offset + n))

            if piece.tag.startswith("marker:"):
                name = piece.tag.split(":", 1)[1]
                self.patches[f"{name}_a"] = np.array([offset])
                self.patches[f"{name}_b"] = np.array([offset + 1])
            if piece.tag.startswith("eye_socket_"):
                self.patches[piece.tag] = np.arange(offset, offset + n)
            if piece.kind == "tube" and piece.tube_ends is not None and cfg.falloff_band > 0:
                band = cfg.falloff_band
                child = piece.tube_ends[1]
                for vi, t in enumerate(piece.t):
                    if t > 1.0 - band:
                        blend_rows.append((offset + vi, child, 0.5 * (t - (1.0 - band)) / band))
            offset += n

        self.template_vertices = np.concatenate(verts)
        self.template_faces = np.concatenate(faces)
        self.template_uvs = np.clip(np.concatenate(uvs), 0.0, 1.0)
        self.owners = np.concatenate(owners)
        n_verts = len(self.template_vertices)

        weights = np.zeros((n_verts, self.skeleton_proto.num_joints))
        weights[np.arange(n_verts), self.owners] = 1.0
        for vi, child, w in blend_rows:
            weights[vi, self.owners[vi]] = 1.0 - w
            weights[vi, child] = w
        self.weights = weights

        self.landmarks = LandmarkSet(dict(self.patches))
        self.skeleton = replace(self.skeleton_proto, rest_joints=self.joints0, weights=weights)
        self.template = Mesh(self.template_vertices, self.template_faces, self.template_uvs)

    # -- affine factor displacement fields
    def _joint_displacement_field(self, table: dict[str, np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
        K = self.skeleton_proto.num_joints
        D = np.zeros((K, 3))
        for name, vec in table.items():
            D[self.jindex[name]] = vec
        field_v = np.zeros_like(self.template_vertices)
        for piece, sl in zip(self.pieces, self.piece_slices):
            if piece.kind == "tube" and piece.tube_ends is not None:
                p, c = piece.tube_ends
                field_v[sl] = (1.0 - piece.t)[:, None] * D[p] + piece.t[:, None] * D[c]
            else:
                field_v[sl] = D[piece.owner]
        return field_v, D

    def _build_factors(self):
        cfg = self.config
        head = self.jindex["head"]
        fields, joint_fields = [], []
        eye_scale_rows = []  # per factor: scale coefficient of the socket radius
        for name in cfg.factors:
            if name == "arm_length":
                table = {}
                for side, sx in (("L", 1.0), ("R", -1.0)):
                    table[f"elbow_{side}"] = np.array([sx * 0.13, 0.0, 0.0])
                    table[f"wrist_{side}"] = np.array([sx * 0.26, 0.0, 0.0])
                fv, dj = self._joint_displacement_field(table)
            elif name == "leg_length":
                table = {}
                for side in ("L", "R"):
                    table[f"knee_{side}"] = np.array([0.0, -0.10, 0.0])
                    table[f"ankle_{side}"] = np.array([0.0, -0.20, 0.0])
                    table[f"toe_{side}"] = np.array([0.0, -0.20, 0.0])
                fv, dj = self._joint_displacement_field(table)
            elif name == "torso_girth":
                fv = np.zeros_like(self.template_vertices)
                dj = np.zeros((self.skeleton_proto.num_joints, 3))
                for piece, sl in zip(self.pieces, self.piece_slices):
                    if piece.tag.startswith("bone:") and piece.tag.split(":")[1] in ("spine1", "spine2", "chest", "neck"):
                        radial = self.template_vertices[sl].copy()
                        radial[:, 1] = 0.0
                        norms = np.linalg.norm(radial, axis=1, keepdims=True)
                        fv[sl] = 0.03 * radial / np.where(norms > 0, norms, 1.0)
            elif name == "head_scale":
                fv = np.zeros_like(self.template_vertices)
                dj = np.zeros((self.skeleton_proto.num_joints, 3))
                for piece, sl in zip(self.pieces, self.piece_slices):
                    if piece.tag in ("head_sphere", "ear_L", "ear_R", "eye_socket_L", "eye_socket_R"):
                        fv[sl] = self.template_vertices[sl] - self.joints0[head]
            elif name == "ear_length":
                fv = np.zeros_like(self.template_vertices)
                dj = np.zeros((self.skeleton_proto.num_joints, 3))
                for piece, sl in zip(self.pieces, self.piece_slices):
                    if piece.tag in ("ear_L", "ear_R"):
                        sx = 1.0 if piece.tag.endswith("L") else -1.0
                        axis = np.array([sx * 0.03, 0.10, 0.0])
                        axis = axis / np.linalg.norm(axis)
                        fv[sl] = piece.t[:, None] * (0.10 * axis)
            elif name == "belly_offset":
                fv = np.zeros_like(self.template_vertices)
                dj = np.zeros((self.skeleton_proto.num_joints, 3))
                for piece, sl in zip(self.pieces, self.piece_slices):
                    if piece.tag in ("bone:spine1", "bone:spine2"):
                        radial = self.template_vertices[sl].copy()
                        radial[:, 1] = 0.0
                        norms = np.linalg.norm(radial, axis=1, keepdims=True)
                        frontness = np.clip(radial[:, 2:3] / np.where(norms > 0, norms, 1.0), 0.0, None)
                        fv[sl] = 0.07 * frontness * np.array([0.0, 0.0, 1.0])
            else:  # pragma: no cover - guarded by FamilyConfig
                raise AssertionError(name)
            fields.append(fv)
            joint_fields.append(dj)
            eye_scale_rows.append(1.0 if name == "head_scale" else 0.0)
        self.factor_fields = np.stack(fields)  # (f, N, 3)
        self.joint_factors = np.stack(joint_fields)  # (f, K, 3)
        self.eye_radius_scale = np.asarray(eye_scale_rows)

    # -- sample evaluation -------------------------------------------------
    def mesh_at(self, z: np.ndarray) -> Mesh:
        z = np.asarray(z, dtype=np.float64)
        disp = np.tensordot(z, self.factor_fields, axes=(0, 0))
        return self.template.with_vertices(self.template_vertices + disp)

    def joints_at(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=np.float64)
        return self.joints0 + np.tensordot(z, self.joint_factors, axes=(0, 0))

    def eyes_at(self, z: np.ndarray) -> tuple[EyeGroundTruth, EyeGroundTruth]:
        head = self.joints0[self.jindex["head"]]
        scale = 1.0 + float(np.asarray(z) @ self.eye_radius_scale)
        out = []
        for side in ("L", "R"):
            c0, r0, n = self.eye_params[side]
            center = head + scale * (c0 - head)
            radius = r0 * scale
            out.append(
                EyeGroundTruth(
                    socket_center=center,
                    socket_radius=radius,
                    socket_normal=n,
                    eye_radius=self.config.eye_c1 * radius,
                    depth=self.config.eye_c2 * radius,
                    patch=f"eye_socket_{side}",
                )
            )
        return out[0], out[1]


_CACHE: dict = {}


def _family(config: FamilyConfig) -> _Family:
    key = json.dumps(config.to_json(), sort_keys=True)
    if key not in _CACHE:
        _CACHE[key] = _Family(config)
    return _CACHE[key]


def generate_template(config: FamilyConfig) -> tuple[Mesh, LandmarkSet, Skeleton]:
    """Template mesh, landmark patches, and the rigged skeleton (rest joints
    localized analytically, skinning weights per the config's falloff)."""
    fam = _family(config)
    return fam.template, fam.landmarks, fam.skeleton


def factor_displacements(config: FamilyConfig) -> np.ndarray:
    """The fixed (f, N, 3) displacement matrix A: sample = template + A . z."""
    return _family(config).factor_fields.copy()


def sample_z(config: FamilyConfig, index: int) -> np.ndarray:
    rng = XorShift64Star(config.seed ^ index)
    ranges = config.ranges_array()
    return np.array([rng.uniform_in(lo, hi) for lo, hi in ranges])


def make_sample(config: FamilyConfig, index: int, z: np.ndarray | None = None) -> FamilySample:
    fam = _family(config)
    if z is None:
        z = sample_z(config, index)
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (config.factor_count,):
        raise ValueError(f"z must have length {config.factor_count}, got {z.shape}")
    return FamilySample(
        index=index,
        mesh=fam.mesh_at(z),
        z=z,
        joints=fam.joints_at(z),
        rigid_labels=fam.owners.copy(),
        eyes=fam.eyes_at(z),
    )


def sample_family(config: FamilyConfig, count: int) -> list[FamilySample]:
    """Draw `count` samples; sample i is a pure function of (config, i)."""
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    return [make_sample(config, i) for i in range(count)]


def sample_texture(config: FamilyConfig, z: np.ndarray) -> TextureImage:
    """Synthetic UV texture, affine in z and guaranteed inside [0, 1]."""
    size = config.texture_size
    z = np.asarray(z, dtype=np.float64)
    xs = np.linspace(0.0, 1.0, size)[None, :, None]
    ys = np.linspace(0.0, 1.0, size)[:, None, None]
    chan = np.arange(3)[None, None, :]
    base = 0.5 + 0.2 * np.sin(2.0 * math.pi * (xs + 0.31 * ys) + chan * 2.0 * math.pi / 3.0)
    ranges = config.ranges_array()
    total = np.zeros_like(base)
    for j, name in enumerate(config.factors):
        amp = 0.2 / (config.factor_count * max(abs(ranges[j][0]), abs(ranges[j][1])))
        pattern = amp * np.cos(2.0 * math.pi * ((j + 1) * xs - (j + 0.5) * ys) + j + chan * 0.7)
        total = total + z[j] * pattern
    return TextureImage(base * 0.6 + 0.2 + total)


# ---------------------------------------------------------------------------
# independent naive posing oracle (no shared code with bipar.pose)


def _nv_rotation(rx: float, ry: float, rz: float) -> list:
    """Axis-angle to matrix via R = cos * I + sin * K + (1 - cos) * u u^T."""
    ang = math.sqrt(rx * rx + ry * ry + rz * rz)
    if ang == 0.0:
        return [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
    ux, uy, uz = rx / ang, ry / ang, rz / ang
    c, s = math.cos(ang), math.sin(ang)
    oc = 1.0 - c
    return [
        [c + ux * ux * oc, ux * uy * oc - uz * s, ux * uz * oc + uy * s],
        [uy * ux * oc + uz * s, c + uy * uy * oc, uy * uz * oc - ux * s],
        [uz * ux * oc - uy * s, uz * uy * oc + ux * s, c + uz * uz * oc],
    ]


def _nv_make44(rot: list, tx: float, ty: float, tz: float) -> list:
    return [
        [rot[0][0], rot[0][1], rot[0][2], tx],
        [rot[1][0], rot[1][1], rot[1][2], ty],
        [rot[2][0], rot[2][1], rot[2][2], tz],
        [0.0, 0.0, 0.0, 1.0],
    ]


def _nv_matmul(a: list, b: list) -> list:
    return [[sum(a[i][k] * b[k][j] for k in range(4)) for j in range(4)] for i in range(4)]


def _nv_invert_rigid(m: list) -> list:
    rt = [[m[j][i] for j in range(3)] for i in range(3)]
    t = [m[0][3], m[1][3], m[2][3]]
    it = [-(rt[i][0] * t[0] + rt[i][1] * t[1] + rt[i][2] * t[2]) for i in range(3)]
    return _nv_make44(rt, it[0], it[1], it[2])


def _nv_apply(m: list, p) -> list:
    return [m[i][0] * p[0] + m[i][1] * p[1] + m[i][2] * p[2] + m[i][3] for i in range(3)]


def naive_pose(
    vertices: np.ndarray,
    weights: np.ndarray,
    parents: np.ndarray,
    rest_joints: np.ndarray,
    pose: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Reference skinning: explicit per-joint matrix chains and per-vertex
    4x4 products written out longhand. Returns (posed vertices, posed joints).
    """
    K = len(rest_joints)
    pose = np.asarray(pose, dtype=np.float64).ravel()
    world: list = [None] * K
    world_rest: list = [None] * K
    for k in range(K):
        p = int(parents[k])
        if p < 0:
            off = rest_joints[k]
        else:
            off = rest_joints[k] - rest_joints[p]
        rot = _nv_rotation(pose[3 * k], pose[3 * k + 1], pose[3 * k + 2])
        local = _nv_make44(rot, off[0], off[1], off[2])
        local_rest = _nv_make44(_nv_rotation(0.0, 0.0, 0.0), off[0], off[1], off[2])
        if p < 0:
            world[k] = local
            world_rest[k] = local_rest
        else:
            world[k] = _nv_matmul(world[p], local)
            world_rest[k] = _nv_matmul(world_rest[p], local_rest)
    relative = [_nv_matmul(world[k], _nv_invert_rigid(world_rest[k])) for k in range(K)]

    posed = np.empty_like(np.asarray(vertices, dtype=np.float64))
    for i, v in enumerate(vertices):
        acc = [0.0, 0.0, 0.0]
        for k in range(K):
            w = weights[i, k]
            if w == 0.0:
                continue
            img = _nv_apply(relative[k], v)
            acc[0] += w * img[0]
            acc[1] += w * img[1]
            acc[2] += w * img[2]
        posed[i] = acc
    posed_joints = np.array([_nv_apply(relative[k], rest_joints[k]) for k in range(K)])
    return posed, posed_joints


def ground_truth_pose_scene(
    config: FamilyConfig, pose: np.ndarray, z: np.ndarray | None = None
) -> tuple[Mesh, np.ndarray]:
    """Posed scene computed by the naive oracle for the family member at
    latent z (template when omitted): (posed mesh, posed joints)."""
    fam = _family(config)
    z = np.zeros(config.factor_count) if z is None else np.asarray(z, dtype=np.float64)
    mesh = fam.mesh_at(z)
    joints = fam.joints_at(z)
    posed, posed_joints = naive_pose(mesh.vertices, fam.weights, fam.skeleton.parents, joints, pose)
    return mesh.with_vertices(posed), posed_joints
