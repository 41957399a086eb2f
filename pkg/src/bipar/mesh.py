"""Fixed-topology triangle meshes: value type, OBJ I/O, topology validation.

The mesh format is a Wavefront-OBJ subset (``v`` / ``vt`` / ``f`` with
matching vertex and UV indices, triangles only). Numbers are written in
shortest round-trip decimal so that save -> load is bitwise identity.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)


class MeshError(Exception):
    """Invalid mesh data (bad indices, shape mismatches, degenerate faces)."""


class MeshParseError(MeshError):
    """Unparseable mesh file; carries the offending line number."""

    def __init__(self, path, line_no: int, message: str):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = path
        self.line_no = line_no


@dataclass(frozen=True)
class Mesh:
    """Immutable triangle mesh on a fixed shared topology.

    vertices: (N, 3) float64 positions, arbitrary model units.
    faces:    (F, 3) int64 vertex-index triples.
    uvs:      (N, 2) float64 coordinates in [0, 1]^2, aligned 1:1 with vertices.
    has_uvs:  False when the source file carried no UVs (uvs are then zeros).
    """

    vertices: np.ndarray
    faces: np.ndarray
    uvs: np.ndarray = field(default=None)  # type: ignore[assignment]
    has_uvs: bool = True

    def __post_init__(self):
        verts = np.ascontiguousarray(np.asarray(self.vertices, dtype=np.float64))
        faces = np.ascontiguousarray(np.asarray(self.faces, dtype=np.int64))
        if verts.ndim != 2 or verts.shape[1] != 3:
            raise MeshError(f"vertices must be (N, 3), got {verts.shape}")
        if faces.size == 0:
            faces = faces.reshape(0, 3)
        if faces.ndim != 2 or faces.shape[1] != 3:
            raise MeshError(f"faces must be (F, 3), got {faces.shape}")
        if self.uvs is None:
            uvs = np.zeros((len(verts), 2), dtype=np.float64)
            object.__setattr__(self, "has_uvs", False)
        else:
            uvs = np.ascontiguousarray(np.asarray(self.uvs, dtype=np.float64))
        if uvs.shape != (len(verts), 2):
            raise MeshError(f"uvs must be ({len(verts)}, 2), got {uvs.shape}")
        if faces.size and (faces.min() < 0 or faces.max() >= len(verts)):
            bad = faces[(faces < 0) | (faces >= len(verts))][0]
            raise MeshError(f"face index {bad} out of range for {len(verts)} vertices")
        if faces.size:
            degenerate = (faces[:, 0] == faces[:, 1]) | (faces[:, 1] == faces[:, 2]) | (faces[:, 0] == faces[:, 2])
            if degenerate.any():
                raise MeshError(f"face {int(np.flatnonzero(degenerate)[0])} has repeated vertex indices")
        for arr in (verts, faces, uvs):
            arr.setflags(write=False)
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "faces", faces)
        object.__setattr__(self, "uvs", uvs)

    @property
    def vertex_count(self) -> int:
        return len(self.vertices)

    @property
    def face_count(self) -> int:
        return len(self.faces)

    def with_vertices(self, vertices: np.ndarray) -> "Mesh":
        """Same topology and UVs, new vertex positions."""
        return Mesh(vertices, self.faces, self.uvs, self.has_uvs)


@dataclass(frozen=True)
class TopologySignature:
    """Connectivity fingerprint: equal signatures mean identical counts and
    identical face-index multiset (up to cyclic rotation of each triple)."""

    vertex_count: int
    face_count: int
    edge_count: int
    adjacency_hash: str


def _canonical_faces(faces: np.ndarray) -> np.ndarray:
    """Rotate each triple so the smallest index leads (winding preserved),
    then sort triples lexicographically."""
    if len(faces) == 0:
        return faces.reshape(0, 3)
    rot = np.argmin(faces, axis=1)
    idx = (rot[:, None] + np.arange(3)[None, :]) % 3
    canon = np.take_along_axis(faces, idx, axis=1)
    order = np.lexsort((canon[:, 2], canon[:, 1], canon[:, 0]))
    return canon[order]


def topology_signature(mesh: Mesh) -> TopologySignature:
    """Digest of the mesh connectivity; independent of vertex positions and
    of the order faces appear in."""
    canon = _canonical_faces(mesh.faces)
    edges = np.concatenate([canon[:, [0, 1]], canon[:, [1, 2]], canon[:, [2, 0]]]) if len(canon) else np.zeros((0, 2), np.int64)
    edges = np.sort(edges, axis=1)
    edge_count = len(np.unique(edges, axis=0)) if len(edges) else 0
    payload = canon.astype("<i8").tobytes() + np.int64(mesh.vertex_count).astype("<i8").tobytes()
    return TopologySignature(
        vertex_count=mesh.vertex_count,
        face_count=mesh.face_count,
        edge_count=edge_count,
        adjacency_hash=hashlib.sha256(payload).hexdigest(),
    )


def check_consistency(a: Mesh, b: Mesh) -> tuple[bool, str]:
    """True iff the two meshes share a topology signature.

    The report names the first differing quantity as a plain text line
    ``FIELD expected=X got=Y`` (empty string when consistent).
    """
    sa, sb = topology_signature(a), topology_signature(b)
    for name in ("vertex_count", "face_count", "edge_count", "adjacency_hash"):
        va, vb = getattr(sa, name), getattr(sb, name)
        if va != vb:
            return False, f"{name} expected={va} got={vb}"
    return True, ""


def _fmt(x: float) -> str:
    """Shortest decimal that round-trips to the same float64."""
    return repr(float(x))


def save_mesh(mesh: Mesh, path) -> None:
    """Write the OBJ subset. load_mesh(save_mesh(m)) reproduces every field
    bitwise; UV lines are emitted only when the mesh carries UVs."""
    lines = []
    for v in mesh.vertices:
        lines.append(f"v {_fmt(v[0])} {_fmt(v[1])} {_fmt(v[2])}")
    if mesh.has_uvs:
        for t in mesh.uvs:
            lines.append(f"vt {_fmt(t[0])} {_fmt(t[1])}")
        for f in mesh.faces + 1:
            lines.append(f"f {f[0]}/{f[0]} {f[1]}/{f[1]} {f[2]}/{f[2]}")
    else:
        for f in mesh.faces + 1:
            lines.append(f"f {f[0]} {f[1]} {f[2]}")
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines))
        fh.write("\n")


def load_mesh(path) -> Mesh:
    """Parse the OBJ subset back into a Mesh.

    Raises MeshParseError (with line number) on malformed lines, quads, or
    mismatched v/vt face indices, and MeshError on out-of-range indices.
    A file without ``vt`` lines loads with all-zero UVs and has_uvs=False.
    """
    verts: list[list[float]] = []
    uvs: list[list[float]] = []
    faces: list[list[int]] = []
    with open(path, "r", encoding="ascii") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            tag = parts[0]
            try:
                if tag == "v":
                    if len(parts) != 4:
                        raise ValueError("expected 3 coordinates")
                    verts.append([float(parts[1]), float(parts[2]), float(parts[3])])
                elif tag == "vt":
                    if len(parts) != 3:
                        raise ValueError("expected 2 coordinates")
                    uvs.append([float(parts[1]), float(parts[2])])
                elif tag == "f":
                    if len(parts) != 4:
                        raise ValueError("faces must be triangles")
                    tri = []
                    for entry in parts[1:]:
                        fields = entry.split("/")
                        vi = int(fields[0])
                        if len(fields) >= 2 and fields[1]:
                            ti = int(fields[1])
                            if ti != vi:
                                raise ValueError(f"UV index {ti} does not match vertex index {vi}")
                        tri.append(vi - 1)
                    faces.append(tri)
                else:
                    raise ValueError(f"unsupported directive {tag!r}")
            except ValueError as exc:
                raise MeshParseError(path, line_no, str(exc)) from exc

    has_uvs = bool(uvs)
    if has_uvs and len(uvs) != len(verts):
        raise MeshError(f"{path}: {len(uvs)} UVs for {len(verts)} vertices")
    if not has_uvs:
        log.warning("%s: no UVs found, assigning zeros", path)
        uvs = [[0.0, 0.0]] * len(verts)
    return Mesh(
        vertices=np.asarray(verts, dtype=np.float64).reshape(len(verts), 3),
        faces=np.asarray(faces, dtype=np.int64).reshape(len(faces), 3),
        uvs=np.asarray(uvs, dtype=np.float64).reshape(len(verts), 2),
        has_uvs=has_uvs,
    )
