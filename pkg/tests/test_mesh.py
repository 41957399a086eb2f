import numpy as np
import pytest

from bipar.mesh import (
    Mesh,
    MeshError,
    MeshParseError,
    check_consistency,
    load_mesh,
    save_mesh,
    topology_signature,
)
from conftest import random_mesh

TET_VERTS = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
TET_FACES = np.array([[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]])


def tetrahedron():
    return Mesh(TET_VERTS, TET_FACES, np.zeros((4, 2)))


class TestMeshType:
    def test_index_out_of_range(self):
        with pytest.raises(MeshError, match="out of range"):
            Mesh(TET_VERTS, [[0, 1, 10]], np.zeros((4, 2)))

    def test_repeated_indices_rejected(self):
        with pytest.raises(MeshError, match="repeated"):
            Mesh(TET_VERTS, [[0, 1, 1]], np.zeros((4, 2)))

    def test_uv_count_must_match(self):
        with pytest.raises(MeshError, match="uvs"):
            Mesh(TET_VERTS, TET_FACES, np.zeros((3, 2)))

    def test_missing_uvs_flagged(self):
        m = Mesh(TET_VERTS, TET_FACES)
        assert not m.has_uvs
        assert np.array_equal(m.uvs, np.zeros((4, 2)))

    def test_immutable(self):
        m = tetrahedron()
        with pytest.raises(ValueError):
            m.vertices[0, 0] = 5.0


class TestObjIO:
    def test_tetrahedron_file(self, tmp_path):
        path = tmp_path / "tet.obj"
        save_mesh(tetrahedron(), path)
        lines = path.read_text().splitlines()
        assert sum(1 for ln in lines if ln.startswith("v ")) == 4
        assert sum(1 for ln in lines if ln.startswith("f ")) == 4
        assert sum(1 for ln in lines if ln.startswith("vt ")) == 4
        m = load_mesh(path)
        assert m.vertex_count == 4 and m.face_count == 4

    def test_out_of_range_index_in_file(self, tmp_path):
        path = tmp_path / "bad.obj"
        path.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\nf 1 2 11\n")
        with pytest.raises(MeshError, match="out of range"):
            load_mesh(path)

    def test_parse_error_carries_line_number(self, tmp_path):
        path = tmp_path / "bad.obj"
        path.write_text("v 0 0 0\nv 1 oops 0\n")
        with pytest.raises(MeshParseError) as err:
            load_mesh(path)
        assert err.value.line_no == 2

    def test_quads_rejected(self, tmp_path):
        path = tmp_path / "quad.obj"
        path.write_text("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n")
        with pytest.raises(MeshParseError, match="triangles"):
            load_mesh(path)

    def test_mismatched_uv_index_rejected(self, tmp_path):
        path = tmp_path / "mismatch.obj"
        path.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nvt 1 0\nvt 0 1\nf 1/1 2/3 3/2\n")
        with pytest.raises(MeshParseError, match="does not match"):
            load_mesh(path)

    def test_file_without_uvs(self, tmp_path):
        path = tmp_path / "nouv.obj"
        path.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n")
        m = load_mesh(path)
        assert not m.has_uvs
        assert np.array_equal(m.uvs, np.zeros((3, 2)))

    def test_template_round_trip_bitwise(self, tmp_path, small_rig):
        mesh, _, _ = small_rig
        path = tmp_path / "template.obj"
        save_mesh(mesh, path)
        back = load_mesh(path)
        assert np.array_equal(mesh.vertices, back.vertices)
        assert np.array_equal(mesh.faces, back.faces)
        assert np.array_equal(mesh.uvs, back.uvs)

    def test_round_trip_is_bitwise_identity(self, tmp_path):
        rng = np.random.default_rng(42)
        for i in range(100):
            m = random_mesh(rng)
            path = tmp_path / f"m{i}.obj"
            save_mesh(m, path)
            back = load_mesh(path)
            assert np.array_equal(m.vertices, back.vertices)
            assert np.array_equal(m.faces, back.faces)
            assert np.array_equal(m.uvs, back.uvs)
            assert np.abs(m.vertices - back.vertices).max() == 0.0


class TestTopologySignature:
    def test_translation_invariant(self):
        m = tetrahedron()
        moved = m.with_vertices(m.vertices + np.array([1.0, 2.0, 3.0]))
        assert topology_signature(m) == topology_signature(moved)

    def test_winding_swap_changes_hash(self):
        m = tetrahedron()
        flipped_faces = TET_FACES.copy()
        flipped_faces[0] = [TET_FACES[0, 0], TET_FACES[0, 2], TET_FACES[0, 1]]
        flipped = Mesh(TET_VERTS, flipped_faces, np.zeros((4, 2)))
        assert topology_signature(m).adjacency_hash != topology_signature(flipped).adjacency_hash

    def test_face_order_invariant(self):
        m = tetrahedron()
        reordered = Mesh(TET_VERTS, TET_FACES[::-1], np.zeros((4, 2)))
        assert topology_signature(m) == topology_signature(reordered)

    def test_cyclic_rotation_of_triple_invariant(self):
        m = tetrahedron()
        rotated = np.array([[f[1], f[2], f[0]] for f in TET_FACES])
        assert topology_signature(m) == topology_signature(Mesh(TET_VERTS, rotated, np.zeros((4, 2))))

    def test_counts(self):
        sig = topology_signature(tetrahedron())
        assert (sig.vertex_count, sig.face_count, sig.edge_count) == (4, 4, 6)

    def test_generator_determinism(self, small_config):
        from bipar.family import generate_template

        a, _, _ = generate_template(small_config)
        b, _, _ = generate_template(small_config)
        assert topology_signature(a) == topology_signature(b)
        assert np.array_equal(a.vertices, b.vertices)


class TestConsistency:
    def test_self(self):
        m = tetrahedron()
        ok, report = check_consistency(m, m)
        assert ok and report == ""

    def test_face_removed(self):
        m = tetrahedron()
        smaller = Mesh(TET_VERTS, TET_FACES[:3], np.zeros((4, 2)))
        ok, report = check_consistency(m, smaller)
        assert not ok
        assert report == "face_count expected=4 got=3"

    def test_family_pairwise(self, small_samples):
        meshes = [s.mesh for s in small_samples[:6]]
        for a in meshes:
            for b in meshes:
                assert check_consistency(a, b)[0]

    def test_equivalence_relation(self):
        rng = np.random.default_rng(3)
        base = random_mesh(rng, n_verts=10, n_faces=8)
        same = base.with_vertices(rng.normal(size=base.vertices.shape))
        other = random_mesh(rng, n_verts=10, n_faces=9)
        # reflexive / symmetric / transitive over the triple
        assert check_consistency(base, base)[0]
        assert check_consistency(base, same)[0] == check_consistency(same, base)[0]
        if check_consistency(base, same)[0] and check_consistency(same, other)[0]:
            assert check_consistency(base, other)[0]
        assert check_consistency(base, other)[0] == check_consistency(other, base)[0]
