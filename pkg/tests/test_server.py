import base64
import struct

import numpy as np
import pytest
from fastapi.testclient import TestClient

from bipar.bundle import ModelBundle
from bipar.family import FamilyConfig, generate_template, ground_truth_pose_scene, sample_family, sample_texture
from bipar.rig import fit_socket_circle, estimate_eye_constants
from bipar.server import make_app
from bipar.shape import fit_pca
from bipar.texture import fit_texture_pca


@pytest.fixture(scope="module")
def bundle():
    config = FamilyConfig(seed=55, ring_segments=6, axial_segments=3, sphere_rings=4, texture_size=8)
    _, lm, sk = generate_template(config)
    samples = sample_family(config, 16)
    shape_model = fit_pca([s.mesh for s in samples], 10)
    texture_model = fit_texture_pca([sample_texture(config, s.z) for s in samples], 4)
    triples = []
    for s in samples:
        for eye in s.eyes:
            _, r_s, _ = fit_socket_circle(s.mesh.vertices[lm.patches[eye.patch]])
            triples.append((eye.eye_radius, eye.depth, r_s))
    c1, c2 = estimate_eye_constants(triples)
    return ModelBundle(
        shape_model=shape_model, skeleton=sk, landmarks=lm,
        texture_model=texture_model, eye_c1=c1, eye_c2=c2,
    )


@pytest.fixture(scope="module")
def client(bundle):
    return TestClient(make_app(bundle))


class TestMeta:
    def test_dims_match_bundle(self, client, bundle):
        meta = client.get("/meta").json()
        assert meta["shape_dim"] == bundle.shape_model.n_components
        assert meta["pose_dim"] == 69
        assert meta["tex_dim"] == bundle.texture_model.n_components
        assert meta["vertex_count"] == bundle.shape_model.vertex_count
        assert meta["face_count"] == bundle.shape_model.mean_mesh.face_count
        assert len(meta["joint_names"]) == 23
        assert len(meta["sigma_shape"]) == meta["shape_dim"]
        assert len(meta["sigma_tex"]) == meta["tex_dim"]


class TestEval:
    def test_zero_point_returns_mean(self, client, bundle):
        body = client.post("/eval", json={}).json()
        verts = np.asarray(body["vertices"]).reshape(-1, 3)
        assert np.abs(verts - bundle.shape_model.mean_mesh.vertices).max() <= 1e-12
        assert len(body["faces"]) == 3 * bundle.shape_model.mean_mesh.face_count
        assert len(body["uvs"]) == 2 * bundle.shape_model.vertex_count
        tex = body["texture"]
        raw = base64.b64decode(tex["rgb8_base64"])
        assert len(raw) == tex["w"] * tex["h"] * 3

    def test_stateless_idempotent(self, client):
        payload = {"theta": [0.1] * 69}
        a = client.post("/eval", json=payload).json()
        b = client.post("/eval", json=payload).json()
        assert a == b

    def test_matches_library_eval(self, client, bundle):
        rng = np.random.default_rng(1)
        beta = rng.normal(0, 0.05, bundle.shape_model.n_components)
        from bipar.bundle import rigged_eval

        body = client.post("/eval", json={"beta": beta.tolist()}).json()
        mesh, _, _ = rigged_eval(bundle, beta)
        got = np.asarray(body["vertices"]).reshape(-1, 3)
        assert np.abs(got - mesh.vertices).max() <= 1e-12

    def test_wrong_length_rejected(self, client):
        resp = client.post("/eval", json={"beta": [0.0] * 3})
        assert resp.status_code == 422

    def test_binary_format(self, client, bundle):
        resp = client.post("/eval?format=binary", json={})
        assert resp.status_code == 200
        blob = resp.content
        nv, nf, w, h = struct.unpack_from("<4I", blob, 0)
        assert nv == bundle.shape_model.vertex_count
        assert nf == bundle.shape_model.mean_mesh.face_count
        offset = 16
        verts = np.frombuffer(blob, dtype="<f8", count=3 * nv, offset=offset).reshape(-1, 3)
        assert np.abs(verts - bundle.shape_model.mean_mesh.vertices).max() <= 1e-12
        offset += 3 * nv * 8 + 3 * nf * 4 + 2 * nv * 8
        assert len(blob) == offset + w * h * 3


class TestFitEndpoint:
    def test_recovers_pose_from_joints(self, client, bundle):
        config = FamilyConfig(seed=55, ring_segments=6, axial_segments=3, sphere_rings=4, texture_size=8)
        rng = np.random.default_rng(2)
        axes = rng.normal(size=(23, 3))
        axes /= np.linalg.norm(axes, axis=1, keepdims=True)
        theta = (axes * rng.uniform(0, 0.3, 23)[:, None]).ravel()
        _, tgt_joints = ground_truth_pose_scene(config, theta)
        resp = client.post(
            "/fit",
            json={"target_joints": tgt_joints.tolist(), "config": {"max_iters": 60}},
        )
        assert resp.status_code == 200
        doc = resp.json()
        assert doc["loss_pose"] <= 1e-5

    def test_missing_targets_rejected(self, client):
        assert client.post("/fit", json={}).status_code == 422
