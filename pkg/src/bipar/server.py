"""HTTP service over a model bundle.

GET  /meta             model dimensions, joint names, slider sigmas
POST /eval             stateless full-pipeline evaluation
POST /fit              synchronous parameter recovery (bounded worker pool)

/eval responses are JSON flat arrays by default; ``?format=binary`` returns
a little-endian packed layout (see _binary_payload).
"""

from __future__ import annotations

import base64
import struct
import threading

import numpy as np
from fastapi import FastAPI, HTTPException, Query
from fastapi.responses import Response
from pydantic import BaseModel

from bipar.bundle import ModelBundle, rigged_eval
from bipar.fitting import FitConfig, FitProblem, fit


class EvalRequest(BaseModel):
    beta: list[float] | None = None
    theta: list[float] | None = None
    tex: list[float] | None = None


class FitRequest(BaseModel):
    target_vertices: list[list[float]] | None = None
    target_joints: list[list[float]] | None = None
    config: dict | None = None


def _binary_payload(verts: np.ndarray, faces: np.ndarray, uvs: np.ndarray, rgb8: np.ndarray) -> bytes:
    """Packed little-endian layout: header of four uint32 (vertex count,
    face count, texture width, texture height) then float64 vertices (3N),
    int32 faces (3F), float64 uvs (2N), uint8 RGB texels (3WH)."""
    h, w = rgb8.shape[:2]
    header = struct.pack("<4I", len(verts), len(faces), w, h)
    return (
        header
        + verts.astype("<f8").tobytes()
        + faces.astype("<i4").tobytes()
        + uvs.astype("<f8").tobytes()
        + rgb8.tobytes()
    )


def make_app(bundle: ModelBundle, fit_workers: int = 2) -> FastAPI:
    app = FastAPI(title="bipar", version="0.1.0")
    fit_slots = threading.Semaphore(max(fit_workers, 1))
    sigma_shape = bundle.shape_model.sigmas()
    sigma_tex = bundle.texture_model.sigmas()

    @app.get("/meta")
    def meta() -> dict:
        m = bundle.manifest()
        return {
            "shape_dim": m["shape_dim"],
            "pose_dim": m["pose_dim"],
            "tex_dim": m["tex_dim"],
            "joint_names": m["joint_names"],
            "sigma_shape": sigma_shape.tolist(),
            "sigma_tex": sigma_tex.tolist(),
            "vertex_count": m["vertex_count"],
            "face_count": m["face_count"],
        }

    def _check_len(name: str, vec, expected: int):
        if vec is not None and len(vec) != expected:
            raise HTTPException(status_code=422, detail=f"{name} must have length {expected}, got {len(vec)}")

    @app.post("/eval")
    def eval_point(req: EvalRequest, format: str = Query("json")):
        _check_len("beta", req.beta, bundle.shape_model.n_components)
        _check_len("theta", req.theta, bundle.pose_dim)
        _check_len("tex", req.tex, bundle.texture_model.n_components)
        beta = np.asarray(req.beta, dtype=np.float64) if req.beta is not None else None
        theta = np.asarray(req.theta, dtype=np.float64) if req.theta is not None else None
        tex = np.asarray(req.tex, dtype=np.float64) if req.tex is not None else None
        mesh, _joints, image = rigged_eval(bundle, beta, theta, tex)
        rgb8 = image.to_rgb8()
        if format == "binary":
            payload = _binary_payload(mesh.vertices, mesh.faces, mesh.uvs, rgb8)
            return Response(content=payload, media_type="application/octet-stream")
        return {
            "vertices": mesh.vertices.ravel().tolist(),
            "faces": mesh.faces.ravel().tolist(),
            "uvs": mesh.uvs.ravel().tolist(),
            "texture": {
                "w": image.width,
                "h": image.height,
                "rgb8_base64": base64.b64encode(rgb8.tobytes()).decode("ascii"),
            },
        }

    @app.post("/fit")
    def fit_point(req: FitRequest) -> dict:
        if req.target_vertices is None and req.target_joints is None:
            raise HTTPException(status_code=422, detail="provide target_vertices and/or target_joints")
        config = FitConfig.from_json(req.config) if req.config else FitConfig()
        try:
            problem = FitProblem(
                shape_model=bundle.shape_model,
                skeleton=bundle.skeleton,
                landmarks=bundle.landmarks,
                target_vertices=np.asarray(req.target_vertices, dtype=np.float64) if req.target_vertices else None,
                target_joints=np.asarray(req.target_joints, dtype=np.float64) if req.target_joints else None,
                lambda_s=config.lambda_s,
                lambda_p=config.lambda_p,
            )
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        with fit_slots:
            result = fit(problem, config=config)
        return result.to_json()

    return app


def serve(bundle: ModelBundle, host: str = "127.0.0.1", port: int = 8080, fit_workers: int = 2) -> None:
    import uvicorn

    uvicorn.run(make_app(bundle, fit_workers=fit_workers), host=host, port=port, log_level="warning")
