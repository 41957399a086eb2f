"""Model bundle: shape model + skeleton + texture model + eye constants.

A bundle directory is the unit the CLI and the HTTP service operate on. Its
evaluation runs the full composition: shape coefficients produce a T-pose
mesh, rest joints are re-localized from the mesh's landmark patches, the
pose articulates it, and texture coefficients produce the bound UV image.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from bipar.mesh import Mesh
from bipar.pose import apply_lbs, extract_joints, forward_kinematics
from bipar.rig import LandmarkSet, Skeleton, compute_rest_joints
from bipar.shape import ShapeModel, eval_shape, load_shape_model, save_shape_model
from bipar.texture import TextureImage, TextureModel, eval_texture, load_texture_model, save_texture_model

MANIFEST_NAME = "manifest.json"
SKELETON_NAME = "skeleton.json"
LANDMARKS_NAME = "landmarks.json"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class ModelBundle:
    shape_model: ShapeModel
    skeleton: Skeleton
    landmarks: LandmarkSet
    texture_model: TextureModel
    eye_c1: float
    eye_c2: float

    def __post_init__(self):
        n = self.shape_model.vertex_count
        if self.skeleton.weights is None or self.skeleton.weights.shape[0] != n:
            raise ValueError(f"skeleton weights must cover the shape model's {n} vertices")
        self.landmarks.validate_for(n)

    @property
    def pose_dim(self) -> int:
        return 3 * self.skeleton.num_joints

    def manifest(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "shape_dim": self.shape_model.n_components,
            "pose_dim": self.pose_dim,
            "tex_dim": self.texture_model.n_components,
            "vertex_count": self.shape_model.vertex_count,
            "face_count": self.shape_model.mean_mesh.face_count,
            "joint_names": list(self.skeleton.joint_names),
            "texture_size": [self.texture_model.width, self.texture_model.height],
            "eye": {"c1": self.eye_c1, "c2": self.eye_c2},
        }


def rigged_eval(
    bundle: ModelBundle,
    beta: np.ndarray | None = None,
    theta: np.ndarray | None = None,
    tex: np.ndarray | None = None,
) -> tuple[Mesh, np.ndarray, TextureImage]:
    """Full pipeline: (posed mesh, posed joints, texture image).

    Omitted parameter vectors default to zeros, which reproduces the mean
    mesh in rest pose with the mean texture.
    """
    if beta is None:
        beta = np.zeros(bundle.shape_model.n_components)
    if theta is None:
        theta = np.zeros(bundle.pose_dim)
    if tex is None:
        tex = np.zeros(bundle.texture_model.n_components)
    shaped = eval_shape(bundle.shape_model, beta)
    sk = compute_rest_joints(shaped, bundle.landmarks, bundle.skeleton)
    transforms = forward_kinematics(sk, theta)
    posed = apply_lbs(shaped, sk, transforms)
    joints = extract_joints(transforms, sk.rest_joints)
    image = eval_texture(bundle.texture_model, tex)
    return posed, joints, image


def save_bundle(bundle: ModelBundle, dirpath) -> None:
    os.makedirs(dirpath, exist_ok=True)
    save_shape_model(bundle.shape_model, dirpath)
    save_texture_model(bundle.texture_model, dirpath)
    bundle.skeleton.save(os.path.join(dirpath, SKELETON_NAME))
    bundle.landmarks.save(os.path.join(dirpath, LANDMARKS_NAME))
    with open(os.path.join(dirpath, MANIFEST_NAME), "w") as fh:
        json.dump(bundle.manifest(), fh, indent=1)


def load_bundle(dirpath) -> ModelBundle:
    with open(os.path.join(dirpath, MANIFEST_NAME)) as fh:
        manifest = json.load(fh)
    shape_model = load_shape_model(dirpath)
    texture_model = load_texture_model(dirpath)
    skeleton = Skeleton.load(os.path.join(dirpath, SKELETON_NAME))
    landmarks = LandmarkSet.load(os.path.join(dirpath, LANDMARKS_NAME))
    # rest joints are derived state: re-localize them on the mean mesh
    skeleton = compute_rest_joints(shape_model.mean_mesh, landmarks, skeleton)
    bundle = ModelBundle(
        shape_model=shape_model,
        skeleton=skeleton,
        landmarks=landmarks,
        texture_model=texture_model,
        eye_c1=float(manifest["eye"]["c1"]),
        eye_c2=float(manifest["eye"]["c2"]),
    )
    got = bundle.manifest()
    for key in ("shape_dim", "pose_dim", "tex_dim", "vertex_count", "face_count"):
        if manifest.get(key) != got[key]:
            raise ValueError(f"bundle manifest mismatch on {key}: {manifest.get(key)} vs {got[key]}")
    return bundle


def load_scene(path) -> dict:
    """Fit-target scene JSON: optional target_vertices / target_joints plus
    an optional ground-truth parameter block for supervised problems."""
    with open(path) as fh:
        doc = json.load(fh)
    out = {}
    if "target_vertices" in doc and doc["target_vertices"] is not None:
        out["target_vertices"] = np.asarray(doc["target_vertices"], dtype=np.float64)
    if "target_joints" in doc and doc["target_joints"] is not None:
        out["target_joints"] = np.asarray(doc["target_joints"], dtype=np.float64)
    if "gt" in doc and doc["gt"] is not None:
        out["gt_params"] = (
            np.asarray(doc["gt"]["beta"], dtype=np.float64),
            np.asarray(doc["gt"]["theta"], dtype=np.float64),
        )
    if not out:
        raise ValueError(f"{path}: scene provides no targets")
    return out


def save_scene(path, target_vertices=None, target_joints=None, gt_params=None) -> None:
    doc = {}
    if target_vertices is not None:
        doc["target_vertices"] = np.asarray(target_vertices).tolist()
    if target_joints is not None:
        doc["target_joints"] = np.asarray(target_joints).tolist()
    if gt_params is not None:
        doc["gt"] = {"beta": np.asarray(gt_params[0]).tolist(), "theta": np.asarray(gt_params[1]).tolist()}
    with open(path, "w") as fh:
        json.dump(doc, fh)
