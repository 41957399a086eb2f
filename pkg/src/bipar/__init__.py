"""Parametric 3D biped character modeling toolkit.

A linear (PCA) shape space over topologically consistent meshes, a skeletal
linear-blend-skinning pose model, a linear texture space, and numerical
recovery of parameters from geometric targets, verified against a built-in
synthetic character family.
"""

from bipar.mesh import (
    Mesh,
    MeshError,
    MeshParseError,
    TopologySignature,
    check_consistency,
    load_mesh,
    save_mesh,
    topology_signature,
)
from bipar.rig import (
    DegenerateInputError,
    EyeballFit,
    LandmarkSet,
    Skeleton,
    compute_rest_joints,
    default_skeleton,
    estimate_eye_constants,
    fit_socket_circle,
    joint_from_patches,
    reconstruct_eyeball,
)
from bipar.shape import ShapeModel, eval_shape, fit_pca, interpolate_params, project_shape
from bipar.pose import (
    JointTransforms,
    RetargetMap,
    apply_lbs,
    extract_joints,
    forward_kinematics,
    pose_mesh,
    retarget_pose,
    rodrigues,
)
from bipar.texture import (
    TextureImage,
    TextureModel,
    TexturedMesh,
    apply_texture,
    eval_texture,
    fit_texture_pca,
    texture_metrics,
)
from bipar.fitting import (
    FitConfig,
    FitDivergedError,
    FitProblem,
    FitResult,
    eval_metrics,
    fit,
    gradient,
    loss_para,
    loss_pose,
    loss_shape,
)
from bipar.family import FamilyConfig, FamilySample, generate_template, ground_truth_pose_scene, sample_family
from bipar.bundle import ModelBundle, load_bundle, rigged_eval, save_bundle

__version__ = "0.1.0"

__all__ = [
    "Mesh",
    "MeshError",
    "MeshParseError",
    "TopologySignature",
    "load_mesh",
    "save_mesh",
    "topology_signature",
    "check_consistency",
    "LandmarkSet",
    "Skeleton",
    "EyeballFit",
    "DegenerateInputError",
    "joint_from_patches",
    "compute_rest_joints",
    "fit_socket_circle",
    "reconstruct_eyeball",
    "estimate_eye_constants",
    "default_skeleton",
    "ShapeModel",
    "fit_pca",
    "eval_shape",
    "project_shape",
    "interpolate_params",
    "JointTransforms",
    "RetargetMap",
    "rodrigues",
    "forward_kinematics",
    "apply_lbs",
    "pose_mesh",
    "extract_joints",
    "retarget_pose",
    "TextureImage",
    "TextureModel",
    "TexturedMesh",
    "fit_texture_pca",
    "eval_texture",
    "apply_texture",
    "texture_metrics",
    "FitProblem",
    "FitResult",
    "FitConfig",
    "FitDivergedError",
    "loss_para",
    "loss_shape",
    "loss_pose",
    "gradient",
    "fit",
    "eval_metrics",
    "FamilyConfig",
    "FamilySample",
    "generate_template",
    "sample_family",
    "ground_truth_pose_scene",
    "ModelBundle",
    "save_bundle",
    "load_bundle",
    "rigged_eval",
]
