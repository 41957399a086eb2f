"""Command-line surface over the pipeline.

Subcommands: ``synth gen``, ``model fit``, ``model eval``, ``fit recover``,
``pose retarget``, ``eye fit``, ``serve``. All flags are also settable via
BIPAR_-prefixed environment variables. Failures exit nonzero with a
machine-readable JSON object on stderr.
"""

from __future__ import annotations

import json
import os
import sys

import click
import numpy as np

from bipar import family as fam
from bipar import report
from bipar.bundle import ModelBundle, load_bundle, load_scene, rigged_eval, save_bundle
from bipar.fitting import FitConfig, FitProblem, fit
from bipar.mesh import load_mesh, save_mesh
from bipar.pose import RetargetMap, load_pose_sequence, retarget_pose, save_pose_sequence
from bipar.rig import LandmarkSet, Skeleton, default_skeleton, fit_socket_circle, reconstruct_eyeball, estimate_eye_constants
from bipar.shape import fit_pca
from bipar.texture import fit_texture_pca, load_png, save_png

FAMILY_MANIFEST = "family.json"


@click.group()
def cli():
    """Parametric biped character modeling."""


# -- synth ------------------------------------------------------------------


@cli.group()
def synth():
    """Synthetic family generation."""


@synth.command("gen")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True), envvar="BIPAR_SYNTH_GEN_CONFIG")
@click.option("--out", "out_dir", required=True, type=click.Path(), envvar="BIPAR_SYNTH_GEN_OUT")
def synth_gen(config_path, out_dir):
    """Generate a family: manifest, rig files, per-sample OBJ and PNG."""
    with open(config_path) as fh:
        config = fam.FamilyConfig.from_json(json.load(fh))
    os.makedirs(out_dir, exist_ok=True)
    template, landmarks, skeleton = fam.generate_template(config)
    save_mesh(template, os.path.join(out_dir, "template.obj"))
    landmarks.save(os.path.join(out_dir, "landmarks.json"))
    skeleton.save(os.path.join(out_dir, "skeleton.json"))

    samples = fam.sample_family(config, config.sample_count)
    entries = []
    for s in samples:
        obj_name = f"sample_{s.index:04d}.obj"
        png_name = f"sample_{s.index:04d}.png"
        save_mesh(s.mesh, os.path.join(out_dir, obj_name))
        save_png(fam.sample_texture(config, s.z), os.path.join(out_dir, png_name))
        entries.append(
            {
                "index": s.index,
                "obj": obj_name,
                "png": png_name,
                "z": s.z.tolist(),
                "joints": s.joints.tolist(),
                "eyes": {
                    eye.patch[-1]: {
                        "socket_center": eye.socket_center.tolist(),
                        "socket_radius": eye.socket_radius,
                        "socket_normal": eye.socket_normal.tolist(),
                        "eye_radius": eye.eye_radius,
                        "depth": eye.depth,
                        "patch": eye.patch,
                    }
                    for eye in s.eyes
                },
            }
        )
    with open(os.path.join(out_dir, FAMILY_MANIFEST), "w") as fh:
        json.dump({"config": config.to_json(), "samples": entries}, fh)
    click.echo(f"wrote {len(samples)} samples to {out_dir}")


# -- model ------------------------------------------------------------------


@cli.group()
def model():
    """Shape/texture model fitting and evaluation."""


@model.command("fit")
@click.option("--data", "data_dir", required=True, type=click.Path(exists=True), envvar="BIPAR_MODEL_FIT_DATA")
@click.option("--shape-k", default=100, show_default=True, help="shape components", envvar="BIPAR_MODEL_FIT_SHAPE_K")
@click.option("--tex-k", default=64, show_default=True, help="texture components", envvar="BIPAR_MODEL_FIT_TEX_K")
@click.option("--out", "out_dir", required=True, type=click.Path(), envvar="BIPAR_MODEL_FIT_OUT")
@click.option("--report", "report_dir", default=None, type=click.Path(), envvar="BIPAR_MODEL_FIT_REPORT")
def model_fit(data_dir, shape_k, tex_k, out_dir, report_dir):
    """Fit PCA models over a generated family and assemble a bundle."""
    with open(os.path.join(data_dir, FAMILY_MANIFEST)) as fh:
        manifest = json.load(fh)
    landmarks = LandmarkSet.load(os.path.join(data_dir, "landmarks.json"))
    skeleton = Skeleton.load(os.path.join(data_dir, "skeleton.json"))

    meshes = [load_mesh(os.path.join(data_dir, e["obj"])) for e in manifest["samples"]]
    shape_model = fit_pca(meshes, shape_k)

    images = [load_png(os.path.join(data_dir, e["png"])) for e in manifest["samples"]]
    texture_model = fit_texture_pca(images, tex_k)

    triples = []
    for mesh, entry in zip(meshes, manifest["samples"]):
        for side in ("L", "R"):
            eye = entry["eyes"][side]
            ring = mesh.vertices[landmarks.patches[eye["patch"]]]
            _, r_s, _ = fit_socket_circle(ring)
            triples.append((eye["eye_radius"], eye["depth"], r_s))
    c1, c2 = estimate_eye_constants(triples)

    bundle = ModelBundle(
        shape_model=shape_model,
        skeleton=skeleton,
        landmarks=landmarks,
        texture_model=texture_model,
        eye_c1=c1,
        eye_c2=c2,
    )
    save_bundle(bundle, out_dir)
    if report_dir:
        report.explained_variance_report(shape_model.singular_values, report_dir, stem="shape_variance")
        report.explained_variance_report(texture_model.singular_values, report_dir, stem="texture_variance")
    click.echo(f"bundle written to {out_dir} (c1={c1:.6g}, c2={c2:.6g})")


def _load_vector(path, expected: int, name: str) -> np.ndarray | None:
    if path is None:
        return None
    with open(path) as fh:
        doc = json.load(fh)
    if isinstance(doc, dict):
        doc = doc[name]
    vec = np.asarray(doc, dtype=np.float64).ravel()
    if len(vec) != expected:
        raise ValueError(f"{path}: expected {expected} values for {name}, got {len(vec)}")
    return vec


@model.command("eval")
@click.option("--bundle", "bundle_dir", required=True, type=click.Path(exists=True), envvar="BIPAR_MODEL_EVAL_BUNDLE")
@click.option("--beta", "beta_path", default=None, type=click.Path(exists=True), envvar="BIPAR_MODEL_EVAL_BETA")
@click.option("--pose", "pose_path", default=None, type=click.Path(exists=True), envvar="BIPAR_MODEL_EVAL_POSE")
@click.option("--tex", "tex_path", default=None, type=click.Path(exists=True), envvar="BIPAR_MODEL_EVAL_TEX")
@click.option("--out", "out_spec", required=True, help="mesh.obj or mesh.obj,tex.png", envvar="BIPAR_MODEL_EVAL_OUT")
def model_eval(bundle_dir, beta_path, pose_path, tex_path, out_spec):
    """Evaluate the full pipeline at the given parameter vectors."""
    bundle = load_bundle(bundle_dir)
    beta = _load_vector(beta_path, bundle.shape_model.n_components, "beta")
    theta = _load_vector(pose_path, bundle.pose_dim, "theta")
    tex = _load_vector(tex_path, bundle.texture_model.n_components, "tex")
    mesh, _joints, image = rigged_eval(bundle, beta, theta, tex)
    paths = out_spec.split(",")
    save_mesh(mesh, paths[0])
    if len(paths) > 1:
        save_png(image, paths[1])
    click.echo(f"wrote {', '.join(paths)}")


# -- fit ----------------------------------------------------------------------


@cli.group(name="fit")
def fit_group():
    """Parameter recovery."""


@fit_group.command("recover")
@click.option("--bundle", "bundle_dir", required=True, type=click.Path(exists=True), envvar="BIPAR_FIT_RECOVER_BUNDLE")
@click.option("--target", "target_path", required=True, type=click.Path(exists=True), envvar="BIPAR_FIT_RECOVER_TARGET")
@click.option("--config", "config_path", default=None, type=click.Path(exists=True), envvar="BIPAR_FIT_RECOVER_CONFIG")
@click.option("--out", "out_path", required=True, type=click.Path(), envvar="BIPAR_FIT_RECOVER_OUT")
@click.option("--report", "report_dir", default=None, type=click.Path(), envvar="BIPAR_FIT_RECOVER_REPORT")
def fit_recover(bundle_dir, target_path, config_path, out_path, report_dir):
    """Recover shape and pose parameters from a target scene."""
    bundle = load_bundle(bundle_dir)
    scene = load_scene(target_path)
    config = FitConfig()
    if config_path:
        with open(config_path) as fh:
            config = FitConfig.from_json(json.load(fh))
    problem = FitProblem(
        shape_model=bundle.shape_model,
        skeleton=bundle.skeleton,
        landmarks=bundle.landmarks,
        target_vertices=scene.get("target_vertices"),
        target_joints=scene.get("target_joints"),
        gt_params=scene.get("gt_params"),
        lambda_s=config.lambda_s,
        lambda_p=config.lambda_p,
    )
    result = fit(problem, config=config)
    result.save(out_path)
    if report_dir:
        report.convergence_report(result.history, report_dir)
    click.echo(
        f"converged={result.converged} iterations={result.iterations} "
        f"L_shape={result.loss_shape:.3e} L_pose={result.loss_pose:.3e}"
    )


# -- pose ---------------------------------------------------------------------


@cli.group(name="pose")
def pose_group():
    """Pose sequence utilities."""


@pose_group.command("retarget")
@click.option("--map", "map_path", required=True, type=click.Path(exists=True), envvar="BIPAR_POSE_RETARGET_MAP")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True), envvar="BIPAR_POSE_RETARGET_IN")
@click.option("--out", "out_path", required=True, type=click.Path(), envvar="BIPAR_POSE_RETARGET_OUT")
def pose_retarget(map_path, in_path, out_path):
    """Retarget a pose sequence through a joint-name mapping."""
    with open(map_path) as fh:
        doc = json.load(fh)
    mapping = RetargetMap.from_json(doc)
    default_names = list(default_skeleton().joint_names)
    src_names = doc.get("src_joints", default_names)
    dst_names = doc.get("dst_joints", default_names)
    frames, fps = load_pose_sequence(in_path)
    out = np.stack([retarget_pose(f, mapping, src_names, dst_names) for f in frames])
    save_pose_sequence(out, out_path, fps=fps)
    click.echo(f"retargeted {len(frames)} frames to {out_path}")


# -- eye ----------------------------------------------------------------------


@cli.group(name="eye")
def eye_group():
    """Eye socket fitting."""


@eye_group.command("fit")
@click.option("--mesh", "mesh_path", required=True, type=click.Path(exists=True), envvar="BIPAR_EYE_FIT_MESH")
@click.option("--landmarks", "landmarks_path", required=True, type=click.Path(exists=True), envvar="BIPAR_EYE_FIT_LANDMARKS")
@click.option("--c1", required=True, type=float, envvar="BIPAR_EYE_FIT_C1")
@click.option("--c2", required=True, type=float, envvar="BIPAR_EYE_FIT_C2")
@click.option("--out", "out_path", required=True, type=click.Path(), envvar="BIPAR_EYE_FIT_OUT")
def eye_fit(mesh_path, landmarks_path, c1, c2, out_path):
    """Fit socket circles on eye patches and reconstruct the eyeballs."""
    mesh = load_mesh(mesh_path)
    lm = LandmarkSet.load(landmarks_path)
    out = {}
    for name, idx in lm.patches.items():
        if not name.startswith("eye_socket"):
            continue
        center, radius, normal = fit_socket_circle(mesh.vertices[idx])
        out[name] = reconstruct_eyeball(center, radius, normal, c1, c2).to_json()
    if not out:
        raise ValueError("no eye_socket patches in the landmark set")
    with open(out_path, "w") as fh:
        json.dump(out, fh)
    click.echo(f"wrote {len(out)} eye fits to {out_path}")


# -- serve ----------------------------------------------------------------------


@cli.command("serve")
@click.option("--bundle", "bundle_dir", required=True, type=click.Path(exists=True), envvar="BIPAR_SERVE_BUNDLE")
@click.option("--host", default="127.0.0.1", show_default=True, envvar="BIPAR_SERVE_HOST")
@click.option("--port", default=8080, show_default=True, type=int, envvar="BIPAR_SERVE_PORT")
@click.option("--fit-workers", default=2, show_default=True, type=int, envvar="BIPAR_SERVE_FIT_WORKERS")
def serve_cmd(bundle_dir, host, port, fit_workers):
    """Serve the bundle over HTTP."""
    from bipar.server import serve

    bundle = load_bundle(bundle_dir)
    click.echo(f"serving {bundle_dir} on {host}:{port}")
    serve(bundle, host=host, port=port, fit_workers=fit_workers)


def main(argv=None) -> None:
    try:
        cli.main(args=argv, standalone_mode=False, auto_envvar_prefix="BIPAR")
    except click.exceptions.Abort:
        print(json.dumps({"error": "Aborted", "message": "aborted"}), file=sys.stderr)
        sys.exit(1)
    except click.ClickException as exc:
        print(json.dumps({"error": "UsageError", "message": exc.format_message()}), file=sys.stderr)
        sys.exit(exc.exit_code or 2)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        sys.exit(1)


if __name__ == "__main__":
    main()
