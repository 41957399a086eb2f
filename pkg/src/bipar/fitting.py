"""Recovery of shape and pose parameters from geometric targets.

The loss combines a smoothed-L1 supervision term on parameters with squared
vertex- and joint-distance terms, minimized either by damped Gauss-Newton
(default) or by gradient descent with a backtracking Armijo line search.
Gradients are analytic through the shape basis, landmark joint localization,
the kinematic chain, and linear blend skinning (reverse-mode for the
gradient, forward-mode for the Gauss-Newton Jacobian); raw (unsmoothed,
unsquared) loss values are what gets reported.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from bipar.mesh import Mesh
from bipar.pose import (
    extract_joints,
    forward_kinematics,
    pose_mesh,
    rodrigues,
    rodrigues_jacobian,
)
from bipar.rig import LandmarkSet, Skeleton, compute_rest_joints
from bipar.shape import ShapeModel, eval_shape

HUBER_DELTA = 1e-4


class FitDivergedError(RuntimeError):
    """Loss or gradient became non-finite; carries the last good iterate."""

    def __init__(self, message: str, beta: np.ndarray, theta: np.ndarray):
        super().__init__(message)
        self.beta = beta
        self.theta = theta


def _huber(x: np.ndarray, delta: float = HUBER_DELTA) -> float:
    ax = np.abs(x)
    quad = ax <= delta
    return float(np.sum(np.where(quad, 0.5 * x * x / delta, ax - 0.5 * delta)))


def _huber_grad(x: np.ndarray, delta: float = HUBER_DELTA) -> np.ndarray:
    return np.clip(x / delta, -1.0, 1.0)


# ---------------------------------------------------------------------------
# standalone supervised losses (exact formulas, fixed skeleton)


def loss_para(pred: tuple, gt: tuple) -> float:
    """L1 distance over the concatenated (beta, theta) vectors."""
    pb, pt = (np.asarray(v, dtype=np.float64).ravel() for v in pred)
    gb, gt_ = (np.asarray(v, dtype=np.float64).ravel() for v in gt)
    if pb.shape != gb.shape or pt.shape != gt_.shape:
        raise ValueError("parameter dimension mismatch")
    return float(np.abs(pb - gb).sum() + np.abs(pt - gt_).sum())


def _rigged(model: ShapeModel, beta, sk: Skeleton, landmarks: LandmarkSet | None) -> tuple[Mesh, Skeleton]:
    """Shaped mesh plus the skeleton to pose it with: rest joints come from
    the mesh's landmark patches when a landmark set is supplied."""
    shaped = eval_shape(model, beta)
    if landmarks is not None:
        sk = compute_rest_joints(shaped, landmarks, sk)
    return shaped, sk


def loss_shape(beta_pred, beta_gt, theta_gt, model: ShapeModel, sk: Skeleton, landmarks: LandmarkSet | None = None) -> float:
    """Euclidean norm over all vertex coordinates of the two meshes posed
    with the ground-truth pose (so the pose cannot leak into the error)."""
    mesh_a, sk_a = _rigged(model, beta_pred, sk, landmarks)
    mesh_b, sk_b = _rigged(model, beta_gt, sk, landmarks)
    a = pose_mesh(mesh_a, sk_a, theta_gt)
    b = pose_mesh(mesh_b, sk_b, theta_gt)
    return float(np.linalg.norm(a.vertices - b.vertices))


def loss_pose(theta_pred, theta_gt, beta_gt, model: ShapeModel, sk: Skeleton, landmarks: LandmarkSet | None = None) -> float:
    """Euclidean norm over posed-joint position differences at the
    ground-truth shape."""
    _, sk_gt = _rigged(model, beta_gt, sk, landmarks)
    ja = extract_joints(forward_kinematics(sk_gt, theta_pred), sk_gt.rest_joints)
    jb = extract_joints(forward_kinematics(sk_gt, theta_gt), sk_gt.rest_joints)
    return float(np.linalg.norm(ja - jb))


# ---------------------------------------------------------------------------
# problem definition and the differentiable rigged forward model


@dataclass(frozen=True)
class FitProblem:
    """Targets and weights for one recovery problem.

    The forward model re-localizes the rest joints from the shaped mesh's
    landmark patches before posing (the skeleton's own rest_joints are not
    used), which is why the landmark set rides along.
    """

    shape_model: ShapeModel
    skeleton: Skeleton
    landmarks: LandmarkSet
    target_vertices: np.ndarray | None = None
    target_joints: np.ndarray | None = None
    gt_params: tuple | None = None
    lambda_s: float = 1.0
    lambda_p: float = 1.0

    def __post_init__(self):
        if self.target_vertices is None and self.target_joints is None and self.gt_params is None:
            raise ValueError("at least one target (vertices, joints, or ground-truth params) is required")
        if self.lambda_s < 0 or self.lambda_p < 0:
            raise ValueError("loss weights must be nonnegative")
        if self.skeleton.weights is None:
            raise ValueError("skeleton needs skinning weights")
        n = self.shape_model.vertex_count
        if self.skeleton.weights.shape[0] != n:
            raise ValueError("skeleton weights do not cover the shape model's vertices")
        if self.target_vertices is not None:
            tv = np.asarray(self.target_vertices, dtype=np.float64)
            if tv.shape != (n, 3):
                raise ValueError(f"target vertices must be ({n}, 3), got {tv.shape}")
            object.__setattr__(self, "target_vertices", tv)
        if self.target_joints is not None:
            tj = np.asarray(self.target_joints, dtype=np.float64)
            if tj.shape != (self.skeleton.num_joints, 3):
                raise ValueError(f"target joints must be ({self.skeleton.num_joints}, 3), got {tj.shape}")
            object.__setattr__(self, "target_joints", tj)
        self.landmarks.validate_for(n)
        unions = tuple(
            np.concatenate([self.landmarks.patches[a], self.landmarks.patches[b]])
            for a, b in self.skeleton.joint_patches
        )
        object.__setattr__(self, "_unions", unions)
        # per-joint vertex support (weights are near-rigid, so this is sparse)
        support = tuple(np.flatnonzero(self.skeleton.weights[:, k] > 0.0) for k in range(self.skeleton.num_joints))
        object.__setattr__(self, "_joint_support", support)

    @property
    def beta_dim(self) -> int:
        return self.shape_model.n_components

    @property
    def theta_dim(self) -> int:
        return 3 * self.skeleton.num_joints


class _Trace:
    """Intermediates of one rigged forward pass, kept for the backward pass."""

    __slots__ = (
        "v0", "joints", "imin", "imax", "rot", "rot_jac", "offsets",
        "g_rot", "g_tr", "rest_tr", "gp_rot", "gp_tr", "blend_rot", "verts", "posed_joints",
    )


def _rig_forward(problem: FitProblem, beta: np.ndarray, theta: np.ndarray, need_grad: bool) -> _Trace:
    sk = problem.skeleton
    K = sk.num_joints
    tr = _Trace()
    flat = problem.shape_model.basis.mean + beta @ problem.shape_model.components
    tr.v0 = flat.reshape(-1, 3)

    # rest joints: per-coordinate bounding-box centers of the patch unions
    tr.joints = np.empty((K, 3))
    tr.imin = np.empty((K, 3), dtype=np.int64)
    tr.imax = np.empty((K, 3), dtype=np.int64)
    for k, union in enumerate(problem._unions):
        pts = tr.v0[union]
        lo, hi = np.argmin(pts, axis=0), np.argmax(pts, axis=0)
        tr.imin[k] = union[lo]
        tr.imax[k] = union[hi]
        cols = np.arange(3)
        tr.joints[k] = 0.5 * (pts[lo, cols] + pts[hi, cols])

    tr.rot = np.stack([rodrigues(theta[3 * k : 3 * k + 3]) for k in range(K)])
    tr.rot_jac = np.stack([rodrigues_jacobian(theta[3 * k : 3 * k + 3]) for k in range(K)]) if need_grad else None

    parents = sk.parents
    tr.offsets = np.empty((K, 3))
    tr.g_rot = np.empty((K, 3, 3))
    tr.g_tr = np.empty((K, 3))
    tr.rest_tr = np.empty((K, 3))
    for k in range(K):
        p = parents[k]
        off = tr.joints[k] - tr.joints[p] if p >= 0 else tr.joints[k]
        tr.offsets[k] = off
        if p >= 0:
            tr.g_rot[k] = tr.g_rot[p] @ tr.rot[k]
            tr.g_tr[k] = tr.g_rot[p] @ off + tr.g_tr[p]
            tr.rest_tr[k] = tr.rest_tr[p] + off
        else:
            tr.g_rot[k] = tr.rot[k]
            tr.g_tr[k] = off
            tr.rest_tr[k] = off

    tr.gp_rot = tr.g_rot
    tr.gp_tr = tr.g_tr - np.einsum("kij,kj->ki", tr.g_rot, tr.rest_tr)

    w = sk.weights
    tr.blend_rot = np.tensordot(w, tr.gp_rot, axes=(1, 0))  # (N, 3, 3)
    blend_tr = w @ tr.gp_tr
    tr.verts = np.einsum("nij,nj->ni", tr.blend_rot, tr.v0) + blend_tr
    tr.posed_joints = np.einsum("kij,kj->ki", tr.gp_rot, tr.joints) + tr.gp_tr
    return tr


def _rig_backward(problem: FitProblem, tr: _Trace, g_verts: np.ndarray, g_joints: np.ndarray) -> tuple:
    sk = problem.skeleton
    K = sk.num_joints
    w = sk.weights
    parents = sk.parents

    # posed joints: P_k = GpR_k J_k + Gpt_k
    g_gp_rot = np.einsum("ki,kj->kij", g_joints, tr.joints)
    g_gp_tr = g_joints.copy()
    g_j = np.einsum("kji,kj->ki", tr.gp_rot, g_joints)  # GpR^T g

    # skinning: v_i = sum_k w_ik (GpR_k v0_i + Gpt_k)
    g_gp_rot += np.einsum("nk,ni,nj->kij", w, g_verts, tr.v0)
    g_gp_tr += w.T @ g_verts
    g_v0 = np.einsum("nji,nj->ni", tr.blend_rot, g_verts)

    # rest-pose removal: GpR = GR, Gpt = Gt - GR @ rest_tr
    g_g_rot = g_gp_rot - np.einsum("ki,kj->kij", g_gp_tr, tr.rest_tr)
    g_g_tr = g_gp_tr
    g_rest_tr = -np.einsum("kji,kj->ki", tr.g_rot, g_gp_tr)

    # kinematic chains, children before parents
    g_rot_local = np.empty((K, 3, 3))
    g_off = np.zeros((K, 3))
    for k in range(K - 1, -1, -1):
        p = parents[k]
        if p >= 0:
            g_g_rot[p] += g_g_rot[k] @ tr.rot[k].T + np.einsum("i,j->ij", g_g_tr[k], tr.offsets[k])
            g_g_tr[p] += g_g_tr[k]
            g_rot_local[k] = tr.g_rot[p].T @ g_g_rot[k]
            g_off[k] += tr.g_rot[p].T @ g_g_tr[k]
            g_rest_tr[p] += g_rest_tr[k]
        else:
            g_rot_local[k] = g_g_rot[k]
            g_off[k] += g_g_tr[k]
        g_off[k] += g_rest_tr[k]

    # offsets -> joints
    for k in range(K):
        p = parents[k]
        g_j[k] += g_off[k]
        if p >= 0:
            g_j[p] -= g_off[k]

    # joints -> shaped vertices (bounding-box center linearization)
    cols = np.arange(3)
    for k in range(K):
        np.add.at(g_v0, (tr.imin[k], cols), 0.5 * g_j[k])
        np.add.at(g_v0, (tr.imax[k], cols), 0.5 * g_j[k])

    g_theta = np.einsum("kmij,kij->km", tr.rot_jac, g_rot_local).ravel()
    g_beta = problem.shape_model.components @ g_v0.ravel()
    return g_beta, g_theta


def _rig_jacobian(problem: FitProblem, tr: _Trace) -> tuple[np.ndarray, np.ndarray]:
    """Forward-mode Jacobians of the posed vertices and joints w.r.t. the
    full parameter vector [beta, theta]: returns (dV, dP) with shapes
    (P, N, 3) and (P, K, 3). Exploits the block structure: rotations do not
    depend on beta and the shaped vertices do not depend on theta."""
    sk = problem.skeleton
    K = sk.num_joints
    parents = sk.parents
    w = sk.weights
    n_beta = problem.beta_dim
    n_verts = problem.shape_model.vertex_count

    # ---- beta block ----
    d_v0 = problem.shape_model.components.reshape(n_beta, n_verts, 3)
    d_j = np.empty((n_beta, K, 3))
    cols = np.arange(3)
    for k in range(K):
        d_j[:, k] = 0.5 * (d_v0[:, tr.imin[k], cols] + d_v0[:, tr.imax[k], cols])
    d_off_b = np.empty_like(d_j)
    d_gt_b = np.empty_like(d_j)
    d_rest_b = np.empty_like(d_j)
    for k in range(K):
        p = parents[k]
        d_off_b[:, k] = d_j[:, k] - d_j[:, p] if p >= 0 else d_j[:, k]
        if p >= 0:
            d_gt_b[:, k] = d_off_b[:, k] @ tr.g_rot[p].T + d_gt_b[:, p]
            d_rest_b[:, k] = d_rest_b[:, p] + d_off_b[:, k]
        else:
            d_gt_b[:, k] = d_off_b[:, k]
            d_rest_b[:, k] = d_off_b[:, k]
    d_gpt_b = d_gt_b - np.einsum("kij,pkj->pki", tr.g_rot, d_rest_b)

    dv_b = np.einsum("nij,pnj->pni", tr.blend_rot, d_v0)
    dv_b += np.einsum("nk,pki->pni", w, d_gpt_b)
    dp_b = np.einsum("kij,pkj->pki", tr.gp_rot, d_j) + d_gpt_b

    # ---- theta block ----
    n_theta = 3 * K
    d_rot = np.zeros((n_theta, K, 3, 3))
    for k in range(K):
        d_rot[3 * k : 3 * k + 3, k] = tr.rot_jac[k]
    d_gr = np.zeros((n_theta, K, 3, 3))
    d_gt_t = np.zeros((n_theta, K, 3))
    for k in range(K):
        p = parents[k]
        if p >= 0:
            d_gr[:, k] = np.einsum("pij,jl->pil", d_gr[:, p], tr.rot[k]) + np.einsum(
                "ij,pjl->pil", tr.g_rot[p], d_rot[:, k]
            )
            d_gt_t[:, k] = np.einsum("pij,j->pi", d_gr[:, p], tr.offsets[k]) + d_gt_t[:, p]
        else:
            d_gr[:, k] = d_rot[:, k]
    d_gpt_t = d_gt_t - np.einsum("pkij,kj->pki", d_gr, tr.rest_tr)

    dv_t = np.zeros((n_theta, n_verts, 3))
    for k in range(K):
        idx = problem._joint_support[k]
        if len(idx) == 0:
            continue
        contrib = np.einsum("pij,mj->pmi", d_gr[:, k], tr.v0[idx]) + d_gpt_t[:, k][:, None, :]
        dv_t[:, idx] += w[idx, k][None, :, None] * contrib
    dp_t = np.einsum("pkij,kj->pki", d_gr, tr.joints) + d_gpt_t

    return np.concatenate([dv_b, dv_t]), np.concatenate([dp_b, dp_t])


def _objective(problem: FitProblem, beta: np.ndarray, theta: np.ndarray, need_grad: bool):
    """(smoothed total, reported terms, trace) at the given parameters."""
    tr = _rig_forward(problem, beta, theta, need_grad)
    total = 0.0
    terms = {"L_para": 0.0, "L_shape": 0.0, "L_pose": 0.0}
    if problem.gt_params is not None:
        gb, gt_ = problem.gt_params
        db = beta - np.asarray(gb, dtype=np.float64).ravel()
        dt = theta - np.asarray(gt_, dtype=np.float64).ravel()
        total += _huber(db) + _huber(dt)
        terms["L_para"] = float(np.abs(db).sum() + np.abs(dt).sum())
    if problem.target_vertices is not None:
        rv = tr.verts - problem.target_vertices
        total += problem.lambda_s * 0.5 * float(np.sum(rv * rv))
        terms["L_shape"] = float(np.linalg.norm(rv))
    if problem.target_joints is not None:
        rj = tr.posed_joints - problem.target_joints
        total += problem.lambda_p * 0.5 * float(np.sum(rj * rj))
        terms["L_pose"] = float(np.linalg.norm(rj))
    return total, terms, tr


def loss_value(problem: FitProblem, beta: np.ndarray, theta: np.ndarray) -> tuple[float, dict]:
    """Smoothed total loss and the raw reported terms."""
    beta = np.asarray(beta, dtype=np.float64).ravel()
    theta = np.asarray(theta, dtype=np.float64).ravel()
    total, terms, _ = _objective(problem, beta, theta, need_grad=False)
    return total, terms


def gradient(problem: FitProblem, at: tuple) -> tuple[np.ndarray, np.ndarray]:
    """Analytic gradient of the smoothed total loss at (beta, theta)."""
    beta = np.asarray(at[0], dtype=np.float64).ravel()
    theta = np.asarray(at[1], dtype=np.float64).ravel()
    if beta.shape != (problem.beta_dim,) or theta.shape != (problem.theta_dim,):
        raise ValueError("parameter dimensions do not match the problem")
    _, _, tr = _objective(problem, beta, theta, need_grad=True)
    g_verts = np.zeros_like(tr.verts)
    g_joints = np.zeros_like(tr.posed_joints)
    if problem.target_vertices is not None:
        g_verts = problem.lambda_s * (tr.verts - problem.target_vertices)
    if problem.target_joints is not None:
        g_joints = problem.lambda_p * (tr.posed_joints - problem.target_joints)
    g_beta, g_theta = _rig_backward(problem, tr, g_verts, g_joints)
    if problem.gt_params is not None:
        gb, gt_ = problem.gt_params
        g_beta = g_beta + _huber_grad(beta - np.asarray(gb, dtype=np.float64).ravel())
        g_theta = g_theta + _huber_grad(theta - np.asarray(gt_, dtype=np.float64).ravel())
    return g_beta, g_theta


# ---------------------------------------------------------------------------
# optimizer


@dataclass(frozen=True)
class FitConfig:
    max_iters: int = 400
    grad_tol: float = 1e-8
    step_init: float = 1.0
    lambda_s: float = 1.0
    lambda_p: float = 1.0
    seed: int = 0
    method: str = "gauss_newton"  # or "gd"

    def __post_init__(self):
        if self.method not in ("gauss_newton", "gd"):
            raise ValueError(f"unknown method {self.method!r}")

    def to_json(self) -> dict:
        return {
            "max_iters": self.max_iters,
            "grad_tol": self.grad_tol,
            "step_init": self.step_init,
            "lambda_s": self.lambda_s,
            "lambda_p": self.lambda_p,
            "seed": self.seed,
            "method": self.method,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "FitConfig":
        return cls(**doc)


@dataclass(frozen=True)
class FitResult:
    beta: np.ndarray
    theta: np.ndarray
    loss_para: float
    loss_shape: float
    loss_pose: float
    total: float
    iterations: int
    converged: bool
    history: tuple = field(default=(), repr=False)

    def to_json(self) -> dict:
        return {
            "beta": self.beta.tolist(),
            "theta": self.theta.tolist(),
            "loss_para": self.loss_para,
            "loss_shape": self.loss_shape,
            "loss_pose": self.loss_pose,
            "total": self.total,
            "iterations": self.iterations,
            "converged": self.converged,
        }

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh)


def _run_gd(problem: FitProblem, x: np.ndarray, f0: float, terms: dict, g: np.ndarray, config: FitConfig):
    """Gradient descent with Armijo backtracking; the trial step uses a
    Barzilai-Borwein estimate once a previous step exists."""
    nb = problem.beta_dim
    history = [f0]
    step = config.step_init
    prev_x = prev_g = None
    iters = 0
    converged = float(np.linalg.norm(g)) <= config.grad_tol

    while not converged and iters < config.max_iters:
        gnorm2 = float(g @ g)
        if prev_x is not None:
            s = x - prev_x
            y = g - prev_g
            sy = float(s @ y)
            step = float(s @ s) / sy if sy > 1e-30 else step * 2.0
        step = min(max(step, 1e-12), 1e6)

        accepted = False
        alpha = step
        for _ in range(60):
            cand = x - alpha * g
            f_cand, cand_terms = loss_value(problem, cand[:nb], cand[nb:])
            if np.isfinite(f_cand) and f_cand <= f0 - 1e-4 * alpha * gnorm2:
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            break  # line search stalled at numerical precision

        prev_x, prev_g = x, g
        x, f0, terms = cand, f_cand, cand_terms
        gb, gt_ = gradient(problem, (x[:nb], x[nb:]))
        g = np.concatenate([gb, gt_])
        if not np.all(np.isfinite(g)):
            raise FitDivergedError("gradient became non-finite", x[:nb].copy(), x[nb:].copy())
        history.append(f0)
        iters += 1
        converged = float(np.linalg.norm(g)) <= config.grad_tol
    return x, f0, terms, iters, converged, history


def _run_gauss_newton(problem: FitProblem, x: np.ndarray, f0: float, terms: dict, g: np.ndarray, config: FitConfig):
    """Levenberg-Marquardt damped Gauss-Newton on the squared geometric
    residuals (the smoothed parameter term contributes its gradient and
    diagonal curvature). Steps are accepted only when the smoothed loss
    decreases, so the trajectory is monotone."""
    nb = problem.beta_dim
    sqrt_ls, sqrt_lp = np.sqrt(problem.lambda_s), np.sqrt(problem.lambda_p)
    history = [f0]
    iters = 0
    damping = 1e-6
    converged = float(np.linalg.norm(g)) <= config.grad_tol

    while not converged and iters < config.max_iters:
        _, _, tr = _objective(problem, x[:nb], x[nb:], need_grad=True)
        jac_blocks = []
        res_blocks = []
        if problem.target_vertices is not None or problem.target_joints is not None:
            dv, dp = _rig_jacobian(problem, tr)
            p_dim = dv.shape[0]
            if problem.target_vertices is not None:
                jac_blocks.append(sqrt_ls * dv.reshape(p_dim, -1))
                res_blocks.append(sqrt_ls * (tr.verts - problem.target_vertices).ravel())
            if problem.target_joints is not None:
                jac_blocks.append(sqrt_lp * dp.reshape(p_dim, -1))
                res_blocks.append(sqrt_lp * (tr.posed_joints - problem.target_joints).ravel())
        if jac_blocks:
            jmat = np.concatenate(jac_blocks, axis=1)
            res = np.concatenate(res_blocks)
            normal = jmat @ jmat.T
            grad_total = jmat @ res
        else:
            normal = np.zeros((len(x), len(x)))
            grad_total = np.zeros(len(x))
        if problem.gt_params is not None:
            gt_vec = np.concatenate([np.asarray(v, dtype=np.float64).ravel() for v in problem.gt_params])
            dx = x - gt_vec
            grad_total += _huber_grad(dx)
            curv = np.where(np.abs(dx) <= HUBER_DELTA, 1.0 / HUBER_DELTA, 0.0)
            normal = normal + np.diag(curv)

        gnorm = float(np.linalg.norm(grad_total))
        if gnorm <= config.grad_tol:
            converged = True
            break

        diag = np.diag(normal).copy()
        diag[diag <= 0] = 1.0
        accepted = False
        for _ in range(40):
            try:
                step = np.linalg.solve(normal + damping * np.diag(diag), -grad_total)
            except np.linalg.LinAlgError:
                damping *= 10.0
                continue
            cand = x + step
            f_cand, cand_terms = loss_value(problem, cand[:nb], cand[nb:])
            if np.isfinite(f_cand) and f_cand < f0:
                accepted = True
                break
            damping *= 10.0
            if damping > 1e14:
                break
        if not accepted:
            break

        x, f0, terms = cand, f_cand, cand_terms
        damping = max(damping * 0.3, 1e-12)
        history.append(f0)
        iters += 1
        gb, gt_ = gradient(problem, (x[:nb], x[nb:]))
        g = np.concatenate([gb, gt_])
        if not np.all(np.isfinite(g)):
            raise FitDivergedError("gradient became non-finite", x[:nb].copy(), x[nb:].copy())
        converged = float(np.linalg.norm(g)) <= config.grad_tol
    return x, f0, terms, iters, converged, history


def fit(problem: FitProblem, init: tuple | None = None, config: FitConfig | None = None) -> FitResult:
    """Minimize the smoothed total loss from the given initial parameters.

    The default method is damped Gauss-Newton on the squared losses;
    ``method="gd"`` selects gradient descent with backtracking line search.
    Both only ever accept steps that decrease the smoothed loss and stop at
    gradient norm <= grad_tol or max_iters.
    """
    config = config or FitConfig()
    if init is None:
        init = (np.zeros(problem.beta_dim), np.zeros(problem.theta_dim))
    beta = np.asarray(init[0], dtype=np.float64).ravel().copy()
    theta = np.asarray(init[1], dtype=np.float64).ravel().copy()
    if beta.shape != (problem.beta_dim,) or theta.shape != (problem.theta_dim,):
        raise ValueError("init dimensions do not match the problem")

    x = np.concatenate([beta, theta])
    nb = problem.beta_dim
    f0, terms = loss_value(problem, beta, theta)
    if not np.isfinite(f0):
        raise FitDivergedError("loss is non-finite at the initial point", beta, theta)
    gb, gt_ = gradient(problem, (beta, theta))
    g = np.concatenate([gb, gt_])
    if not np.all(np.isfinite(g)):
        raise FitDivergedError("gradient is non-finite at the initial point", beta, theta)

    runner = _run_gauss_newton if config.method == "gauss_newton" else _run_gd
    x, f0, terms, iters, converged, history = runner(problem, x, f0, terms, g, config)

    return FitResult(
        beta=x[:nb].copy(),
        theta=x[nb:].copy(),
        loss_para=terms["L_para"],
        loss_shape=terms["L_shape"],
        loss_pose=terms["L_pose"],
        total=f0,
        iterations=iters,
        converged=converged,
        history=tuple(history),
    )


# ---------------------------------------------------------------------------
# evaluation metrics


def procrustes_align(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Optimal similarity transform (rotation, scale, translation) of point
    set x onto y: closed form via SVD of the cross-covariance (Umeyama)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    mx, my = x.mean(axis=0), y.mean(axis=0)
    xc, yc = x - mx, y - my
    cov = yc.T @ xc / len(x)
    u, d, vt = np.linalg.svd(cov)
    s = np.eye(3)
    if np.linalg.det(u @ vt) < 0:
        s[2, 2] = -1.0
    rot = u @ s @ vt
    var_x = float(np.mean(np.sum(xc * xc, axis=1)))
    scale = float(np.trace(np.diag(d) @ s)) / var_x if var_x > 0 else 1.0
    return scale * xc @ rot.T + my


def eval_metrics(pred_mesh, gt_mesh, pred_joints: np.ndarray, gt_joints: np.ndarray) -> tuple[float, float, float]:
    """(MPVE, MPJPE, PA-MPJPE): mean per-vertex error, mean per-joint error,
    and the joint error after optimal similarity alignment."""
    pv = pred_mesh.vertices if isinstance(pred_mesh, Mesh) else np.asarray(pred_mesh, dtype=np.float64)
    gv = gt_mesh.vertices if isinstance(gt_mesh, Mesh) else np.asarray(gt_mesh, dtype=np.float64)
    pj = np.asarray(pred_joints, dtype=np.float64)
    gj = np.asarray(gt_joints, dtype=np.float64)
    if pv.shape != gv.shape:
        raise ValueError(f"vertex count mismatch: {pv.shape} vs {gv.shape}")
    if pj.shape != gj.shape:
        raise ValueError(f"joint count mismatch: {pj.shape} vs {gj.shape}")
    mpve = float(np.mean(np.linalg.norm(pv - gv, axis=1)))
    mpjpe = float(np.mean(np.linalg.norm(pj - gj, axis=1)))
    aligned = procrustes_align(pj, gj)
    pa = float(np.mean(np.linalg.norm(aligned - gj, axis=1)))
    return mpve, mpjpe, pa
