"""Real-time arm motion control.

Each frame solves one box-bounded minimization whose objective is the
sum of up to three terms: a pose-tracking cost (unsquared position
distance plus a quaternion geodesic angle), a singularity penalty that
activates only when the smallest positional singular value of the
Jacobian drops below a trigger, and the sphere-model self-collision
cost. Solves are warm-started from the previous frame so a tracking
stream stays smooth and cheap.

The singularity penalty's gradient is computed by central finite
differences of the manipulability index (its analytic derivative needs
second-order kinematics); all other gradients are analytic.
"""

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import minimize

from . import collision as col
from . import kinematics as kin
from . import quat
from .errors import SolverError

ARCCOS_CLAMP = 1.0 - 1e-7
SINGULARITY_FD_STEP = 1e-6


@dataclass
class ArmControlProblem:
    """Objective configuration for one arm."""

    model: kin.KinematicModel
    ee_frame: str
    sphere_model: Optional[col.SphereModel] = None
    position_weight: float = 1.0  # beta_pos, 1/m
    rotation_weight: float = 0.1  # beta_rot, 1/rad
    singularity_trigger: float = 0.05  # s_low
    singularity_temperature: float = 1.0  # lambda
    collision_epsilon: float = col.DEFAULT_EPSILON
    enable_collision: bool = False
    enable_singularity: bool = False
    max_iterations: int = 30
    convergence_tol: float = 1e-6

    def __post_init__(self):
        self.model.frame_id(self.ee_frame)
        if self.position_weight <= 0 or self.rotation_weight <= 0:
            raise ValueError("position_weight and rotation_weight must be positive")
        if self.singularity_temperature <= 0:
            raise ValueError("singularity_temperature must be positive")
        if self.singularity_trigger < 0:
            raise ValueError("singularity_trigger must be nonnegative")
        if self.collision_epsilon <= 0:
            raise ValueError("collision_epsilon must be positive")
        if self.enable_collision and self.sphere_model is None:
            self.sphere_model = col.build_sphere_model(self.model)
        self._ee_id = self.model.frame_id(self.ee_frame)
        self._ee_id_arr = np.array([self._ee_id])


@dataclass
class ArmCommand:
    active_q: np.ndarray
    ik_error_pos: float  # meters
    ik_error_rot: float  # radians
    min_singular_value: float
    solve_time: float
    converged: bool
    objective_value: float = 0.0


def _pose_of(tree, frame_idx):
    return tree.pos[frame_idx], quat.from_matrix(tree.rot[frame_idx])


def _ik_terms(problem, tree, J, target: kin.Pose):
    """Eq-style tracking cost: beta_pos * |dp| + beta_rot * arccos(2<q,qt>^2 - 1)."""
    p_ee, q_ee = _pose_of(tree, problem._ee_id)
    dp = p_ee - target.position
    pos_err = float(np.linalg.norm(dp))

    d = float(np.dot(q_ee, target.orientation))
    x = 2.0 * d * d - 1.0
    xc = np.clip(x, -ARCCOS_CLAMP, ARCCOS_CLAMP)
    value = problem.position_weight * pos_err + problem.rotation_weight * float(np.arccos(xc))

    grad = np.zeros(problem.model.k)
    if pos_err > 1e-12:
        grad += problem.position_weight * (dp / pos_err) @ J[:3]
    if abs(x) < ARCCOS_CLAMP:
        # dq_ee/dq_i = 0.5 * (0, w_i) x q_ee with w_i the spatial angular column
        omega = J[3:]  # (3, k)
        w_term = -(q_ee[1] * omega[0] + q_ee[2] * omega[1] + q_ee[3] * omega[2])
        v_term = (
            q_ee[0] * omega
            + np.cross(omega.T, q_ee[1:]).T
        )
        dq_dqi = 0.5 * np.vstack([w_term, v_term])  # (4, k)
        dd = target.orientation @ dq_dqi
        dtheta = -1.0 / np.sqrt(1.0 - xc * xc) * 4.0 * d * dd
        grad += problem.rotation_weight * dtheta
    return value, grad, pos_err, _true_rotation_error(d)


def _true_rotation_error(d):
    return float(np.arccos(np.clip(2.0 * d * d - 1.0, -1.0, 1.0)))


def ik_cost(problem: ArmControlProblem, active_q, target: kin.Pose):
    """Tracking cost and analytic gradient at one configuration."""
    model = problem.model
    active_q = np.asarray(active_q, dtype=float).reshape(model.k)
    tree = kin.fk_tree(model, kin.full_config(model, active_q))
    J = kin.fold_passive(
        model,
        kin.raw_jacobian(model, tree, problem._ee_id),
        kin.passive_derivatives(model, active_q),
    )
    value, grad, _, _ = _ik_terms(problem, tree, J, target)
    return value, grad


def _manipulability(problem, active_q):
    """Lean manipulability evaluation for the finite-difference sweep."""
    model = problem.model
    tree = kin.fk_tree(model, kin.full_config(model, active_q))
    pj = kin.point_jacobians_raw(
        model, tree, problem._ee_id_arr, tree.pos[problem._ee_id][None, :]
    )[0]
    Jp = kin.fold_passive(model, pj, kin.passive_derivatives(model, active_q))
    G = Jp @ Jp.T if model.k >= 3 else Jp.T @ Jp
    det = float(np.linalg.det(G))
    return float(np.sqrt(det)) if det > 0.0 else 0.0


def _singularity_terms(problem, active_q, s0, manip):
    if s0 >= problem.singularity_trigger:
        return 0.0, np.zeros(problem.model.k)
    value = 1.0 - manip / problem.singularity_temperature
    grad = np.empty(problem.model.k)
    h = SINGULARITY_FD_STEP
    for i in range(problem.model.k):
        qp = np.array(active_q, dtype=float)
        qm = qp.copy()
        qp[i] += h
        qm[i] -= h
        grad[i] = (_manipulability(problem, qp) - _manipulability(problem, qm)) / (2 * h)
    grad /= -problem.singularity_temperature
    return value, grad


def singularity_cost(problem: ArmControlProblem, active_q):
    """Conditional manipulability penalty; zero (with zero gradient) off-branch."""
    model = problem.model
    active_q = np.asarray(active_q, dtype=float).reshape(model.k)
    tree = kin.fk_tree(model, kin.full_config(model, active_q))
    J = kin.fold_passive(
        model,
        kin.raw_jacobian(model, tree, problem._ee_id),
        kin.passive_derivatives(model, active_q),
    )
    s0, manip = kin.positional_metrics(J)
    return _singularity_terms(problem, active_q, s0, manip)


def _objective(problem, active_q, target):
    """Fused evaluation of every enabled term off a single FK pass.

    Sphere-center and end-effector Jacobians come out of one broadcast so
    per-iteration cost stays inside the real-time budget.
    """
    model = problem.model
    full_q = kin.full_config(model, active_q)
    tree = kin.fk_tree(model, full_q)
    derivs = kin.passive_derivatives(model, active_q)

    ee_pos = tree.pos[problem._ee_id]
    centers = None
    if problem.enable_collision:
        sm = problem.sphere_model
        centers = col.world_centers(sm, tree)
        pts = np.concatenate([centers, ee_pos[None, :]])
        ids = np.concatenate([sm.link_ids, problem._ee_id_arr])
        pj = kin.point_jacobians_raw(model, tree, ids, pts)
        pj_folded = kin.fold_passive(model, pj, derivs)
        point_jacs = pj_folded[:-1]
        J_lin = pj_folded[-1]
        ang = kin.joint_axes_world(model, tree)
        prism = model._jtype[: model.n] == kin.PRISMATIC
        if prism.any():
            ang = ang.copy()
            ang[prism] = 0.0
        ang = (ang * model._affects[: model.n, problem._ee_id][:, None]).T
        J = np.concatenate([J_lin, kin.fold_passive(model, ang, derivs)])
    else:
        J = kin.fold_passive(model, kin.raw_jacobian(model, tree, problem._ee_id), derivs)

    value, grad, pos_err, rot_err = _ik_terms(problem, tree, J, target)
    s0, manip = kin.positional_metrics(J)
    if problem.enable_singularity:
        v_sin, g_sin = _singularity_terms(problem, active_q, s0, manip)
        value += v_sin
        grad = grad + g_sin
    if problem.enable_collision:
        v_col, g_col = col.collision_cost(
            problem.sphere_model,
            model,
            active_q,
            epsilon=problem.collision_epsilon,
            _tree=tree,
            _derivs=derivs,
            _point_jacs=point_jacs,
            _centers=centers,
        )
        value += v_col
        grad = grad + g_col
    return value, grad, pos_err, rot_err, s0


def solve_arm(problem: ArmControlProblem, target: kin.Pose, prev_q) -> ArmCommand:
    """Minimize the enabled cost sum from a warm start, inside joint limits."""
    model = problem.model
    prev_q = np.asarray(prev_q, dtype=float).reshape(model.k)
    if not np.all(np.isfinite(target.position)):
        raise SolverError("target pose is non-finite")
    t0 = time.perf_counter()
    lo, hi = model.active_lower(), model.active_upper()
    x0 = np.clip(prev_q, lo, hi)

    def fun(x):
        v, g, *_ = _objective(problem, x, target)
        if not np.isfinite(v):
            raise SolverError("arm objective is non-finite")
        return v, g

    res = minimize(
        fun,
        x0,
        jac=True,
        method="L-BFGS-B",
        bounds=list(zip(lo, hi)),
        options={
            "maxiter": problem.max_iterations,
            "gtol": problem.convergence_tol,
            "ftol": 1e-14,
        },
    )
    q = np.clip(res.x, lo, hi)
    value, _, pos_err, rot_err, s0 = _objective(problem, q, target)
    return ArmCommand(
        active_q=q,
        ik_error_pos=pos_err,
        ik_error_rot=rot_err,
        min_singular_value=s0,
        solve_time=time.perf_counter() - t0,
        converged=bool(res.success),
        objective_value=float(value),
    )


def solve_arm_best(
    problem: ArmControlProblem,
    target: kin.Pose,
    initial_q,
    restarts: int = 12,
    seed: int = 0,
    pos_tol: float = 1e-3,
    rot_tol: float = 0.01,
) -> ArmCommand:
    """Cold-start solve with orientation continuation and random restarts.

    ``solve_arm`` is a local tracker; from arbitrary starts it can settle in
    a wrong elbow/wrist branch with the orientation stuck. This wrapper
    first solves a rotation-weighted variant of the problem to pick the
    branch, polishes with the real weights, and falls back to seeded random
    restarts, returning the best command found. Deterministic for a fixed
    seed.
    """
    rot_heavy = ArmControlProblem(
        model=problem.model,
        ee_frame=problem.ee_frame,
        sphere_model=problem.sphere_model,
        position_weight=problem.position_weight,
        rotation_weight=max(problem.rotation_weight, 20 * problem.rotation_weight),
        singularity_trigger=problem.singularity_trigger,
        singularity_temperature=problem.singularity_temperature,
        collision_epsilon=problem.collision_epsilon,
        enable_collision=problem.enable_collision,
        enable_singularity=problem.enable_singularity,
        max_iterations=problem.max_iterations,
        convergence_tol=problem.convergence_tol,
    )
    rng = np.random.default_rng(seed)
    lo, hi = problem.model.active_lower(), problem.model.active_upper()
    t0 = time.perf_counter()

    def attempt(start):
        staged = solve_arm(rot_heavy, target, start)
        return solve_arm(problem, target, staged.active_q)

    best = attempt(np.asarray(initial_q, dtype=float))
    for _ in range(restarts):
        if best.ik_error_pos < pos_tol and best.ik_error_rot < rot_tol:
            break
        cand = attempt(lo + (hi - lo) * rng.random(problem.model.k))
        if cand.objective_value < best.objective_value:
            best = cand
    best.solve_time = time.perf_counter() - t0
    return best


def track_trajectory(problem: ArmControlProblem, targets, initial_q):
    """Sequential warm-started solves over a timestamped target stream.

    Yields one ArmCommand per target. A per-frame solver failure produces a
    non-converged command holding the previous configuration instead of
    killing the stream.
    """
    q = np.asarray(initial_q, dtype=float).reshape(problem.model.k)
    for item in targets:
        target = item[1] if isinstance(item, tuple) else target_pose(item)
        try:
            cmd = solve_arm(problem, target, q)
            q = cmd.active_q
        except SolverError:
            cmd = ArmCommand(
                active_q=q.copy(),
                ik_error_pos=float("nan"),
                ik_error_rot=float("nan"),
                min_singular_value=float("nan"),
                solve_time=0.0,
                converged=False,
            )
        yield cmd


def target_pose(item) -> kin.Pose:
    if isinstance(item, kin.Pose):
        return item
    raise TypeError("trajectory items must be (timestamp, Pose) or Pose")
