"""Human-to-robot hand motion retargeting.

Per frame, the solver minimizes the squared mismatch between scaled
human keypoint vectors and the robot's forward-kinematic vectors, plus a
temporal smoothness penalty against the previous frame's solution,
subject to joint limits. Loop joints (four-bar couplings, mimic fingers)
are handled by optimizing only the ``k`` active joints: passive joints
are filled in on the forward pass and their gradient contributions are
folded back into the active columns on the backward pass, rather than
being carried as equality constraints.

``retarget_constrained`` keeps the constraint-based formulation alive as
a reference: all ``n`` joints are optimization variables and each passive
coupling is an explicit equality constraint inside an SQP solve. It
exists for cross-checking and profiling the reduced formulation, not for
production use.
"""

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from . import kinematics as kin
from .errors import SolverError

DEFAULT_SMOOTHNESS = 0.03
DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITERATIONS = 50

FINGERTIP_LABELS = ("thumb_tip", "index_tip", "middle_tip", "ring_tip", "pinky_tip")


@dataclass
class HandFrame:
    """One tracked hand sample: wrist pose plus keypoints in the wrist frame."""

    timestamp: float
    side: str  # "left" | "right"
    wrist: kin.Pose
    keypoints: np.ndarray  # (K, 3) meters
    keypoint_labels: tuple

    def __post_init__(self):
        self.keypoints = np.asarray(self.keypoints, dtype=float).reshape(-1, 3)
        self.keypoint_labels = tuple(self.keypoint_labels)
        if len(self.keypoints) != len(self.keypoint_labels):
            raise ValueError("keypoints and keypoint_labels lengths differ")

    def keypoint(self, label: str) -> np.ndarray:
        return self.keypoints[self.keypoint_labels.index(label)]

    def finite(self) -> bool:
        return bool(
            np.all(np.isfinite(self.keypoints))
            and np.all(np.isfinite(self.wrist.position))
        )


def default_vector_spec(model: kin.KinematicModel, wrist_frame: str = None):
    """Wrist-to-fingertip vector pairs for the five standard fingertip labels."""
    wrist = wrist_frame or model.links[model.root_link].name
    return [(wrist, f"{label[:-4]}_tip", label) for label in FINGERTIP_LABELS]


@dataclass
class RetargetProblem:
    """Objective configuration for one robot hand."""

    model: kin.KinematicModel
    alpha: float = 1.0
    smoothness_weight: float = DEFAULT_SMOOTHNESS
    vector_spec: list = None  # [(origin_frame, tip_frame, keypoint_label)]
    max_iterations: int = DEFAULT_MAX_ITERATIONS
    convergence_tol: float = DEFAULT_TOL
    # human-side label for non-wrist origin frames (tip-to-tip vectors)
    frame_keypoints: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.vector_spec is None:
            self.vector_spec = default_vector_spec(self.model)
        if not self.vector_spec:
            raise ValueError("vector_spec must define at least one vector")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.smoothness_weight < 0:
            raise ValueError("smoothness_weight must be nonnegative")
        for origin, tip, _ in self.vector_spec:
            self.model.frame_id(origin)
            self.model.frame_id(tip)
        self._origin_ids = np.array([self.model.frame_id(o) for o, _, _ in self.vector_spec])
        self._tip_ids = np.array([self.model.frame_id(t) for _, t, _ in self.vector_spec])

    @property
    def vector_count(self):
        return len(self.vector_spec)


@dataclass
class RetargetResult:
    active_q: np.ndarray
    objective_value: float
    iterations_used: int
    converged: bool
    solve_time: float


def scale_estimate(human_hand_length: float, robot_hand_length: float) -> float:
    """Keypoint scaling factor from overall hand lengths."""
    if human_hand_length <= 0 or robot_hand_length <= 0:
        raise ValueError("hand lengths must be positive")
    return robot_hand_length / human_hand_length


def human_vectors(problem: RetargetProblem, frame: HandFrame) -> np.ndarray:
    """Human-side vectors for each spec entry, (N, 3) in the wrist frame."""
    out = np.empty((problem.vector_count, 3))
    for i, (origin, _, label) in enumerate(problem.vector_spec):
        v = frame.keypoint(label)
        origin_label = problem.frame_keypoints.get(origin)
        if origin_label is not None:
            v = v - frame.keypoint(origin_label)
        out[i] = v
    return out


def _robot_vectors_and_jacobians(problem, tree, derivs, want_grad=True):
    model = problem.model
    N = problem.vector_count
    vecs = tree.pos[problem._tip_ids] - tree.pos[problem._origin_ids]
    if not want_grad:
        return vecs, None
    ids = np.concatenate([problem._tip_ids, problem._origin_ids])
    pts = np.concatenate([tree.pos[problem._tip_ids], tree.pos[problem._origin_ids]])
    pj = kin.point_jacobians_raw(model, tree, ids, pts)
    jacs = kin.fold_passive(model, pj[:N] - pj[N:], derivs)
    return vecs, jacs


def hand_objective(problem: RetargetProblem, active_q, prev_q, human_vecs):
    """Mismatch-plus-smoothness value and its analytic reduced gradient."""
    model = problem.model
    active_q = np.asarray(active_q, dtype=float).reshape(model.k)
    prev_q = np.asarray(prev_q, dtype=float).reshape(model.k)
    human_vecs = np.asarray(human_vecs, dtype=float).reshape(problem.vector_count, 3)

    tree = kin.fk_tree(model, kin.full_config(model, active_q))
    derivs = kin.passive_derivatives(model, active_q)
    robot_vecs, jacs = _robot_vectors_and_jacobians(problem, tree, derivs)

    residual = robot_vecs - problem.alpha * human_vecs  # (N, 3)
    dq = active_q - prev_q
    value = float(np.sum(residual * residual)) + problem.smoothness_weight * float(dq @ dq)
    grad = 2.0 * np.einsum("ni,nik->k", residual, jacs)
    grad += 2.0 * problem.smoothness_weight * dq
    return value, grad


def retarget(problem: RetargetProblem, frame: HandFrame, prev_q) -> RetargetResult:
    """Solve one frame, warm-started from the previous frame's solution."""
    model = problem.model
    prev_q = np.asarray(prev_q, dtype=float).reshape(model.k)
    t0 = time.perf_counter()

    if not frame.finite():
        return RetargetResult(prev_q.copy(), float("nan"), 0, False, time.perf_counter() - t0)

    hv = human_vectors(problem, frame)
    lo, hi = model.active_lower(), model.active_upper()
    x0 = np.clip(prev_q, lo, hi)

    def fun(x):
        v, g = hand_objective(problem, x, prev_q, hv)
        if not np.isfinite(v):
            raise SolverError("hand objective is non-finite (check model scale/alpha)")
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
    value, _ = hand_objective(problem, q, prev_q, hv)
    return RetargetResult(
        active_q=q,
        objective_value=value,
        iterations_used=int(res.nit),
        converged=bool(res.success),
        solve_time=time.perf_counter() - t0,
    )


# ---------------------------------------------------------------------------
# constraint-based reference formulation (loop joints as SQP constraints)


def _full_objective(problem, full_q, prev_active, human_vecs):
    """Objective over all n joints, gradient w.r.t. all n (no folding)."""
    model = problem.model
    tree = kin.fk_tree(model, full_q)
    robot_vecs = tree.pos[problem._tip_ids] - tree.pos[problem._origin_ids]
    residual = robot_vecs - problem.alpha * human_vecs
    dq = full_q[: model.k] - prev_active
    value = float(np.sum(residual * residual)) + problem.smoothness_weight * float(dq @ dq)
    N = problem.vector_count
    ids = np.concatenate([problem._tip_ids, problem._origin_ids])
    pts = np.concatenate([tree.pos[problem._tip_ids], tree.pos[problem._origin_ids]])
    pj = kin.point_jacobians_raw(model, tree, ids, pts)
    grad = 2.0 * np.einsum("ni,nij->j", residual, pj[:N] - pj[N:])
    grad[: model.k] += 2.0 * problem.smoothness_weight * dq
    return value, grad


def retarget_constrained(problem: RetargetProblem, frame: HandFrame, prev_full_q):
    """Reference solve over all n joints with explicit passive-map constraints."""
    model = problem.model
    prev_full = np.asarray(prev_full_q, dtype=float).reshape(model.n)
    prev_active = prev_full[: model.k].copy()
    t0 = time.perf_counter()
    hv = human_vectors(problem, frame)

    k = model.k
    src = model._passive_src
    coeffs = model._passive_coeffs

    def con(x):
        s = x[src]
        return x[k:] - (coeffs[:, 0] + s * (coeffs[:, 1] + s * (coeffs[:, 2] + s * coeffs[:, 3])))

    def con_jac(x):
        J = np.zeros((model.n - k, model.n))
        s = x[src]
        dsrc = coeffs[:, 1] + s * (2.0 * coeffs[:, 2] + s * 3.0 * coeffs[:, 3])
        for p in range(model.n - k):
            J[p, k + p] = 1.0
            J[p, src[p]] = -dsrc[p]
        return J

    res = minimize(
        lambda x: _full_objective(problem, x, prev_active, hv),
        np.clip(prev_full, model.lower_limits, model.upper_limits),
        jac=True,
        method="SLSQP",
        bounds=list(zip(model.lower_limits, model.upper_limits)),
        constraints=[{"type": "eq", "fun": con, "jac": con_jac}],
        options={"maxiter": 10 * problem.max_iterations, "ftol": 1e-12},
    )
    full_q = res.x
    value, _ = _full_objective(problem, full_q, prev_active, hv)
    return RetargetResult(
        active_q=full_q,  # full n-vector for this formulation
        objective_value=value,
        iterations_used=int(res.nit),
        converged=bool(res.success),
        solve_time=time.perf_counter() - t0,
    )
