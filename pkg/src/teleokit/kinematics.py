"""Robot model loading, forward kinematics, and spatial Jacobians.

A model is a tree of links connected by revolute, prismatic, or fixed
joints. Movable joints are partitioned into ``k`` active joints
(independent optimization variables) and ``n - k`` passive joints whose
positions are cubic-polynomial functions of a single active joint, which
is how four-bar linkages and mimic fingers are represented. All solvers
work in the reduced ``k``-dimensional space; passive columns of the
Jacobian are folded into their source active column by the chain rule.

Conventions fixed here and relied on everywhere else:

* joint ordering is active joints first (document order), then passive
  (document order), then fixed; configuration vectors index the movable
  prefix of length ``n``,
* quaternions are (w, x, y, z), normalized, with sign-insensitive
  comparisons,
* Jacobians are spatial (root-frame) twists, 6 rows ordered
  [linear; angular], one column per active joint,
* ``smallest_singular_value`` and ``manipulability`` are computed from
  the positional 3xk sub-block (Gram determinant on the smaller side),
  so a planar arm at full extension reports both as zero.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import yaml

from . import quat
from .errors import LimitError, ModelError, UnknownFrameError

REVOLUTE = 0
PRISMATIC = 1
FIXED = 2

_TYPE_NAMES = {"revolute": REVOLUTE, "prismatic": PRISMATIC, "fixed": FIXED}

_TOP_KEYS = {"links", "joints", "collision_ignore_pairs"}
_LINK_KEYS = {"name", "spheres"}
_SPHERE_KEYS = {"center", "radius"}
_JOINT_KEYS = {"name", "type", "parent", "child", "origin", "axis", "limits", "passive"}
_ORIGIN_KEYS = {"position", "orientation"}
_PASSIVE_KEYS = {"source", "coefficients"}


@dataclass(frozen=True)
class Pose:
    """Rigid transform: position in meters plus a unit quaternion."""

    position: np.ndarray
    orientation: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float).reshape(3))
        q = np.asarray(self.orientation, dtype=float).reshape(4)
        n = np.linalg.norm(q)
        if not np.isfinite(n) or abs(n) < 1e-12:
            raise ValueError("orientation quaternion must be nonzero and finite")
        object.__setattr__(self, "orientation", q / n)

    @staticmethod
    def identity():
        return Pose(np.zeros(3), np.array([1.0, 0.0, 0.0, 0.0]))

    def compose(self, other: "Pose") -> "Pose":
        return Pose(
            self.position + quat.rotate(self.orientation, other.position),
            quat.mul(self.orientation, other.orientation),
        )

    def inverse(self) -> "Pose":
        qi = quat.conjugate(self.orientation)
        return Pose(-quat.rotate(qi, self.position), qi)

    def transform_point(self, p):
        return self.position + quat.rotate(self.orientation, np.asarray(p, dtype=float))

    def rotation_matrix(self):
        return quat.to_matrix(self.orientation)

    def approx_equal(self, other: "Pose", pos_tol=1e-9, rot_tol=1e-9) -> bool:
        """Pose equality, insensitive to the quaternion's double-cover sign."""
        if np.linalg.norm(self.position - other.position) > pos_tol:
            return False
        return quaternion_angle(self.orientation, other.orientation) <= rot_tol


def quaternion_angle(qa, qb) -> float:
    """Geodesic angle between two orientations, sign-invariant, in [0, pi]."""
    d = float(np.clip(abs(np.dot(qa, qb)), 0.0, 1.0))
    return 2.0 * np.arccos(d)


@dataclass(frozen=True)
class PassiveMap:
    """Polynomial coupling q_passive = sum_d coefficients[d] * q_source**d."""

    source: int  # active joint index in [0, k)
    coefficients: np.ndarray  # degree <= 3, low order first

    def value(self, q_source: float) -> float:
        acc = 0.0
        for c in self.coefficients[::-1]:
            acc = acc * q_source + c
        return acc

    def derivative(self, q_source: float) -> float:
        acc = 0.0
        n = len(self.coefficients)
        for d in range(n - 1, 0, -1):
            acc = acc * q_source + d * self.coefficients[d]
        return acc


@dataclass(frozen=True)
class Sphere:
    center: np.ndarray  # link frame, meters
    radius: float


@dataclass(frozen=True)
class Link:
    name: str
    spheres: tuple = ()


@dataclass(frozen=True)
class Joint:
    name: str
    type: int
    parent_link: str
    child_link: str
    origin: Pose
    axis: Optional[np.ndarray] = None
    limits: Optional[tuple] = None
    passive: Optional[PassiveMap] = None


@dataclass
class JacobianResult:
    """Spatial Jacobian plus the singularity metrics derived from it."""

    jacobian: np.ndarray  # (6, k), rows [linear; angular]
    smallest_singular_value: float
    manipulability: float


@dataclass(frozen=True, eq=False)
class KinematicModel:
    """Immutable joint/link tree; safe to share across concurrent solvers."""

    links: tuple
    joints: tuple  # active | passive | fixed
    active_joint_count: int
    total_joint_count: int  # movable joints (active + passive)
    lower_limits: np.ndarray  # (n,)
    upper_limits: np.ndarray  # (n,)
    collision_ignore_pairs: frozenset = frozenset()

    # derived lookup tables, filled by load_model
    link_index: dict = field(default_factory=dict)
    joint_index: dict = field(default_factory=dict)
    root_link: int = 0
    _jskew: np.ndarray = None
    _jskew2: np.ndarray = None
    _link_parent_joint: np.ndarray = None
    _jparent_link: np.ndarray = None
    _jchild_link: np.ndarray = None
    _jtype: np.ndarray = None
    _jaxis: np.ndarray = None
    _jorigin_pos: np.ndarray = None
    _jorigin_rot: np.ndarray = None
    _topo_links: np.ndarray = None
    _affects: np.ndarray = None  # (n, L) movable joint j moves link l
    _passive_src: np.ndarray = None  # (n - k,)
    _passive_coeffs: np.ndarray = None  # (n - k, 4)

    @property
    def k(self):
        return self.active_joint_count

    @property
    def n(self):
        return self.total_joint_count

    def frame_id(self, name: str) -> int:
        try:
            return self.link_index[name]
        except KeyError:
            raise UnknownFrameError(f"unknown frame {name!r}") from None

    def active_lower(self):
        return self.lower_limits[: self.k]

    def active_upper(self):
        return self.upper_limits[: self.k]


class FrameTree:
    """World pose of every link for one configuration (FK evaluation cache)."""

    __slots__ = ("full_q", "pos", "rot")

    def __init__(self, full_q, pos, rot):
        self.full_q = full_q
        self.pos = pos  # (L, 3)
        self.rot = rot  # (L, 3, 3)


# ---------------------------------------------------------------------------
# model loading


def _require_mapping(node, what, allowed):
    if not isinstance(node, dict):
        raise ModelError(f"{what} must be a mapping")
    unknown = set(node) - allowed
    if unknown:
        raise ModelError(f"{what} has unknown keys: {sorted(unknown)}")


def _parse_vec(node, what, length):
    try:
        v = np.asarray(node, dtype=float).reshape(length)
    except Exception:
        raise ModelError(f"{what} must be a {length}-vector") from None
    if not np.all(np.isfinite(v)):
        raise ModelError(f"{what} must be finite")
    return v


def _parse_origin(node, jname):
    if node is None:
        return Pose.identity()
    _require_mapping(node, f"joint {jname!r} origin", _ORIGIN_KEYS)
    pos = _parse_vec(node.get("position", [0, 0, 0]), f"joint {jname!r} origin position", 3)
    ori = node.get("orientation", [1, 0, 0, 0])
    ori = _parse_vec(ori, f"joint {jname!r} origin orientation", 4)
    if abs(np.linalg.norm(ori)) < 1e-12:
        raise ModelError(f"joint {jname!r} origin orientation is a zero quaternion")
    return Pose(pos, ori)


def _passive_range(coeffs, lo, hi):
    """Exact min/max of the cubic on [lo, hi]: endpoints + interior critical points."""
    candidates = [lo, hi]
    deriv = [d * coeffs[d] for d in range(1, len(coeffs))]
    if any(abs(c) > 0 for c in deriv[1:]):
        roots = np.roots(deriv[::-1])
        for r in roots:
            if abs(r.imag) < 1e-12 and lo < r.real < hi:
                candidates.append(float(r.real))
    pm = PassiveMap(0, np.asarray(coeffs, dtype=float))
    vals = [pm.value(c) for c in candidates]
    return min(vals), max(vals)


def load_model(source) -> KinematicModel:
    """Parse and validate a robot description (YAML text or mapping).

    The description format is documented in the README. Unknown keys are
    rejected at every level so typos fail loudly instead of silently
    changing the robot.
    """
    if isinstance(source, (str, bytes)):
        try:
            doc = yaml.safe_load(source)
        except yaml.YAMLError as e:
            raise ModelError(f"unparseable robot description: {e}") from None
    else:
        doc = source
    if doc is None:
        raise ModelError("empty robot description")
    _require_mapping(doc, "robot description", _TOP_KEYS)
    if "links" not in doc or "joints" not in doc:
        raise ModelError("robot description requires 'links' and 'joints'")

    links = []
    link_index = {}
    for entry in doc["links"] or []:
        _require_mapping(entry, "link", _LINK_KEYS)
        name = entry.get("name")
        if not isinstance(name, str) or not name:
            raise ModelError("every link needs a nonempty name")
        if name in link_index:
            raise ModelError(f"duplicate link name {name!r}")
        spheres = []
        for s in entry.get("spheres") or []:
            _require_mapping(s, f"link {name!r} sphere", _SPHERE_KEYS)
            center = _parse_vec(s.get("center"), f"link {name!r} sphere center", 3)
            radius = s.get("radius")
            if not isinstance(radius, (int, float)) or not radius > 0:
                raise ModelError(f"link {name!r} sphere radius must be > 0")
            spheres.append(Sphere(center, float(radius)))
        link_index[name] = len(links)
        links.append(Link(name, tuple(spheres)))
    if not links:
        raise ModelError("robot description has no links")

    raw_joints = []
    joint_names = set()
    for entry in doc["joints"] or []:
        _require_mapping(entry, "joint", _JOINT_KEYS)
        name = entry.get("name")
        if not isinstance(name, str) or not name:
            raise ModelError("every joint needs a nonempty name")
        if name in joint_names:
            raise ModelError(f"duplicate joint name {name!r}")
        joint_names.add(name)
        jtype = _TYPE_NAMES.get(entry.get("type"))
        if jtype is None:
            raise ModelError(f"joint {name!r} has invalid type {entry.get('type')!r}")
        parent, child = entry.get("parent"), entry.get("child")
        for link_name in (parent, child):
            if link_name not in link_index:
                raise ModelError(f"joint {name!r} references unknown link {link_name!r}")
        if parent == child:
            raise ModelError(f"joint {name!r} connects link {parent!r} to itself")
        origin = _parse_origin(entry.get("origin"), name)

        axis = None
        limits = None
        if jtype != FIXED:
            axis = _parse_vec(entry.get("axis"), f"joint {name!r} axis", 3)
            norm = np.linalg.norm(axis)
            if norm < 1e-12:
                raise ModelError(f"joint {name!r} axis must be nonzero")
            axis = axis / norm
            lim = entry.get("limits")
            if lim is None:
                raise ModelError(f"movable joint {name!r} requires limits")
            lim = _parse_vec(lim, f"joint {name!r} limits", 2)
            if lim[0] > lim[1]:
                raise ModelError(f"joint {name!r} limits must satisfy lower <= upper")
            limits = (float(lim[0]), float(lim[1]))
        else:
            for forbidden in ("axis", "limits", "passive"):
                if entry.get(forbidden) is not None:
                    raise ModelError(f"fixed joint {name!r} must not declare {forbidden!r}")

        passive_entry = entry.get("passive")
        raw_joints.append((name, jtype, parent, child, origin, axis, limits, passive_entry))

    # tree checks: one parent joint per non-root link, single root, full reachability
    parent_of = {}
    for name, _, parent, child, *_ in raw_joints:
        if child in parent_of:
            raise ModelError(f"link {child!r} has more than one parent joint")
        parent_of[child] = (name, parent)
    roots = [l.name for l in links if l.name not in parent_of]
    if len(roots) != 1:
        raise ModelError(f"model must have exactly one root link, found {sorted(roots)}")
    reached = {roots[0]}
    frontier = [roots[0]]
    children = {}
    for name, _, parent, child, *_ in raw_joints:
        children.setdefault(parent, []).append(child)
    while frontier:
        cur = frontier.pop()
        for ch in children.get(cur, []):
            if ch in reached:
                raise ModelError("cycle in link graph")
            reached.add(ch)
            frontier.append(ch)
    if len(reached) != len(links):
        missing = sorted(set(link_index) - reached)
        raise ModelError(f"links unreachable from root {roots[0]!r}: {missing}")

    # partition and order: active, passive, fixed
    active = [j for j in raw_joints if j[1] != FIXED and j[7] is None]
    passive = [j for j in raw_joints if j[1] != FIXED and j[7] is not None]
    fixed = [j for j in raw_joints if j[1] == FIXED]
    k, n = len(active), len(active) + len(passive)
    active_index = {j[0]: i for i, j in enumerate(active)}

    joints = []
    lower = np.empty(n)
    upper = np.empty(n)
    for i, (name, jtype, parent, child, origin, axis, limits, _) in enumerate(active):
        joints.append(Joint(name, jtype, parent, child, origin, axis, limits))
        lower[i], upper[i] = limits
    passive_src = np.empty(len(passive), dtype=int)
    passive_coeffs = np.zeros((len(passive), 4))
    for p, (name, jtype, parent, child, origin, axis, limits, pentry) in enumerate(passive):
        _require_mapping(pentry, f"joint {name!r} passive map", _PASSIVE_KEYS)
        src_name = pentry.get("source")
        if src_name not in active_index:
            raise ModelError(
                f"passive joint {name!r} source {src_name!r} is not an active joint"
            )
        coeffs = pentry.get("coefficients")
        if not isinstance(coeffs, (list, tuple)) or not 1 <= len(coeffs) <= 4:
            raise ModelError(
                f"passive joint {name!r} needs 1 to 4 polynomial coefficients"
            )
        coeffs = [float(c) for c in coeffs]
        src_idx = active_index[src_name]
        src_limits = active[src_idx][6]
        lo, hi = _passive_range(coeffs, *src_limits)
        if lo < limits[0] - 1e-9 or hi > limits[1] + 1e-9:
            raise ModelError(
                f"passive joint {name!r} leaves its limits [{limits[0]}, {limits[1]}] "
                f"(range [{lo:.6g}, {hi:.6g}] over the source's motion)"
            )
        pm = PassiveMap(src_idx, np.asarray(coeffs, dtype=float))
        joints.append(Joint(name, jtype, parent, child, origin, axis, limits, pm))
        lower[k + p], upper[k + p] = limits
        passive_src[p] = src_idx
        passive_coeffs[p, : len(coeffs)] = coeffs
    for name, jtype, parent, child, origin, axis, limits, _ in fixed:
        joints.append(Joint(name, jtype, parent, child, origin, axis, limits))

    ignore = set()
    for pair in doc.get("collision_ignore_pairs") or []:
        if not isinstance(pair, (list, tuple)) or len(pair) != 2:
            raise ModelError("collision_ignore_pairs entries must be [link_a, link_b]")
        a, b = pair
        for link_name in (a, b):
            if link_name not in link_index:
                raise ModelError(f"collision_ignore_pairs references unknown link {link_name!r}")
        ignore.add(frozenset((a, b)))

    model = KinematicModel(
        links=tuple(links),
        joints=tuple(joints),
        active_joint_count=k,
        total_joint_count=n,
        lower_limits=lower,
        upper_limits=upper,
        collision_ignore_pairs=frozenset(ignore),
        link_index=link_index,
        joint_index={j.name: i for i, j in enumerate(joints)},
    )
    _build_tables(model)
    return model


def load_model_file(path) -> KinematicModel:
    with open(path, "r", encoding="utf-8") as f:
        return load_model(f.read())


def _build_tables(model: KinematicModel):
    L = len(model.links)
    J = len(model.joints)
    n = model.n
    set_ = object.__setattr__

    link_parent_joint = np.full(L, -1, dtype=int)
    jparent = np.empty(J, dtype=int)
    jchild = np.empty(J, dtype=int)
    jtype = np.empty(J, dtype=int)
    jaxis = np.zeros((J, 3))
    jor_pos = np.zeros((J, 3))
    jor_rot = np.zeros((J, 3, 3))
    for i, j in enumerate(model.joints):
        jparent[i] = model.link_index[j.parent_link]
        jchild[i] = model.link_index[j.child_link]
        jtype[i] = j.type
        if j.axis is not None:
            jaxis[i] = j.axis
        jor_pos[i] = j.origin.position
        jor_rot[i] = j.origin.rotation_matrix()
        link_parent_joint[jchild[i]] = i

    root = int(np.where(link_parent_joint < 0)[0][0])
    topo = [root]
    seen = 0
    while seen < len(topo):
        cur = topo[seen]
        seen += 1
        for i in range(J):
            if jparent[i] == cur:
                topo.append(int(jchild[i]))

    # movable joint j moves link l iff j is on the path root -> l
    affects = np.zeros((n, L), dtype=bool)
    for l in range(L):
        cur = l
        while link_parent_joint[cur] >= 0:
            pj = link_parent_joint[cur]
            if pj < n:
                affects[pj, l] = True
            cur = jparent[pj]

    npass = n - model.k
    if model._passive_src is None:
        psrc = np.empty(npass, dtype=int)
        pco = np.zeros((npass, 4))
        for p in range(npass):
            pm = model.joints[model.k + p].passive
            psrc[p] = pm.source
            pco[p, : len(pm.coefficients)] = pm.coefficients
        set_(model, "_passive_src", psrc)
        set_(model, "_passive_coeffs", pco)

    # skew(axis) and skew(axis)^2 for the vectorized Rodrigues formula
    ax, ay, az = jaxis[:, 0], jaxis[:, 1], jaxis[:, 2]
    zero = np.zeros(J)
    skew = np.stack(
        [
            np.stack([zero, -az, ay], axis=1),
            np.stack([az, zero, -ax], axis=1),
            np.stack([-ay, ax, zero], axis=1),
        ],
        axis=1,
    )
    set_(model, "_jskew", skew)
    set_(model, "_jskew2", skew @ skew)

    set_(model, "root_link", root)
    set_(model, "_affects", affects)
    set_(model, "_link_parent_joint", link_parent_joint)
    set_(model, "_jparent_link", jparent)
    set_(model, "_jchild_link", jchild)
    set_(model, "_jtype", jtype)
    set_(model, "_jaxis", jaxis)
    set_(model, "_jorigin_pos", jor_pos)
    set_(model, "_jorigin_rot", jor_rot)
    set_(model, "_topo_links", np.asarray(topo, dtype=int))


# ---------------------------------------------------------------------------
# configuration handling


def check_active_limits(model: KinematicModel, active_q):
    active_q = np.asarray(active_q, dtype=float)
    if active_q.shape != (model.k,):
        raise LimitError(f"expected {model.k} active joint values, got {active_q.shape}")
    lo, hi = model.active_lower(), model.active_upper()
    if np.any(active_q < lo - 1e-9) or np.any(active_q > hi + 1e-9):
        raise LimitError("active joint configuration violates limits")
    return active_q


def full_config(model: KinematicModel, active_q) -> np.ndarray:
    """Expand active joint values to all movable joints via the passive maps."""
    active_q = np.asarray(active_q, dtype=float).reshape(model.k)
    q = np.empty(model.n)
    q[: model.k] = active_q
    if model.n > model.k:
        src = active_q[model._passive_src]
        c = model._passive_coeffs
        q[model.k:] = c[:, 0] + src * (c[:, 1] + src * (c[:, 2] + src * c[:, 3]))
    return q


def passive_derivatives(model: KinematicModel, active_q) -> np.ndarray:
    """d q_passive / d q_source evaluated at the current configuration."""
    if model.n == model.k:
        return np.empty(0)
    src = np.asarray(active_q, dtype=float)[model._passive_src]
    c = model._passive_coeffs
    return c[:, 1] + src * (2.0 * c[:, 2] + src * 3.0 * c[:, 3])


# ---------------------------------------------------------------------------
# forward kinematics


def _fk_walk_numpy(model, full_q, pos, rot):
    n = model.n
    if n:
        s = np.sin(full_q)
        c = 1.0 - np.cos(full_q)
        Rm = (
            np.eye(3)
            + s[:, None, None] * model._jskew[:n]
            + c[:, None, None] * model._jskew2[:n]
        )
    lpj = model._link_parent_joint
    jtype = model._jtype
    for l in model._topo_links[1:]:
        j = lpj[l]
        p = model._jparent_link[j]
        Rp = rot[p]
        Rpre = Rp @ model._jorigin_rot[j]
        ppre = pos[p] + Rp @ model._jorigin_pos[j]
        t = jtype[j]
        if t == REVOLUTE:
            rot[l] = Rpre @ Rm[j]
            pos[l] = ppre
        elif t == FIXED:
            rot[l] = Rpre
            pos[l] = ppre
        else:  # prismatic
            rot[l] = Rpre
            pos[l] = ppre + full_q[j] * (Rpre @ model._jaxis[j])


try:  # JIT kernels: same arithmetic, much faster per call on small chains
    from . import _fastkin
    _fk_walk_jit = _fastkin.fk_walk
    _fk_jit = True
except Exception:  # pragma: no cover - numba missing or broken
    _fastkin = None
    _fk_walk_jit = None
    _fk_jit = False


def fk_tree(model: KinematicModel, full_q) -> FrameTree:
    """Pose of every link for a full movable-joint configuration."""
    full_q = np.asarray(full_q, dtype=float)
    L = len(model.links)
    pos = np.zeros((L, 3))
    rot = np.zeros((L, 3, 3))
    if _fk_walk_jit is not None:
        _fk_walk_jit(
            model._topo_links,
            model._link_parent_joint,
            model._jparent_link,
            model._jtype,
            model._jaxis,
            model._jorigin_pos,
            model._jorigin_rot,
            model._jskew,
            model._jskew2,
            full_q,
            pos,
            rot,
            model.root_link,
        )
    else:
        rot[model.root_link] = np.eye(3)
        _fk_walk_numpy(model, full_q, pos, rot)
    return FrameTree(full_q, pos, rot)


def forward_kinematics(model: KinematicModel, active_q, frame: str) -> Pose:
    """Pose of the named link frame in the root frame."""
    idx = model.frame_id(frame)
    tree = fk_tree(model, full_config(model, active_q))
    return Pose(tree.pos[idx].copy(), quat.from_matrix(tree.rot[idx]))


# ---------------------------------------------------------------------------
# Jacobians


def joint_axes_world(model: KinematicModel, tree: FrameTree) -> np.ndarray:
    """World-frame axis of every movable joint, (n, 3)."""
    n = model.n
    children = model._jchild_link[:n]
    return np.einsum("jab,jb->ja", tree.rot[children], model._jaxis[:n])


def raw_jacobian(model: KinematicModel, tree: FrameTree, frame_idx: int) -> np.ndarray:
    """Spatial Jacobian w.r.t. all movable joints, no passive folding, (6, n)."""
    n = model.n
    children = model._jchild_link[:n]
    axes_w = joint_axes_world(model, tree)
    mask = model._affects[:n, frame_idx]
    lin = np.cross(axes_w, tree.pos[frame_idx][None, :] - tree.pos[children])
    ang = axes_w.copy()
    prism = model._jtype[:n] == PRISMATIC
    if prism.any():
        lin[prism] = axes_w[prism]
        ang[prism] = 0.0
    lin *= mask[:, None]
    ang *= mask[:, None]
    return np.concatenate([lin.T, ang.T], axis=0)


def fold_passive(model: KinematicModel, J_raw: np.ndarray, derivs: np.ndarray) -> np.ndarray:
    """Fold passive-joint columns into their source active columns (chain rule)."""
    k = model.k
    J = J_raw[..., :k].copy()
    for p in range(model.n - k):
        J[..., model._passive_src[p]] += derivs[p] * J_raw[..., k + p]
    return J


def positional_metrics(J_active: np.ndarray):
    """(s_0, manipulability) from the positional sub-block of a folded Jacobian.

    Both come out of one eigendecomposition of the Gram matrix on the
    smaller side: singular values are the square roots of its eigenvalues
    and the manipulability index is the root of their product.
    """
    Jp = J_active[:3, :]
    k = Jp.shape[1]
    if k == 0:
        return 0.0, 0.0
    G = Jp @ Jp.T if k >= 3 else Jp.T @ Jp
    eig = np.linalg.eigvalsh(G)
    s0 = float(np.sqrt(eig[0])) if eig[0] > 0.0 else 0.0
    det = float(np.prod(eig))
    manip = float(np.sqrt(det)) if det > 0.0 else 0.0
    return s0, manip


def spatial_jacobian(model: KinematicModel, active_q, frame: str) -> JacobianResult:
    """Spatial Jacobian w.r.t. active joints, passive contributions folded in."""
    idx = model.frame_id(frame)
    active_q = np.asarray(active_q, dtype=float).reshape(model.k)
    tree = fk_tree(model, full_config(model, active_q))
    J = fold_passive(model, raw_jacobian(model, tree, idx), passive_derivatives(model, active_q))
    s0, manip = positional_metrics(J)
    return JacobianResult(J, s0, manip)


def point_jacobians_raw(model, tree: FrameTree, link_ids, points_world) -> np.ndarray:
    """Positional Jacobians of world points rigidly attached to links, (m, 3, n).

    Computed for all joints and points in one pass (columns for joints that
    do not move a point are zeroed by the ancestry mask), which keeps
    gradient evaluation cheap for sphere clouds and keypoint sets.
    """
    n = model.n
    pts = np.asarray(points_world, dtype=float)
    if _fk_jit:
        out = np.zeros((pts.shape[0], 3, n))
        _fastkin.point_jacs(
            model._jchild_link,
            model._jtype,
            model._jaxis,
            model._affects,
            np.asarray(link_ids, dtype=np.int64),
            pts,
            tree.pos,
            tree.rot,
            out,
        )
        return out
    children = model._jchild_link[:n]
    axes_w = np.einsum("jab,jb->ja", tree.rot[children], model._jaxis[:n])  # (n, 3)
    rel = pts[None, :, :] - tree.pos[children][:, None, :]  # (n, m, 3)
    cols = np.cross(axes_w[:, None, :], rel)  # revolute columns
    prism = model._jtype[:n] == PRISMATIC
    if prism.any():
        cols[prism] = axes_w[prism][:, None, :]
    cols *= model._affects[:n][:, link_ids][:, :, None]
    return cols.transpose(1, 2, 0)


def point_jacobians(model, tree: FrameTree, link_ids, points_world, derivs) -> np.ndarray:
    """Folded positional point Jacobians, (m, 3, k)."""
    return fold_passive(model, point_jacobians_raw(model, tree, link_ids, points_world), derivs)
