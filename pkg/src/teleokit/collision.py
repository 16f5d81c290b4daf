"""Sphere-decomposition self-collision model.

Each link carries a set of spheres (from the robot description); the
collision cost is the reciprocal of the summed pairwise surface
distances over all checked pairs. Pairs on the same link, on a parent
and its direct child, or listed in the description's ignore list are
never checked. Surface distance is center distance minus both radii,
floored at ``DISTANCE_FLOOR`` so the cost stays bounded and
differentiable under penetration.
"""

from dataclasses import dataclass

import numpy as np

from . import kinematics as kin
from .errors import ModelError

try:
    from ._fastkin import pair_cost_grad as _pair_cost_grad
except Exception:  # pragma: no cover - numba missing or broken
    _pair_cost_grad = None

DISTANCE_FLOOR = 1e-4  # meters
DEFAULT_EPSILON = 1e-6


@dataclass(frozen=True)
class SphereModel:
    """Flattened sphere list plus the precomputed pair mask."""

    link_ids: np.ndarray  # (m,)
    centers_local: np.ndarray  # (m, 3)
    radii: np.ndarray  # (m,)
    pair_mask: np.ndarray  # (m, m) bool, symmetric, false diagonal
    pairs_i: np.ndarray  # (P,) upper-triangle indices of checked pairs
    pairs_j: np.ndarray

    @property
    def sphere_count(self):
        return len(self.radii)

    @property
    def pair_count(self):
        return len(self.pairs_i)


def build_sphere_model(model: kin.KinematicModel) -> SphereModel:
    """Collect link spheres and precompute which pairs are checked."""
    link_ids = []
    centers = []
    radii = []
    for li, link in enumerate(model.links):
        for s in link.spheres:
            link_ids.append(li)
            centers.append(s.center)
            radii.append(s.radius)
    if not radii:
        raise ModelError("model declares no collision spheres")
    link_ids = np.asarray(link_ids, dtype=int)
    m = len(radii)

    adjacent = set()
    for j in model.joints:
        adjacent.add(frozenset((j.parent_link, j.child_link)))
    names = [l.name for l in model.links]

    mask = np.zeros((m, m), dtype=bool)
    for a in range(m):
        for b in range(a + 1, m):
            la, lb = link_ids[a], link_ids[b]
            if la == lb:
                continue
            pair = frozenset((names[la], names[lb]))
            if pair in adjacent or pair in model.collision_ignore_pairs:
                continue
            mask[a, b] = mask[b, a] = True
    pairs_i, pairs_j = np.where(np.triu(mask, 1))
    return SphereModel(
        link_ids=link_ids,
        centers_local=np.asarray(centers, dtype=float),
        radii=np.asarray(radii, dtype=float),
        pair_mask=mask,
        pairs_i=pairs_i,
        pairs_j=pairs_j,
    )


def world_centers(sphere_model: SphereModel, tree: kin.FrameTree) -> np.ndarray:
    """Sphere centers in the root frame for one FK evaluation, (m, 3)."""
    rot = tree.rot[sphere_model.link_ids]  # (m, 3, 3)
    pos = tree.pos[sphere_model.link_ids]
    return pos + np.einsum("mij,mj->mi", rot, sphere_model.centers_local)


def pair_distance(sphere_model: SphereModel, i: int, j: int, centers: np.ndarray) -> float:
    """Surface distance between two spheres, floored at DISTANCE_FLOOR."""
    d = float(np.linalg.norm(centers[i] - centers[j]))
    return max(d - sphere_model.radii[i] - sphere_model.radii[j], DISTANCE_FLOOR)


def surface_distances(sphere_model: SphereModel, centers: np.ndarray):
    """Floored surface distance of every checked pair, plus the raw gaps."""
    diff = centers[sphere_model.pairs_i] - centers[sphere_model.pairs_j]
    center_dist = np.linalg.norm(diff, axis=1)
    gaps = (
        center_dist
        - sphere_model.radii[sphere_model.pairs_i]
        - sphere_model.radii[sphere_model.pairs_j]
    )
    return np.maximum(gaps, DISTANCE_FLOOR), gaps, diff, center_dist


def penetrating_pairs(sphere_model: SphereModel, tree: kin.FrameTree):
    """Indices of checked pairs with negative surface gap (for oracles/safety)."""
    centers = world_centers(sphere_model, tree)
    _, gaps, _, _ = surface_distances(sphere_model, centers)
    hit = np.where(gaps < 0.0)[0]
    return list(zip(sphere_model.pairs_i[hit], sphere_model.pairs_j[hit]))


def collision_cost(
    sphere_model: SphereModel,
    model: kin.KinematicModel,
    active_q,
    epsilon: float = DEFAULT_EPSILON,
    _tree: kin.FrameTree = None,
    _derivs: np.ndarray = None,
    _point_jacs: np.ndarray = None,
    _centers: np.ndarray = None,
):
    """Reciprocal summed-distance cost and its analytic gradient, (value, (k,)).

    Floored pairs contribute zero gradient (the floor is a flat region of
    the per-pair distance). The underscore arguments let a fused solver
    pass in kinematic quantities it already computed.
    """
    active_q = np.asarray(active_q, dtype=float).reshape(model.k)
    if _tree is None:
        _tree = kin.fk_tree(model, kin.full_config(model, active_q))
    if _derivs is None:
        _derivs = kin.passive_derivatives(model, active_q)

    centers = _centers if _centers is not None else world_centers(sphere_model, _tree)

    if _pair_cost_grad is not None:
        w = np.zeros((sphere_model.sphere_count, 3))
        total = _pair_cost_grad(
            centers,
            sphere_model.radii,
            sphere_model.pairs_i,
            sphere_model.pairs_j,
            DISTANCE_FLOOR,
            w,
        )
        value = 1.0 / (total + epsilon)
        if sphere_model.pair_count == 0 or not w.any():
            return value, np.zeros(model.k)
    else:
        dist, gaps, diff, center_dist = surface_distances(sphere_model, centers)
        value = 1.0 / (float(dist.sum()) + epsilon)
        if sphere_model.pair_count == 0:
            return value, np.zeros(model.k)
        live = gaps > DISTANCE_FLOOR
        if not live.any():
            return value, np.zeros(model.k)
        u = diff[live] / center_dist[live][:, None]  # unit vectors i -> j
        # d dist_p / dq = u_p . (J_i - J_j); accumulate per-sphere weights first
        w = np.zeros((sphere_model.sphere_count, 3))
        np.add.at(w, sphere_model.pairs_i[live], u)
        np.add.at(w, sphere_model.pairs_j[live], -u)

    if _point_jacs is None:
        _point_jacs = kin.point_jacobians(
            model, _tree, sphere_model.link_ids, centers, _derivs
        )  # (m, 3, k)
    dS = np.einsum("mi,mik->k", w, _point_jacs)
    grad = -(value * value) * dS
    return value, grad
