import numpy as np
import pytest

from teleokit import collision as col
from teleokit import kinematics as kin
from teleokit.errors import ModelError

from conftest import random_active_q


def chain_doc(n_links, spheres_per_link, ignore_pairs=None):
    links = []
    joints = []
    for i in range(n_links):
        spheres = [
            {"center": [0.1 * (s + 1), 0.0, 0.0], "radius": 0.04}
            for s in range(spheres_per_link)
        ]
        links.append({"name": f"L{i}", "spheres": spheres})
        if i:
            joints.append(
                {
                    "name": f"j{i}",
                    "type": "revolute",
                    "parent": f"L{i-1}",
                    "child": f"L{i}",
                    "origin": {"position": [0.5, 0, 0]},
                    "axis": [0, 0, 1],
                    "limits": [-3, 3],
                }
            )
    doc = {"links": links, "joints": joints}
    if ignore_pairs:
        doc["collision_ignore_pairs"] = ignore_pairs
    return doc


def brute_force_gaps(model, smodel, active_q):
    """O(m^2) oracle: recompute every checked pair's raw gap through the
    public FK/Pose API, no shared vector math with the module under test."""
    gaps = {}
    centers = []
    for s in range(smodel.sphere_count):
        link = model.links[smodel.link_ids[s]].name
        pose = kin.forward_kinematics(model, active_q, link)
        centers.append(pose.transform_point(smodel.centers_local[s]))
    for a in range(smodel.sphere_count):
        for b in range(a + 1, smodel.sphere_count):
            if smodel.pair_mask[a, b]:
                d = np.sqrt(sum((centers[a][i] - centers[b][i]) ** 2 for i in range(3)))
                gaps[(a, b)] = d - smodel.radii[a] - smodel.radii[b]
    return gaps


def test_parent_child_pairs_excluded():
    m = kin.load_model(chain_doc(2, 2))
    sm = col.build_sphere_model(m)
    assert sm.sphere_count == 4
    assert not sm.pair_mask.any()
    assert sm.pair_count == 0


def test_three_link_chain_single_pair():
    m = kin.load_model(chain_doc(3, 1))
    sm = col.build_sphere_model(m)
    assert sm.pair_count == 1
    a, b = sm.pairs_i[0], sm.pairs_j[0]
    assert {m.links[sm.link_ids[a]].name, m.links[sm.link_ids[b]].name} == {"L0", "L2"}


def test_ignore_pairs_cover_everything():
    m = kin.load_model(chain_doc(3, 1, ignore_pairs=[["L0", "L2"]]))
    sm = col.build_sphere_model(m)
    assert sm.pair_count == 0


def test_no_spheres_rejected(planar_arm):
    with pytest.raises(ModelError, match="no collision spheres"):
        col.build_sphere_model(planar_arm)


def test_pair_distance_values():
    m = kin.load_model(chain_doc(3, 1))
    sm = col.build_sphere_model(m)
    centers = np.array([[0, 0, 0], [0.5, 0, 0]])
    sm_mod = col.SphereModel(
        link_ids=sm.link_ids[:2],
        centers_local=sm.centers_local[:2],
        radii=np.array([0.1, 0.1]),
        pair_mask=sm.pair_mask[:2, :2],
        pairs_i=np.array([0]),
        pairs_j=np.array([1]),
    )
    assert col.pair_distance(sm_mod, 0, 1, centers) == pytest.approx(0.3)
    # penetrating pair floors at 1e-4
    sm_pen = col.SphereModel(
        link_ids=sm.link_ids[:2],
        centers_local=sm.centers_local[:2],
        radii=np.array([0.2, 0.2]),
        pair_mask=sm.pair_mask[:2, :2],
        pairs_i=np.array([0]),
        pairs_j=np.array([1]),
    )
    centers = np.array([[0, 0, 0], [0.3, 0, 0]])
    assert col.pair_distance(sm_pen, 0, 1, centers) == pytest.approx(1e-4)


def test_pair_distances_match_brute_force(dual_arm, rng):
    sm = col.build_sphere_model(dual_arm)
    for _ in range(3):
        q = random_active_q(dual_arm, rng)
        tree = kin.fk_tree(dual_arm, kin.full_config(dual_arm, q))
        centers = col.world_centers(sm, tree)
        _, gaps, _, _ = col.surface_distances(sm, centers)
        oracle = brute_force_gaps(dual_arm, sm, q)
        for p in range(sm.pair_count):
            key = (sm.pairs_i[p], sm.pairs_j[p])
            assert gaps[p] == pytest.approx(oracle[key], abs=1e-9)


def test_all_masked_cost_is_inverse_epsilon():
    m = kin.load_model(chain_doc(3, 1, ignore_pairs=[["L0", "L2"]]))
    sm = col.build_sphere_model(m)
    value, grad = col.collision_cost(sm, m, [0.0, 0.0])
    assert value == pytest.approx(1e6)
    assert np.all(grad == 0.0)


def test_single_pair_cost_formula():
    m = kin.load_model(chain_doc(3, 1))
    sm = col.build_sphere_model(m)
    q = np.array([0.3, -0.4])
    tree = kin.fk_tree(m, kin.full_config(m, q))
    centers = col.world_centers(sm, tree)
    d = col.pair_distance(sm, sm.pairs_i[0], sm.pairs_j[0], centers)
    value, _ = col.collision_cost(sm, m, q)
    assert value == pytest.approx(1.0 / (d + 1e-6), rel=1e-12)


def test_gradient_matches_finite_differences(arm7, rng):
    sm = col.build_sphere_model(arm7)
    h = 1e-6
    checked = 0
    for _ in range(12):
        q = random_active_q(arm7, rng)
        tree = kin.fk_tree(arm7, kin.full_config(arm7, q))
        _, gaps, _, _ = col.surface_distances(sm, col.world_centers(sm, tree))
        if np.any(np.abs(gaps - col.DISTANCE_FLOOR) < 10 * h):
            continue  # clamp kink, excluded by contract
        value, grad = col.collision_cost(sm, arm7, q)
        fd = np.empty(arm7.k)
        for i in range(arm7.k):
            qp, qm = q.copy(), q.copy()
            qp[i] += h
            qm[i] -= h
            fp, _ = col.collision_cost(sm, arm7, qp)
            fm, _ = col.collision_cost(sm, arm7, qm)
            fd[i] = (fp - fm) / (2 * h)
        rel = np.linalg.norm(grad - fd) / max(np.linalg.norm(fd), np.linalg.norm(grad))
        assert rel < 1e-4
        checked += 1
    assert checked >= 8


def test_cost_positive_and_decreasing_in_distance():
    m = kin.load_model(chain_doc(3, 1))
    sm = col.build_sphere_model(m)
    values = []
    angles = [1.0, 1.5, 2.0, 2.5]  # folding the chain shrinks the pair distance
    for q2 in angles:
        value, _ = col.collision_cost(sm, m, [0.0, q2])
        assert value > 0
        values.append(value)
    tree = lambda q2: kin.fk_tree(m, kin.full_config(m, np.array([0.0, q2])))
    dists = [
        col.surface_distances(sm, col.world_centers(sm, tree(q2)))[0][0]
        for q2 in angles
    ]
    assert np.all(np.diff(dists) < 0)
    assert np.all(np.diff(values) > 0)


def test_symmetry_under_sphere_order():
    m = kin.load_model(chain_doc(3, 1))
    sm = col.build_sphere_model(m)
    swapped = col.SphereModel(
        link_ids=sm.link_ids[::-1].copy(),
        centers_local=sm.centers_local[::-1].copy(),
        radii=sm.radii[::-1].copy(),
        pair_mask=sm.pair_mask[::-1, ::-1].copy(),
        pairs_i=np.array([0]),
        pairs_j=np.array([2]),
    )
    q = np.array([0.2, 0.9])
    v1, _ = col.collision_cost(sm, m, q)
    v2, _ = col.collision_cost(swapped, m, q)
    assert v1 == pytest.approx(v2, rel=1e-12)
