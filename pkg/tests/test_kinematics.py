import numpy as np
import pytest

from teleokit import kinematics as kin
from teleokit import quat
from teleokit.errors import LimitError, ModelError, UnknownFrameError

from conftest import random_active_q


# --- independent oracles -----------------------------------------------------


def homogeneous_fk(model, active_q, frame):
    """FK oracle: explicit 4x4 homogeneous matrix chain, walked leaf to root."""
    q = kin.full_config(model, active_q)
    idx = model.link_index[frame]
    chain = []
    cur = idx
    while model._link_parent_joint[cur] >= 0:
        j = model._link_parent_joint[cur]
        chain.append(j)
        cur = model._jparent_link[j]
    T = np.eye(4)
    for j in reversed(chain):
        joint = model.joints[j]
        O = np.eye(4)
        O[:3, :3] = joint.origin.rotation_matrix()
        O[:3, 3] = joint.origin.position
        M = np.eye(4)
        if joint.type == kin.REVOLUTE:
            M[:3, :3] = quat.axis_angle_matrix(joint.axis, q[j])
        elif joint.type == kin.PRISMATIC:
            M[:3, 3] = q[j] * joint.axis
        T = T @ O @ M
    return T


def finite_diff_jacobian(model, active_q, frame, h=1e-6):
    """Central finite differences of FK: positional rows direct, angular rows
    from the relative rotation's axis-angle vector."""
    k = model.k
    J = np.zeros((6, k))
    for i in range(k):
        qp = np.array(active_q, dtype=float)
        qm = qp.copy()
        qp[i] += h
        qm[i] -= h
        Tp = homogeneous_fk(model, qp, frame)
        Tm = homogeneous_fk(model, qm, frame)
        J[:3, i] = (Tp[:3, 3] - Tm[:3, 3]) / (2 * h)
        dR = Tp[:3, :3] @ Tm[:3, :3].T
        angle = np.arccos(np.clip((np.trace(dR) - 1) / 2, -1, 1))
        if angle < 1e-12:
            w = np.zeros(3)
        else:
            w = (
                angle
                / (2 * np.sin(angle))
                * np.array([dR[2, 1] - dR[1, 2], dR[0, 2] - dR[2, 0], dR[1, 0] - dR[0, 1]])
            )
        J[3:, i] = w / (2 * h)
    return J


# --- loading & validation ----------------------------------------------------


def minimal_doc(**joint2_extra):
    j2 = {
        "name": "q2",
        "type": "revolute",
        "parent": "b",
        "child": "c",
        "origin": {"position": [1, 0, 0]},
        "axis": [0, 0, 1],
        "limits": [-3, 3],
    }
    j2.update(joint2_extra)
    return {
        "links": [{"name": "a"}, {"name": "b"}, {"name": "c"}],
        "joints": [
            {
                "name": "q1",
                "type": "revolute",
                "parent": "a",
                "child": "b",
                "axis": [0, 0, 1],
                "limits": [-3, 3],
            },
            j2,
        ],
    }


def test_load_minimal_chain():
    m = kin.load_model(minimal_doc())
    assert m.n == 2 and m.k == 2
    assert [j.name for j in m.joints] == ["q1", "q2"]


def test_load_identity_mimic():
    m = kin.load_model(minimal_doc(passive={"source": "q1", "coefficients": [0, 1]}))
    assert m.n == 2 and m.k == 1
    assert np.allclose(kin.full_config(m, [0.3]), [0.3, 0.3])


def test_passive_map_limit_violation_rejected():
    # c(q) = 2q exceeds the passive joint's upper limit at q_source = 3
    with pytest.raises(ModelError, match="leaves its limits"):
        kin.load_model(minimal_doc(passive={"source": "q1", "coefficients": [0, 2]}))


def test_passive_referencing_passive_rejected():
    doc = minimal_doc(passive={"source": "q1", "coefficients": [0, 1]})
    doc["links"].append({"name": "d"})
    doc["joints"].append(
        {
            "name": "q3",
            "type": "revolute",
            "parent": "c",
            "child": "d",
            "axis": [0, 0, 1],
            "limits": [-3, 3],
            "passive": {"source": "q2", "coefficients": [0, 1]},
        }
    )
    with pytest.raises(ModelError, match="not an active joint"):
        kin.load_model(doc)


def test_unknown_keys_rejected():
    doc = minimal_doc()
    doc["extra"] = 1
    with pytest.raises(ModelError, match="unknown keys"):
        kin.load_model(doc)
    doc = minimal_doc()
    doc["joints"][0]["typo"] = True
    with pytest.raises(ModelError, match="unknown keys"):
        kin.load_model(doc)


def test_cycle_rejected():
    doc = minimal_doc()
    doc["joints"].append(
        {
            "name": "back",
            "type": "fixed",
            "parent": "c",
            "child": "a",
        }
    )
    with pytest.raises(ModelError):
        kin.load_model(doc)


def test_two_parents_rejected():
    doc = minimal_doc()
    doc["joints"].append(
        {"name": "dup", "type": "fixed", "parent": "a", "child": "c"}
    )
    with pytest.raises(ModelError, match="more than one parent"):
        kin.load_model(doc)


def test_joint_ordering_active_first(fourbar_hand):
    names = [j.name for j in fourbar_hand.joints]
    assert names[: fourbar_hand.k] == [
        "thumb_rot",
        "thumb_flex",
        "index_mcp",
        "middle_mcp",
        "ring_mcp",
        "pinky_mcp",
    ]
    passives = names[fourbar_hand.k : fourbar_hand.n]
    assert passives == ["index_pip", "middle_pip", "ring_pip", "pinky_pip"]


# --- full_config ---------------------------------------------------------------


def test_full_config_polynomial():
    m = kin.load_model(
        minimal_doc(passive={"source": "q1", "coefficients": [0, 0.5, 0.1]})
    )
    # c(1.0) = 0.5 + 0.1 worked by hand
    assert np.allclose(kin.full_config(m, [1.0]), [1.0, 0.6])


def test_full_config_no_passive_is_identity(arm7, rng):
    q = random_active_q(arm7, rng)
    assert np.array_equal(kin.full_config(arm7, q), q)


# --- forward kinematics --------------------------------------------------------


def test_fk_planar_examples(planar_arm):
    p = kin.forward_kinematics(planar_arm, [0, 0], "ee")
    assert np.allclose(p.position, [2, 0, 0], atol=1e-12)
    assert kin.quaternion_angle(p.orientation, [1, 0, 0, 0]) < 1e-12
    p = kin.forward_kinematics(planar_arm, [np.pi / 2, 0], "ee")
    assert np.allclose(p.position, [0, 2, 0], atol=1e-12)


def test_fk_matches_matrix_chain_oracle(arm7, rng):
    for _ in range(20):
        q = random_active_q(arm7, rng)
        T = homogeneous_fk(arm7, q, "ee")
        pose = kin.forward_kinematics(arm7, q, "ee")
        assert np.linalg.norm(pose.position - T[:3, 3]) < 1e-10
        assert np.linalg.norm(pose.rotation_matrix() - T[:3, :3]) < 1e-10


def test_fk_root_is_identity(fourbar_hand, rng):
    q = random_active_q(fourbar_hand, rng)
    assert kin.forward_kinematics(fourbar_hand, q, "palm").approx_equal(
        kin.Pose.identity()
    )


def test_fk_unknown_frame(planar_arm):
    with pytest.raises(UnknownFrameError):
        kin.forward_kinematics(planar_arm, [0, 0], "nope")


def test_fk_deterministic(arm7, rng):
    q = random_active_q(arm7, rng)
    a = kin.forward_kinematics(arm7, q, "ee")
    b = kin.forward_kinematics(arm7, q, "ee")
    assert np.array_equal(a.position, b.position)
    assert np.array_equal(a.orientation, b.orientation)


# --- jacobians -------------------------------------------------------------------


def test_jacobian_planar_manipulability(planar_arm):
    res = kin.spatial_jacobian(planar_arm, [0.0, np.pi / 2], "ee")
    assert abs(res.manipulability - 1.0) < 1e-12  # l1*l2*|sin q2|
    res = kin.spatial_jacobian(planar_arm, [0.0, 0.0], "ee")
    assert res.manipulability < 1e-12
    assert res.smallest_singular_value < 1e-7


def test_jacobian_matches_finite_differences(arm7, fourbar_hand, rng):
    for model, frame in [(arm7, "ee"), (fourbar_hand, "index_tip"), (fourbar_hand, "thumb_tip")]:
        for _ in range(8):
            q = random_active_q(model, rng)
            J = kin.spatial_jacobian(model, q, frame).jacobian
            J_fd = finite_diff_jacobian(model, q, frame)
            assert np.max(np.abs(J - J_fd)) < 1e-5


def test_jacobian_s0_matches_svd_oracle(arm7, rng):
    q = random_active_q(arm7, rng)
    res = kin.spatial_jacobian(arm7, q, "ee")
    sv = np.linalg.svd(res.jacobian[:3], compute_uv=False)
    assert abs(res.smallest_singular_value - sv.min()) < 1e-12


def test_passive_fold_in_equals_column_sum():
    # identity mimic: folded column 0 == sum of the two expanded columns
    mimic = kin.load_model(minimal_doc(passive={"source": "q1", "coefficients": [0, 1]}))
    expanded = kin.load_model(minimal_doc())
    q = 0.7
    Jm = kin.spatial_jacobian(mimic, [q], "c").jacobian
    Je = kin.spatial_jacobian(expanded, [q, q], "c").jacobian
    assert np.allclose(Jm[:, 0], Je[:, 0] + Je[:, 1], atol=1e-12)


def test_quaternion_sign_invariance():
    a = kin.Pose([0, 0, 0], [0.5, 0.5, 0.5, 0.5])
    b = kin.Pose([0, 0, 0], [-0.5, -0.5, -0.5, -0.5])
    assert a.approx_equal(b)
    assert kin.quaternion_angle(a.orientation, b.orientation) < 1e-12


def test_check_active_limits(arm7):
    with pytest.raises(LimitError):
        kin.check_active_limits(arm7, np.full(arm7.k, 10.0))
    kin.check_active_limits(arm7, np.zeros(arm7.k))
