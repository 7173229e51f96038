import numpy as np
import pytest

from dawnik import autodiff as ad
from dawnik.geometry import matrix_from_quat, normalize_quat, quat_from_matrix
from dawnik.kinematics import (
    ArmState,
    Pose,
    advance_state,
    backward_difference_derivatives,
    batch_forward_kinematics,
    batch_sphere_centers,
    end_effector_pose,
    filter_derivatives,
    forward_kinematics,
    sphere_world_positions,
)

from conftest import random_q


def homogeneous_fk_oracle(model, q):
    """Independent FK: explicit 4x4 homogeneous products, rotation via
    matrix exponential series instead of the production Rodrigues path."""

    def expm_skew(axis, angle):
        k = np.array([[0, -axis[2], axis[1]], [axis[2], 0, -axis[0]], [-axis[1], axis[0], 0]])
        m = k * angle
        acc = np.eye(3)
        term = np.eye(3)
        for i in range(1, 120):
            term = term @ m / i
            acc = acc + term
            if np.abs(term).max() < 1e-18:
                break
        return acc

    def hom(r, t):
        h = np.eye(4)
        h[:3, :3] = r
        h[:3, 3] = t
        return h

    frames = [np.eye(4)]
    tf = np.eye(4)
    qi = 0
    for joint in model.joints:
        if joint.kind == "revolute":
            tf = tf @ hom(expm_skew(joint.axis, q[qi]), np.zeros(3))
            qi += 1
        tf = tf @ hom(np.asarray(joint.origin.R), np.asarray(joint.origin.t))
        frames.append(tf)
    return frames


# -- forward kinematics -----------------------------------------------------------


def test_planar_zero_configuration(planar2):
    frames = forward_kinematics(planar2, np.zeros(2))
    np.testing.assert_allclose(np.asarray(frames[-1].t), [1.0, 0.0, 0.0], atol=1e-15)
    np.testing.assert_allclose(np.asarray(frames[-1].R), np.eye(3), atol=1e-15)


def test_planar_elbow_up(planar2):
    pose = end_effector_pose(planar2, np.array([np.pi / 2, 0.0]))
    np.testing.assert_allclose(pose.position, [0.0, 1.0, 0.0], atol=1e-12)


def test_planar_bent(planar2):
    q = np.array([np.pi / 2, -np.pi / 2])
    pose = end_effector_pose(planar2, q)
    # 0.5*(c1, s1) + 0.5*(c12, s12)
    expected = 0.5 * np.array([np.cos(q[0]) + np.cos(q.sum()),
                               np.sin(q[0]) + np.sin(q.sum()), 0.0])
    np.testing.assert_allclose(pose.position, expected, atol=1e-12)


def test_fk_matches_homogeneous_oracle(s6):
    rng = np.random.default_rng(11)
    for _ in range(20):
        q = random_q(s6, rng)
        frames = forward_kinematics(s6, q)
        oracle = homogeneous_fk_oracle(s6, q)
        for got, want in zip(frames, oracle):
            np.testing.assert_allclose(np.asarray(got.R), want[:3, :3], atol=1e-12)
            np.testing.assert_allclose(np.asarray(got.t), want[:3, 3], atol=1e-12)


def test_fk_home_configuration_oracle(s6):
    frames = forward_kinematics(s6, np.zeros(6))
    oracle = homogeneous_fk_oracle(s6, np.zeros(6))
    np.testing.assert_allclose(np.asarray(frames[-1].t), oracle[-1][:3, 3], atol=1e-12)


def test_fk_dimension_mismatch(s6):
    with pytest.raises(ValueError):
        forward_kinematics(s6, np.zeros(5))


def test_fk_chain_consistency(s7):
    rng = np.random.default_rng(5)
    for _ in range(100):
        q = random_q(s7, rng)
        frames = forward_kinematics(s7, q)
        qi = 0
        for k, joint in enumerate(s7.joints):
            parent = frames[k]
            child = frames[k + 1]
            from dawnik.geometry import rotation_from_basis

            if joint.kind == "revolute":
                spin = np.asarray(parent.R) @ rotation_from_basis(joint.rot_basis, q[qi])
                qi += 1
            else:
                spin = np.asarray(parent.R)
            np.testing.assert_allclose(
                np.asarray(child.R), spin @ np.asarray(joint.origin.R), atol=1e-12
            )
            np.testing.assert_allclose(
                np.asarray(child.t),
                spin @ np.asarray(joint.origin.t) + np.asarray(parent.t),
                atol=1e-12,
            )


def test_rotation_orthonormality(s6):
    rng = np.random.default_rng(6)
    for _ in range(50):
        q = random_q(s6, rng)
        for frame in forward_kinematics(s6, q):
            r = np.asarray(frame.R)
            np.testing.assert_allclose(r @ r.T, np.eye(3), atol=1e-9)


def test_batch_fk_matches_scalar(s7):
    rng = np.random.default_rng(8)
    Q = np.stack([random_q(s7, rng) for _ in range(16)])
    batched = batch_forward_kinematics(s7, Q)
    for b in (0, 7, 15):
        scalar = forward_kinematics(s7, Q[b])
        for k in range(len(scalar)):
            np.testing.assert_allclose(batched[k][0][b], np.asarray(scalar[k].R), atol=1e-13)
            np.testing.assert_allclose(batched[k][1][b], np.asarray(scalar[k].t), atol=1e-13)


# -- end-effector pose -------------------------------------------------------------


def test_ee_pose_zero_configuration(s6):
    pose = end_effector_pose(s6, np.zeros(6))
    oracle = homogeneous_fk_oracle(s6, np.zeros(6))[s6.ee_index]
    np.testing.assert_allclose(pose.position, oracle[:3, 3], atol=1e-12)
    np.testing.assert_allclose(matrix_from_quat(pose.orientation), oracle[:3, :3], atol=1e-12)


def test_pose_hemisphere_normalization():
    q = normalize_quat(np.array([-0.5, 0.5, 0.5, 0.5]))
    assert q[0] >= 0
    pose = Pose(np.zeros(3), [-1.0, 0.0, 0.0, 0.0])
    assert pose.orientation[0] == 1.0


def test_quaternion_double_cover(s6):
    rng = np.random.default_rng(9)
    q = random_q(s6, rng)
    pose = end_effector_pose(s6, q)
    flipped = Pose(pose.position, -pose.orientation)
    np.testing.assert_allclose(pose.orientation, flipped.orientation, atol=1e-15)


# -- collision spheres --------------------------------------------------------------


def test_sphere_world_zero_config_matches_local():
    import json

    from conftest import minimal_description
    from dawnik.model import parse_robot_description

    doc = json.loads(minimal_description())
    doc["links"][0]["collision"] = [
        {"type": "sphere", "dims": [0.04], "pose": {"xyz": [0.1, 0.2, 0.3]}}
    ]
    doc["links"][1]["collision"] = []
    model = parse_robot_description(json.dumps(doc))
    world = sphere_world_positions(model, np.zeros(1))
    np.testing.assert_allclose(world.centers[0], [0.1, 0.2, 0.3], atol=1e-15)


def test_sphere_world_base_rotation_negates_xy(s6):
    at_zero = sphere_world_positions(s6, np.zeros(6))
    rolled = sphere_world_positions(s6, np.array([np.pi, 0, 0, 0, 0, 0]))
    np.testing.assert_allclose(rolled.centers[:, 0], -at_zero.centers[:, 0], atol=1e-12)
    np.testing.assert_allclose(rolled.centers[:, 1], -at_zero.centers[:, 1], atol=1e-12)
    np.testing.assert_allclose(rolled.centers[:, 2], at_zero.centers[:, 2], atol=1e-12)


def test_sphere_world_matches_fk_oracle(s6):
    rng = np.random.default_rng(12)
    q = random_q(s6, rng)
    world = sphere_world_positions(s6, q)
    oracle = homogeneous_fk_oracle(s6, q)
    for row in range(s6.num_spheres):
        link = s6.sphere_link[row]
        local = np.append(s6.sphere_centers[row], 1.0)
        np.testing.assert_allclose(world.centers[row], (oracle[link] @ local)[:3], atol=1e-12)
    assert world.count == s6.num_spheres
    np.testing.assert_allclose(world.radii, s6.sphere_radii)


def test_batch_sphere_centers_match(s6):
    rng = np.random.default_rng(13)
    Q = np.stack([random_q(s6, rng) for _ in range(4)])
    centers = batch_sphere_centers(s6, batch_forward_kinematics(s6, Q))
    for b in range(4):
        expected = sphere_world_positions(s6, Q[b]).centers
        np.testing.assert_allclose(centers[b], expected, atol=1e-13)


# -- derivatives ---------------------------------------------------------------------


def test_backward_differences_constant_history():
    seq = [np.array([0.3, -0.2])] * 4
    d = backward_difference_derivatives(seq, 0.01)
    assert not d.warmup
    np.testing.assert_allclose(d.qdot, 0)
    np.testing.assert_allclose(d.qddot, 0)
    np.testing.assert_allclose(d.qdddot, 0)


def test_backward_differences_quadratic_exact():
    dt = 0.01
    ts = np.array([0.0, 1.0, 2.0, 3.0]) * dt
    seq = [np.array([t * t]) for t in ts]
    d = backward_difference_derivatives(seq, dt)
    np.testing.assert_allclose(d.qddot, [2.0], atol=1e-9)
    np.testing.assert_allclose(d.qdddot, [0.0], atol=1e-9)


def test_backward_differences_hand_values():
    seq = [np.array([v]) for v in (0.0, 0.01, 0.03, 0.06)]
    d = backward_difference_derivatives(seq, 0.01)
    np.testing.assert_allclose(d.qdot, [3.0], atol=1e-12)
    np.testing.assert_allclose(d.qddot, [100.0], atol=1e-9)
    np.testing.assert_allclose(d.qdddot, [0.0], atol=1e-6)


def test_backward_differences_linear_exact_velocity():
    dt = 0.02
    seq = [np.array([2.5 * k * dt]) for k in range(4)]
    d = backward_difference_derivatives(seq, dt)
    np.testing.assert_allclose(d.qdot, [2.5], atol=1e-12)
    np.testing.assert_allclose(d.qddot, [0.0], atol=1e-9)


def test_backward_differences_warmup():
    d = backward_difference_derivatives([np.array([1.0])], 0.01)
    assert d.warmup
    np.testing.assert_allclose(d.qdot, 0)
    d2 = backward_difference_derivatives([np.array([0.0]), np.array([0.1])], 0.01)
    assert d2.warmup
    np.testing.assert_allclose(d2.qdot, [10.0])
    np.testing.assert_allclose(d2.qddot, 0)


def test_backward_differences_rejects_bad_dt():
    with pytest.raises(ValueError):
        backward_difference_derivatives([np.zeros(2)], 0.0)


def test_filter_identity_and_passthrough():
    raw = np.array([10.0])
    prev = np.array([0.0])
    np.testing.assert_allclose(filter_derivatives(raw, prev, 1.0), raw)
    np.testing.assert_allclose(filter_derivatives(raw, prev, 0.0), prev)
    np.testing.assert_allclose(filter_derivatives(raw, prev, 0.2), [2.0])


def test_filter_rejects_bad_alpha():
    with pytest.raises(ValueError):
        filter_derivatives(np.zeros(1), np.zeros(1), 1.5)


def test_arm_state_history_stamps_must_increase():
    with pytest.raises(ValueError):
        ArmState(q=np.zeros(2), stamp=0.3,
                 history=((0.1, np.zeros(2)), (0.2, np.zeros(2))))


def test_advance_state_shifts_history_and_filters():
    state = ArmState(q=np.zeros(1), stamp=0.0)
    s1 = advance_state(state, np.array([0.01]), stamp=0.01, dt=0.01, alpha=1.0)
    assert len(s1.history) == 1
    np.testing.assert_allclose(s1.qdot, [1.0])
    s2 = advance_state(s1, np.array([0.03]), stamp=0.02, dt=0.01, alpha=1.0)
    np.testing.assert_allclose(s2.qdot, [2.0])
    np.testing.assert_allclose(s2.qddot, [100.0])
    assert len(s2.history) == 2
    s3 = advance_state(s2, np.array([0.06]), stamp=0.03, dt=0.01, alpha=1.0)
    s4 = advance_state(s3, np.array([0.10]), stamp=0.04, dt=0.01, alpha=1.0)
    assert len(s4.history) == 3  # history depth capped at three


# -- differentiability (forward mode vs central differences) -------------------------


def test_ee_position_gradient_matches_finite_differences(s6):
    rng = np.random.default_rng(21)
    h = 1e-6
    for _ in range(100):
        q = random_q(s6, rng)
        tf = forward_kinematics(s6, ad.seed(q))[s6.ee_index]
        jac = tf.t.der  # (3, n)
        for j in range(s6.n):
            qp, qm = q.copy(), q.copy()
            qp[j] += h
            qm[j] -= h
            fd = (
                np.asarray(forward_kinematics(s6, qp)[s6.ee_index].t)
                - np.asarray(forward_kinematics(s6, qm)[s6.ee_index].t)
            ) / (2 * h)
            denom = max(np.max(np.abs(fd)), 1e-6)
            assert np.max(np.abs(jac[:, j] - fd)) / denom < 1e-5
