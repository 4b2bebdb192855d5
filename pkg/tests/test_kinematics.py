"""Frame algebra and Jacobian operation tests.

Oracles: random full-row-rank Jacobians are built from an SVD factorization
with singular values bounded away from zero, so Moore-Penrose residuals have
known conditioning; rotation round trips use independently constructed
axis-angle matrices.
"""

import math

import numpy as np
import pytest

from graspsim.errors import FrameMismatchError, SingularityError
from graspsim.kinematics import (
    Frame,
    Pose,
    Twist,
    Wrench,
    block_rotation,
    is_rotation,
    jacobian_pinv,
    joint_accel_decomposition,
    joint_to_cartesian_vel,
    null_projector,
    quat_exp,
    quat_from_rotation,
    quat_mul,
    quat_normalize,
    rot_x,
    rot_y,
    rot_z,
    rotation_from_quat,
    skew,
    twist_to_base,
    twist_to_ee,
    wrench_to_ee,
)

SEED = 20260825


def random_rotation(rng):
    """Oracle-side rotation: axis-angle via Rodrigues, independent of quat code."""
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    angle = rng.uniform(-math.pi, math.pi)
    K = skew(axis)
    return np.eye(3) + math.sin(angle) * K + (1 - math.cos(angle)) * (K @ K)


def random_wide_jacobian(rng, m, n, smin=0.5, smax=2.0):
    """Full-row-rank (m, n) matrix with singular values in [smin, smax]."""
    A = rng.normal(size=(m, m))
    U, _ = np.linalg.qr(A)
    B = rng.normal(size=(n, m))
    V, _ = np.linalg.qr(B)
    s = rng.uniform(smin, smax, size=m)
    return U @ np.diag(s) @ V.T


# ---------------------------------------------------------------------------
# quaternions and rotations
# ---------------------------------------------------------------------------


def test_rotation_from_quat_round_trip():
    rng = np.random.default_rng(SEED)
    for _ in range(200):
        q = quat_normalize(rng.normal(size=4))
        if q[0] < 0:
            q = -q
        R = rotation_from_quat(q)
        assert is_rotation(R, tol=1e-9)
        q2 = quat_from_rotation(R)
        assert np.max(np.abs(q2 - q)) < 1e-10


def test_quat_from_rotation_matches_axis_angle_oracle():
    rng = np.random.default_rng(SEED + 1)
    for _ in range(200):
        R = random_rotation(rng)
        q = quat_from_rotation(R)
        assert np.max(np.abs(rotation_from_quat(q) - R)) < 1e-10


def test_quat_exp_pi_about_z():
    q = quat_exp(np.array([0.0, 0.0, math.pi]))
    R = rotation_from_quat(q)
    assert np.max(np.abs(R - rot_z(math.pi))) < 1e-12


def test_quat_exp_small_angle_series():
    w = np.array([1e-14, -2e-14, 5e-15])
    q = quat_exp(w)
    assert abs(float(q @ q) - 1.0) < 1e-15
    R = rotation_from_quat(q)
    assert np.max(np.abs(R - (np.eye(3) + skew(w)))) < 1e-13


def test_quat_exp_composes_along_fixed_axis():
    a = np.array([0.3, -0.4, 0.5])
    q1 = quat_exp(a)
    q2 = quat_exp(0.5 * a)
    assert np.max(np.abs(quat_mul(q2, q2) - q1)) < 1e-12


@pytest.mark.parametrize("make,axis", [(rot_x, 0), (rot_y, 1), (rot_z, 2)])
def test_elementary_rotations_fix_their_axis(make, axis):
    R = make(0.7)
    e = np.zeros(3)
    e[axis] = 1.0
    assert np.allclose(R @ e, e)
    assert is_rotation(R)


def test_pose_normalizes_and_validates_quaternion():
    p = Pose(position=[0.1, 0.2, 0.3], orientation=[1.0 + 1e-8, 0.0, 0.0, 0.0])
    assert abs(np.linalg.norm(p.orientation) - 1.0) < 1e-15
    with pytest.raises(ValueError):
        Pose(position=[0, 0, 0], orientation=[0.9, 0, 0, 0])


def test_pose_rotation_round_trip():
    rng = np.random.default_rng(SEED + 2)
    for _ in range(100):
        q = quat_normalize(rng.normal(size=4))
        if q[0] < 0:
            q = -q
        pose = Pose(position=rng.normal(size=3), orientation=q)
        assert np.max(np.abs(quat_from_rotation(pose.rotation()) - q)) < 1e-10


# ---------------------------------------------------------------------------
# twists / wrenches / frame maps
# ---------------------------------------------------------------------------


def test_twist_round_trip_many():
    rng = np.random.default_rng(SEED + 3)
    for _ in range(1000):
        R = random_rotation(rng)
        t = Twist(rng.normal(size=3), rng.normal(size=3), Frame.EE)
        back = twist_to_ee(twist_to_base(t, R), R)
        assert np.max(np.abs(back.as_array() - t.as_array())) < 1e-12
        assert back.frame is Frame.EE


def test_wrench_round_trip_preserves_norms():
    rng = np.random.default_rng(SEED + 4)
    for _ in range(1000):
        R = random_rotation(rng)
        w = Wrench(rng.normal(size=3), rng.normal(size=3), Frame.BASE)
        we = wrench_to_ee(w, R)
        assert abs(np.linalg.norm(we.force) - np.linalg.norm(w.force)) < 1e-12
        assert abs(np.linalg.norm(we.moment) - np.linalg.norm(w.moment)) < 1e-12
        assert we.frame is Frame.EE


def test_frame_maps_reject_wrong_frame():
    R = np.eye(3)
    t_base = Twist(np.zeros(3), np.zeros(3), Frame.BASE)
    t_ee = Twist(np.zeros(3), np.zeros(3), Frame.EE)
    w_ee = Wrench(np.zeros(3), np.zeros(3), Frame.EE)
    with pytest.raises(FrameMismatchError):
        twist_to_base(t_base, R)
    with pytest.raises(FrameMismatchError):
        twist_to_ee(t_ee, R)
    with pytest.raises(FrameMismatchError):
        wrench_to_ee(w_ee, R)


def test_twist_arithmetic_requires_matching_frames():
    a = Twist([1, 0, 0], [0, 0, 1], Frame.EE)
    b = Twist([0, 1, 0], [0, 0, 2], Frame.EE)
    c = a + b
    assert np.allclose(c.as_array(), [1, 1, 0, 0, 0, 3])
    with pytest.raises(FrameMismatchError):
        a + Twist([0, 1, 0], [0, 0, 2], Frame.BASE)


def test_block_rotation_structure():
    rng = np.random.default_rng(SEED + 5)
    R = random_rotation(rng)
    B = block_rotation(R)
    assert np.allclose(B[:3, :3], R)
    assert np.allclose(B[3:, 3:], R)
    assert np.allclose(B[:3, 3:], 0.0)
    assert np.allclose(B.T @ B, np.eye(6), atol=1e-12)
    t = rng.normal(size=6)
    tw = Twist.from_array(t, Frame.EE)
    assert np.allclose(twist_to_base(tw, R).as_array(), B @ t, atol=1e-12)


# ---------------------------------------------------------------------------
# Jacobian algebra
# ---------------------------------------------------------------------------


def test_pinv_frozen_row_vector():
    # J = [1 1]: J J^T = 2, so J+ = [0.5, 0.5]^T exactly.
    P = jacobian_pinv(np.array([[1.0, 1.0]]))
    assert np.allclose(P, np.array([[0.5], [0.5]]), atol=1e-15)


def test_pinv_frozen_selector():
    J = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    P = jacobian_pinv(J)
    assert np.allclose(P, np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]), atol=1e-15)


def test_null_projector_frozen_selector():
    J = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    N = null_projector(J)
    assert np.allclose(N, np.diag([0.0, 0.0, 1.0]), atol=1e-14)


@pytest.mark.parametrize("m,n", [(2, 3), (3, 6), (6, 6), (6, 7), (6, 9)])
def test_moore_penrose_identities(m, n):
    rng = np.random.default_rng(SEED + 10 * m + n)
    for _ in range(20):
        J = random_wide_jacobian(rng, m, n)
        P = jacobian_pinv(J)
        assert np.max(np.abs(J @ P - np.eye(m))) < 1e-9
        assert np.max(np.abs(P @ J @ P - P)) < 1e-9
        assert np.max(np.abs(J @ P @ J - J)) < 1e-9
        assert np.max(np.abs((P @ J).T - P @ J)) < 1e-9


@pytest.mark.parametrize("m,n", [(3, 6), (6, 9)])
def test_null_projector_annihilated(m, n):
    rng = np.random.default_rng(SEED + 100 * m + n)
    for _ in range(20):
        J = random_wide_jacobian(rng, m, n)
        N = null_projector(J)
        v = rng.normal(size=n)
        assert np.linalg.norm(J @ (N @ v)) < 1e-9 * max(1.0, np.linalg.norm(v))
        assert np.max(np.abs(N @ N - N)) < 1e-9


def test_square_null_projector_vanishes():
    rng = np.random.default_rng(SEED + 6)
    J = random_wide_jacobian(rng, 4, 4)
    assert np.max(np.abs(null_projector(J))) < 1e-9


def test_pinv_rejects_rank_deficient():
    J = np.array([[1.0, 0.0, 0.0], [1.0, 1e-6, 0.0]])  # Gram eig ~ 5e-13
    with pytest.raises(SingularityError):
        jacobian_pinv(J)
    # Threshold is configurable: loosening it lets the solve proceed.
    jacobian_pinv(J, min_gram_eig=1e-14)


def test_pinv_rejects_tall_matrix():
    with pytest.raises(ValueError):
        jacobian_pinv(np.zeros((6, 2)))


def test_joint_to_cartesian_vel_identity_stack():
    J = np.eye(6)
    qdot = np.array([1.0, 2.0, 3.0, 4.0, 5.0, 6.0])
    t = joint_to_cartesian_vel(J, qdot)
    assert t.frame is Frame.BASE
    assert np.allclose(t.linear, [1, 2, 3])
    assert np.allclose(t.angular, [4, 5, 6])


def test_joint_accel_decomposition_zero_case():
    # xddot equal to Jdot qdot and no null request -> exactly zero.
    rng = np.random.default_rng(SEED + 7)
    J = random_wide_jacobian(rng, 6, 9)
    Jdot = rng.normal(size=(6, 9))
    qdot = rng.normal(size=9)
    qdd = joint_accel_decomposition(J, Jdot, qdot, Jdot @ qdot, np.zeros(9))
    assert np.max(np.abs(qdd)) < 1e-9


def test_joint_accel_decomposition_reconstructs_task():
    rng = np.random.default_rng(SEED + 8)
    for _ in range(50):
        J = random_wide_jacobian(rng, 6, 9)
        Jdot = rng.normal(size=(6, 9))
        qdot = rng.normal(size=9)
        xddot = rng.normal(size=6)
        qn = rng.normal(size=9)
        qdd = joint_accel_decomposition(J, Jdot, qdot, xddot, qn)
        # J qddot + Jdot qdot must reproduce the requested Cartesian accel
        # regardless of the null-space component.
        back = J @ qdd + Jdot @ qdot
        assert np.max(np.abs(back - xddot)) < 1e-9
