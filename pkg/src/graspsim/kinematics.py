"""Rigid-body frame algebra: poses, twists, wrenches, Jacobian operations.

Conventions used throughout the package:

  * Quaternions are unit, ordered (w, x, y, z), and encode the rotation that
    maps end-effector-frame vectors into the base frame (R = rotation(q),
    v_base = R @ v_ee).
  * Twists stack [linear; angular], wrenches stack [force; moment].  Both
    carry an explicit frame tag; mixing frames raises FrameMismatchError.
  * Jacobians map joint velocity to a base-frame twist, ordered the same way.
  * The right pseudoinverse J+ = J^T (J J^T)^-1 is computed by solving the
    Gram system rather than forming the inverse; rank deficiency is detected
    on the smallest eigenvalue of J J^T.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import FrameMismatchError, SingularityError

Array = np.ndarray

# Smallest acceptable eigenvalue of J J^T before the pseudoinverse is refused.
DEFAULT_GRAM_EIG_THRESHOLD = 1e-8


class Frame(Enum):
    """Reference frame tag for spatial quantities."""

    BASE = "base"
    EE = "end-effector"


# ---------------------------------------------------------------------------
# quaternion helpers (w, x, y, z)
# ---------------------------------------------------------------------------


def quat_normalize(q: Array) -> Array:
    q = np.asarray(q, dtype=float)
    n = math.sqrt(float(q @ q))
    if n < 1e-12:
        raise ValueError("cannot normalize near-zero quaternion")
    return q / n


def quat_mul(a: Array, b: Array) -> Array:
    """Hamilton product a*b, both (w, x, y, z)."""
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ]
    )


def quat_conjugate(q: Array) -> Array:
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_exp(rotvec: Array) -> Array:
    """Unit quaternion for a rotation vector (axis * angle, radians)."""
    rx, ry, rz = float(rotvec[0]), float(rotvec[1]), float(rotvec[2])
    angle = math.sqrt(rx * rx + ry * ry + rz * rz)
    half = 0.5 * angle
    if angle < 1e-12:
        # First-order series; renormalized so the result is exactly unit.
        q = np.array([1.0, 0.5 * rx, 0.5 * ry, 0.5 * rz])
        return quat_normalize(q)
    s = math.sin(half) / angle
    return np.array([math.cos(half), rx * s, ry * s, rz * s])


def rotation_from_quat(q: Array) -> Array:
    """3x3 rotation matrix of a unit quaternion (w, x, y, z)."""
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def quat_from_rotation(R: Array) -> Array:
    """Unit quaternion (w >= 0) of a rotation matrix, Shepperd's method."""
    R = np.asarray(R, dtype=float)
    tr = R[0, 0] + R[1, 1] + R[2, 2]
    if tr > 0.0:
        s = math.sqrt(tr + 1.0) * 2.0
        q = np.array(
            [
                0.25 * s,
                (R[2, 1] - R[1, 2]) / s,
                (R[0, 2] - R[2, 0]) / s,
                (R[1, 0] - R[0, 1]) / s,
            ]
        )
    elif R[0, 0] >= R[1, 1] and R[0, 0] >= R[2, 2]:
        s = math.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2]) * 2.0
        q = np.array(
            [
                (R[2, 1] - R[1, 2]) / s,
                0.25 * s,
                (R[0, 1] + R[1, 0]) / s,
                (R[0, 2] + R[2, 0]) / s,
            ]
        )
    elif R[1, 1] >= R[2, 2]:
        s = math.sqrt(1.0 + R[1, 1] - R[0, 0] - R[2, 2]) * 2.0
        q = np.array(
            [
                (R[0, 2] - R[2, 0]) / s,
                (R[0, 1] + R[1, 0]) / s,
                0.25 * s,
                (R[1, 2] + R[2, 1]) / s,
            ]
        )
    else:
        s = math.sqrt(1.0 + R[2, 2] - R[0, 0] - R[1, 1]) * 2.0
        q = np.array(
            [
                (R[1, 0] - R[0, 1]) / s,
                (R[0, 2] + R[2, 0]) / s,
                (R[1, 2] + R[2, 1]) / s,
                0.25 * s,
            ]
        )
    q = quat_normalize(q)
    if q[0] < 0.0:
        q = -q
    return q


def rot_x(angle: float) -> Array:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(angle: float) -> Array:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(angle: float) -> Array:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def is_rotation(R: Array, tol: float = 1e-9) -> bool:
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3):
        return False
    return (
        np.max(np.abs(R.T @ R - np.eye(3))) < tol
        and abs(float(np.linalg.det(R)) - 1.0) < tol
    )


def skew(v: Array) -> Array:
    """Cross-product matrix: skew(v) @ u == cross(v, u)."""
    return np.array(
        [
            [0.0, -v[2], v[1]],
            [v[2], 0.0, -v[0]],
            [-v[1], v[0], 0.0],
        ]
    )


# ---------------------------------------------------------------------------
# value types
# ---------------------------------------------------------------------------


def _vec(x, n: int, name: str) -> Array:
    a = np.asarray(x, dtype=float)
    if a.shape != (n,):
        raise ValueError(f"{name} must have shape ({n},), got {a.shape}")
    return a


@dataclass(frozen=True)
class Pose:
    """Position plus orientation quaternion (w, x, y, z), base <- end-effector."""

    position: Array
    orientation: Array

    def __post_init__(self):
        object.__setattr__(self, "position", _vec(self.position, 3, "position"))
        q = _vec(self.orientation, 4, "orientation")
        n = math.sqrt(float(q @ q))
        if abs(n - 1.0) > 1e-6:
            raise ValueError(f"orientation quaternion norm {n:.6g} is not 1")
        object.__setattr__(self, "orientation", q / n)

    def rotation(self) -> Array:
        return rotation_from_quat(self.orientation)


@dataclass(frozen=True)
class Twist:
    """Velocity of a frame: [linear; angular], tagged with its frame."""

    linear: Array
    angular: Array
    frame: Frame

    def __post_init__(self):
        object.__setattr__(self, "linear", _vec(self.linear, 3, "linear"))
        object.__setattr__(self, "angular", _vec(self.angular, 3, "angular"))
        if not isinstance(self.frame, Frame):
            raise TypeError("frame must be a Frame")

    def as_array(self) -> Array:
        return np.concatenate([self.linear, self.angular])

    @staticmethod
    def from_array(arr: Array, frame: Frame) -> "Twist":
        a = _vec(arr, 6, "twist array")
        return Twist(a[:3], a[3:], frame)

    def _require_same_frame(self, other: "Twist"):
        if self.frame is not other.frame:
            raise FrameMismatchError(
                f"twist frames differ: {self.frame.value} vs {other.frame.value}"
            )

    def __add__(self, other: "Twist") -> "Twist":
        self._require_same_frame(other)
        return Twist(self.linear + other.linear, self.angular + other.angular, self.frame)

    def __sub__(self, other: "Twist") -> "Twist":
        self._require_same_frame(other)
        return Twist(self.linear - other.linear, self.angular - other.angular, self.frame)


@dataclass(frozen=True)
class Wrench:
    """Interaction load: [force; moment], tagged with its frame."""

    force: Array
    moment: Array
    frame: Frame

    def __post_init__(self):
        object.__setattr__(self, "force", _vec(self.force, 3, "force"))
        object.__setattr__(self, "moment", _vec(self.moment, 3, "moment"))
        if not isinstance(self.frame, Frame):
            raise TypeError("frame must be a Frame")

    def as_array(self) -> Array:
        return np.concatenate([self.force, self.moment])

    @staticmethod
    def from_array(arr: Array, frame: Frame) -> "Wrench":
        a = _vec(arr, 6, "wrench array")
        return Wrench(a[:3], a[3:], frame)


# ---------------------------------------------------------------------------
# frame maps
# ---------------------------------------------------------------------------


def block_rotation(R: Array) -> Array:
    """6x6 block-diagonal [[R, 0], [0, R]] acting on stacked spatial vectors."""
    R = np.asarray(R, dtype=float)
    out = np.zeros((6, 6))
    out[:3, :3] = R
    out[3:, 3:] = R
    return out


def twist_to_base(t: Twist, R: Array) -> Twist:
    """Re-express an end-effector-frame twist in the base frame."""
    if t.frame is not Frame.EE:
        raise FrameMismatchError("twist_to_base expects an end-effector-frame twist")
    return Twist(R @ t.linear, R @ t.angular, Frame.BASE)


def twist_to_ee(t: Twist, R: Array) -> Twist:
    """Re-express a base-frame twist in the end-effector frame."""
    if t.frame is not Frame.BASE:
        raise FrameMismatchError("twist_to_ee expects a base-frame twist")
    return Twist(R.T @ t.linear, R.T @ t.angular, Frame.EE)


def wrench_to_ee(w: Wrench, R: Array) -> Wrench:
    """Re-express a base-frame wrench in the end-effector frame."""
    if w.frame is not Frame.BASE:
        raise FrameMismatchError("wrench_to_ee expects a base-frame wrench")
    return Wrench(R.T @ w.force, R.T @ w.moment, Frame.EE)


# ---------------------------------------------------------------------------
# Jacobian algebra
# ---------------------------------------------------------------------------


def _gram_solve(J: Array, rhs: Array, min_gram_eig: float) -> Array:
    """Solve (J J^T) Y = rhs after checking the Gram spectrum."""
    G = J @ J.T
    eigs = np.linalg.eigvalsh(G)
    if eigs[0] < min_gram_eig:
        raise SingularityError(
            f"smallest Gram eigenvalue {eigs[0]:.3e} below threshold {min_gram_eig:.3e}"
        )
    return np.linalg.solve(G, rhs)


def jacobian_pinv(J: Array, min_gram_eig: float = DEFAULT_GRAM_EIG_THRESHOLD) -> Array:
    """Right pseudoinverse J^T (J J^T)^-1 for a full-row-rank (m, n) Jacobian."""
    J = np.atleast_2d(np.asarray(J, dtype=float))
    m, n = J.shape
    if m > n:
        raise ValueError(f"expected a wide Jacobian (m <= n), got {J.shape}")
    Y = _gram_solve(J, J, min_gram_eig)  # Y = (J J^T)^-1 J, shape (m, n)
    return Y.T


def null_projector(J: Array, min_gram_eig: float = DEFAULT_GRAM_EIG_THRESHOLD) -> Array:
    """Projector I - J+ J onto the null space of J."""
    J = np.atleast_2d(np.asarray(J, dtype=float))
    n = J.shape[1]
    return np.eye(n) - jacobian_pinv(J, min_gram_eig) @ J


def joint_to_cartesian_vel(J: Array, qdot: Array) -> Twist:
    """Base-frame twist J @ qdot of a joint-velocity vector."""
    J = np.asarray(J, dtype=float)
    if J.shape[0] != 6:
        raise ValueError(f"expected a 6-row Jacobian, got {J.shape}")
    x = J @ np.asarray(qdot, dtype=float)
    return Twist(x[:3], x[3:], Frame.BASE)


def joint_accel_decomposition(
    J: Array,
    Jdot: Array,
    qdot: Array,
    xddot: Array,
    qddot_null: Array,
    min_gram_eig: float = DEFAULT_GRAM_EIG_THRESHOLD,
) -> Array:
    """Joint acceleration J+ (xddot - Jdot qdot) + (I - J+ J) qddot_null.

    The first term realizes the Cartesian acceleration, the second moves in
    the self-motion manifold without disturbing it.
    """
    J = np.atleast_2d(np.asarray(J, dtype=float))
    Jdot = np.atleast_2d(np.asarray(Jdot, dtype=float))
    qdot = np.asarray(qdot, dtype=float)
    xddot = np.asarray(xddot, dtype=float)
    qddot_null = np.asarray(qddot_null, dtype=float)
    pinv = jacobian_pinv(J, min_gram_eig)
    task = pinv @ (xddot - Jdot @ qdot)
    null = qddot_null - pinv @ (J @ qddot_null)
    return task + null
