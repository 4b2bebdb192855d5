"""Robot-side models: planar two-link dynamics and a velocity-mode plant.

The two-link arm is the torque-level testbed: two point masses at the link
ends moving in a vertical plane (x right, y up, gravity -y).  Its closed-form
mass matrix, Christoffel Coriolis matrix, and gravity vector satisfy the
usual passivity structure (Mdot - 2C skew-symmetric), which the tests check
against finite-difference oracles.

The velocity-mode plant is the deployment abstraction used by the scenario
engine: an ideal rigid body whose achieved twist follows the commanded twist
through a per-axis first-order lag with saturation.  A time constant of zero
selects exact tracking (the "ideal plant" used by the analytic decay checks).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .kinematics import (
    Frame,
    Pose,
    Twist,
    Wrench,
    jacobian_pinv,
    quat_exp,
    quat_mul,
    quat_normalize,
)

Array = np.ndarray


@dataclass(frozen=True)
class JointState:
    """Joint positions and velocities."""

    q: Array
    qdot: Array

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        qd = np.asarray(self.qdot, dtype=float)
        if q.shape != qd.shape or q.ndim != 1:
            raise ValueError(f"inconsistent joint state shapes {q.shape} vs {qd.shape}")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "qdot", qd)


@dataclass(frozen=True)
class TwoLinkModel:
    """Point masses m1, m2 at the ends of links l1, l2; viscous joint friction."""

    m1: float
    m2: float
    l1: float
    l2: float
    g0: float = 9.81
    b1: float = 0.0
    b2: float = 0.0

    def __post_init__(self):
        if min(self.m1, self.m2) <= 0.0 or min(self.l1, self.l2) <= 0.0:
            raise ValueError("masses and lengths must be strictly positive")
        if self.b1 < 0.0 or self.b2 < 0.0:
            raise ValueError("friction coefficients must be nonnegative")


def mass_matrix(model: TwoLinkModel, q: Array) -> Array:
    c2 = math.cos(q[1])
    a = model.m2 * model.l1 * model.l2 * c2
    m11 = (
        model.m1 * model.l1**2
        + model.m2 * (model.l1**2 + model.l2**2)
        + 2.0 * a
    )
    m12 = model.m2 * model.l2**2 + a
    m22 = model.m2 * model.l2**2
    return np.array([[m11, m12], [m12, m22]])


def coriolis_matrix(model: TwoLinkModel, q: Array, qdot: Array) -> Array:
    """Christoffel-consistent C(q, qd): Mdot - 2C is skew-symmetric."""
    h = -model.m2 * model.l1 * model.l2 * math.sin(q[1])
    return np.array(
        [
            [h * qdot[1], h * (qdot[0] + qdot[1])],
            [-h * qdot[0], 0.0],
        ]
    )


def coriolis_vector(model: TwoLinkModel, q: Array, qdot: Array) -> Array:
    return coriolis_matrix(model, q, qdot) @ np.asarray(qdot, dtype=float)


def gravity_vector(model: TwoLinkModel, q: Array) -> Array:
    c1 = math.cos(q[0])
    c12 = math.cos(q[0] + q[1])
    g1 = (model.m1 + model.m2) * model.g0 * model.l1 * c1 + model.m2 * model.g0 * model.l2 * c12
    g2 = model.m2 * model.g0 * model.l2 * c12
    return np.array([g1, g2])


def ee_position(model: TwoLinkModel, q: Array) -> Array:
    """Tip position in the arm plane."""
    return np.array(
        [
            model.l1 * math.cos(q[0]) + model.l2 * math.cos(q[0] + q[1]),
            model.l1 * math.sin(q[0]) + model.l2 * math.sin(q[0] + q[1]),
        ]
    )


def jacobian(model: TwoLinkModel, q: Array) -> Array:
    """2x2 tip Jacobian d(ee_position)/dq."""
    s1, c1 = math.sin(q[0]), math.cos(q[0])
    s12, c12 = math.sin(q[0] + q[1]), math.cos(q[0] + q[1])
    return np.array(
        [
            [-model.l1 * s1 - model.l2 * s12, -model.l2 * s12],
            [model.l1 * c1 + model.l2 * c12, model.l2 * c12],
        ]
    )


def jacobian_dot(model: TwoLinkModel, q: Array, qdot: Array) -> Array:
    s1, c1 = math.sin(q[0]), math.cos(q[0])
    s12, c12 = math.sin(q[0] + q[1]), math.cos(q[0] + q[1])
    w1 = qdot[0]
    w12 = qdot[0] + qdot[1]
    return np.array(
        [
            [-model.l1 * c1 * w1 - model.l2 * c12 * w12, -model.l2 * c12 * w12],
            [-model.l1 * s1 * w1 - model.l2 * s12 * w12, -model.l2 * s12 * w12],
        ]
    )


def full_jacobian(model: TwoLinkModel, q: Array) -> Array:
    """6x2 spatial Jacobian: planar linear rows, angular velocity about z."""
    J6 = np.zeros((6, 2))
    J6[:2] = jacobian(model, q)
    J6[5] = 1.0
    return J6


def ee_velocity(model: TwoLinkModel, state: JointState) -> Array:
    return jacobian(model, state.q) @ state.qdot


def kinetic_energy(model: TwoLinkModel, state: JointState) -> float:
    return 0.5 * float(state.qdot @ mass_matrix(model, state.q) @ state.qdot)


def potential_energy(model: TwoLinkModel, q: Array) -> float:
    y1 = model.l1 * math.sin(q[0])
    y2 = y1 + model.l2 * math.sin(q[0] + q[1])
    return model.g0 * (model.m1 * y1 + model.m2 * y2)


class DisturbanceModel:
    """Bounded, seeded uniform joint-torque noise; bound 0 is exactly zero."""

    def __init__(self, bound: float = 0.0, seed: int = 0):
        if bound < 0.0:
            raise ValueError("disturbance bound must be nonnegative")
        self.bound = float(bound)
        self.seed = int(seed)
        self._rng = np.random.default_rng(seed)

    def sample(self, n: int) -> Array:
        if self.bound == 0.0:
            return np.zeros(n)
        return self._rng.uniform(-self.bound, self.bound, n)


def forward_dynamics(
    model: TwoLinkModel,
    state: JointState,
    tau: Array,
    f_ext: Wrench | None = None,
    disturbance=None,
) -> Array:
    """Joint acceleration M^-1 (tau - J^T F - C qd - g - b*qd + d).

    `f_ext` is the base-frame wrench the tip applies to the environment (the
    reaction -J^T F loads the joints).  `disturbance` may be a torque vector
    or a DisturbanceModel (sampled once per call).
    """
    q, qd = state.q, state.qdot
    rhs = np.asarray(tau, dtype=float).copy()
    if f_ext is not None:
        if f_ext.frame is not Frame.BASE:
            raise ValueError("forward_dynamics expects a base-frame wrench")
        rhs -= full_jacobian(model, q).T @ f_ext.as_array()
    rhs -= coriolis_vector(model, q, qd)
    rhs -= gravity_vector(model, q)
    rhs -= np.array([model.b1, model.b2]) * qd
    if disturbance is not None:
        if isinstance(disturbance, DisturbanceModel):
            rhs += disturbance.sample(2)
        else:
            rhs += np.asarray(disturbance, dtype=float)
    return np.linalg.solve(mass_matrix(model, q), rhs)


def torque_law(
    model: TwoLinkModel,
    state: JointState,
    xdd_d: Array,
    xd_d: Array,
    f: Array,
    f_d: Array,
    virtual_inertia: Array,
    damping: Array,
    min_gram_eig: float = 1e-8,
) -> Array:
    """Joint torque realizing the admittance law through the arm inertia.

    tau = M J+ (xdd_d - (B_d (xd - xd_d) + (f - f_d)) / M_d) + J^T f.
    The velocity and force errors both enter with the stabilizing sign, so a
    shortfall in pressing force accelerates the tip toward the surface and
    substituting tau back into the rigid-body dynamics at rest reproduces the
    decoupled error dynamics exactly.
    """
    q = state.q
    J = jacobian(model, q)
    xd = J @ state.qdot
    inertia = np.asarray(virtual_inertia, dtype=float)
    damp = np.asarray(damping, dtype=float)
    e = xd - np.asarray(xd_d, dtype=float)
    f = np.asarray(f, dtype=float)
    f_d = np.asarray(f_d, dtype=float)
    a_cmd = np.asarray(xdd_d, dtype=float) - (damp * e + (f - f_d)) / inertia
    pinv = jacobian_pinv(J, min_gram_eig)
    return mass_matrix(model, q) @ (pinv @ a_cmd) + J.T @ f


@dataclass(frozen=True)
class VelocityModePlant:
    """Rigid body tracking a commanded end-effector twist with first-order lag.

    time_constants: per-axis lag (s); 0 means exact tracking on that axis.
    Saturation clips the commanded twist componentwise before the lag.
    `twist` is the achieved twist (end-effector frame), `pose` the body pose.
    """

    time_constants: Array
    max_linear_speed: float
    max_angular_speed: float
    pose: Pose
    twist: Twist = Twist(np.zeros(3), np.zeros(3), Frame.EE)

    def __post_init__(self):
        tc = np.asarray(self.time_constants, dtype=float)
        if tc.shape != (6,):
            raise ValueError("time_constants must have shape (6,)")
        if np.any(tc < 0.0):
            raise ValueError("time constants must be nonnegative (0 = ideal)")
        if self.max_linear_speed <= 0.0 or self.max_angular_speed <= 0.0:
            raise ValueError("saturation limits must be strictly positive")
        if self.twist.frame is not Frame.EE:
            raise ValueError("plant twist must be end-effector frame")
        object.__setattr__(self, "time_constants", tc)


def velocity_mode_step(plant: VelocityModePlant, cmd: Twist, dt: float) -> VelocityModePlant:
    """Advance the plant one step: lag toward the saturated command, then pose.

    Position integrates the base-frame linear velocity; orientation applies
    the quaternion exponential of the base-frame angular velocity.
    """
    if cmd.frame is not Frame.EE:
        raise ValueError("velocity command must be end-effector frame")
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    sat = np.concatenate(
        [
            np.clip(cmd.linear, -plant.max_linear_speed, plant.max_linear_speed),
            np.clip(cmd.angular, -plant.max_angular_speed, plant.max_angular_speed),
        ]
    )
    v = plant.twist.as_array().copy()
    tc = plant.time_constants
    for i in range(6):
        if tc[i] == 0.0:
            v[i] = sat[i]
        else:
            v[i] = v[i] + (dt / tc[i]) * (sat[i] - v[i])
    R = plant.pose.rotation()
    position = plant.pose.position + (R @ v[:3]) * dt
    omega_base = R @ v[3:]
    orientation = quat_normalize(
        quat_mul(quat_exp(omega_base * dt), plant.pose.orientation)
    )
    return replace(
        plant,
        pose=Pose(position, orientation),
        twist=Twist(v[:3], v[3:], Frame.EE),
    )
