"""Tanh-gated admittance policy in the end-effector frame.

Twist components are ordered (x, y, z, rx, ry, rz) with z the approach
axis.  The policy damps velocity toward its setpoint and steers three
wrench channels: tangential force along y (gated), normal force along z,
and the two overturning moments.  The gate multiplies only the tangential
force error: as measured |F_y| grows past the force scale, that channel
fades from full regulation (gain 1) down to 1 - gate_gain, which lets a
deliberately large tangential setpoint drag the tip sideways without the
regulator fighting the resulting friction-like reaction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import FrameMismatchError
from .kinematics import Frame, Pose, Twist, Wrench, rotation_from_quat, skew

_DEF_INERTIA = (1.0, 1.0, 1.0, 1.0, 1.0, 1.0)
_DEF_DAMPING = (4.0, 4.0, 200.0, 4.0, 4.0, 4.0)
_DEF_FORCE_GAIN = (0.5, 0.5, 0.5, 20.0, 20.0, 20.0)


def _tuple6(value, name, minimum, strict):
    t = tuple(float(v) for v in value)
    if len(t) != 6:
        raise ValueError(f"{name} must have 6 components")
    for v in t:
        if (strict and not v > minimum) or (not strict and v < minimum):
            raise ValueError(f"{name} components must be {'>' if strict else '>='} {minimum}")
    return t


@dataclass(frozen=True)
class PolicyParams:
    """Virtual inertia / damping / force gains per axis, plus the gate."""

    virtual_inertia: tuple = _DEF_INERTIA
    damping: tuple = _DEF_DAMPING
    force_gain: tuple = _DEF_FORCE_GAIN
    gate_gain: float = 1.0
    force_scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(
            self, "virtual_inertia", _tuple6(self.virtual_inertia, "virtual_inertia", 0.0, True)
        )
        object.__setattr__(self, "damping", _tuple6(self.damping, "damping", 0.0, False))
        object.__setattr__(
            self, "force_gain", _tuple6(self.force_gain, "force_gain", 0.0, False)
        )
        if not 0.0 <= self.gate_gain <= 1.0:
            raise ValueError("gate_gain must lie in [0, 1]")
        if not self.force_scale > 0.0:
            raise ValueError("force_scale must be positive")


@dataclass(frozen=True, eq=False)
class Setpoints:
    """Desired end-effector twist, feedforward acceleration and the
    tangential (y) and normal (z) force targets in N."""

    velocity: Optional[np.ndarray] = None
    acceleration: Optional[np.ndarray] = None
    tangential_force: float = 0.0
    normal_force: float = 0.0

    def __post_init__(self):
        for name in ("velocity", "acceleration"):
            raw = getattr(self, name)
            v = np.zeros(6) if raw is None else np.asarray(raw, dtype=float)
            if v.shape != (6,):
                raise ValueError(f"{name} must be a 6-vector")
            object.__setattr__(self, name, v)


def gate_value(tangential_force: float, params: PolicyParams) -> float:
    """Gain in [1 - gate_gain, 1] that fades with measured |F_y|."""
    return 1.0 - params.gate_gain * math.tanh(
        math.fabs(tangential_force) / params.force_scale
    )


def _feedback_components(wrench6, setpoints: Setpoints, params: PolicyParams):
    gate = gate_value(wrench6[1], params)
    return (
        0.0,
        gate * (wrench6[1] - setpoints.tangential_force),
        wrench6[2] - setpoints.normal_force,
        wrench6[3],
        wrench6[4],
        0.0,
    )


def feedback_wrench(
    measured: Wrench, setpoints: Setpoints, params: PolicyParams
) -> np.ndarray:
    """Gated wrench-error vector entering the admittance law."""
    if measured.frame is not Frame.EE:
        raise FrameMismatchError("feedback operates on end-effector frame wrenches")
    return np.array(_feedback_components(measured.as_array(), setpoints, params))


def acceleration_policy(
    twist: Twist, measured: Wrench, setpoints: Setpoints, params: PolicyParams
) -> np.ndarray:
    """Commanded end-effector acceleration of the admittance loop.

    Per axis: a = (M vdd_d - B (v - v_d) - Bf fb) / M, so velocity errors
    decay at rate B/M and wrench errors steer the twist command.
    """
    if twist.frame is not Frame.EE:
        raise FrameMismatchError("policy operates on end-effector frame twists")
    if measured.frame is not Frame.EE:
        raise FrameMismatchError("policy operates on end-effector frame wrenches")
    fb = _feedback_components(measured.as_array(), setpoints, params)
    v = twist.as_array()
    out = np.empty(6)
    for i in range(6):
        out[i] = (
            params.virtual_inertia[i] * setpoints.acceleration[i]
            - params.damping[i] * (v[i] - setpoints.velocity[i])
            - params.force_gain[i] * fb[i]
        ) / params.virtual_inertia[i]
    return out


def cartesian_accel_command(pose: Pose, twist: Twist, accel_ee) -> np.ndarray:
    """Base-frame acceleration equivalent of an end-effector frame command.

    Differentiating v_base = R v_e gives a_base = R a_e + [omega]x R v_e
    with omega the base-frame angular velocity, applied to the linear and
    angular halves alike.
    """
    if twist.frame is not Frame.EE:
        raise FrameMismatchError("twist must be expressed in the end-effector frame")
    a = np.asarray(accel_ee, dtype=float)
    if a.shape != (6,):
        raise ValueError("accel_ee must be a 6-vector")
    rot = rotation_from_quat(pose.orientation)
    v = twist.as_array()
    omega_b = rot @ v[3:]
    wx = skew(omega_b)
    out = np.empty(6)
    out[:3] = rot @ a[:3] + wx @ (rot @ v[:3])
    out[3:] = rot @ a[3:] + wx @ (rot @ v[3:])
    return out


def error_dynamics_residual(
    times, velocities, setpoints: Setpoints, params: PolicyParams, wrenches=None
) -> np.ndarray:
    """Central-difference check that a recorded twist history obeys the
    policy: residual[k] = (v[k+1] - v[k-1]) / (t[k+1] - t[k-1]) - a(v[k]).

    `wrenches` is an optional (N, 6) array of measured wrenches; omitted
    means free space.  Returns an (N - 2, 6) residual array.
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(velocities, dtype=float)
    if v.ndim != 2 or v.shape[1] != 6 or v.shape[0] != t.size:
        raise ValueError("velocities must be (len(times), 6)")
    if t.size < 3:
        raise ValueError("need at least 3 samples")
    w = np.zeros_like(v) if wrenches is None else np.asarray(wrenches, dtype=float)
    if w.shape != v.shape:
        raise ValueError("wrenches must match velocities in shape")
    inertia = np.asarray(params.virtual_inertia)
    damping = np.asarray(params.damping)
    force_gain = np.asarray(params.force_gain)
    res = np.empty((t.size - 2, 6))
    for k in range(1, t.size - 1):
        fb = np.array(_feedback_components(w[k], setpoints, params))
        model = (
            inertia * setpoints.acceleration - damping * (v[k] - setpoints.velocity)
            - force_gain * fb
        ) / inertia
        res[k - 1] = (v[k + 1] - v[k - 1]) / (t[k + 1] - t[k - 1]) - model
    return res
