"""Closed-loop grasp-approach simulation.

Each tick, at the current pose: evaluate contact, assemble the true
end-effector wrench, read the sensor (noise then low-pass), form the gated
feedback vector, compute the admittance acceleration, then integrate the
commanded twist (with saturation and the velocity-mode plant lag) and the
pose.  Row k of a trace holds the state and signals at t = k*dt, so the
trace has floor(duration/dt + 1e-9) + 1 rows including t = 0.

The hot loop lives in a kernel backend (see graspsim.backend); `run` drives
a whole scenario through it, `step` advances one tick through the reference
Python kernel for interactive use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels_py as _kpy
from .backend import get_backend
from .contact import SensorModel, SurfaceModel, WristGeometry
from .errors import (
    GradientSingularityError,
    NumericalDivergenceError,
    ProjectionConvergenceError,
)
from .kinematics import Frame, Pose, Twist, Wrench
from .policy import PolicyParams, Setpoints

VELOCITY_SETTLE_TOL = 1e-3  # m/s and rad/s
FORCE_SETTLE_REL_TOL = 0.02  # fraction of the normal force setpoint
ALIGN_SETTLE_TOL = math.radians(0.5)
STEADY_STATE_WINDOW = 0.1  # trailing fraction of the trace


def _tuple6_nonneg(value, name):
    t = tuple(float(v) for v in value)
    if len(t) != 6:
        raise ValueError(f"{name} must have 6 components")
    if any(v < 0.0 for v in t):
        raise ValueError(f"{name} components must be nonnegative")
    return t


@dataclass(frozen=True, eq=False)
class Scenario:
    """Everything one closed-loop run needs.

    `seed` drives the sensor noise stream of `run`; the sensor model's own
    seed only matters for interactive sensor_read use.
    """

    name: str
    duration: float
    dt: float
    surface: SurfaceModel
    wrist: WristGeometry
    sensor: SensorModel
    policy: PolicyParams
    setpoints: Setpoints
    initial_pose: Pose
    seed: int = 0
    time_constants: tuple = (0.0,) * 6
    max_linear_speed: float = 0.5
    max_angular_speed: float = 2.0

    def __post_init__(self):
        if not 0.0 < self.dt <= 0.01:
            raise ValueError("dt must lie in (0, 0.01] s")
        if self.duration < self.dt:
            raise ValueError("duration must cover at least one step")
        if int(self.seed) < 0:
            raise ValueError("seed must be nonnegative")
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(
            self, "time_constants", _tuple6_nonneg(self.time_constants, "time_constants")
        )
        if not (self.max_linear_speed > 0.0 and self.max_angular_speed > 0.0):
            raise ValueError("speed limits must be positive")


def trace_length(scenario: Scenario) -> int:
    return int(math.floor(scenario.duration / scenario.dt + 1e-9)) + 1


@dataclass(frozen=True, eq=False)
class SimState:
    """Mutable-loop state between ticks (all twists in the ee frame)."""

    time: float
    pose: Pose
    commanded_twist: np.ndarray
    achieved_twist: np.ndarray
    filter_state: np.ndarray


@dataclass(frozen=True, eq=False)
class TraceRecord:
    """One tick's snapshot: state at t plus the signals computed there."""

    time: float
    pose: Pose
    twist: Twist
    true_wrench: Wrench
    measured_wrench: Wrench
    gate: float
    in_contact: bool
    alignment_angle: float
    commanded_acceleration: np.ndarray
    penetration: float


@dataclass(eq=False)
class Trace:
    """Column arrays over the whole run; row k is t = k*dt."""

    times: np.ndarray
    positions: np.ndarray
    quaternions: np.ndarray
    twists: np.ndarray
    true_wrenches: np.ndarray
    measured_wrenches: np.ndarray
    gates: np.ndarray
    contacts: np.ndarray
    alignment_angles: np.ndarray
    accelerations: np.ndarray
    penetrations: np.ndarray

    def __len__(self):
        return int(self.times.size)

    def record(self, k: int) -> TraceRecord:
        return TraceRecord(
            time=float(self.times[k]),
            pose=Pose(position=self.positions[k].copy(), orientation=self.quaternions[k].copy()),
            twist=Twist(
                linear=self.twists[k, :3].copy(),
                angular=self.twists[k, 3:].copy(),
                frame=Frame.EE,
            ),
            true_wrench=Wrench(
                force=self.true_wrenches[k, :3].copy(),
                moment=self.true_wrenches[k, 3:].copy(),
                frame=Frame.EE,
            ),
            measured_wrench=Wrench(
                force=self.measured_wrenches[k, :3].copy(),
                moment=self.measured_wrenches[k, 3:].copy(),
                frame=Frame.EE,
            ),
            gate=float(self.gates[k]),
            in_contact=bool(self.contacts[k]),
            alignment_angle=float(self.alignment_angles[k]),
            commanded_acceleration=self.accelerations[k].copy(),
            penetration=float(self.penetrations[k]),
        )


def _sensor_beta(scenario: Scenario) -> float:
    return scenario.dt / (scenario.dt + 1.0 / (2.0 * math.pi * scenario.sensor.cutoff_hz))


def _raise_for_status(status: int, time: float):
    if status == _kpy.OK:
        return
    if status == _kpy.NONFINITE:
        raise NumericalDivergenceError(
            f"state became non-finite at t = {time:.6g} s", time=time
        )
    if status == _kpy.PROJECTION_FAIL:
        raise ProjectionConvergenceError(
            f"surface projection failed to converge at t = {time:.6g} s"
        )
    raise GradientSingularityError(f"surface normal undefined at t = {time:.6g} s")


def initial_state(scenario: Scenario) -> SimState:
    return SimState(
        time=0.0,
        pose=scenario.initial_pose,
        commanded_twist=np.zeros(6),
        achieved_twist=np.zeros(6),
        filter_state=np.zeros(6),
    )


def _tick_params(scenario: Scenario):
    return _kpy.pack_params(
        scenario.dt,
        scenario.surface._kind_id,
        scenario.surface._params,
        scenario.surface.stiffness,
        scenario.wrist.radius,
        _sensor_beta(scenario),
        scenario.sensor.force_noise_std,
        scenario.sensor.moment_noise_std,
        scenario.policy.virtual_inertia,
        scenario.policy.damping,
        scenario.policy.force_gain,
        scenario.policy.gate_gain,
        scenario.policy.force_scale,
        scenario.setpoints.velocity,
        scenario.setpoints.acceleration,
        scenario.setpoints.tangential_force,
        scenario.setpoints.normal_force,
        scenario.time_constants,
        scenario.max_linear_speed,
        scenario.max_angular_speed,
    )


def step(scenario: Scenario, state: SimState, noise=None):
    """Advance one tick through the reference kernel.

    `noise` supplies this tick's six standard normal sensor draws (zeros
    when omitted; `run` draws them from the scenario seed instead).
    Returns (next_state, record) where the record describes `state`'s time.
    """
    if noise is None:
        nrow = (0.0,) * 6
    else:
        nrow = tuple(float(v) for v in np.asarray(noise, dtype=float).reshape(6))
    st = (
        float(state.pose.position[0]),
        float(state.pose.position[1]),
        float(state.pose.position[2]),
        float(state.pose.orientation[0]),
        float(state.pose.orientation[1]),
        float(state.pose.orientation[2]),
        float(state.pose.orientation[3]),
    ) + tuple(float(v) for v in state.commanded_twist) + tuple(
        float(v) for v in state.achieved_twist
    ) + tuple(float(v) for v in state.filter_state)
    status, nxt, rec = _kpy.tick(_tick_params(scenario), st, nrow)
    if rec is None or status != _kpy.OK:
        _raise_for_status(status, state.time)
    record = TraceRecord(
        time=state.time,
        pose=state.pose,
        twist=Twist(
            linear=state.achieved_twist[:3].copy(),
            angular=state.achieved_twist[3:].copy(),
            frame=Frame.EE,
        ),
        true_wrench=Wrench(
            force=np.array(rec[0][:3]), moment=np.array(rec[0][3:]), frame=Frame.EE
        ),
        measured_wrench=Wrench(
            force=np.array(rec[1][:3]), moment=np.array(rec[1][3:]), frame=Frame.EE
        ),
        gate=rec[2],
        in_contact=bool(rec[3]),
        alignment_angle=rec[4],
        commanded_acceleration=np.array(rec[5]),
        penetration=rec[6],
    )
    next_state = SimState(
        time=state.time + scenario.dt,
        pose=Pose(position=np.array(nxt[0:3]), orientation=np.array(nxt[3:7])),
        commanded_twist=np.array(nxt[7:13]),
        achieved_twist=np.array(nxt[13:19]),
        filter_state=np.array(nxt[19:25]),
    )
    return next_state, record


def run(scenario: Scenario, backend=None) -> Trace:
    """Run a whole scenario on the selected kernel backend."""
    kern = get_backend(backend)
    n = trace_length(scenario) - 1
    noise = np.random.default_rng(scenario.seed).standard_normal((n + 1, 6))
    out_t = np.empty(n + 1)
    out_pos = np.empty((n + 1, 3))
    out_quat = np.empty((n + 1, 4))
    out_twist = np.empty((n + 1, 6))
    out_wrench_true = np.empty((n + 1, 6))
    out_wrench = np.empty((n + 1, 6))
    out_gate = np.empty(n + 1)
    out_contact = np.zeros(n + 1, dtype=np.int32)
    out_align = np.empty(n + 1)
    out_accel = np.empty((n + 1, 6))
    out_pen = np.empty(n + 1)
    status, idx = kern.run_trace(
        n,
        scenario.dt,
        scenario.surface._kind_id,
        np.asarray(scenario.surface._params, dtype=float),
        scenario.surface.stiffness,
        scenario.wrist.radius,
        _sensor_beta(scenario),
        scenario.sensor.force_noise_std,
        scenario.sensor.moment_noise_std,
        np.asarray(scenario.policy.virtual_inertia, dtype=float),
        np.asarray(scenario.policy.damping, dtype=float),
        np.asarray(scenario.policy.force_gain, dtype=float),
        scenario.policy.gate_gain,
        scenario.policy.force_scale,
        np.asarray(scenario.setpoints.velocity, dtype=float),
        np.asarray(scenario.setpoints.acceleration, dtype=float),
        scenario.setpoints.tangential_force,
        scenario.setpoints.normal_force,
        np.asarray(scenario.time_constants, dtype=float),
        scenario.max_linear_speed,
        scenario.max_angular_speed,
        np.asarray(scenario.initial_pose.position, dtype=float),
        np.asarray(scenario.initial_pose.orientation, dtype=float),
        noise,
        out_t,
        out_pos,
        out_quat,
        out_twist,
        out_wrench_true,
        out_wrench,
        out_gate,
        out_contact,
        out_align,
        out_accel,
        out_pen,
    )
    _raise_for_status(int(status), float(idx) * scenario.dt)
    return Trace(
        times=out_t,
        positions=out_pos,
        quaternions=out_quat,
        twists=out_twist,
        true_wrenches=out_wrench_true,
        measured_wrenches=out_wrench,
        gates=out_gate,
        contacts=out_contact,
        alignment_angles=out_align,
        accelerations=out_accel,
        penetrations=out_pen,
    )


@dataclass(frozen=True)
class Metrics:
    """Scalar run summary; settling times are None when never reached."""

    settling_time_velocity: Optional[float]
    settling_time_force: Optional[float]
    settling_time_alignment: Optional[float]
    steady_state_force_error: Optional[float]
    max_penetration: float
    final_alignment_angle: float


def _settling_time(times, deviations, tol):
    """First time from which the deviation stays within tol to the end."""
    ok = deviations <= tol
    if not ok[-1]:
        return None
    # last index where the condition fails, settled right after it
    bad = np.nonzero(~ok)[0]
    idx = 0 if bad.size == 0 else int(bad[-1]) + 1
    return float(times[idx])


def compute_metrics(trace: Trace, scenario: Scenario) -> Metrics:
    vd = np.asarray(scenario.setpoints.velocity)
    verr = np.max(np.abs(trace.twists - vd[None, :]), axis=1)
    t_vel = _settling_time(trace.times, verr, VELOCITY_SETTLE_TOL)

    f_d = scenario.setpoints.normal_force
    if f_d != 0.0:
        ferr = np.abs(trace.measured_wrenches[:, 2] - f_d)
        t_force = _settling_time(trace.times, ferr, FORCE_SETTLE_REL_TOL * abs(f_d))
        window = max(1, int(math.ceil(STEADY_STATE_WINDOW * len(trace))))
        sse = float(np.mean(trace.measured_wrenches[-window:, 2]) - f_d)
    else:
        t_force = None
        sse = None

    t_align = _settling_time(trace.times, trace.alignment_angles, ALIGN_SETTLE_TOL)
    return Metrics(
        settling_time_velocity=t_vel,
        settling_time_force=t_force,
        settling_time_alignment=t_align,
        steady_state_force_error=sse,
        max_penetration=float(np.max(trace.penetrations)),
        final_alignment_angle=float(trace.alignment_angles[-1]),
    )
