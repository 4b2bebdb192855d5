"""Cross-module invariant suite behind `graspsim validate`.

Each check is self-contained, seeded, and reports a numeric margin next to
its limit so regressions show up as shrinking headroom, not just a flipped
pass flag.  An optional scenario adds two more checks: its configuration
already parsed (the CLI reports parse failures itself) and a short smoke
run that must stay finite with unit quaternions.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from . import plant
from .contact import (
    SurfaceModel,
    implicit_value,
    project_to_surface,
    surface_gradient,
)
from .errors import GraspSimError
from .kinematics import jacobian_pinv, rotation_from_quat
from .policy import PolicyParams, Setpoints, gate_value
from .simulator import Scenario, compute_metrics, run

# Wide and accurate beats fast here; every limit mirrors the corresponding
# unit-test tolerance so `validate` and the test suite cannot disagree.
_SKEW_LIMIT = 1e-6
_PINV_LIMIT = 1e-9
_GRAD_LIMIT = 1e-6
_PROJ_LIMIT = 1e-6
_DECAY_LIMIT = 1e-12
_TANGENCY_LIMIT = 1e-3
_QUAT_LIMIT = 1e-9


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def _result(name: str, margin: float, limit: float) -> CheckResult:
    return CheckResult(name, margin < limit, f"margin {margin:.3g} (limit {limit:g})")


def _check_skew_symmetry(rng) -> CheckResult:
    model = plant.TwoLinkModel(m1=1.4, m2=0.9, l1=0.8, l2=0.6)
    h = 1e-6
    worst = 0.0
    for _ in range(100):
        q = rng.uniform(-math.pi, math.pi, 2)
        qd = rng.uniform(-2.0, 2.0, 2)
        x = rng.uniform(-1.0, 1.0, 2)
        m_dot = (plant.mass_matrix(model, q + h * qd) - plant.mass_matrix(model, q - h * qd)) / (
            2.0 * h
        )
        s = m_dot - 2.0 * plant.coriolis_matrix(model, q, qd)
        worst = max(worst, abs(x @ s @ x))
    return _result("two-link-skew-symmetry", worst, _SKEW_LIMIT)


def _check_pseudoinverse(rng) -> CheckResult:
    worst = 0.0
    for rows, cols in ((2, 2), (3, 5), (6, 7), (6, 9)):
        for _ in range(25):
            J = rng.standard_normal((rows, cols))
            J_pinv = jacobian_pinv(J)
            eye = np.eye(rows)
            worst = max(worst, np.max(np.abs(J @ J_pinv - eye)))
            v = rng.standard_normal(rows)
            worst = max(worst, np.linalg.norm(J @ J_pinv @ v - v) / np.linalg.norm(v))
    return _result("pseudoinverse-identities", worst, _PINV_LIMIT)


def _sample_surfaces():
    return (
        SurfaceModel.plane((0.0, 0.0, 0.1), (0.2, -0.3, 0.93), 1e4),
        SurfaceModel.sphere((0.05, -0.02, 0.1), 0.12, 1e4),
        SurfaceModel.cylinder((0.0, 0.0, 0.0), (0.1, 0.2, 0.97), 0.08, 1e4),
        SurfaceModel.superellipsoid((0.01, 0.02, -0.01), (0.04, 0.05, 0.12), (2.5, 6.0), 1e4),
    )


def _check_gradients(rng) -> CheckResult:
    h = 1e-6
    worst = 0.0
    for surface in _sample_surfaces():
        for _ in range(100):
            p = rng.uniform(-0.2, 0.2, 3)
            if surface.kind != "plane":
                # keep away from the interior singularity at the center
                ref = surface.center if surface.kind != "cylinder" else surface.axis_point
                if np.linalg.norm(p - np.asarray(ref)) < 0.02:
                    p = p + np.array([0.05, 0.05, 0.05])
            grad = surface_gradient(surface, p)  # unit outward normal
            fd = np.empty(3)
            for axis in range(3):
                e = np.zeros(3)
                e[axis] = h
                fd[axis] = (implicit_value(surface, p + e) - implicit_value(surface, p - e)) / (
                    2.0 * h
                )
            fd_norm = np.linalg.norm(fd)
            if fd_norm < 1e-9:
                continue
            worst = max(worst, np.linalg.norm(grad - fd / fd_norm))
    return _result("surface-gradient-fd", worst, _GRAD_LIMIT)


def _check_projection(rng) -> CheckResult:
    worst = 0.0
    for surface in _sample_surfaces():
        for _ in range(50):
            p = rng.uniform(-0.25, 0.25, 3)
            try:
                foot = project_to_surface(surface, p)
            except GraspSimError:
                continue  # center-of-body samples have no usable normal
            worst = max(worst, abs(implicit_value(surface, foot)) * 1e3)
            offset = np.asarray(p, dtype=float) - foot
            dist = np.linalg.norm(offset)
            if dist > 1e-9:
                n = surface_gradient(surface, foot)
                n = n / np.linalg.norm(n)
                worst = max(worst, float(np.linalg.norm(np.cross(offset / dist, n))))
    return _result("projection-tangency", worst, _PROJ_LIMIT)


def _check_free_space_decay() -> CheckResult:
    from .contact import SensorModel, WristGeometry
    from .kinematics import Pose

    # ideal plant, no contact in reach: the velocity-setpoint error obeys
    # e_{k+1} = (1 - B*dt) e_k exactly, so the whole trace has a closed form
    sp = np.array([0.1, -0.2, 0.15, 0.05, -0.04, 0.03])
    scenario = Scenario(
        name="decay-check",
        duration=1.0,
        dt=1e-3,
        surface=SurfaceModel.plane((0.0, 0.0, -10.0), (0.0, 0.0, 1.0), 1e3),
        wrist=WristGeometry(radius=0.04),
        sensor=SensorModel(force_noise_std=0.0, moment_noise_std=0.0),
        policy=PolicyParams(damping=(4.0,) * 6, force_gain=(0.0,) * 6),
        setpoints=Setpoints(velocity=sp),
        initial_pose=Pose(position=(0.0, 0.0, 0.0), orientation=(1.0, 0.0, 0.0, 0.0)),
    )
    trace = run(scenario)
    k = np.arange(len(trace))[:, None]
    expected = sp * (1.0 - (1.0 - 4.0 * scenario.dt) ** k)
    margin = float(np.max(np.abs(trace.twists - expected)))
    return _result("free-space-error-decay", margin, _DECAY_LIMIT)


def _check_gate(rng) -> CheckResult:
    worst = 0.0
    for _ in range(200):
        alpha = rng.uniform(0.0, 1.0)
        scale = rng.uniform(0.2, 5.0)
        params = PolicyParams(gate_gain=alpha, force_scale=scale)
        g0 = gate_value(0.0, params)
        worst = max(worst, abs(g0 - 1.0))
        f = rng.uniform(-20.0, 20.0)
        g = gate_value(f, params)
        worst = max(worst, max(0.0, g - 1.0), max(0.0, (1.0 - alpha) - g))
        # monotone non-increasing in |F_y|
        g2 = gate_value(f * 1.5, params)
        worst = max(worst, max(0.0, g2 - g))
    return _result("gate-range-monotonicity", worst, 1e-12)


def _check_sliding_tangency() -> CheckResult:
    from .contact import SensorModel, WristGeometry
    from .kinematics import Pose

    # noise-free drift across a large sphere; the moment loop is stiffened
    # so alignment lag stays tiny while the normal direction rotates under
    # the sliding wrist (lag shows up directly as a normal-force deficit)
    scenario = Scenario(
        name="tangency-check",
        duration=4.0,
        dt=1e-3,
        surface=SurfaceModel.sphere((0.0, 0.0, -0.25), 0.25, 5e3),
        wrist=WristGeometry(radius=0.04),
        sensor=SensorModel(force_noise_std=0.0, moment_noise_std=0.0),
        policy=PolicyParams(
            damping=(4.0, 4.0, 200.0, 3.0, 3.0, 3.0),
            force_gain=(0.5, 0.5, 0.5, 150.0, 150.0, 150.0),
            gate_gain=0.0,
        ),
        setpoints=Setpoints(velocity=(0.0, 0.005, 0.0, 0.0, 0.0, 0.0), normal_force=5.0),
        initial_pose=Pose(position=(0.0, 0.0, 0.0), orientation=(0.0, 1.0, 0.0, 0.0)),
        time_constants=(0.008,) * 6,
    )
    trace = run(scenario)
    metrics = compute_metrics(trace, scenario)
    if metrics.settling_time_force is None:
        return CheckResult("sliding-tangency", False, "contact force never settled")
    start = int(np.searchsorted(trace.times, metrics.settling_time_force))
    center = np.asarray(scenario.surface.center)
    worst = 0.0
    for k in range(start, len(trace)):
        R = rotation_from_quat(trace.quaternions[k])
        v_base = R @ trace.twists[k, :3]
        radial = trace.positions[k] - center
        n = radial / np.linalg.norm(radial)
        worst = max(worst, abs(float(n @ v_base)))
    return _result("sliding-tangency", worst, _TANGENCY_LIMIT)


def _scenario_checks(scenario: Scenario):
    results = [CheckResult("scenario-config", True, f"{scenario.name!r} parsed and validated")]
    smoke = scenario
    if scenario.duration > 0.5:
        smoke = dataclasses.replace(scenario, duration=0.5)
    try:
        trace = run(smoke)
    except GraspSimError as exc:
        results.append(CheckResult("scenario-smoke", False, f"run failed: {exc}"))
        return results
    norm_err = float(np.max(np.abs(np.linalg.norm(trace.quaternions, axis=1) - 1.0)))
    results.append(_result("scenario-smoke", norm_err, _QUAT_LIMIT))
    return results


def run_checks(scenario: Scenario | None = None) -> list:
    rng = np.random.default_rng(20240817)
    results = [
        _check_skew_symmetry(rng),
        _check_pseudoinverse(rng),
        _check_gradients(rng),
        _check_projection(rng),
        _check_free_space_decay(),
        _check_gate(rng),
        _check_sliding_tangency(),
    ]
    if scenario is not None:
        results.extend(_scenario_checks(scenario))
    return results
