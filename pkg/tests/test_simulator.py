"""Closed-loop simulator: decay laws, contact regulation, determinism."""

import math

import numpy as np
import pytest

from graspsim.backend import available_backends, get_backend
from graspsim.contact import SensorModel, SurfaceModel, WristGeometry
from graspsim.errors import NumericalDivergenceError
from graspsim.kinematics import Pose
from graspsim.policy import PolicyParams, Setpoints
from graspsim.simulator import (
    Metrics,
    Scenario,
    Trace,
    compute_metrics,
    initial_state,
    run,
    step,
    trace_length,
)

ALIGNED_DOWN = np.array([0.0, 1.0, 0.0, 0.0])  # approach axis along -z of base


def quiet_sensor():
    return SensorModel(cutoff_hz=5.0, force_noise_std=0.0, moment_noise_std=0.0, seed=0)


def make_scenario(**overrides):
    base = dict(
        name="test",
        duration=1.0,
        dt=1e-3,
        surface=SurfaceModel.plane(point=(0, 0, -100.0), normal=(0, 0, 1), stiffness=5e3),
        wrist=WristGeometry(radius=0.04),
        sensor=quiet_sensor(),
        policy=PolicyParams(),
        setpoints=Setpoints(),
        initial_pose=Pose(position=np.zeros(3), orientation=ALIGNED_DOWN.copy()),
        seed=0,
    )
    base.update(overrides)
    return Scenario(**base)


def touching_contact_scenario(**overrides):
    base = dict(
        duration=2.0,
        surface=SurfaceModel.plane(point=(0, 0, 0.0), normal=(0, 0, 1), stiffness=5e3),
        setpoints=Setpoints(normal_force=5.0),
        initial_pose=Pose(position=np.array([0.2, -0.1, 0.0]), orientation=ALIGNED_DOWN.copy()),
    )
    base.update(overrides)
    return make_scenario(**base)


# ---------------------------------------------------------------------------
# free-space velocity tracking
# ---------------------------------------------------------------------------


def test_free_space_follows_discrete_decay_exactly():
    vd = np.array([0.02, 0.01, 0.005, 0.1, -0.05, 0.2])
    sc = make_scenario(duration=0.05, setpoints=Setpoints(velocity=vd))
    trace = run(sc, backend="python")
    damping = np.asarray(sc.policy.damping)
    for k in range(len(trace)):
        expected = vd * (1.0 - (1.0 - damping * sc.dt) ** k)
        np.testing.assert_allclose(trace.twists[k], expected, atol=1e-13)


def test_free_space_settles_at_damping_rate():
    vd = np.array([0.02, 0.01, 0.005, 0.1, -0.05, 0.2])
    sc = make_scenario(duration=2.5, setpoints=Setpoints(velocity=vd))
    trace = run(sc, backend="python")
    metrics = compute_metrics(trace, sc)
    # slowest channels decay at rate 4: within tolerance around ln(200)/4
    assert metrics.settling_time_velocity is not None
    assert 1.0 < metrics.settling_time_velocity < 1.8
    assert np.max(np.abs(trace.twists[-1] - vd)) < 1e-3
    # no contact anywhere, gate wide open, quaternions stay unit
    assert not trace.contacts.any()
    assert np.all(trace.gates == 1.0)
    norms = np.linalg.norm(trace.quaternions, axis=1)
    np.testing.assert_allclose(norms, 1.0, atol=1e-12)
    np.testing.assert_allclose(np.diff(trace.times), sc.dt, atol=1e-12)


def test_angular_speed_saturation():
    vd = np.zeros(6)
    vd[5] = 5.0  # above the 2 rad/s limit
    sc = make_scenario(duration=2.0, setpoints=Setpoints(velocity=vd))
    trace = run(sc, backend="python")
    assert np.max(np.abs(trace.twists[:, 5])) <= 2.0 + 1e-12
    assert trace.twists[-1, 5] == pytest.approx(2.0, abs=1e-9)


# ---------------------------------------------------------------------------
# contact force regulation
# ---------------------------------------------------------------------------


def test_touching_contact_reaches_force_setpoint():
    sc = touching_contact_scenario()
    trace = run(sc, backend="python")
    metrics = compute_metrics(trace, sc)
    assert trace.contacts[0] == 0  # starts exactly on the surface
    assert trace.contacts[-1] == 1
    assert trace.true_wrenches[-1, 2] == pytest.approx(5.0, abs=1e-6)
    assert trace.measured_wrenches[-1, 2] == pytest.approx(5.0, abs=1e-6)
    assert trace.penetrations[-1] == pytest.approx(5.0 / 5e3, abs=1e-9)
    assert metrics.settling_time_force is not None
    assert metrics.settling_time_force < 1.0
    assert abs(metrics.steady_state_force_error) < 1e-6
    assert metrics.max_penetration < 1.5e-3
    assert metrics.settling_time_alignment == 0.0  # starts aligned
    assert np.all(trace.gates == 1.0)  # tangential force never develops


def test_contact_force_tracks_stiffness():
    # soft contact has a slow closed-loop mode (~2.5 1/s at 1 kN/m), so
    # give the sweep a generous horizon
    for stiffness in (1e3, 2e4):
        sc = touching_contact_scenario(
            duration=5.0,
            surface=SurfaceModel.plane(point=(0, 0, 0.0), normal=(0, 0, 1), stiffness=stiffness),
        )
        trace = run(sc, backend="python")
        assert trace.true_wrenches[-1, 2] == pytest.approx(5.0, rel=1e-4)
        assert trace.penetrations[-1] == pytest.approx(5.0 / stiffness, rel=1e-4)


def test_shallow_penetration_does_not_set_contact_flag():
    sc = touching_contact_scenario(
        initial_pose=Pose(position=np.array([0.0, 0.0, -5e-8]), orientation=ALIGNED_DOWN.copy())
    )
    state = initial_state(sc)
    _, record = step(sc, state)
    assert record.penetration == pytest.approx(5e-8, rel=1e-9)
    assert not record.in_contact
    assert record.true_wrench.force[2] == pytest.approx(5e3 * 5e-8, rel=1e-9)


# ---------------------------------------------------------------------------
# step/run agreement and determinism
# ---------------------------------------------------------------------------


def test_step_replays_run_bitwise():
    sc = touching_contact_scenario(
        duration=0.05,
        sensor=SensorModel(cutoff_hz=5.0, force_noise_std=0.05, moment_noise_std=0.002, seed=0),
        seed=123,
    )
    trace = run(sc, backend="python")
    n = trace_length(sc) - 1
    noise = np.random.default_rng(sc.seed).standard_normal((n + 1, 6))
    state = initial_state(sc)
    for k in range(n + 1):
        assert np.array_equal(state.pose.position, trace.positions[k])
        assert np.array_equal(state.pose.orientation, trace.quaternions[k])
        assert np.array_equal(state.achieved_twist, trace.twists[k])
        state, record = step(sc, state, noise=noise[k])
        assert np.array_equal(record.measured_wrench.as_array(), trace.measured_wrenches[k])
        assert np.array_equal(record.commanded_acceleration, trace.accelerations[k])
        assert record.gate == trace.gates[k]
        assert record.penetration == trace.penetrations[k]


def test_runs_are_deterministic():
    sc = touching_contact_scenario(
        duration=0.2,
        sensor=SensorModel(cutoff_hz=5.0, force_noise_std=0.05, moment_noise_std=0.002, seed=0),
        seed=7,
    )
    a = run(sc, backend="python")
    b = run(sc, backend="python")
    for name in (
        "times",
        "positions",
        "quaternions",
        "twists",
        "true_wrenches",
        "measured_wrenches",
        "gates",
        "contacts",
        "alignment_angles",
        "accelerations",
        "penetrations",
    ):
        assert np.array_equal(getattr(a, name), getattr(b, name)), name


def test_different_seeds_differ():
    kwargs = dict(
        duration=0.2,
        sensor=SensorModel(cutoff_hz=5.0, force_noise_std=0.05, moment_noise_std=0.002, seed=0),
    )
    a = run(touching_contact_scenario(seed=1, **kwargs), backend="python")
    b = run(touching_contact_scenario(seed=2, **kwargs), backend="python")
    assert not np.array_equal(a.measured_wrenches, b.measured_wrenches)


def test_trace_length_convention():
    assert trace_length(make_scenario(duration=1.0, dt=1e-3)) == 1001
    assert trace_length(make_scenario(duration=0.5, dt=5e-4)) == 1001
    assert trace_length(make_scenario(duration=2.0, dt=8e-3)) == 251
    assert trace_length(make_scenario(duration=0.0999999, dt=1e-2)) == 10


def test_record_accessor_matches_columns():
    sc = touching_contact_scenario(duration=0.1)
    trace = run(sc, backend="python")
    rec = trace.record(50)
    assert rec.time == trace.times[50]
    assert np.array_equal(rec.pose.position, trace.positions[50])
    assert np.array_equal(rec.twist.as_array(), trace.twists[50])
    assert rec.in_contact == bool(trace.contacts[50])


# ---------------------------------------------------------------------------
# divergence detection
# ---------------------------------------------------------------------------


def test_runaway_feedforward_raises_divergence_error():
    # undamped huge feedforward rams the tip through the plane until the
    # penalty force overflows; the loop must stop with a typed error
    sc = touching_contact_scenario(
        duration=10.0,
        dt=1e-2,
        policy=PolicyParams(damping=(0.0,) * 6, force_gain=(0.0,) * 6),
        setpoints=Setpoints(acceleration=np.array([0, 0, 1e304, 0, 0, 0])),
        max_linear_speed=1e306,
        initial_pose=Pose(position=np.zeros(3), orientation=ALIGNED_DOWN.copy()),
    )
    with pytest.raises(NumericalDivergenceError) as excinfo:
        run(sc, backend="python")
    assert excinfo.value.time >= 0.0


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------


def synthetic_trace(twist_col0, measured_z, align, pen):
    n = len(twist_col0)
    t = Trace(
        times=np.arange(n) * 0.1,
        positions=np.zeros((n, 3)),
        quaternions=np.tile([1.0, 0, 0, 0], (n, 1)),
        twists=np.zeros((n, 6)),
        true_wrenches=np.zeros((n, 6)),
        measured_wrenches=np.zeros((n, 6)),
        gates=np.ones(n),
        contacts=np.zeros(n, dtype=np.int32),
        alignment_angles=np.asarray(align, dtype=float),
        accelerations=np.zeros((n, 6)),
        penetrations=np.asarray(pen, dtype=float),
    )
    t.twists[:, 0] = twist_col0
    t.measured_wrenches[:, 2] = measured_z
    return t


def test_metrics_on_synthetic_trace():
    sc = touching_contact_scenario()
    trace = synthetic_trace(
        twist_col0=[1.0, 0.01, 5e-4, 9e-4],
        measured_z=[0.0, 4.2, 4.95, 4.96],
        align=[0.1, 0.01, 0.0088, 0.0080],
        pen=[0.0, 1e-3, 2e-3, 1.5e-3],
    )
    m = compute_metrics(trace, sc)
    assert m.settling_time_velocity == pytest.approx(0.2)
    assert m.settling_time_force == pytest.approx(0.2)
    assert m.settling_time_alignment == pytest.approx(0.3)
    assert m.steady_state_force_error == pytest.approx(4.96 - 5.0, abs=1e-12)
    assert m.max_penetration == pytest.approx(2e-3)
    assert m.final_alignment_angle == pytest.approx(0.0080)


def test_metrics_not_settled_is_none():
    sc = touching_contact_scenario()
    trace = synthetic_trace(
        twist_col0=[1.0, 0.5, 0.5, 0.5],
        measured_z=[0.0, 1.0, 2.0, 3.0],
        align=[0.1, 0.1, 0.1, 0.1],
        pen=[0.0] * 4,
    )
    m = compute_metrics(trace, sc)
    assert m.settling_time_velocity is None
    assert m.settling_time_force is None
    assert m.settling_time_alignment is None


def test_metrics_without_force_setpoint():
    sc = make_scenario()
    trace = synthetic_trace(
        twist_col0=[0.0] * 4, measured_z=[0.0] * 4, align=[0.0] * 4, pen=[0.0] * 4
    )
    m = compute_metrics(trace, sc)
    assert m.settling_time_force is None
    assert m.steady_state_force_error is None
    assert m.settling_time_velocity == 0.0


# ---------------------------------------------------------------------------
# scenario validation and backend selection
# ---------------------------------------------------------------------------


def test_scenario_validation():
    with pytest.raises(ValueError):
        make_scenario(dt=0.02)
    with pytest.raises(ValueError):
        make_scenario(dt=0.0)
    with pytest.raises(ValueError):
        make_scenario(duration=1e-4, dt=1e-3)
    with pytest.raises(ValueError):
        make_scenario(seed=-1)
    with pytest.raises(ValueError):
        make_scenario(time_constants=(0.0,) * 5)
    with pytest.raises(ValueError):
        make_scenario(time_constants=(-0.1,) * 6)
    with pytest.raises(ValueError):
        make_scenario(max_linear_speed=0.0)


def test_backend_selection():
    assert get_backend("python").BACKEND_NAME == "python"
    with pytest.raises(ValueError):
        get_backend("fortran")
    assert "python" in available_backends()


def test_backend_env_variable(monkeypatch):
    monkeypatch.setenv("GRASPSIM_BACKEND", "python")
    assert get_backend().BACKEND_NAME == "python"
    monkeypatch.setenv("GRASPSIM_BACKEND", "nonsense")
    with pytest.raises(ValueError):
        get_backend()


def test_plant_lag_slows_force_loop_but_still_settles():
    sc = touching_contact_scenario(duration=4.0, time_constants=(0.008,) * 6)
    trace = run(sc, backend="python")
    assert trace.true_wrenches[-1, 2] == pytest.approx(5.0, abs=1e-3)
