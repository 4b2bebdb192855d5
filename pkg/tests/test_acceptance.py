"""End-to-end acceptance checks, one per shipped guarantee.

Every test prints a single PASS/FAIL line with its measured margin (visible
under `pytest -s`), then asserts.  Tolerances are the published ones; none
are loosened here.  Checks that need a closed-loop run construct their
scenarios inline so this file stays self-contained.
"""

import math
import os
import subprocess
import sys

import numpy as np
import pytest

from graspsim import (
    PolicyParams,
    Pose,
    Scenario,
    SensorModel,
    Setpoints,
    SurfaceModel,
    TwoLinkModel,
    WristGeometry,
    compute_metrics,
    gate_value,
    implicit_value,
    run,
    surface_gradient,
)
from graspsim.kinematics import (
    jacobian_pinv,
    null_projector,
    quat_from_rotation,
    rot_x,
    rot_y,
    rotation_from_quat,
)
from graspsim import plant
from graspsim.plant import JointState, ee_position, forward_dynamics, jacobian, torque_law

ALIGNED_DOWN = (0.0, 1.0, 0.0, 0.0)  # approach axis along -z of the base


def report(num, title, passed, detail):
    print(f"{'PASS' if passed else 'FAIL'} criterion {num} ({title}): {detail}")
    assert passed, f"criterion {num} ({title}): {detail}"


def quiet_sensor():
    return SensorModel(force_noise_std=0.0, moment_noise_std=0.0)


def flat_plane(stiffness):
    return SurfaceModel.plane((0.0, 0.0, 0.0), (0.0, 0.0, 1.0), stiffness)


# 1 -----------------------------------------------------------------------


def test_criterion_1_mass_coriolis_skew_symmetry():
    rng = np.random.default_rng(101)
    model = TwoLinkModel(m1=1.3, m2=0.7, l1=0.9, l2=0.6)
    h = 1e-6
    worst = 0.0
    for _ in range(100):
        q = rng.uniform(-math.pi, math.pi, 2)
        qd = rng.uniform(-3.0, 3.0, 2)
        x = rng.uniform(-1.0, 1.0, 2)
        m_dot = (
            plant.mass_matrix(model, q + h * qd) - plant.mass_matrix(model, q - h * qd)
        ) / (2.0 * h)
        s = m_dot - 2.0 * plant.coriolis_matrix(model, q, qd)
        worst = max(worst, abs(float(x @ s @ x)))
    report(1, "skew symmetry", worst < 1e-6, f"max |x'(Mdot-2C)x| = {worst:.3g} < 1e-6")


# 2 -----------------------------------------------------------------------


def test_criterion_2_pseudoinverse_identities():
    rng = np.random.default_rng(202)
    worst_right = 0.0
    worst_null = 0.0
    for _ in range(100):
        rows = rng.integers(1, 7)
        cols = rng.integers(rows, 10)
        J = rng.standard_normal((rows, cols))
        J_pinv = jacobian_pinv(J)
        worst_right = max(
            worst_right, float(np.max(np.abs(J @ J_pinv - np.eye(rows))))
        )
        v = rng.standard_normal(cols)
        worst_null = max(
            worst_null,
            float(np.linalg.norm(J @ (null_projector(J) @ v)) / np.linalg.norm(v)),
        )
    ok = worst_right < 1e-9 and worst_null < 1e-9
    report(
        2,
        "pseudoinverse identities",
        ok,
        f"max |JJ+-I| = {worst_right:.3g}, max |J Pnull v|/|v| = {worst_null:.3g} < 1e-9",
    )


# 3 -----------------------------------------------------------------------


def test_criterion_3_velocity_error_decay():
    vd = np.array([0.2, -0.15, 0.1, 0.4, -0.3, 0.5])
    scenario = Scenario(
        name="decay",
        duration=1.0,
        dt=1e-3,
        surface=SurfaceModel.plane((0.0, 0.0, -10.0), (0.0, 0.0, 1.0), 1e3),
        wrist=WristGeometry(radius=0.04),
        sensor=quiet_sensor(),
        policy=PolicyParams(damping=(4.0,) * 6),
        setpoints=Setpoints(velocity=vd),
        initial_pose=Pose(position=(0.0, 0.0, 0.0), orientation=(1.0, 0.0, 0.0, 0.0)),
    )
    trace = run(scenario)
    worst = 0.0
    for t_check in (0.25, 0.5, 1.0):
        k = int(round(t_check / scenario.dt))
        err = np.abs(vd - trace.twists[k])  # error magnitude, started at |vd|
        expected = np.abs(vd) * math.exp(-4.0 * t_check)
        worst = max(worst, float(np.max(np.abs(err - expected) / expected)))
    report(3, "velocity error decay", worst < 0.01, f"max relative gap {worst:.4f} < 0.01")


# 4 -----------------------------------------------------------------------


def test_criterion_4_force_regulation_across_stiffness():
    detail = []
    ok = True
    for stiffness in (1000.0, 5000.0, 20000.0):
        scenario = Scenario(
            name=f"press-{stiffness:g}",
            duration=5.0,
            dt=1e-3,
            surface=flat_plane(stiffness),
            wrist=WristGeometry(radius=0.04),
            sensor=SensorModel(),  # default noisy sensor
            policy=PolicyParams(),
            setpoints=Setpoints(normal_force=5.0),
            initial_pose=Pose(position=(0.2, -0.1, 0.0), orientation=ALIGNED_DOWN),
        )
        trace = run(scenario)
        window = len(trace) // 10
        force = float(np.mean(trace.measured_wrenches[-window:, 2]))
        pen = float(np.mean(trace.penetrations[-window:]))
        pen_target = 5.0 / stiffness
        force_ok = abs(force - 5.0) <= 0.02 * 5.0
        pen_ok = abs(pen - pen_target) <= 0.02 * pen_target
        ok = ok and force_ok and pen_ok
        detail.append(f"K={stiffness:g}: F={force:.3f} N, pen={1e3 * pen:.4f} mm")
    report(4, "force regulation", ok, "; ".join(detail) + " (both within 2%)")


# 5 -----------------------------------------------------------------------


def test_criterion_5_alignment_convergence():
    # 20 degree tilt about the base y axis on top of the straight-down pose
    R0 = rot_y(math.radians(20.0)) @ rot_x(math.pi)
    scenario = Scenario(
        name="align",
        duration=5.0,
        dt=1e-3,
        surface=flat_plane(5000.0),
        wrist=WristGeometry(radius=0.04),
        sensor=quiet_sensor(),
        policy=PolicyParams(),
        setpoints=Setpoints(normal_force=5.0),
        initial_pose=Pose(position=(0.3, 0.1, 0.0), orientation=quat_from_rotation(R0)),
    )
    trace = run(scenario)
    final_angle = float(trace.alignment_angles[-1])
    final_moment = float(np.linalg.norm(trace.true_wrenches[-1, 3:]))
    angle_ok = final_angle < math.radians(0.5)
    moment_ok = final_moment < 1e-3

    # the restoring moment acts about the end-effector y axis here; after its
    # peak it must decay without overshooting (critically damped loop)
    my = trace.true_wrenches[:, 4]
    if abs(my.min()) > abs(my.max()):
        my = -my
    peak = int(np.argmax(my))
    diffs = np.diff(my[peak:])
    monotone_ok = bool(np.all(diffs <= 1e-9))
    ok = angle_ok and moment_ok and monotone_ok
    report(
        5,
        "alignment convergence",
        ok,
        f"angle {math.degrees(final_angle):.3f} deg < 0.5, |m| {final_moment:.2e} < 1e-3, "
        f"moment decay monotone after peak: {monotone_ok}",
    )


# 6 -----------------------------------------------------------------------


def test_criterion_6_sliding_tangency():
    scenario = Scenario(
        name="slide",
        duration=4.0,
        dt=1e-3,
        surface=SurfaceModel.sphere((0.0, 0.0, -0.25), 0.25, 5e3),
        wrist=WristGeometry(radius=0.04),
        sensor=quiet_sensor(),
        policy=PolicyParams(
            damping=(4.0, 4.0, 200.0, 3.0, 3.0, 3.0),
            force_gain=(0.5, 0.5, 0.5, 150.0, 150.0, 150.0),
            gate_gain=0.0,
        ),
        setpoints=Setpoints(velocity=(0.0, 0.005, 0.0, 0.0, 0.0, 0.0), normal_force=5.0),
        initial_pose=Pose(position=(0.0, 0.0, 0.0), orientation=ALIGNED_DOWN),
        time_constants=(0.008,) * 6,
    )
    trace = run(scenario)
    metrics = compute_metrics(trace, scenario)
    assert metrics.settling_time_force is not None, "force must settle before tangency holds"
    start = int(np.searchsorted(trace.times, metrics.settling_time_force))
    center = np.asarray(scenario.surface.center)
    worst = 0.0
    for k in range(start, len(trace)):
        R = rotation_from_quat(trace.quaternions[k])
        v_base = R @ trace.twists[k, :3]
        n = trace.positions[k] - center
        n = n / np.linalg.norm(n)
        worst = max(worst, abs(float(n @ v_base)))
    report(
        6,
        "sliding tangency",
        worst < 1e-3,
        f"max |n.v| = {worst:.2e} m/s < 1e-3 after force settles at {metrics.settling_time_force:.3f} s",
    )


# 7 -----------------------------------------------------------------------


def _tangential_travel(gate_gain: float) -> float:
    """Integrated in-plane speed over the first second of a tilted press."""
    R0 = rot_x(math.radians(20.0)) @ rot_x(math.pi)
    scenario = Scenario(
        name=f"gate-{gate_gain:g}",
        duration=1.0,
        dt=1e-3,
        surface=flat_plane(5000.0),
        wrist=WristGeometry(radius=0.04),
        sensor=quiet_sensor(),
        policy=PolicyParams(gate_gain=gate_gain),
        setpoints=Setpoints(tangential_force=2.0, normal_force=5.0),
        initial_pose=Pose(position=(0.0, 0.0, 0.0), orientation=quat_from_rotation(R0)),
    )
    trace = run(scenario)
    total = 0.0
    for k in range(len(trace)):
        R = rotation_from_quat(trace.quaternions[k])
        v_base = R @ trace.twists[k, :3]
        total += math.hypot(v_base[0], v_base[1]) * scenario.dt
    return total


def test_criterion_7_gate_shapes_tangential_motion():
    rng = np.random.default_rng(707)
    prop_ok = True
    for _ in range(50):
        alpha = float(rng.uniform(0.0, 1.0))
        params = PolicyParams(gate_gain=alpha)
        prop_ok &= gate_value(0.0, params) == 1.0
        forces = np.sort(rng.uniform(0.0, 20.0, 8))
        gates = [gate_value(f, params) for f in forces]
        prop_ok &= all(1.0 - alpha - 1e-15 <= g <= 1.0 for g in gates)
        prop_ok &= all(b <= a + 1e-15 for a, b in zip(gates, gates[1:]))
        prop_ok &= gate_value(-forces[-1], params) == gates[-1]  # symmetric

    travel = {alpha: _tangential_travel(alpha) for alpha in (0.0, 0.5, 1.0)}
    sweep_ok = travel[0.0] > travel[0.5] > travel[1.0]
    ok = prop_ok and sweep_ok
    report(
        7,
        "tangential gate",
        ok,
        f"g(0)=1, range/monotone ok={prop_ok}; first-second travel "
        f"{travel[0.0]:.4f} > {travel[0.5]:.4f} > {travel[1.0]:.4f} m",
    )


# 8 -----------------------------------------------------------------------


def test_criterion_8_gradient_oracle():
    rng = np.random.default_rng(808)
    surfaces = (
        SurfaceModel.plane((0.0, 0.0, 0.1), (0.2, -0.3, 0.93), 1e4),
        SurfaceModel.sphere((0.05, -0.02, 0.1), 0.12, 1e4),
        SurfaceModel.cylinder((0.0, 0.0, 0.0), (0.1, 0.2, 0.97), 0.08, 1e4),
        SurfaceModel.superellipsoid((0.01, 0.02, -0.01), (0.04, 0.05, 0.12), (2.5, 6.0), 1e4),
    )
    h = 1e-6
    worst = 0.0
    for surface in surfaces:
        count = 0
        while count < 100:
            p = rng.uniform(-0.2, 0.2, 3)
            if surface.kind == "sphere" and np.linalg.norm(p - np.asarray(surface.center)) < 0.02:
                continue
            if surface.kind == "cylinder":
                axis = np.asarray(surface.axis)
                radial = p - np.asarray(surface.axis_point)
                radial = radial - (radial @ axis) * axis
                if np.linalg.norm(radial) < 0.02:
                    continue
            if surface.kind == "superellipsoid" and np.linalg.norm(
                p - np.asarray(surface.center)
            ) < 0.02:
                continue
            count += 1
            n = surface_gradient(surface, p)
            fd = np.empty(3)
            for axis_i in range(3):
                e = np.zeros(3)
                e[axis_i] = h
                fd[axis_i] = (
                    implicit_value(surface, p + e) - implicit_value(surface, p - e)
                ) / (2.0 * h)
            fd = fd / np.linalg.norm(fd)
            worst = max(worst, float(np.linalg.norm(n - fd)))
    report(8, "gradient oracle", worst < 1e-6, f"max unit-normal gap {worst:.3g} < 1e-6")


# 9 -----------------------------------------------------------------------


def test_criterion_9_torque_law_matches_velocity_plant():
    model = TwoLinkModel(m1=1.2, m2=0.8, l1=0.5, l2=0.4, g0=0.0)
    dt = 5e-4
    steps = int(round(2.0 / dt))
    damping = np.array([4.0, 4.0])
    inertia = np.array([1.0, 1.0])

    # moderate speeds: the law leaves Coriolis and Jacobian-rate terms to the
    # damping loop, and those grow quadratically with the commanded velocity
    def vd(t):
        return np.array([0.04 * math.sin(1.5 * t), 0.033 * (1.0 - math.cos(1.5 * t))])

    def vdd(t):
        return np.array([0.06 * math.cos(1.5 * t), 0.0495 * math.sin(1.5 * t)])

    q = np.array([0.4, 1.2])
    qd = np.zeros(2)
    p_vel = ee_position(model, q).copy()
    v_vel = np.zeros(2)
    zero2 = np.zeros(2)

    worst = 0.0
    travel = 0.0
    p0 = p_vel.copy()
    for k in range(steps):
        t = k * dt
        # joint-space plant driven by the torque law
        state = JointState(q=q, qdot=qd)
        tau = torque_law(model, state, vdd(t), vd(t), zero2, zero2, inertia, damping)
        qdd = forward_dynamics(model, state, tau)
        qd = qd + dt * qdd
        q = q + dt * qd
        # ideal velocity-mode plant running the same admittance command
        a = vdd(t) - damping * (v_vel - vd(t)) / inertia
        v_vel = v_vel + dt * a
        p_vel = p_vel + dt * v_vel

        p_arm = ee_position(model, q)
        worst = max(worst, float(np.linalg.norm(p_arm - p_vel)))
        travel = max(travel, float(np.linalg.norm(p_vel - p0)))

    rel = worst / travel
    report(
        9,
        "torque law vs velocity plant",
        rel < 0.05,
        f"max tip deviation {worst * 1e3:.3f} mm over {travel * 1e3:.1f} mm travel "
        f"({100 * rel:.2f}% < 5%)",
    )


# 10 ----------------------------------------------------------------------

TINY_YAML = """\
name: determinism
run:
  duration: 0.25
  dt: 0.005
  seed: 3
surface:
  kind: plane
  stiffness: 5000.0
  point: [0.0, 0.0, 0.0]
  normal: [0.0, 0.0, 1.0]
wrist:
  radius: 0.04
setpoints:
  normal_force: 5.0
initial_pose:
  position: [0.0, 0.0, 0.0]
  orientation: [0.0, 1.0, 0.0, 0.0]
"""


def _cli(args, cwd, workers=None):
    env = dict(os.environ)
    env.pop("GRASPSIM_BACKEND", None)
    if workers is None:
        env.pop("GRASPSIM_MAX_WORKERS", None)
    else:
        env["GRASPSIM_MAX_WORKERS"] = str(workers)
    return subprocess.run(
        [sys.executable, "-m", "graspsim", *args],
        cwd=cwd, env=env, capture_output=True, text=True, timeout=300,
    )


def test_criterion_10_byte_determinism(tmp_path):
    (tmp_path / "d.yaml").write_text(TINY_YAML)
    assert _cli(["run", "d.yaml", "--out", "r1"], tmp_path).returncode == 0
    assert _cli(["run", "d.yaml", "--out", "r2"], tmp_path).returncode == 0
    twice = (tmp_path / "r1" / "trace.csv").read_bytes() == (
        tmp_path / "r2" / "trace.csv"
    ).read_bytes()

    sweep = ["sweep", "d.yaml", "--param", "surface.stiffness",
             "--values", "2000,5000,8000", "--out"]
    assert _cli(sweep + ["s1"], tmp_path, workers=1).returncode == 0
    assert _cli(sweep + ["s2"], tmp_path, workers=3).returncode == 0
    across = all(
        (tmp_path / "s1" / rel).read_bytes() == (tmp_path / "s2" / rel).read_bytes()
        for rel in ("summary.csv", "value_2000/trace.csv",
                    "value_5000/trace.csv", "value_8000/trace.csv")
    )
    ok = twice and across
    report(
        10,
        "byte determinism",
        ok,
        f"repeat run identical: {twice}; sweep identical across 1 vs 3 workers: {across}",
    )
