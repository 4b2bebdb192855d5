"""Pure-Python scalar kernels: surface geometry and the per-tick loop.

This module is the reference implementation of the hot path; the compiled
extension `graspsim._kernels_cy` is a line-for-line translation of it.  The
two backends are required to produce **bit-identical** traces, so:

  * all arithmetic is scalar IEEE-754 double precision in the same order as
    the C code (no numpy reductions inside the loop);
  * transcendental calls go through the `math` module, which resolves to the
    same libm the extension links against;
  * the extension is compiled with -ffp-contract=off so the compiler cannot
    fuse multiply-adds that CPython leaves unfused.

Edit the two files together or not at all.
"""

import math

BACKEND_NAME = "python"

# Surface kind codes shared with the packed scenario parameters.
PLANE = 0
SPHERE = 1
CYLINDER = 2
SUPERELLIPSOID = 3

# Status codes returned by the kernels.
OK = 0
NONFINITE = 1
PROJECTION_FAIL = 2
GRADIENT_SINGULAR = 3

# Norm of the raw implicit gradient below which the normal is undefined.
GRAD_EPS = 1e-9

# Recorded contact flag requires this much penetration (chattering guard).
CONTACT_FLAG_EPS = 1e-7


# ---------------------------------------------------------------------------
# implicit surfaces
#
# Parameter packing (10 doubles, unused entries zero):
#   plane:          px py pz nx ny nz           (n unit, outward)
#   sphere:         cx cy cz r
#   cylinder:       ax ay az ux uy uz r         (u unit axis)
#   superellipsoid: cx cy cz a b c e1 e2
# Plane/sphere/cylinder values are exact signed distances; the
# superellipsoid keeps its natural implicit form (sign-correct only).
# ---------------------------------------------------------------------------


def surface_value(kind, p, x, y, z):
    if kind == PLANE:
        return (x - p[0]) * p[3] + (y - p[1]) * p[4] + (z - p[2]) * p[5]
    if kind == SPHERE:
        dx = x - p[0]
        dy = y - p[1]
        dz = z - p[2]
        return math.sqrt(dx * dx + dy * dy + dz * dz) - p[3]
    if kind == CYLINDER:
        dx = x - p[0]
        dy = y - p[1]
        dz = z - p[2]
        ax = dx * p[3] + dy * p[4] + dz * p[5]
        rx = dx - ax * p[3]
        ry = dy - ax * p[4]
        rz = dz - ax * p[5]
        return math.sqrt(rx * rx + ry * ry + rz * rz) - p[6]
    # superellipsoid
    dx = math.fabs(x - p[0]) / p[3]
    dy = math.fabs(y - p[1]) / p[4]
    dz = math.fabs(z - p[2]) / p[5]
    e1 = p[6]
    e2 = p[7]
    w = math.pow(dx, e2) + math.pow(dy, e2)
    return math.pow(w, e1 / e2) + math.pow(dz, e1) - 1.0


def surface_gradient_raw(kind, p, x, y, z):
    """Unnormalized gradient of surface_value (outward for all kinds)."""
    if kind == PLANE:
        return p[3], p[4], p[5]
    if kind == SPHERE:
        return x - p[0], y - p[1], z - p[2]
    if kind == CYLINDER:
        dx = x - p[0]
        dy = y - p[1]
        dz = z - p[2]
        ax = dx * p[3] + dy * p[4] + dz * p[5]
        return dx - ax * p[3], dy - ax * p[4], dz - ax * p[5]
    # superellipsoid
    sx = x - p[0]
    sy = y - p[1]
    sz = z - p[2]
    a = p[3]
    b = p[4]
    c = p[5]
    e1 = p[6]
    e2 = p[7]
    dx = math.fabs(sx) / a
    dy = math.fabs(sy) / b
    dz = math.fabs(sz) / c
    w = math.pow(dx, e2) + math.pow(dy, e2)
    wf = 0.0
    if w > 0.0:
        wf = (e1 / e2) * math.pow(w, e1 / e2 - 1.0) * e2
    gx = wf * math.pow(dx, e2 - 1.0) * (1.0 if sx >= 0.0 else -1.0) / a
    gy = wf * math.pow(dy, e2 - 1.0) * (1.0 if sy >= 0.0 else -1.0) / b
    gz = e1 * math.pow(dz, e1 - 1.0) * (1.0 if sz >= 0.0 else -1.0) / c
    return gx, gy, gz


def project_point(kind, p, x, y, z):
    """Nearest surface point.  Returns (status, x0, y0, z0).

    Closed form for plane/sphere/cylinder.  The superellipsoid uses a
    normal-ray fixed point: repeatedly shoot the ray through (x, y, z) along
    the current foot-point normal and solve the 1-D root on it, so at the
    fixed point the offset is exactly parallel to the surface normal.
    """
    if kind == PLANE:
        v = (x - p[0]) * p[3] + (y - p[1]) * p[4] + (z - p[2]) * p[5]
        return OK, x - v * p[3], y - v * p[4], z - v * p[5]
    if kind == SPHERE:
        dx = x - p[0]
        dy = y - p[1]
        dz = z - p[2]
        d = math.sqrt(dx * dx + dy * dy + dz * dz)
        if d < GRAD_EPS:
            return GRADIENT_SINGULAR, 0.0, 0.0, 0.0
        s = p[3] / d
        return OK, p[0] + dx * s, p[1] + dy * s, p[2] + dz * s
    if kind == CYLINDER:
        dx = x - p[0]
        dy = y - p[1]
        dz = z - p[2]
        ax = dx * p[3] + dy * p[4] + dz * p[5]
        rx = dx - ax * p[3]
        ry = dy - ax * p[4]
        rz = dz - ax * p[5]
        d = math.sqrt(rx * rx + ry * ry + rz * rz)
        if d < GRAD_EPS:
            return GRADIENT_SINGULAR, 0.0, 0.0, 0.0
        s = p[6] / d
        return (
            OK,
            p[0] + ax * p[3] + rx * s,
            p[1] + ax * p[4] + ry * s,
            p[2] + ax * p[5] + rz * s,
        )
    # superellipsoid: outer fixed point on the normal direction, inner 1-D
    # Newton for the surface crossing along that ray.
    yx = x
    yy = y
    yz = z
    for _ in range(100):
        gx, gy, gz = surface_gradient_raw(kind, p, yx, yy, yz)
        gn = math.sqrt(gx * gx + gy * gy + gz * gz)
        if gn < GRAD_EPS:
            return GRADIENT_SINGULAR, 0.0, 0.0, 0.0
        nx = gx / gn
        ny = gy / gn
        nz = gz / gn
        t = (x - yx) * nx + (y - yy) * ny + (z - yz) * nz
        converged = False
        for _ in range(60):
            cx = x - t * nx
            cy = y - t * ny
            cz = z - t * nz
            val = surface_value(kind, p, cx, cy, cz)
            if math.fabs(val) < 1e-13:
                converged = True
                break
            dgx, dgy, dgz = surface_gradient_raw(kind, p, cx, cy, cz)
            slope = -(dgx * nx + dgy * ny + dgz * nz)
            if math.fabs(slope) < 1e-14:
                return PROJECTION_FAIL, 0.0, 0.0, 0.0
            t = t - val / slope
        if not converged:
            return PROJECTION_FAIL, 0.0, 0.0, 0.0
        mx = x - t * nx
        my = y - t * ny
        mz = z - t * nz
        moved = math.sqrt(
            (mx - yx) * (mx - yx) + (my - yy) * (my - yy) + (mz - yz) * (mz - yz)
        )
        yx = mx
        yy = my
        yz = mz
        if moved < 1e-13:
            return OK, yx, yy, yz
    return PROJECTION_FAIL, 0.0, 0.0, 0.0


# ---------------------------------------------------------------------------
# per-tick closed loop
# ---------------------------------------------------------------------------


def pack_params(
    dt,
    kind,
    sparams,
    stiffness,
    wrist_radius,
    beta,
    force_noise_std,
    moment_noise_std,
    inertia,
    damping,
    force_gain,
    gate_gain,
    force_scale,
    vel_set,
    acc_set,
    f_tan_d,
    f_norm_d,
    time_constants,
    sat_lin,
    sat_ang,
):
    """Tuple consumed by tick(); mirrors the flat run_trace signature."""
    return (
        float(dt),
        int(kind),
        tuple(float(v) for v in sparams),
        float(stiffness),
        float(wrist_radius),
        float(beta),
        float(force_noise_std),
        float(moment_noise_std),
        tuple(float(v) for v in inertia),
        tuple(float(v) for v in damping),
        tuple(float(v) for v in force_gain),
        float(gate_gain),
        float(force_scale),
        tuple(float(v) for v in vel_set),
        tuple(float(v) for v in acc_set),
        float(f_tan_d),
        float(f_norm_d),
        tuple(float(v) for v in time_constants),
        float(sat_lin),
        float(sat_ang),
    )


def tick(P, state, noise):
    """One closed-loop tick.

    `state`  = (px,py,pz, qw,qx,qy,qz, vc0..vc5, va0..va5, fy0..fy5): pose,
    commanded twist integrator, achieved twist, sensor filter state (the
    twists and the filter live in the end-effector frame).
    `noise`  = six standard normal draws for this tick's sensor reading.

    Returns (status, new_state, record) where record is
    (true_wrench6, measured_wrench6, gate, contact_flag, align, accel6,
    penetration); the record describes the incoming state (time t_k),
    new_state is the state at t_{k+1}.
    """
    (
        dt,
        kind,
        sp,
        stiffness,
        wrist_r,
        beta,
        fstd,
        mstd,
        md,
        bd,
        bf,
        alpha,
        fscale,
        vd,
        vdd,
        ftd,
        fnd,
        tc,
        sat_lin,
        sat_ang,
    ) = P

    px, py, pz = state[0], state[1], state[2]
    qw, qx, qy, qz = state[3], state[4], state[5], state[6]
    vc = list(state[7:13])
    va = list(state[13:19])
    fy = list(state[19:25])

    # rotation matrix of the unit quaternion (base <- ee)
    r00 = 1.0 - 2.0 * (qy * qy + qz * qz)
    r01 = 2.0 * (qx * qy - qw * qz)
    r02 = 2.0 * (qx * qz + qw * qy)
    r10 = 2.0 * (qx * qy + qw * qz)
    r11 = 1.0 - 2.0 * (qx * qx + qz * qz)
    r12 = 2.0 * (qy * qz - qw * qx)
    r20 = 2.0 * (qx * qz - qw * qy)
    r21 = 2.0 * (qy * qz + qw * qx)
    r22 = 1.0 - 2.0 * (qx * qx + qy * qy)

    # (1) contact evaluation at the current pose
    val = surface_value(kind, sp, px, py, pz)
    pen = 0.0
    force = 0.0
    nx = 0.0
    ny = 0.0
    nz = 0.0
    have_normal = False
    if val < 0.0:
        st, x0, y0, z0 = project_point(kind, sp, px, py, pz)
        if st != OK:
            return st, state, None
        gx, gy, gz = surface_gradient_raw(kind, sp, x0, y0, z0)
        gn = math.sqrt(gx * gx + gy * gy + gz * gz)
        if gn < GRAD_EPS:
            return GRADIENT_SINGULAR, state, None
        nx = gx / gn
        ny = gy / gn
        nz = gz / gn
        ex = px - x0
        ey = py - y0
        ez = pz - z0
        pen = math.sqrt(ex * ex + ey * ey + ez * ez)
        force = stiffness * pen
        have_normal = True
    else:
        gx, gy, gz = surface_gradient_raw(kind, sp, px, py, pz)
        gn = math.sqrt(gx * gx + gy * gy + gz * gz)
        if gn >= GRAD_EPS:
            nx = gx / gn
            ny = gy / gn
            nz = gz / gn
            have_normal = True

    # (2) true wrench in the end-effector frame: the tip pushes along the
    # inward normal with magnitude K * penetration; the ring-contact moment
    # is r * F * (z_e x n_hat) expressed in the ee frame.
    nex = r00 * nx + r10 * ny + r20 * nz  # n_hat in ee coordinates (R^T n)
    ney = r01 * nx + r11 * ny + r21 * nz
    nez = r02 * nx + r12 * ny + r22 * nz
    w0 = -force * nex
    w1 = -force * ney
    w2 = -force * nez
    w3 = wrist_r * force * (-ney)
    w4 = wrist_r * force * nex
    w5 = 0.0

    # (3) sensor: seeded Gaussian noise, then first-order low-pass
    u0 = w0 + noise[0] * fstd
    u1 = w1 + noise[1] * fstd
    u2 = w2 + noise[2] * fstd
    u3 = w3 + noise[3] * mstd
    u4 = w4 + noise[4] * mstd
    u5 = w5 + noise[5] * mstd
    fy[0] = fy[0] + beta * (u0 - fy[0])
    fy[1] = fy[1] + beta * (u1 - fy[1])
    fy[2] = fy[2] + beta * (u2 - fy[2])
    fy[3] = fy[3] + beta * (u3 - fy[3])
    fy[4] = fy[4] + beta * (u4 - fy[4])
    fy[5] = fy[5] + beta * (u5 - fy[5])

    # (4) gated feedback vector
    gate = 1.0 - alpha * math.tanh(math.fabs(fy[1]) / fscale)
    fb1 = gate * (fy[1] - ftd)
    fb2 = fy[2] - fnd
    fb3 = fy[3]
    fb4 = fy[4]

    # (5) admittance acceleration (end-effector frame)
    a0 = (md[0] * vdd[0] - bd[0] * (va[0] - vd[0])) / md[0]
    a1 = (md[1] * vdd[1] - bd[1] * (va[1] - vd[1]) - bf[1] * fb1) / md[1]
    a2 = (md[2] * vdd[2] - bd[2] * (va[2] - vd[2]) - bf[2] * fb2) / md[2]
    a3 = (md[3] * vdd[3] - bd[3] * (va[3] - vd[3]) - bf[3] * fb3) / md[3]
    a4 = (md[4] * vdd[4] - bd[4] * (va[4] - vd[4]) - bf[4] * fb4) / md[4]
    a5 = (md[5] * vdd[5] - bd[5] * (va[5] - vd[5])) / md[5]
    accel = (a0, a1, a2, a3, a4, a5)

    # alignment angle between the approach axis z_e and the inward normal
    if have_normal:
        ca = -(r02 * nx + r12 * ny + r22 * nz)
        if ca > 1.0:
            ca = 1.0
        elif ca < -1.0:
            ca = -1.0
        align = math.acos(ca)
    else:
        align = 0.0

    flag = 1 if pen > CONTACT_FLAG_EPS else 0
    record = (
        (w0, w1, w2, w3, w4, w5),
        (fy[0], fy[1], fy[2], fy[3], fy[4], fy[5]),
        gate,
        flag,
        align,
        accel,
        pen,
    )

    # (6) integrate: commanded twist (clamped in place, anti-windup),
    # per-axis first-order plant lag, then pose
    for i in range(6):
        v = vc[i] + accel[i] * dt
        lim = sat_lin if i < 3 else sat_ang
        if v > lim:
            v = lim
        elif v < -lim:
            v = -lim
        vc[i] = v
    for i in range(6):
        if tc[i] == 0.0:
            va[i] = vc[i]
        else:
            va[i] = va[i] + (dt / tc[i]) * (vc[i] - va[i])

    px = px + (r00 * va[0] + r01 * va[1] + r02 * va[2]) * dt
    py = py + (r10 * va[0] + r11 * va[1] + r12 * va[2]) * dt
    pz = pz + (r20 * va[0] + r21 * va[1] + r22 * va[2]) * dt

    ox = (r00 * va[3] + r01 * va[4] + r02 * va[5]) * dt
    oy = (r10 * va[3] + r11 * va[4] + r12 * va[5]) * dt
    oz = (r20 * va[3] + r21 * va[4] + r22 * va[5]) * dt
    ang = math.sqrt(ox * ox + oy * oy + oz * oz)
    if ang < 1e-12:
        kw = 1.0
        kx = 0.5 * ox
        ky = 0.5 * oy
        kz = 0.5 * oz
    else:
        half = 0.5 * ang
        s = math.sin(half) / ang
        kw = math.cos(half)
        kx = ox * s
        ky = oy * s
        kz = oz * s
    nw = kw * qw - kx * qx - ky * qy - kz * qz
    nxq = kw * qx + kx * qw + ky * qz - kz * qy
    nyq = kw * qy - kx * qz + ky * qw + kz * qx
    nzq = kw * qz + kx * qy - ky * qx + kz * qw
    qn = math.sqrt(nw * nw + nxq * nxq + nyq * nyq + nzq * nzq)
    qw = nw / qn
    qx = nxq / qn
    qy = nyq / qn
    qz = nzq / qn

    finite = (
        px + py + pz + qw + qx + qy + qz
        + va[0] + va[1] + va[2] + va[3] + va[4] + va[5]
        + vc[0] + vc[1] + vc[2] + vc[3] + vc[4] + vc[5]
        + fy[0] + fy[1] + fy[2] + fy[3] + fy[4] + fy[5]
    )
    status = OK if math.isfinite(finite) else NONFINITE

    new_state = (
        px,
        py,
        pz,
        qw,
        qx,
        qy,
        qz,
        vc[0],
        vc[1],
        vc[2],
        vc[3],
        vc[4],
        vc[5],
        va[0],
        va[1],
        va[2],
        va[3],
        va[4],
        va[5],
        fy[0],
        fy[1],
        fy[2],
        fy[3],
        fy[4],
        fy[5],
    )
    return status, new_state, record


def run_trace(
    n_steps,
    dt,
    kind,
    sparams,
    stiffness,
    wrist_radius,
    beta,
    force_noise_std,
    moment_noise_std,
    inertia,
    damping,
    force_gain,
    gate_gain,
    force_scale,
    vel_set,
    acc_set,
    f_tan_d,
    f_norm_d,
    time_constants,
    sat_lin,
    sat_ang,
    pos0,
    quat0,
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
):
    """Fill n_steps+1 trace rows; returns (status, fail_index)."""
    P = pack_params(
        dt,
        kind,
        sparams,
        stiffness,
        wrist_radius,
        beta,
        force_noise_std,
        moment_noise_std,
        inertia,
        damping,
        force_gain,
        gate_gain,
        force_scale,
        vel_set,
        acc_set,
        f_tan_d,
        f_norm_d,
        time_constants,
        sat_lin,
        sat_ang,
    )
    state = (
        float(pos0[0]),
        float(pos0[1]),
        float(pos0[2]),
        float(quat0[0]),
        float(quat0[1]),
        float(quat0[2]),
        float(quat0[3]),
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
    )
    for k in range(n_steps + 1):
        nrow = (
            float(noise[k, 0]),
            float(noise[k, 1]),
            float(noise[k, 2]),
            float(noise[k, 3]),
            float(noise[k, 4]),
            float(noise[k, 5]),
        )
        status, nxt, rec = tick(P, state, nrow)
        if rec is None:
            return status, k
        out_t[k] = k * dt
        out_pos[k, 0] = state[0]
        out_pos[k, 1] = state[1]
        out_pos[k, 2] = state[2]
        out_quat[k, 0] = state[3]
        out_quat[k, 1] = state[4]
        out_quat[k, 2] = state[5]
        out_quat[k, 3] = state[6]
        for i in range(6):
            out_twist[k, i] = state[13 + i]
            out_wrench_true[k, i] = rec[0][i]
            out_wrench[k, i] = rec[1][i]
            out_accel[k, i] = rec[5][i]
        out_gate[k] = rec[2]
        out_contact[k] = rec[3]
        out_align[k] = rec[4]
        out_pen[k] = rec[6]
        if status != OK:
            return status, k
        if k < n_steps:
            state = nxt
    return OK, n_steps
