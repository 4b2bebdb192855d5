# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels: line-for-line translation of _kernels_py.

Keep every arithmetic expression in the same order as the Python module;
together with -ffp-contract=off this makes the two backends bit-identical.
Edit the two files together or not at all.
"""

from libc.math cimport acos, cos, fabs, isfinite, pow, sin, sqrt, tanh

BACKEND_NAME = "cython"

PLANE = 0
SPHERE = 1
CYLINDER = 2
SUPERELLIPSOID = 3

OK = 0
NONFINITE = 1
PROJECTION_FAIL = 2
GRADIENT_SINGULAR = 3

cdef double GRAD_EPS = 1e-9
cdef double CONTACT_FLAG_EPS = 1e-7

cdef int _OK = 0
cdef int _NONFINITE = 1
cdef int _PROJECTION_FAIL = 2
cdef int _GRADIENT_SINGULAR = 3


cdef double _surface_value(int kind, const double* p, double x, double y, double z) noexcept nogil:
    cdef double dx, dy, dz, ax, rx, ry, rz, e1, e2, w
    if kind == 0:  # plane
        return (x - p[0]) * p[3] + (y - p[1]) * p[4] + (z - p[2]) * p[5]
    if kind == 1:  # sphere
        dx = x - p[0]
        dy = y - p[1]
        dz = z - p[2]
        return sqrt(dx * dx + dy * dy + dz * dz) - p[3]
    if kind == 2:  # cylinder
        dx = x - p[0]
        dy = y - p[1]
        dz = z - p[2]
        ax = dx * p[3] + dy * p[4] + dz * p[5]
        rx = dx - ax * p[3]
        ry = dy - ax * p[4]
        rz = dz - ax * p[5]
        return sqrt(rx * rx + ry * ry + rz * rz) - p[6]
    # superellipsoid
    dx = fabs(x - p[0]) / p[3]
    dy = fabs(y - p[1]) / p[4]
    dz = fabs(z - p[2]) / p[5]
    e1 = p[6]
    e2 = p[7]
    w = pow(dx, e2) + pow(dy, e2)
    return pow(w, e1 / e2) + pow(dz, e1) - 1.0


cdef void _surface_gradient_raw(int kind, const double* p, double x, double y, double z,
                                double* g) noexcept nogil:
    cdef double dx, dy, dz, ax, sx, sy, sz, a, b, c, e1, e2, w, wf
    if kind == 0:  # plane
        g[0] = p[3]
        g[1] = p[4]
        g[2] = p[5]
        return
    if kind == 1:  # sphere
        g[0] = x - p[0]
        g[1] = y - p[1]
        g[2] = z - p[2]
        return
    if kind == 2:  # cylinder
        dx = x - p[0]
        dy = y - p[1]
        dz = z - p[2]
        ax = dx * p[3] + dy * p[4] + dz * p[5]
        g[0] = dx - ax * p[3]
        g[1] = dy - ax * p[4]
        g[2] = dz - ax * p[5]
        return
    # superellipsoid
    sx = x - p[0]
    sy = y - p[1]
    sz = z - p[2]
    a = p[3]
    b = p[4]
    c = p[5]
    e1 = p[6]
    e2 = p[7]
    dx = fabs(sx) / a
    dy = fabs(sy) / b
    dz = fabs(sz) / c
    w = pow(dx, e2) + pow(dy, e2)
    wf = 0.0
    if w > 0.0:
        wf = (e1 / e2) * pow(w, e1 / e2 - 1.0) * e2
    g[0] = wf * pow(dx, e2 - 1.0) * (1.0 if sx >= 0.0 else -1.0) / a
    g[1] = wf * pow(dy, e2 - 1.0) * (1.0 if sy >= 0.0 else -1.0) / b
    g[2] = e1 * pow(dz, e1 - 1.0) * (1.0 if sz >= 0.0 else -1.0) / c


cdef int _project_point(int kind, const double* p, double x, double y, double z,
                        double* out) noexcept nogil:
    cdef double v, dx, dy, dz, d, s, ax, rx, ry, rz
    cdef double yx, yy, yz, g[3], gn, nx, ny, nz, t, cx, cy, cz, val, slope
    cdef double mx, my, mz, moved
    cdef int outer, inner, converged
    if kind == 0:  # plane
        v = (x - p[0]) * p[3] + (y - p[1]) * p[4] + (z - p[2]) * p[5]
        out[0] = x - v * p[3]
        out[1] = y - v * p[4]
        out[2] = z - v * p[5]
        return _OK
    if kind == 1:  # sphere
        dx = x - p[0]
        dy = y - p[1]
        dz = z - p[2]
        d = sqrt(dx * dx + dy * dy + dz * dz)
        if d < GRAD_EPS:
            return _GRADIENT_SINGULAR
        s = p[3] / d
        out[0] = p[0] + dx * s
        out[1] = p[1] + dy * s
        out[2] = p[2] + dz * s
        return _OK
    if kind == 2:  # cylinder
        dx = x - p[0]
        dy = y - p[1]
        dz = z - p[2]
        ax = dx * p[3] + dy * p[4] + dz * p[5]
        rx = dx - ax * p[3]
        ry = dy - ax * p[4]
        rz = dz - ax * p[5]
        d = sqrt(rx * rx + ry * ry + rz * rz)
        if d < GRAD_EPS:
            return _GRADIENT_SINGULAR
        s = p[6] / d
        out[0] = p[0] + ax * p[3] + rx * s
        out[1] = p[1] + ax * p[4] + ry * s
        out[2] = p[2] + ax * p[5] + rz * s
        return _OK
    # superellipsoid: outer fixed point on the normal direction, inner 1-D
    # Newton for the surface crossing along that ray.
    yx = x
    yy = y
    yz = z
    for outer in range(100):
        _surface_gradient_raw(kind, p, yx, yy, yz, g)
        gn = sqrt(g[0] * g[0] + g[1] * g[1] + g[2] * g[2])
        if gn < GRAD_EPS:
            return _GRADIENT_SINGULAR
        nx = g[0] / gn
        ny = g[1] / gn
        nz = g[2] / gn
        t = (x - yx) * nx + (y - yy) * ny + (z - yz) * nz
        converged = 0
        for inner in range(60):
            cx = x - t * nx
            cy = y - t * ny
            cz = z - t * nz
            val = _surface_value(kind, p, cx, cy, cz)
            if fabs(val) < 1e-13:
                converged = 1
                break
            _surface_gradient_raw(kind, p, cx, cy, cz, g)
            slope = -(g[0] * nx + g[1] * ny + g[2] * nz)
            if fabs(slope) < 1e-14:
                return _PROJECTION_FAIL
            t = t - val / slope
        if not converged:
            return _PROJECTION_FAIL
        mx = x - t * nx
        my = y - t * ny
        mz = z - t * nz
        moved = sqrt(
            (mx - yx) * (mx - yx) + (my - yy) * (my - yy) + (mz - yz) * (mz - yz)
        )
        yx = mx
        yy = my
        yz = mz
        if moved < 1e-13:
            out[0] = yx
            out[1] = yy
            out[2] = yz
            return _OK
    return _PROJECTION_FAIL


def surface_value(kind, p, x, y, z):
    """Python-visible wrapper (testing convenience)."""
    cdef double pp[10]
    cdef int i
    for i in range(10):
        pp[i] = p[i]
    return _surface_value(kind, pp, x, y, z)


def run_trace(
    int n_steps,
    double dt,
    int kind,
    double[::1] sparams,
    double stiffness,
    double wrist_radius,
    double beta,
    double force_noise_std,
    double moment_noise_std,
    double[::1] inertia,
    double[::1] damping,
    double[::1] force_gain,
    double gate_gain,
    double force_scale,
    double[::1] vel_set,
    double[::1] acc_set,
    double f_tan_d,
    double f_norm_d,
    double[::1] time_constants,
    double sat_lin,
    double sat_ang,
    double[::1] pos0,
    double[::1] quat0,
    double[:, ::1] noise,
    double[::1] out_t,
    double[:, ::1] out_pos,
    double[:, ::1] out_quat,
    double[:, ::1] out_twist,
    double[:, ::1] out_wrench_true,
    double[:, ::1] out_wrench,
    double[::1] out_gate,
    int[::1] out_contact,
    double[::1] out_align,
    double[:, ::1] out_accel,
    double[::1] out_pen,
):
    """Fill n_steps+1 trace rows; returns (status, fail_index)."""
    cdef double sp[10]
    cdef double md[6], bd[6], bf[6], vd[6], vdd[6], tc[6]
    cdef double vc[6], va[6], fy[6]
    cdef double px, py, pz, qw, qx, qy, qz
    cdef double r00, r01, r02, r10, r11, r12, r20, r21, r22
    cdef double val, pen, force, nx, ny, nz, gx, gy, gz, gn
    cdef double ex, ey, ez, x0[3], g3[3]
    cdef double nex, ney, nez, w0, w1, w2, w3, w4, w5
    cdef double u0, u1, u2, u3, u4, u5
    cdef double gate, fb1, fb2, fb3, fb4
    cdef double a0, a1, a2, a3, a4, a5
    cdef double ca, align, v, lim
    cdef double ox, oy, oz, ang, half, s, kw, kx, ky, kz
    cdef double nw, nxq, nyq, nzq, qn, finite
    cdef int k, i, st, flag, have_normal, status
    cdef double accel[6]

    for i in range(10):
        sp[i] = sparams[i]
    for i in range(6):
        md[i] = inertia[i]
        bd[i] = damping[i]
        bf[i] = force_gain[i]
        vd[i] = vel_set[i]
        vdd[i] = acc_set[i]
        tc[i] = time_constants[i]
        vc[i] = 0.0
        va[i] = 0.0
        fy[i] = 0.0
    px = pos0[0]
    py = pos0[1]
    pz = pos0[2]
    qw = quat0[0]
    qx = quat0[1]
    qy = quat0[2]
    qz = quat0[3]

    for k in range(n_steps + 1):
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
        val = _surface_value(kind, sp, px, py, pz)
        pen = 0.0
        force = 0.0
        nx = 0.0
        ny = 0.0
        nz = 0.0
        have_normal = 0
        if val < 0.0:
            st = _project_point(kind, sp, px, py, pz, x0)
            if st != _OK:
                return st, k
            _surface_gradient_raw(kind, sp, x0[0], x0[1], x0[2], g3)
            gn = sqrt(g3[0] * g3[0] + g3[1] * g3[1] + g3[2] * g3[2])
            if gn < GRAD_EPS:
                return _GRADIENT_SINGULAR, k
            nx = g3[0] / gn
            ny = g3[1] / gn
            nz = g3[2] / gn
            ex = px - x0[0]
            ey = py - x0[1]
            ez = pz - x0[2]
            pen = sqrt(ex * ex + ey * ey + ez * ez)
            force = stiffness * pen
            have_normal = 1
        else:
            _surface_gradient_raw(kind, sp, px, py, pz, g3)
            gn = sqrt(g3[0] * g3[0] + g3[1] * g3[1] + g3[2] * g3[2])
            if gn >= GRAD_EPS:
                nx = g3[0] / gn
                ny = g3[1] / gn
                nz = g3[2] / gn
                have_normal = 1

        # (2) true wrench in the end-effector frame
        nex = r00 * nx + r10 * ny + r20 * nz
        ney = r01 * nx + r11 * ny + r21 * nz
        nez = r02 * nx + r12 * ny + r22 * nz
        w0 = -force * nex
        w1 = -force * ney
        w2 = -force * nez
        w3 = wrist_radius * force * (-ney)
        w4 = wrist_radius * force * nex
        w5 = 0.0

        # (3) sensor: seeded Gaussian noise, then first-order low-pass
        u0 = w0 + noise[k, 0] * force_noise_std
        u1 = w1 + noise[k, 1] * force_noise_std
        u2 = w2 + noise[k, 2] * force_noise_std
        u3 = w3 + noise[k, 3] * moment_noise_std
        u4 = w4 + noise[k, 4] * moment_noise_std
        u5 = w5 + noise[k, 5] * moment_noise_std
        fy[0] = fy[0] + beta * (u0 - fy[0])
        fy[1] = fy[1] + beta * (u1 - fy[1])
        fy[2] = fy[2] + beta * (u2 - fy[2])
        fy[3] = fy[3] + beta * (u3 - fy[3])
        fy[4] = fy[4] + beta * (u4 - fy[4])
        fy[5] = fy[5] + beta * (u5 - fy[5])

        # (4) gated feedback vector
        gate = 1.0 - gate_gain * tanh(fabs(fy[1]) / force_scale)
        fb1 = gate * (fy[1] - f_tan_d)
        fb2 = fy[2] - f_norm_d
        fb3 = fy[3]
        fb4 = fy[4]

        # (5) admittance acceleration (end-effector frame)
        a0 = (md[0] * vdd[0] - bd[0] * (va[0] - vd[0])) / md[0]
        a1 = (md[1] * vdd[1] - bd[1] * (va[1] - vd[1]) - bf[1] * fb1) / md[1]
        a2 = (md[2] * vdd[2] - bd[2] * (va[2] - vd[2]) - bf[2] * fb2) / md[2]
        a3 = (md[3] * vdd[3] - bd[3] * (va[3] - vd[3]) - bf[3] * fb3) / md[3]
        a4 = (md[4] * vdd[4] - bd[4] * (va[4] - vd[4]) - bf[4] * fb4) / md[4]
        a5 = (md[5] * vdd[5] - bd[5] * (va[5] - vd[5])) / md[5]
        accel[0] = a0
        accel[1] = a1
        accel[2] = a2
        accel[3] = a3
        accel[4] = a4
        accel[5] = a5

        # alignment angle between approach axis and inward normal
        if have_normal:
            ca = -(r02 * nx + r12 * ny + r22 * nz)
            if ca > 1.0:
                ca = 1.0
            elif ca < -1.0:
                ca = -1.0
            align = acos(ca)
        else:
            align = 0.0

        flag = 1 if pen > CONTACT_FLAG_EPS else 0

        out_t[k] = k * dt
        out_pos[k, 0] = px
        out_pos[k, 1] = py
        out_pos[k, 2] = pz
        out_quat[k, 0] = qw
        out_quat[k, 1] = qx
        out_quat[k, 2] = qy
        out_quat[k, 3] = qz
        out_wrench_true[k, 0] = w0
        out_wrench_true[k, 1] = w1
        out_wrench_true[k, 2] = w2
        out_wrench_true[k, 3] = w3
        out_wrench_true[k, 4] = w4
        out_wrench_true[k, 5] = w5
        for i in range(6):
            out_twist[k, i] = va[i]
            out_wrench[k, i] = fy[i]
            out_accel[k, i] = accel[i]
        out_gate[k] = gate
        out_contact[k] = flag
        out_align[k] = align
        out_pen[k] = pen

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
        ang = sqrt(ox * ox + oy * oy + oz * oz)
        if ang < 1e-12:
            kw = 1.0
            kx = 0.5 * ox
            ky = 0.5 * oy
            kz = 0.5 * oz
        else:
            half = 0.5 * ang
            s = sin(half) / ang
            kw = cos(half)
            kx = ox * s
            ky = oy * s
            kz = oz * s
        nw = kw * qw - kx * qx - ky * qy - kz * qz
        nxq = kw * qx + kx * qw + ky * qz - kz * qy
        nyq = kw * qy - kx * qz + ky * qw + kz * qx
        nzq = kw * qz + kx * qy - ky * qx + kz * qw
        qn = sqrt(nw * nw + nxq * nxq + nyq * nyq + nzq * nzq)
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
        status = _OK if isfinite(finite) else _NONFINITE
        if status != _OK:
            return status, k
    return _OK, n_steps
