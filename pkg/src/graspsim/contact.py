"""Implicit-surface contact model and wrist force/torque sensing.

Surfaces are level sets of a scalar field that is negative inside the
object, zero on its boundary and positive outside.  Plane, sphere and
cylinder use exact signed distance; the superellipsoid keeps its natural
algebraic form, which is sign-correct but not metric, so penetration depth
is always measured as the distance to the projected foot point rather than
as the implicit value.

A penetrating tip is pushed back along the outward surface normal with a
linear penalty force F = stiffness * penetration.  Because the fingertip
ring touches an inclined surface on one side first, misalignment of the
approach axis with the surface normal produces a restoring moment
m = radius * F * (z_e x n_e) about the wrist, expressed in the
end-effector frame.

Scalar surface math is delegated to the backend kernel module so the
interactive API and the batched simulation loop share one implementation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from . import _kernels_py as _k
from .errors import (
    FrameMismatchError,
    GradientSingularityError,
    ProjectionConvergenceError,
)
from .kinematics import Frame, Pose, Wrench, rotation_from_quat

_KIND_IDS = {
    "plane": _k.PLANE,
    "sphere": _k.SPHERE,
    "cylinder": _k.CYLINDER,
    "superellipsoid": _k.SUPERELLIPSOID,
}


def _vec3(value, name):
    v = np.asarray(value, dtype=float)
    if v.shape != (3,):
        raise ValueError(f"{name} must be a 3-vector, got shape {v.shape}")
    return v


@dataclass(frozen=True, eq=False)
class SurfaceModel:
    """One rigid object boundary plus its contact stiffness (N/m).

    Use the `plane`, `sphere`, `cylinder` and `superellipsoid` factory
    methods; the relevant geometric fields are populated per kind and the
    rest stay None.
    """

    kind: str
    stiffness: float
    point: Optional[np.ndarray] = None
    normal: Optional[np.ndarray] = None
    center: Optional[np.ndarray] = None
    radius: Optional[float] = None
    axis_point: Optional[np.ndarray] = None
    axis: Optional[np.ndarray] = None
    semi_axes: Optional[np.ndarray] = None
    exponents: Optional[Tuple[float, float]] = None
    _kind_id: int = field(init=False, repr=False, default=0)
    _params: Tuple[float, ...] = field(init=False, repr=False, default=())

    def __post_init__(self):
        if self.kind not in _KIND_IDS:
            raise ValueError(f"unknown surface kind {self.kind!r}")
        if not self.stiffness > 0.0:
            raise ValueError("stiffness must be positive")
        p = [0.0] * 10
        if self.kind == "plane":
            p[0:3] = self.point
            p[3:6] = self.normal
        elif self.kind == "sphere":
            p[0:3] = self.center
            p[3] = self.radius
        elif self.kind == "cylinder":
            p[0:3] = self.axis_point
            p[3:6] = self.axis
            p[6] = self.radius
        else:
            p[0:3] = self.center
            p[3:6] = self.semi_axes
            p[6] = self.exponents[0]
            p[7] = self.exponents[1]
        object.__setattr__(self, "_kind_id", _KIND_IDS[self.kind])
        object.__setattr__(self, "_params", tuple(float(v) for v in p))

    @classmethod
    def plane(cls, point, normal, stiffness):
        n = _vec3(normal, "normal")
        norm = np.linalg.norm(n)
        if norm < 1e-12:
            raise ValueError("plane normal must be nonzero")
        return cls(kind="plane", stiffness=float(stiffness), point=_vec3(point, "point"),
                   normal=n / norm)

    @classmethod
    def sphere(cls, center, radius, stiffness):
        if not radius > 0.0:
            raise ValueError("sphere radius must be positive")
        return cls(kind="sphere", stiffness=float(stiffness),
                   center=_vec3(center, "center"), radius=float(radius))

    @classmethod
    def cylinder(cls, axis_point, axis, radius, stiffness):
        u = _vec3(axis, "axis")
        norm = np.linalg.norm(u)
        if norm < 1e-12:
            raise ValueError("cylinder axis must be nonzero")
        if not radius > 0.0:
            raise ValueError("cylinder radius must be positive")
        return cls(kind="cylinder", stiffness=float(stiffness),
                   axis_point=_vec3(axis_point, "axis_point"), axis=u / norm,
                   radius=float(radius))

    @classmethod
    def superellipsoid(cls, center, semi_axes, exponents, stiffness):
        sa = _vec3(semi_axes, "semi_axes")
        if not np.all(sa > 0.0):
            raise ValueError("semi_axes must be positive")
        e1, e2 = float(exponents[0]), float(exponents[1])
        if e1 < 2.0 or e2 < 2.0:
            raise ValueError("exponents must be >= 2 for a smooth gradient")
        return cls(kind="superellipsoid", stiffness=float(stiffness),
                   center=_vec3(center, "center"), semi_axes=sa, exponents=(e1, e2))


@dataclass(frozen=True)
class WristGeometry:
    """Fingertip ring radius (m) used for the contact moment arm."""

    radius: float

    def __post_init__(self):
        if not self.radius > 0.0:
            raise ValueError("wrist radius must be positive")


@dataclass(frozen=True)
class ContactState:
    """Base-frame contact summary: foot point, outward unit normal,
    penetration depth (m, >= 0) and whether the tip is inside the object."""

    point: np.ndarray
    normal: np.ndarray
    penetration: float
    in_contact: bool


def implicit_value(surface: SurfaceModel, point) -> float:
    x = _vec3(point, "point")
    return _k.surface_value(surface._kind_id, surface._params, x[0], x[1], x[2])


def surface_gradient(surface: SurfaceModel, point) -> np.ndarray:
    """Outward unit normal of the level set through `point`."""
    x = _vec3(point, "point")
    gx, gy, gz = _k.surface_gradient_raw(surface._kind_id, surface._params, x[0], x[1], x[2])
    norm = float(np.sqrt(gx * gx + gy * gy + gz * gz))
    if norm < _k.GRAD_EPS:
        raise GradientSingularityError(
            f"implicit gradient vanishes at {x.tolist()} on {surface.kind}"
        )
    return np.array([gx, gy, gz]) / norm


def project_to_surface(surface: SurfaceModel, point) -> np.ndarray:
    """Foot point of `point` on the surface (offset parallel to the normal)."""
    x = _vec3(point, "point")
    status, x0, y0, z0 = _k.project_point(
        surface._kind_id, surface._params, x[0], x[1], x[2]
    )
    if status == _k.GRADIENT_SINGULAR:
        raise GradientSingularityError(
            f"cannot project {x.tolist()}: gradient vanishes on {surface.kind}"
        )
    if status != _k.OK:
        raise ProjectionConvergenceError(
            f"foot-point iteration did not converge for {x.tolist()} on {surface.kind}"
        )
    return np.array([x0, y0, z0])


def contact_force(surface: SurfaceModel, point) -> Tuple[ContactState, float]:
    """One-sided penalty: (state, force magnitude in N).

    Outside or exactly on the surface the force is zero and the state still
    reports the nearest surface point and its normal.
    """
    x = _vec3(point, "point")
    value = implicit_value(surface, x)
    foot = project_to_surface(surface, x)
    normal = surface_gradient(surface, foot)
    if value < 0.0:
        penetration = float(np.linalg.norm(x - foot))
    else:
        penetration = 0.0
    state = ContactState(
        point=foot, normal=normal, penetration=penetration,
        in_contact=penetration > 0.0,
    )
    return state, surface.stiffness * penetration


def contact_moment(wrist: WristGeometry, normal_ee, force: float) -> np.ndarray:
    """Restoring moment r * F * (z_e x n_e), all in the end-effector frame."""
    n = _vec3(normal_ee, "normal_ee")
    return wrist.radius * float(force) * np.array([-n[1], n[0], 0.0])


def assemble_wrench(
    surface: SurfaceModel, wrist: WristGeometry, pose: Pose
) -> Tuple[Wrench, ContactState]:
    """Full contact pipeline at a pose: end-effector frame reaction wrench."""
    state, force = contact_force(surface, pose.position)
    rot = rotation_from_quat(pose.orientation)
    normal_ee = rot.T @ state.normal
    wrench = Wrench(
        force=-force * normal_ee,
        moment=contact_moment(wrist, normal_ee, force),
        frame=Frame.EE,
    )
    return wrench, state


def tangency_residual(surface: SurfaceModel, point, velocity) -> float:
    """Normal component of a velocity at a point; zero for sliding motion."""
    v = _vec3(velocity, "velocity")
    return float(surface_gradient(surface, point) @ v)


class SensorModel:
    """Wrist force/torque sensor: seeded Gaussian noise into a first-order
    low-pass.  The filter pole comes from the cutoff via
    beta = dt / (dt + 1 / (2 pi f_c)); state persists across reads."""

    def __init__(self, cutoff_hz=5.0, force_noise_std=0.05, moment_noise_std=0.002, seed=0):
        if not cutoff_hz > 0.0:
            raise ValueError("cutoff_hz must be positive")
        if force_noise_std < 0.0 or moment_noise_std < 0.0:
            raise ValueError("noise standard deviations must be nonnegative")
        self.cutoff_hz = float(cutoff_hz)
        self.force_noise_std = float(force_noise_std)
        self.moment_noise_std = float(moment_noise_std)
        self.seed = int(seed)
        self.reset()

    def reset(self, initial=None):
        """Restore the filter state (zeros by default) and the noise stream."""
        if initial is None:
            self._state = np.zeros(6)
        else:
            state = np.asarray(initial, dtype=float)
            if state.shape != (6,):
                raise ValueError("initial filter state must be a 6-vector")
            self._state = state.copy()
        self._rng = np.random.default_rng(self.seed)

    @property
    def state(self) -> np.ndarray:
        return self._state.copy()


def sensor_read(sensor: SensorModel, wrench: Wrench, dt: float) -> Wrench:
    """Measure a true end-effector wrench: add noise, then low-pass."""
    if wrench.frame is not Frame.EE:
        raise FrameMismatchError("sensor measures end-effector frame wrenches")
    if not dt > 0.0:
        raise ValueError("dt must be positive")
    noise = sensor._rng.standard_normal(6)
    scale = np.array([sensor.force_noise_std] * 3 + [sensor.moment_noise_std] * 3)
    u = wrench.as_array() + noise * scale
    beta = dt / (dt + 1.0 / (2.0 * np.pi * sensor.cutoff_hz))
    sensor._state = sensor._state + beta * (u - sensor._state)
    out = sensor._state
    return Wrench(force=out[:3].copy(), moment=out[3:].copy(), frame=Frame.EE)
