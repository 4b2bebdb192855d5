"""YAML scenario files: parsing with line-anchored errors, and serialization.

The file layout mirrors the Scenario object: `surface`, `wrist`, `sensor`,
`policy`, `setpoints`, `initial_pose` and `plant` mappings whose keys are
the corresponding constructor arguments, plus a `run` mapping holding
duration, dt and seed, and an optional top-level `name`.  Unknown keys
anywhere are rejected, as are missing keys that have no documented
default; every diagnostic carries the file path and line number of the
offending key.
"""

from __future__ import annotations

import math
import re
from typing import Optional

import numpy as np
import yaml

from .contact import SensorModel, SurfaceModel, WristGeometry
from .errors import ConfigError
from .kinematics import Pose
from .policy import PolicyParams, Setpoints
from .simulator import Scenario

_BUNDLED = ("plane_align", "sphere_slide", "bottle_approach")


class _Node:
    """A parsed YAML value plus the source line it came from."""

    __slots__ = ("value", "line")

    def __init__(self, value, line):
        self.value = value
        self.line = line


def _attach_lines(node):
    line = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        out = {}
        for key_node, value_node in node.value:
            key = key_node.value
            if not isinstance(key, str):
                raise ConfigError("mapping keys must be strings", line=key_node.start_mark.line + 1)
            if key in out:
                raise ConfigError(f"duplicate key {key!r}", line=key_node.start_mark.line + 1)
            child = _attach_lines(value_node)
            child.line = key_node.start_mark.line + 1
            out[key] = child
        return _Node(out, line)
    if isinstance(node, yaml.SequenceNode):
        return _Node([_attach_lines(v) for v in node.value], line)
    return _Node(_scalar(node), line)


def _scalar(node):
    # compose() already resolved the tag; let the safe loader build the value
    return yaml.SafeLoader("").construct_object(node)


class _Section:
    """A mapping node with consume-and-check access."""

    def __init__(self, node: _Node, path: str, label: str):
        if not isinstance(node.value, dict):
            raise ConfigError(f"{label} must be a mapping", path=path, line=node.line, key=label)
        self._data = node.value
        self._path = path
        self._label = label
        self.line = node.line
        self._seen = set()

    def _get(self, key) -> Optional[_Node]:
        self._seen.add(key)
        return self._data.get(key)

    def require(self, key):
        node = self._get(key)
        if node is None:
            raise ConfigError(
                f"missing required key {key!r} in {self._label}",
                path=self._path,
                line=self.line,
                key=key,
            )
        return node

    def optional(self, key) -> Optional[_Node]:
        return self._get(key)

    def child(self, key, required=True) -> Optional["_Section"]:
        node = self._get(key)
        if node is None:
            if required:
                raise ConfigError(
                    f"missing required section {key!r}",
                    path=self._path,
                    line=self.line,
                    key=key,
                )
            return None
        return _Section(node, self._path, key)

    def finish(self):
        unknown = sorted(set(self._data) - self._seen)
        if unknown:
            key = unknown[0]
            raise ConfigError(
                f"unknown key {key!r} in {self._label}",
                path=self._path,
                line=self._data[key].line,
                key=key,
            )

    # typed extractors ------------------------------------------------

    def _number(self, key, node) -> float:
        v = node.value
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(
                f"{key} must be a number, got {type(v).__name__}",
                path=self._path,
                line=node.line,
                key=key,
            )
        value = float(v)
        if not math.isfinite(value):
            raise ConfigError(
                f"{key} must be finite", path=self._path, line=node.line, key=key
            )
        return value

    def number(self, key, default=None) -> float:
        node = self.require(key) if default is None else self.optional(key)
        if node is None:
            return float(default)
        return self._number(key, node)

    def integer(self, key, default=None) -> int:
        node = self.require(key) if default is None else self.optional(key)
        if node is None:
            return int(default)
        v = node.value
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(
                f"{key} must be an integer, got {type(v).__name__}",
                path=self._path,
                line=node.line,
                key=key,
            )
        return int(v)

    def string(self, key, default=None) -> str:
        node = self.require(key) if default is None else self.optional(key)
        if node is None:
            return str(default)
        if not isinstance(node.value, str):
            raise ConfigError(
                f"{key} must be a string, got {type(node.value).__name__}",
                path=self._path,
                line=node.line,
                key=key,
            )
        return node.value

    def vector(self, key, size, default=None) -> np.ndarray:
        node = self.require(key) if default is None else self.optional(key)
        if node is None:
            return np.asarray(default, dtype=float)
        v = node.value
        if not isinstance(v, list) or len(v) != size:
            raise ConfigError(
                f"{key} must be a list of {size} numbers",
                path=self._path,
                line=node.line,
                key=key,
            )
        return np.array([self._number(key, item) for item in v])

    def wrap(self, key, line, fn, *args, **kwargs):
        """Run a constructor, converting ValueError into a ConfigError.

        When the message names one of this section's keys the diagnostic is
        anchored at that key's own line instead of the section header.
        """
        try:
            return fn(*args, **kwargs)
        except ValueError as exc:
            msg = str(exc)
            for k, node in self._data.items():
                if re.search(rf"\b{re.escape(k)}\b", msg):
                    key, line = k, node.line
                    break
            raise ConfigError(msg, path=self._path, line=line, key=key) from exc


def _build_surface(section: _Section) -> SurfaceModel:
    kind = section.string("kind")
    stiffness = section.number("stiffness")
    line = section.line
    if kind == "plane":
        point = section.vector("point", 3)
        normal = section.vector("normal", 3)
        section.finish()
        return section.wrap("surface", line, SurfaceModel.plane, point, normal, stiffness)
    if kind == "sphere":
        center = section.vector("center", 3)
        radius = section.number("radius")
        section.finish()
        return section.wrap("surface", line, SurfaceModel.sphere, center, radius, stiffness)
    if kind == "cylinder":
        axis_point = section.vector("axis_point", 3)
        axis = section.vector("axis", 3)
        radius = section.number("radius")
        section.finish()
        return section.wrap(
            "surface", line, SurfaceModel.cylinder, axis_point, axis, radius, stiffness
        )
    if kind == "superellipsoid":
        center = section.vector("center", 3)
        semi_axes = section.vector("semi_axes", 3)
        exponents = section.vector("exponents", 2)
        section.finish()
        return section.wrap(
            "surface",
            line,
            SurfaceModel.superellipsoid,
            center,
            semi_axes,
            (exponents[0], exponents[1]),
            stiffness,
        )
    raise ConfigError(
        f"unknown surface kind {kind!r}; expected plane, sphere, cylinder or superellipsoid",
        path=section._path,
        line=section.line,
        key="kind",
    )


def parse_scenario(text: str, path: str = "<string>") -> Scenario:
    """Build a validated Scenario from YAML text."""
    try:
        root_node = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(
            f"invalid YAML: {exc}", path=path, line=None if mark is None else mark.line + 1
        ) from exc
    if root_node is None:
        raise ConfigError("empty scenario file", path=path, line=1)
    tree = _attach_lines(root_node)
    root = _Section(tree, path, "scenario")

    name = root.string("name", default="scenario")

    run_sec = root.child("run")
    duration = run_sec.number("duration")
    dt = run_sec.number("dt")
    seed = run_sec.integer("seed", default=0)
    run_sec.finish()

    surface = _build_surface(root.child("surface"))

    wrist_sec = root.child("wrist")
    wrist = wrist_sec.wrap(
        "radius", wrist_sec.line, WristGeometry, radius=wrist_sec.number("radius")
    )
    wrist_sec.finish()

    sensor_sec = root.child("sensor", required=False)
    if sensor_sec is None:
        sensor = SensorModel()
    else:
        sensor = sensor_sec.wrap(
            "sensor",
            sensor_sec.line,
            SensorModel,
            cutoff_hz=sensor_sec.number("cutoff_hz", default=5.0),
            force_noise_std=sensor_sec.number("force_noise_std", default=0.05),
            moment_noise_std=sensor_sec.number("moment_noise_std", default=0.002),
        )
        sensor_sec.finish()

    policy_sec = root.child("policy", required=False)
    if policy_sec is None:
        policy = PolicyParams()
    else:
        defaults = PolicyParams()
        policy = policy_sec.wrap(
            "policy",
            policy_sec.line,
            PolicyParams,
            virtual_inertia=policy_sec.vector(
                "virtual_inertia", 6, default=defaults.virtual_inertia
            ),
            damping=policy_sec.vector("damping", 6, default=defaults.damping),
            force_gain=policy_sec.vector("force_gain", 6, default=defaults.force_gain),
            gate_gain=policy_sec.number("gate_gain", default=defaults.gate_gain),
            force_scale=policy_sec.number("force_scale", default=defaults.force_scale),
        )
        policy_sec.finish()

    sp_sec = root.child("setpoints", required=False)
    if sp_sec is None:
        setpoints = Setpoints()
    else:
        setpoints = sp_sec.wrap(
            "setpoints",
            sp_sec.line,
            Setpoints,
            velocity=sp_sec.vector("velocity", 6, default=np.zeros(6)),
            acceleration=sp_sec.vector("acceleration", 6, default=np.zeros(6)),
            tangential_force=sp_sec.number("tangential_force", default=0.0),
            normal_force=sp_sec.number("normal_force", default=0.0),
        )
        sp_sec.finish()

    pose_sec = root.child("initial_pose")
    pose = pose_sec.wrap(
        "initial_pose",
        pose_sec.line,
        Pose,
        position=pose_sec.vector("position", 3),
        orientation=pose_sec.vector("orientation", 4),
    )
    pose_sec.finish()

    plant_sec = root.child("plant", required=False)
    if plant_sec is None:
        time_constants = (0.0,) * 6
        max_linear_speed = 0.5
        max_angular_speed = 2.0
    else:
        time_constants = tuple(plant_sec.vector("time_constants", 6, default=np.zeros(6)))
        max_linear_speed = plant_sec.number("max_linear_speed", default=0.5)
        max_angular_speed = plant_sec.number("max_angular_speed", default=2.0)
        plant_sec.finish()

    root.finish()
    return root.wrap(
        "scenario",
        root.line,
        Scenario,
        name=name,
        duration=duration,
        dt=dt,
        seed=seed,
        surface=surface,
        wrist=wrist,
        sensor=sensor,
        policy=policy,
        setpoints=setpoints,
        initial_pose=pose,
        time_constants=time_constants,
        max_linear_speed=max_linear_speed,
        max_angular_speed=max_angular_speed,
    )


def load_scenario(path) -> Scenario:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read scenario file: {exc}", path=str(path)) from exc
    return parse_scenario(text, path=str(path))


def scenario_to_dict(scenario: Scenario) -> dict:
    """Plain-python mapping that parse_scenario accepts back unchanged."""
    s = scenario.surface
    surface = {"kind": s.kind, "stiffness": s.stiffness}
    if s.kind == "plane":
        surface["point"] = list(map(float, s.point))
        surface["normal"] = list(map(float, s.normal))
    elif s.kind == "sphere":
        surface["center"] = list(map(float, s.center))
        surface["radius"] = s.radius
    elif s.kind == "cylinder":
        surface["axis_point"] = list(map(float, s.axis_point))
        surface["axis"] = list(map(float, s.axis))
        surface["radius"] = s.radius
    else:
        surface["center"] = list(map(float, s.center))
        surface["semi_axes"] = list(map(float, s.semi_axes))
        surface["exponents"] = [float(s.exponents[0]), float(s.exponents[1])]
    return {
        "name": scenario.name,
        "run": {
            "duration": scenario.duration,
            "dt": scenario.dt,
            "seed": scenario.seed,
        },
        "surface": surface,
        "wrist": {"radius": scenario.wrist.radius},
        "sensor": {
            "cutoff_hz": scenario.sensor.cutoff_hz,
            "force_noise_std": scenario.sensor.force_noise_std,
            "moment_noise_std": scenario.sensor.moment_noise_std,
        },
        "policy": {
            "virtual_inertia": list(scenario.policy.virtual_inertia),
            "damping": list(scenario.policy.damping),
            "force_gain": list(scenario.policy.force_gain),
            "gate_gain": scenario.policy.gate_gain,
            "force_scale": scenario.policy.force_scale,
        },
        "setpoints": {
            "velocity": list(map(float, scenario.setpoints.velocity)),
            "acceleration": list(map(float, scenario.setpoints.acceleration)),
            "tangential_force": scenario.setpoints.tangential_force,
            "normal_force": scenario.setpoints.normal_force,
        },
        "initial_pose": {
            "position": list(map(float, scenario.initial_pose.position)),
            "orientation": list(map(float, scenario.initial_pose.orientation)),
        },
        "plant": {
            "time_constants": list(scenario.time_constants),
            "max_linear_speed": scenario.max_linear_speed,
            "max_angular_speed": scenario.max_angular_speed,
        },
    }


def serialize_scenario(scenario: Scenario) -> str:
    return yaml.safe_dump(scenario_to_dict(scenario), sort_keys=False)


def scenario_from_dict(data: dict, path: str = "<dict>") -> Scenario:
    """Validate a plain mapping by round-tripping it through YAML."""
    return parse_scenario(yaml.safe_dump(data, sort_keys=False), path=path)


def list_bundled():
    return list(_BUNDLED)


def bundled_path(name: str):
    from importlib.resources import files

    if name not in _BUNDLED:
        raise ConfigError(
            f"unknown bundled scenario {name!r}; available: {', '.join(_BUNDLED)}"
        )
    return files("graspsim").joinpath("scenarios", f"{name}.yaml")


def load_bundled(name: str) -> Scenario:
    resource = bundled_path(name)
    return parse_scenario(resource.read_text(encoding="utf-8"), path=f"bundled:{name}")
