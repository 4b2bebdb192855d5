"""Closed-loop contact alignment simulator for ring-shaped wrist probes.

A velocity-commanded body presses a circular wrist against an implicit
surface; a filtered, noisy wrench sensor feeds an admittance law whose
tangential channel is softened by a tanh gate, so the wrist aligns with
the surface and regulates the normal force before it starts to slide.
"""

from . import errors
from .backend import available_backends, get_backend
from .config import (
    bundled_path,
    list_bundled,
    load_bundled,
    load_scenario,
    parse_scenario,
    scenario_from_dict,
    scenario_to_dict,
    serialize_scenario,
)
from .contact import (
    ContactState,
    SensorModel,
    SurfaceModel,
    WristGeometry,
    assemble_wrench,
    contact_force,
    contact_moment,
    implicit_value,
    project_to_surface,
    sensor_read,
    surface_gradient,
    tangency_residual,
)
from .errors import (
    ConfigError,
    FrameMismatchError,
    GradientSingularityError,
    GraspSimError,
    NumericalDivergenceError,
    ProjectionConvergenceError,
    SingularityError,
)
from .kinematics import Frame, Pose, Twist, Wrench
from .plant import (
    DisturbanceModel,
    JointState,
    TwoLinkModel,
    VelocityModePlant,
    coriolis_matrix,
    coriolis_vector,
    forward_dynamics,
    gravity_vector,
    mass_matrix,
    torque_law,
    velocity_mode_step,
)
from .policy import (
    PolicyParams,
    Setpoints,
    acceleration_policy,
    cartesian_accel_command,
    error_dynamics_residual,
    feedback_wrench,
    gate_value,
)
from .simulator import (
    Metrics,
    Scenario,
    SimState,
    Trace,
    TraceRecord,
    compute_metrics,
    initial_state,
    run,
    step,
    trace_length,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "ContactState",
    "DisturbanceModel",
    "Frame",
    "FrameMismatchError",
    "GradientSingularityError",
    "GraspSimError",
    "JointState",
    "Metrics",
    "NumericalDivergenceError",
    "Pose",
    "PolicyParams",
    "ProjectionConvergenceError",
    "Scenario",
    "SensorModel",
    "Setpoints",
    "SimState",
    "SingularityError",
    "SurfaceModel",
    "Trace",
    "TraceRecord",
    "Twist",
    "TwoLinkModel",
    "VelocityModePlant",
    "Wrench",
    "WristGeometry",
    "acceleration_policy",
    "assemble_wrench",
    "available_backends",
    "bundled_path",
    "cartesian_accel_command",
    "compute_metrics",
    "contact_force",
    "contact_moment",
    "coriolis_matrix",
    "coriolis_vector",
    "error_dynamics_residual",
    "errors",
    "feedback_wrench",
    "forward_dynamics",
    "gate_value",
    "get_backend",
    "gravity_vector",
    "implicit_value",
    "initial_state",
    "list_bundled",
    "load_bundled",
    "load_scenario",
    "mass_matrix",
    "parse_scenario",
    "project_to_surface",
    "run",
    "scenario_from_dict",
    "scenario_to_dict",
    "sensor_read",
    "serialize_scenario",
    "step",
    "surface_gradient",
    "tangency_residual",
    "torque_law",
    "trace_length",
    "velocity_mode_step",
    "__version__",
]
