"""Exception types shared across the package."""


class GraspSimError(Exception):
    """Base class for all errors raised by this package."""


class FrameMismatchError(GraspSimError):
    """A spatial quantity was supplied in the wrong reference frame."""


class SingularityError(GraspSimError):
    """Jacobian Gram matrix is rank deficient below the configured threshold."""


class GradientSingularityError(GraspSimError):
    """Surface gradient vanished; the outward normal is undefined here."""


class ProjectionConvergenceError(GraspSimError):
    """Nearest-point surface projection failed to converge within its budget."""


class NumericalDivergenceError(GraspSimError):
    """Simulation state became non-finite."""

    def __init__(self, message: str, time: float = float("nan")):
        super().__init__(message)
        self.time = time


class ConfigError(GraspSimError):
    """Scenario file failed to parse or validate.

    `path` is the offending file, `line` the 1-based line number when known,
    and `key` the dotted config key, so diagnostics can be anchored to the
    exact location in the file.
    """

    def __init__(self, message: str, path: str = "", line: int = 0, key: str = ""):
        super().__init__(message)
        self.path = path
        self.line = line
        self.key = key

    def diagnostic(self) -> str:
        loc = self.path or "<config>"
        if self.line:
            loc += f":{self.line}"
        if self.key:
            return f"{loc}: {self.key}: {super().__str__()}"
        return f"{loc}: {super().__str__()}"
