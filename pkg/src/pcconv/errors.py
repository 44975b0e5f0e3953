"""Exception types shared across the package."""


class InvalidArgumentError(ValueError):
    """Bad shapes, out-of-range parameters or malformed inputs."""


class DomainError(ValueError):
    """A function was evaluated outside its real-valued domain."""


class PreconditionError(ValueError):
    """A documented precondition (e.g. a feasibility interval) does not hold."""


class SingularMatrixError(ArithmeticError):
    """LU elimination hit a pivot that is numerically zero."""

    def __init__(self, pivot: int, magnitude: float, message: str | None = None):
        self.pivot = pivot
        self.magnitude = magnitude
        super().__init__(message or f"singular matrix: pivot {pivot} has magnitude {magnitude:.3e}")


class ConvergenceError(ArithmeticError):
    """An iterative routine ran out of sweeps before reaching tolerance."""


class DataFormatError(ValueError):
    """A dataset file could not be parsed; carries the offending line when known."""

    def __init__(self, path, line: int | None, message: str):
        self.path = str(path)
        self.line = line
        where = f"{self.path}:{line}" if line is not None else self.path
        super().__init__(f"{where}: {message}")
