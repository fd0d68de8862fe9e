"""Exception and warning types raised across the package."""


class DbarError(Exception):
    """Base class for all package errors."""


class InputError(DbarError, ValueError):
    """Malformed or inconsistent input data."""


class GeometryError(InputError):
    """Boundary curve fails a geometric validity check."""


class DegeneratePatternsError(InputError):
    """Current patterns are rank deficient under the weighted inner product."""


class ConfigError(InputError):
    """Invalid configuration value; ``field`` names the offending entry."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
        self.message = message

    def __reduce__(self):
        return (type(self), (self.field, self.message))


class NumericalError(DbarError, ArithmeticError):
    """Singular systems, ill-conditioned matrices or non-finite iterates."""

    def __init__(self, message, frame_index=None):
        super().__init__(message)
        self.frame_index = frame_index

    def __reduce__(self):
        return (type(self), (self.args[0], self.frame_index))


class ConvergenceWarning(RuntimeWarning):
    """Iterative solver stopped at ``maxit`` above the requested tolerance."""
