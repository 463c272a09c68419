"""Exception hierarchy shared by all modules."""


class MinimaxWaldError(Exception):
    """Base class for package errors."""


class ParameterError(MinimaxWaldError, ValueError):
    """An argument is outside its valid domain (negative, non-finite, ...)."""


class ConfigurationError(MinimaxWaldError, ValueError):
    """A configuration object is inconsistent or cannot be run."""


class SolverError(MinimaxWaldError, RuntimeError):
    """An iterative solver failed to converge.

    ``residual`` carries the last residual reached, when known.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class NumericalError(MinimaxWaldError, ArithmeticError):
    """Quadrature or PDE scheme produced a non-finite or inaccurate value."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class EstimationError(MinimaxWaldError, ValueError):
    """Not enough data to form a variance estimate."""
