"""Exception types shared across the package."""


class FracflowError(Exception):
    """Base class for all package errors."""


class DomainError(FracflowError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ShapeError(FracflowError, ValueError):
    """Array lengths do not conform to the grid they are used with."""


class ConstructionError(FracflowError):
    """A grid or solver object could not be built (e.g. node solve failed)."""


class DecayError(FracflowError):
    """A radial profile does not extend smoothly to a pole of the sphere."""


class AccuracyError(FracflowError):
    """A quadrature did not reach the requested tolerance.

    Carries the achieved error estimate in ``achieved``.
    """

    def __init__(self, message: str, achieved: float):
        super().__init__(f"{message} (achieved error estimate {achieved:.3e})")
        self.achieved = achieved


class StateError(FracflowError):
    """A flow state violates an invariant (e.g. positivity floor)."""


class StepFailure(FracflowError):
    """A time step was rejected repeatedly and cannot proceed."""


class EstimationError(FracflowError):
    """A data series does not support the requested estimate."""


class DiagnosticError(FracflowError):
    """A diagnostic quantity is undefined for the given state."""


class ConfigError(FracflowError, ValueError):
    """A configuration document or flag set is invalid."""
