"""Exception types shared across the package."""


class FdprError(Exception):
    """Base class for all package-specific errors."""


class InvalidArgumentError(FdprError, ValueError):
    """A caller supplied an argument outside the documented contract."""


class DivergentAtZeroError(FdprError, ZeroDivisionError):
    """A weight profile that blows up at zero was evaluated at zero.

    Callers that evaluate weights at node/evaluation-point coincidences
    are expected to catch this (or test distances up front) and apply
    the cardinal snap rule instead.
    """


class AdmissibilityError(FdprError):
    """Weight family / degree / dimension combination is ruled out."""


class IllConditionedSystemError(FdprError):
    """A linear system required by an engine is numerically singular."""

    def __init__(self, message: str, smallest_pivot: float = float("nan")):
        super().__init__(message)
        self.smallest_pivot = smallest_pivot


class InfeasibleConstructionError(FdprError):
    """No coefficient vector satisfies the reproduction constraints."""


class NumericalFailureError(FdprError):
    """An iterative solve lost feasibility or failed to converge."""


class DivergentSeriesError(FdprError):
    """A stability series does not converge for the requested profile."""


class UnsupportedAngleError(FdprError, ValueError):
    """Cone opening angle outside the range the constants are valid for."""
