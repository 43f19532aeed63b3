"""Exception types and warning categories shared across the package."""

from __future__ import annotations


class CBoundError(Exception):
    """Base class for all package-specific errors."""


class CycleDetected(CBoundError):
    """The supplied base relation contains a directed cycle."""


class NotIdealSet(CBoundError):
    """A set handed to an order primitive is not down-closed (resp. up-closed)."""


class NoFrontier(CBoundError):
    """An operation requiring frontier points ran on a set without any."""


class EmptyTail(CBoundError):
    """A sequence resolved to an empty tail window."""


class BudgetExceeded(CBoundError):
    """An enumeration passed its budget.

    ``partial_count`` holds how many results were produced before the cap.
    """

    def __init__(self, message: str, partial_count: int = 0):
        super().__init__(message)
        self.partial_count = partial_count


class InvalidSpec(CBoundError):
    """A scene or wave description fails validation."""


class Unsupported(CBoundError):
    """A requested feature combination is out of scope."""


class NonConvergence(CBoundError):
    """An iterative minimizer stopped without meeting its tolerance."""


class ODEStepFailure(CBoundError):
    """The variational ODE integrator failed to advance."""


class ParseError(CBoundError):
    """Input text or JSON could not be parsed."""


class IoError(CBoundError):
    """A report or cache file could not be read or written."""


class NotStronglyCausal(UserWarning):
    """Emitted when a probed sample fails the strong-causality test."""
