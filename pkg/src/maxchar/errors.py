"""Exception hierarchy shared by every module."""

from __future__ import annotations


class MaxCharError(Exception):
    """Base class for all library errors."""


class InvalidParameterError(MaxCharError, ValueError):
    """A model or operation parameter is outside its admissible range."""


class DimensionError(MaxCharError, ValueError):
    """Vector or sample dimension does not match the model."""


class OutOfDomainError(MaxCharError, ValueError):
    """A function was queried outside the region where it is defined."""


class ContractViolation(MaxCharError, ValueError):
    """An input does not satisfy a documented precondition."""


class SizeCapExceeded(MaxCharError, ValueError):
    """Problem too large for the exact solver."""


class NumericFailure(MaxCharError, ArithmeticError):
    """A numerical routine did not reach its tolerance.

    ``achieved_error`` carries the best error estimate that was reached.
    """

    def __init__(self, message: str, achieved_error: float | None = None):
        super().__init__(message)
        self.achieved_error = achieved_error


class NoiseDominatesStepError(NumericFailure):
    """Refusal to differentiate a Monte Carlo (noisy) evaluator."""


class DivergenceError(NumericFailure):
    """An iteration failed to settle within its iteration budget."""

    def __init__(self, message: str, trace=None, achieved_error: float | None = None):
        super().__init__(message, achieved_error)
        self.trace = list(trace) if trace is not None else []
