"""Exception types raised across the package."""

from __future__ import annotations


class HHMeansError(Exception):
    """Base class for all package errors."""


class DomainError(HHMeansError, ValueError):
    """An argument lies outside the domain of the function."""


class SingularEvaluationError(HHMeansError, ValueError):
    """A density was evaluated where a negative power of zero occurs."""


class BudgetExhausted(HHMeansError, RuntimeError):
    """Quadrature stopped before meeting its tolerance.

    The best available estimate is attached as ``estimate``.
    """

    def __init__(self, message, estimate):
        super().__init__(message)
        self.estimate = estimate


class NonFiniteIntegrand(HHMeansError, FloatingPointError):
    """The integrand returned NaN or an infinity at ``point``."""

    def __init__(self, message, point):
        super().__init__(message)
        self.point = point
