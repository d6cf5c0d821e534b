"""Weighted Hermite-Hadamard machinery on the standard simplex.

Simplex probability measures ``Nu`` and ``Mu``, nested adaptive quadrature
against them, and the weighted multivariate logarithmic and identric means
built from them.
"""

from .errors import (
    BudgetExhausted,
    DomainError,
    HHMeansError,
    NonFiniteIntegrand,
    SingularEvaluationError,
)
from .measures import MeasureSpec, WeightVector
from .quadrature import IntegralEstimate, QuadratureConfig, integrate, integrate_line

__version__ = "0.1.0"

__all__ = [
    "BudgetExhausted",
    "DomainError",
    "HHMeansError",
    "NonFiniteIntegrand",
    "SingularEvaluationError",
    "MeasureSpec",
    "WeightVector",
    "IntegralEstimate",
    "QuadratureConfig",
    "integrate",
    "integrate_line",
    "__version__",
]
