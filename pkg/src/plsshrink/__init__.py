"""Partial least squares through Krylov spaces, its shrinkage factors and BOUND."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ArgumentError,
    DataError,
    DomainError,
    NotPositiveDefiniteError,
    NumericalError,
    PLSShrinkError,
)
from .estimators import (  # noqa: E402
    EstimatorResult,
    RegressionData,
    ols,
    pcr,
    pls_krylov,
    pls_shrinkage_route,
    ridge,
    standardize,
)
from .krylov import KrylovState, lanczos, m_star  # noqa: E402
from .shrinkage import bound_estimator, shrinkage_factors  # noqa: E402

__all__ = [
    "ArgumentError",
    "DataError",
    "DomainError",
    "EstimatorResult",
    "KrylovState",
    "NotPositiveDefiniteError",
    "NumericalError",
    "PLSShrinkError",
    "RegressionData",
    "bound_estimator",
    "lanczos",
    "m_star",
    "ols",
    "pcr",
    "pls_krylov",
    "pls_shrinkage_route",
    "ridge",
    "shrinkage_factors",
    "standardize",
]
