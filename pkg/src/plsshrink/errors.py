"""Exception hierarchy shared by all modules.

The CLI maps each family to an exit code, so raise the most specific class.
"""

import numpy as np


class PLSShrinkError(Exception):
    """Base class for errors raised by this package."""


class ArgumentError(PLSShrinkError, ValueError):
    """Invalid argument or violated precondition (CLI exit code 2)."""


class DataError(PLSShrinkError, ValueError):
    """Malformed or degenerate input data (CLI exit code 3)."""


class NumericalError(PLSShrinkError, np.linalg.LinAlgError):
    """Numerical failure: non-convergence, lost orthogonality (exit code 4)."""


class DomainError(NumericalError):
    """Input outside the mathematical domain of an operation."""


class NotPositiveDefiniteError(NumericalError):
    """Cholesky hit a non-positive pivot."""

    def __init__(self, pivot_index, pivot_value):
        self.pivot_index = pivot_index
        self.pivot_value = pivot_value
        super().__init__(
            f"matrix is not positive definite: pivot {pivot_index} "
            f"has value {pivot_value:.6g}"
        )
