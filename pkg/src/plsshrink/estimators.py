"""Regression estimators on centered data: OLS, PCR, Ridge and PLS.

PLS is computed two independent ways.  :func:`pls_krylov` projects onto the
Lanczos basis of the Krylov space K^(m)(A, b); :func:`pls_shrinkage_route`
rebuilds the same vector from the OLS components z_i and the polynomial
shrinkage factors f^(m)(lambda_i).  Their agreement is a consistency check of
the whole pipeline.

All estimators also have kernel versions working directly on the Gram matrix
``A = X^t X`` and cross-product ``b = X^t y`` (the ``*_from_moments``
functions), which is what the theory is stated in terms of.
"""

from dataclasses import dataclass, replace
import warnings

import numpy as np

from .errors import ArgumentError, DataError
from .krylov import lanczos
from .linalg import EigenSystem, poly_generalized_inverse, svd_thin, sym_eigen
from .shrinkage import clip, shrinkage_factors

__all__ = [
    "METHODS",
    "EstimatorResult",
    "RegressionData",
    "Standardization",
    "ols",
    "ols_components",
    "pcr",
    "pls_from_moments",
    "pls_krylov",
    "pls_shrinkage_route",
    "predict",
    "ridge",
    "shrinkage_route_from_moments",
    "standardize",
]

METHODS = ("OLS", "PLS", "PLS_SHRINK", "BOUND", "PCR", "RIDGE")


@dataclass(frozen=True)
class Standardization:
    """Column means and scales used to map raw inputs onto the model scale."""

    x_mean: np.ndarray
    x_scale: np.ndarray
    y_mean: float = 0.0
    y_scale: float = 1.0

    def transform_x(self, Xraw):
        Xraw = np.asarray(Xraw, dtype=float)
        if Xraw.ndim != 2 or Xraw.shape[1] != self.x_mean.size:
            raise ArgumentError(
                f"expected {self.x_mean.size} columns, got shape {Xraw.shape}"
            )
        return (Xraw - self.x_mean) / self.x_scale

    def transform_y(self, yraw):
        return (np.asarray(yraw, dtype=float) - self.y_mean) / self.y_scale

    def inverse_y(self, y):
        return np.asarray(y, dtype=float) * self.y_scale + self.y_mean


@dataclass(frozen=True)
class RegressionData:
    """Centered design and response with their derived moments.

    Attributes
    ----------
    X : ndarray, shape (n, p)
    y : ndarray, shape (n,)
    gram : ndarray, shape (p, p)
        A = X^t X, exactly symmetric.
    cross : ndarray, shape (p,)
        b = X^t y.
    svd : SvdResult
        Thin SVD of X; ``svd.rank`` is p*.
    eig : EigenSystem
        Eigensystem of A (eigenvalues sigma_i^2, eigenvectors u_i).
    standardization : Standardization
    """

    X: np.ndarray
    y: np.ndarray
    gram: np.ndarray
    cross: np.ndarray
    svd: object
    eig: EigenSystem
    standardization: Standardization

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    @property
    def rank(self):
        return self.svd.rank

    @classmethod
    def from_centered(cls, X, y, standardization=None, tol=1e-5):
        """Build from an already centered (or deliberately uncentered) X and y."""
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float).reshape(-1)
        if X.ndim != 2 or X.shape[0] != y.size:
            raise ArgumentError(f"X of shape {X.shape} does not match y of length {y.size}")
        gram = X.T @ X
        gram = 0.5 * (gram + gram.T)
        svd = svd_thin(X, tol)
        eig = EigenSystem(svd.singular_values**2, svd.right)
        if standardization is None:
            standardization = Standardization(np.zeros(X.shape[1]), np.ones(X.shape[1]))
        return cls(X, y, gram, X.T @ y, svd, eig, standardization)

    def with_response(self, y):
        """Same design with a new (already centered) response; reuses the SVD."""
        y = np.asarray(y, dtype=float).reshape(-1)
        if y.size != self.n:
            raise ArgumentError(f"response has length {y.size}, expected {self.n}")
        return replace(self, y=y, cross=self.X.T @ y)


@dataclass(frozen=True)
class EstimatorResult:
    """Fitted coefficient vector of one estimator.

    ``hyper`` is the step count m (PLS, BOUND), the component count k (PCR),
    the penalty (RIDGE) or None (OLS).  For PLS-type methods ``steps`` is the
    step actually used after clamping at m*.
    """

    method: str
    hyper: object
    beta: np.ndarray
    fitted: np.ndarray
    steps: int | None = None
    clipped: int = 0


def _result(data, method, hyper, beta, steps=None, clipped=0):
    return EstimatorResult(method, hyper, beta, data.X @ beta, steps, clipped)


def standardize(Xraw, yraw, scale_x=True, scale_y=True):
    """Center (and by default scale to unit sample variance) X and y.

    Raises
    ------
    DataError
        If a column of X, or y itself when ``scale_y`` is set, has zero
        variance.
    """
    Xraw = np.asarray(Xraw, dtype=float)
    yraw = np.asarray(yraw, dtype=float).reshape(-1)
    if Xraw.ndim != 2 or Xraw.shape[0] != yraw.size:
        raise ArgumentError(f"X of shape {Xraw.shape} does not match y of length {yraw.size}")
    if Xraw.shape[0] < 2:
        raise DataError("need at least two observations")
    x_mean = Xraw.mean(axis=0)
    Xc = Xraw - x_mean
    if scale_x:
        x_scale = Xc.std(axis=0, ddof=1)
        flat = np.flatnonzero(x_scale <= 1e-14 * np.maximum(np.abs(x_mean), 1.0))
        if flat.size:
            raise DataError(f"column {int(flat[0])} has zero variance")
    else:
        x_scale = np.ones(Xraw.shape[1])
    y_mean = float(yraw.mean())
    yc = yraw - y_mean
    y_scale = 1.0
    if scale_y:
        y_scale = float(yc.std(ddof=1))
        if y_scale <= 1e-14 * max(abs(y_mean), 1.0):
            raise DataError("response has zero variance")
    st = Standardization(x_mean, x_scale, y_mean, y_scale)
    return RegressionData.from_centered(Xc / x_scale, yc / y_scale, st)


def ols_components(data):
    """Coefficients c_i = v_i^t y / sqrt(lambda_i) for i < p*.

    The OLS component along the i-th eigenvector is z_i = c_i u_i.
    """
    r = data.rank
    s = data.svd
    return (s.left.T @ data.y) / s.singular_values[:r]


def ols(data, tol=None):
    """Minimum-norm least-squares estimator sum_{i <= p*} z_i.

    ``tol`` overrides the rank cutoff used when ``data`` was built.
    """
    if tol is not None:
        data = RegressionData.from_centered(data.X, data.y, data.standardization, tol)
    c = ols_components(data)
    beta = data.svd.right[:, : data.rank] @ c
    return _result(data, "OLS", None, beta)


def pcr(data, k):
    """Principal component regression on the top ``k`` components."""
    if not 1 <= k <= data.rank:
        raise ArgumentError(f"component count {k} outside 1..{data.rank}")
    c = ols_components(data)[:k]
    return _result(data, "PCR", k, data.svd.right[:, :k] @ c)


def ridge(data, penalty):
    """Ridge regression with factors lambda_i / (lambda_i + penalty)."""
    if not penalty > 0:
        raise ArgumentError(f"ridge penalty must be positive, got {penalty}")
    r = data.rank
    lam = data.eig.values[:r]
    factors = lam / (lam + penalty)
    beta = data.svd.right[:, :r] @ (factors * ols_components(data))
    return _result(data, "RIDGE", penalty, beta)


def _clamp(m, state):
    if m < 1:
        raise ArgumentError(f"number of PLS steps must be positive, got {m}")
    if m > state.steps:
        if state.m_star is None:
            raise ArgumentError(
                f"Lanczos state holds {state.steps} steps, fewer than the {m} requested"
            )
        warnings.warn(
            f"requested {m} PLS steps but the Krylov space has dimension "
            f"{state.steps}; using {state.steps}",
            stacklevel=3,
        )
        return state.steps
    return m


def pls_from_moments(A, b, m, rank_tol=1e-10, state=None):
    """PLS coefficients W^(m) pi^(m)(T^(m)) W^(m)^t b from A and b.

    ``state`` may carry a precomputed Lanczos run with at least
    ``min(m, m*)`` steps.  Returns ``(beta, steps_used, state)``.
    """
    b = np.asarray(b, dtype=float)
    if state is None:
        state = lanczos(A, b, m_max=max(int(m), 1), rank_tol=rank_tol)
    m_used = _clamp(m, state)
    W, T = state.leading(m_used)
    G = poly_generalized_inverse(T.to_dense())
    return W @ (G @ (W.T @ b)), m_used, state


def _zero_response(data, method, m):
    warnings.warn("X^t y is zero; the Krylov space is empty, returning zero beta", stacklevel=3)
    return _result(data, method, m, np.zeros(data.p), steps=0)


def pls_krylov(data, m, rank_tol=1e-10, state=None):
    """PLS estimator after ``m`` steps by projection onto the Krylov space.

    Requests beyond m* are clamped to m* with a warning; the estimator does
    not change past that point.
    """
    if not np.any(data.cross):
        return _zero_response(data, "PLS", m)
    beta, used, _ = pls_from_moments(data.gram, data.cross, m, rank_tol, state)
    return _result(data, "PLS", m, beta, steps=used)


def shrinkage_route_from_moments(A, b, m, eig=None, rank_tol=1e-10, eigentol=1e-10,
                                 state=None, bound=False):
    """PLS (or BOUND) as sum_i f^(m)(lambda_i) z_i from A and b.

    Here z_i = (u_i^t b / lambda_i) u_i, the OLS component of the
    minimum-norm solution of A beta = b.  With ``bound`` the factors are
    clipped to [-1, 1] first.  Returns ``(beta, profile)``.
    """
    b = np.asarray(b, dtype=float)
    eig = sym_eigen(A) if eig is None else eig
    if state is None:
        state = lanczos(A, b, m_max=max(int(m), 1), rank_tol=rank_tol)
    m_used = _clamp(m, state)
    profile = shrinkage_factors(state, eig, m_used, eigentol)
    idx = profile.eigen_index
    lam = eig.values[idx]
    U = eig.vectors[:, idx]
    pos = lam > eigentol * max(eig.values[0], 0.0)
    coef = np.zeros(idx.size)
    coef[pos] = (U[:, pos].T @ b) / lam[pos]
    factors = clip(profile.factors) if bound else profile.factors
    return U @ (factors * coef), profile


def pls_shrinkage_route(data, m, rank_tol=1e-10, eigentol=1e-10, state=None):
    """PLS estimator assembled from shrinkage factors and OLS components."""
    if not np.any(data.cross):
        return _zero_response(data, "PLS_SHRINK", m)
    r = data.rank
    c = ols_components(data)
    if state is None:
        state = lanczos(data.gram, data.cross, m_max=max(int(m), 1), rank_tol=rank_tol)
    m_used = _clamp(m, state)
    profile = shrinkage_factors(state, data.eig, m_used, eigentol)
    f = np.zeros(r)
    keep = profile.eigen_index < r
    f[profile.eigen_index[keep]] = profile.factors[keep]
    beta = data.svd.right[:, :r] @ (f * c)
    return _result(data, "PLS_SHRINK", m, beta, steps=m_used)


def predict(result, Xnew_raw, standardization, destandardize=False):
    """Predictions for raw inputs, on the standardized response scale by default."""
    Xnew_raw = np.asarray(Xnew_raw, dtype=float)
    if Xnew_raw.ndim == 2 and Xnew_raw.shape[0] == 0:
        if Xnew_raw.shape[1] != result.beta.size:
            raise ArgumentError(
                f"expected {result.beta.size} columns, got shape {Xnew_raw.shape}"
            )
        return np.zeros(0)
    yhat = standardization.transform_x(Xnew_raw) @ result.beta
    return standardization.inverse_y(yhat) if destandardize else yhat
