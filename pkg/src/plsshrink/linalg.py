"""Dense symmetric linear algebra kernels.

Everything here works on small dense ``numpy`` arrays (order up to a few
hundred).  The symmetric eigensolver is LAPACK's ``eigh``; tridiagonal
eigenvalues are computed independently by Sturm-sequence bisection on the
three-term characteristic polynomial recursion, so the two can be used to
check each other.
"""

from dataclasses import dataclass
import math

import numpy as np

from .errors import ArgumentError, DomainError, NotPositiveDefiniteError, NumericalError

__all__ = [
    "EigenSystem",
    "SvdResult",
    "Tridiagonal",
    "as_symmetric",
    "charpoly_eval",
    "charpoly_scaled",
    "cholesky",
    "pi_polynomial",
    "poly_generalized_inverse",
    "shrinkage_polynomial",
    "sturm_count",
    "svd_thin",
    "sym_eigen",
    "tridiag_eigenvalues",
]

_RESCALE_HI = 2.0**200
_RESCALE_LO = 2.0**-200


@dataclass(frozen=True)
class EigenSystem:
    """Eigenvalues (descending) and matching orthonormal eigenvectors.

    ``vectors[:, i]`` belongs to ``values[i]``.  For repeated eigenvalues any
    orthonormal basis of the eigenspace is acceptable.
    """

    values: np.ndarray
    vectors: np.ndarray

    def reconstruct(self):
        return (self.vectors * self.values) @ self.vectors.T


@dataclass(frozen=True)
class SvdResult:
    """Thin SVD ``X = left @ diag(singular_values[:rank]) @ right[:, :rank].T``.

    ``right`` is the full p x p orthogonal matrix of eigenvectors of X^t X and
    ``singular_values`` has length p (descending).  ``left`` only holds the
    ``rank`` columns that belong to singular values above the rank cutoff, so
    it is orthonormal even when n < p.
    """

    left: np.ndarray
    singular_values: np.ndarray
    right: np.ndarray
    rank: int

    def reconstruct(self):
        r = self.rank
        return (self.left * self.singular_values[:r]) @ self.right[:, :r].T


@dataclass(frozen=True)
class Tridiagonal:
    """Symmetric tridiagonal matrix stored as its diagonal and subdiagonal."""

    diag: np.ndarray
    subdiag: np.ndarray

    def __post_init__(self):
        diag = np.asarray(self.diag, dtype=float).reshape(-1)
        subdiag = np.asarray(self.subdiag, dtype=float).reshape(-1)
        if diag.size == 0:
            raise ArgumentError("tridiagonal matrix must have order >= 1")
        if subdiag.size != diag.size - 1:
            raise ArgumentError(
                f"subdiagonal has length {subdiag.size}, expected {diag.size - 1}"
            )
        object.__setattr__(self, "diag", diag)
        object.__setattr__(self, "subdiag", subdiag)

    @property
    def order(self):
        return self.diag.size

    def leading(self, m):
        """Leading principal m x m block."""
        if not 1 <= m <= self.order:
            raise ArgumentError(f"block order {m} outside 1..{self.order}")
        return Tridiagonal(self.diag[:m], self.subdiag[: m - 1])

    def is_unreduced(self, tol=0.0):
        return bool(np.all(np.abs(self.subdiag) > tol))

    def norm(self):
        """Gershgorin bound on the spectral radius (an upper bound on the 2-norm)."""
        radius = np.abs(self.diag).copy()
        radius[:-1] += np.abs(self.subdiag)
        radius[1:] += np.abs(self.subdiag)
        return float(radius.max())

    def to_dense(self):
        return np.diag(self.diag) + np.diag(self.subdiag, 1) + np.diag(self.subdiag, -1)


def as_symmetric(B, tol=1e-12):
    """Return ``B`` as a float array after checking it is square and symmetric.

    Asymmetry up to ``tol * max|B|`` is accepted and averaged away so that the
    stored result is exactly symmetric.
    """
    B = np.asarray(B, dtype=float)
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise ArgumentError(f"expected a square matrix, got shape {B.shape}")
    if B.size == 0:
        raise ArgumentError("matrix must have order >= 1")
    asym = np.max(np.abs(B - B.T))
    if asym > tol * max(np.max(np.abs(B)), 1.0):
        raise ArgumentError(f"matrix is not symmetric (max asymmetry {asym:.3g})")
    if asym:
        B = 0.5 * (B + B.T)
    return B


def sym_eigen(B, tol=1e-12):
    """Eigendecomposition of a symmetric matrix, eigenvalues descending.

    Parameters
    ----------
    B : array_like, shape (p, p)
        Symmetric matrix.
    tol : float
        Relative symmetry tolerance; see :func:`as_symmetric`.

    Returns
    -------
    EigenSystem

    Raises
    ------
    NumericalError
        If LAPACK fails to converge.
    """
    B = as_symmetric(B, tol)
    try:
        values, vectors = np.linalg.eigh(B)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            f"symmetric eigensolver did not converge for order {B.shape[0]} "
            f"(max |B| = {np.max(np.abs(B)):.3g}): {exc}"
        ) from exc
    order = np.argsort(values, kind="stable")[::-1]
    return EigenSystem(values[order], vectors[:, order])


def svd_thin(X, tol=1e-5):
    """Singular value decomposition of X through the eigensystem of X^t X.

    Squaring the condition number is accepted here: all downstream
    quantities (eigenvalues of A = X^t X, OLS components) live on the Gram
    scale anyway.  Singular values at or below ``tol * max(sigma)`` count as
    zero when determining the rank.  Roundoff in X^t X puts spurious singular
    values near sqrt(eps) * max(sigma), so ``tol`` should stay well above
    1e-8; the default 1e-5 matches a 1e-10 cutoff on the eigenvalues of A.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or min(X.shape) < 1:
        raise ArgumentError(f"expected a non-empty 2-D matrix, got shape {X.shape}")
    gram = X.T @ X
    eig = sym_eigen(0.5 * (gram + gram.T))
    sigma = np.sqrt(np.clip(eig.values, 0.0, None))
    rank = int(np.sum(sigma > tol * sigma[0])) if sigma[0] > 0 else 0
    left = (X @ eig.vectors[:, :rank]) / sigma[:rank]
    if rank:
        # One QR pass restores orthonormality lost to the division by small sigma.
        q, r = np.linalg.qr(left)
        left = q * np.sign(np.diag(r))
    return SvdResult(left=left, singular_values=sigma, right=eig.vectors, rank=rank)


def pi_polynomial(x, roots):
    """Evaluate pi(x) = (1 - prod_i (1 - x / r_i)) / x at the points ``x``.

    Uses the telescoping form ``sum_k (1/r_k) prod_{i<k} (1 - x/r_i)``, which
    is exact algebra but avoids the cancellation of ``1 - prod`` near x = 0.
    ``roots`` must all be non-zero.  An empty root set gives pi = 0.
    """
    x = np.asarray(x, dtype=float)
    roots = np.asarray(roots, dtype=float).reshape(-1)
    total = np.zeros_like(x)
    running = np.ones_like(x)
    for r in roots:
        total = total + running / r
        running = running * (1.0 - x / r)
    return total


def shrinkage_polynomial(x, roots):
    """Evaluate f(x) = 1 - prod_i (1 - x / r_i) at ``x`` for non-zero ``roots``."""
    x = np.asarray(x, dtype=float)
    roots = np.asarray(roots, dtype=float).reshape(-1)
    if roots.size == 0:
        return np.zeros_like(x)
    prod = np.prod(1.0 - np.multiply.outer(x, 1.0 / roots), axis=-1)
    return 1.0 - prod


def poly_generalized_inverse(B, eigentol=1e-10):
    """Generalized inverse of a PSD matrix as a polynomial in the matrix.

    With f_B(t) = 1 - prod over non-zero eigenvalues (counted with
    multiplicity) of (1 - t/lambda_i) and f_B(t) = t * pi_B(t), returns
    pi_B(B).  The result G always satisfies B G B = B with B G and G B
    symmetric.  It equals B^{-1} for nonsingular B, but for singular B it is
    not reflexive: G B G != G because pi_B(0) = sum 1/lambda_i != 0.

    Parameters
    ----------
    B : array_like, shape (k, k)
        Symmetric positive semidefinite matrix.
    eigentol : float
        Eigenvalues with ``|lambda| <= eigentol * lambda_max`` count as zero.

    Raises
    ------
    DomainError
        If B has an eigenvalue below ``-eigentol * lambda_max``.
    """
    eig = sym_eigen(B)
    lam_max = max(eig.values[0], 0.0)
    cutoff = eigentol * lam_max
    if eig.values[-1] < -cutoff:
        raise DomainError(
            f"matrix is not positive semidefinite: eigenvalue {eig.values[-1]:.6g} "
            f"below -{cutoff:.3g}"
        )
    nonzero = eig.values[eig.values > cutoff]
    pi_vals = pi_polynomial(eig.values, nonzero)
    G = (eig.vectors * pi_vals) @ eig.vectors.T
    return 0.5 * (G + G.T)


def charpoly_scaled(T, lam):
    """Characteristic polynomial det(T - lam I) as ``(mantissa, exponent)``.

    Runs chi_k = (a_k - lam) chi_{k-1} - b_{k-1}^2 chi_{k-2} with chi_0 = 1
    and rescales the pair (chi_k, chi_{k-1}) by a power of two whenever the
    magnitude leaves [2^-200, 2^200].  The true value is
    ``mantissa * 2**exponent``.
    """
    a = T.diag
    b2 = T.subdiag**2
    prev, cur = 1.0, a[0] - lam
    exponent = 0
    for k in range(1, a.size):
        prev, cur = cur, (a[k] - lam) * cur - b2[k - 1] * prev
        mag = abs(cur)
        if mag > _RESCALE_HI or (0.0 < mag < _RESCALE_LO):
            _, e = math.frexp(cur)
            cur = math.ldexp(cur, -e)
            prev = math.ldexp(prev, -e)
            exponent += e
    return cur, exponent


def charpoly_eval(T, lam):
    """Value of det(T - lam I) via the three-term recursion.

    May over/underflow to inf/0 for very large orders; use
    :func:`charpoly_scaled` when only the sign or magnitude matters.
    """
    mantissa, exponent = charpoly_scaled(T, float(lam))
    try:
        return math.ldexp(mantissa, exponent)
    except OverflowError:
        return math.copysign(math.inf, mantissa)


def sturm_count(T, lam):
    """Number of eigenvalues of T strictly less than ``lam`` (vectorized).

    Counts negative ratios q_k = chi_k / chi_{k-1} of the characteristic
    polynomial recursion, q_k = (a_k - lam) - b_{k-1}^2 / q_{k-1}.  A zero
    ratio is nudged to a tiny negative value, which also keeps reduced
    matrices (b_i = 0) well defined.
    """
    lam = np.asarray(lam, dtype=float)
    a = T.diag
    b2 = T.subdiag**2
    tiny = np.finfo(float).tiny ** 0.5 * max(T.norm(), 1.0)
    q = a[0] - lam
    q = np.where(q == 0.0, -tiny, q)
    count = (q < 0).astype(int)
    # a tiny q_{k-1} overflows to -inf, which correctly counts one negative
    with np.errstate(over="ignore"):
        for k in range(1, a.size):
            q = (a[k] - lam) - b2[k - 1] / q
            q = np.where(q == 0.0, -tiny, q)
            count += q < 0
    return count


def tridiag_eigenvalues(T, tol=1e-14, max_iter=200):
    """Eigenvalues of a symmetric tridiagonal matrix by Sturm bisection.

    All eigenvalues are bisected simultaneously inside the Gershgorin
    interval until their brackets are narrower than ``tol * ||T||``.

    Returns
    -------
    numpy.ndarray
        Eigenvalues in descending order.
    """
    m = T.order
    if m == 1:
        return T.diag.copy()
    off = np.zeros(m)
    off[:-1] += np.abs(T.subdiag)
    off[1:] += np.abs(T.subdiag)
    lo_bound = float(np.min(T.diag - off))
    hi_bound = float(np.max(T.diag + off))
    scale = max(abs(lo_bound), abs(hi_bound), np.finfo(float).tiny)
    width = tol * scale
    lo_bound -= width
    hi_bound += width

    target = np.arange(1, m + 1)  # k-th smallest eigenvalue: count(x) >= k
    lo = np.full(m, lo_bound)
    hi = np.full(m, hi_bound)
    for _ in range(max_iter):
        if np.all(hi - lo <= width):
            break
        mid = 0.5 * (lo + hi)
        stalled = (mid <= lo) | (mid >= hi)
        if np.all(stalled | (hi - lo <= width)):
            break
        above = sturm_count(T, mid) >= target
        hi = np.where(above, mid, hi)
        lo = np.where(above, lo, mid)
    return (0.5 * (lo + hi))[::-1]


def cholesky(S):
    """Lower-triangular Cholesky factor L with L L^t = S.

    Raises
    ------
    NotPositiveDefiniteError
        Naming the (0-based) index of the first non-positive pivot.
    """
    S = as_symmetric(S)
    n = S.shape[0]
    L = np.zeros_like(S)
    for j in range(n):
        pivot = S[j, j] - L[j, :j] @ L[j, :j]
        if not pivot > 0.0:
            raise NotPositiveDefiniteError(j, float(pivot))
        L[j, j] = math.sqrt(pivot)
        L[j + 1 :, j] = (S[j + 1 :, j] - L[j + 1 :, :j] @ L[j, :j]) / L[j, j]
    return L
