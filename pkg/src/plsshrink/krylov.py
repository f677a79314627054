"""Krylov sequences, the Lanczos basis of K^(m)(A, b) and its tridiagonal T^(m).

The orthonormal basis is built by the Lanczos three-term recurrence with a
full reorthogonalization pass each step.  In exact arithmetic it coincides
with Gram-Schmidt applied to the raw Krylov sequence b, Ab, A^2 b, ...; the
raw sequence itself is only used as a test oracle at small order because it
becomes numerically rank deficient very quickly.
"""

from dataclasses import dataclass, field

import mpmath
import numpy as np

from .errors import ArgumentError, NumericalError
from .linalg import Tridiagonal, as_symmetric, sym_eigen, tridiag_eigenvalues

__all__ = [
    "InterlacingReport",
    "KrylovState",
    "check_interlacing",
    "krylov_sequence",
    "lanczos",
    "m_star",
    "certify_separated",
    "structural_report",
]

ORTHO_LIMIT = 1e-6


@dataclass(frozen=True)
class KrylovState:
    """Result of a Lanczos run on (A, b).

    Attributes
    ----------
    basis : ndarray, shape (p, m)
        Orthonormal columns w_1..w_m spanning K^(m).
    tri : Tridiagonal
        T^(m) = basis^t A basis; all subdiagonals are positive.
    m_star : int or None
        Maximal Krylov dimension if the run detected it, else None.
    residual_norms : ndarray, shape (m,)
        Remainder norm after orthogonalizing A w_j against the basis.  The
        first m - 1 entries are the subdiagonals of T^(m); the last one is the
        breakdown remainder when ``m_star == m``.
    b_norm : float
        Norm of the starting vector.
    """

    basis: np.ndarray
    tri: Tridiagonal
    m_star: int | None
    residual_norms: np.ndarray
    b_norm: float = 0.0

    @property
    def steps(self):
        return self.tri.order

    def leading(self, m):
        """Basis W^(m) and tridiagonal T^(m) for m <= steps."""
        if not 1 <= m <= self.steps:
            raise ArgumentError(f"step {m} outside 1..{self.steps}")
        return self.basis[:, :m], self.tri.leading(m)


def krylov_sequence(A, b, m):
    """Columns b, A b, ..., A^(m-1) b as a p x m array."""
    if m <= 0:
        raise ArgumentError(f"number of Krylov columns must be positive, got {m}")
    A = as_symmetric(A)
    b = np.asarray(b, dtype=float).reshape(-1)
    if b.size != A.shape[0]:
        raise ArgumentError(f"vector of length {b.size} does not match order {A.shape[0]}")
    cols = np.empty((b.size, m))
    cols[:, 0] = b
    for j in range(1, m):
        cols[:, j] = A @ cols[:, j - 1]
    return cols


def lanczos(A, b, m_max=None, rank_tol=1e-10):
    """Orthonormal Krylov basis and tridiagonal T^(m) by the Lanczos recurrence.

    Stops after ``m_max`` steps or when the Krylov space stops growing,
    whichever comes first.  The space is declared exhausted at step j when
    the orthogonalized remainder of A w_j drops to ``rank_tol`` times the
    largest ``||A w_i||`` seen so far; j is then the maximal dimension m*.

    Parameters
    ----------
    A : array_like, shape (p, p)
        Symmetric (positive semidefinite in all PLS uses) matrix.
    b : array_like, shape (p,)
        Non-zero starting vector.
    m_max : int, optional
        Step cap; defaults to p.
    rank_tol : float
        Relative breakdown threshold.

    Returns
    -------
    KrylovState
    """
    A = as_symmetric(A)
    b = np.asarray(b, dtype=float).reshape(-1)
    p = A.shape[0]
    if b.size != p:
        raise ArgumentError(f"vector of length {b.size} does not match order {p}")
    if rank_tol <= 0:
        raise ArgumentError("rank_tol must be positive")
    b_norm = float(np.linalg.norm(b))
    if b_norm == 0.0:
        raise ArgumentError("starting vector b is zero; the Krylov space is empty")
    m_max = p if m_max is None else min(int(m_max), p)
    if m_max < 1:
        raise ArgumentError(f"m_max must be positive, got {m_max}")

    W = np.zeros((p, m_max))
    W[:, 0] = b / b_norm
    diag, sub, remainders = [], [], []
    scale = 0.0
    found = None
    for j in range(m_max):
        w = W[:, j]
        v = A @ w
        scale = max(scale, float(np.linalg.norm(v)))
        a_j = float(w @ v)
        r = v - a_j * w
        if j > 0:
            r -= sub[-1] * W[:, j - 1]
        r -= W[:, : j + 1] @ (W[:, : j + 1].T @ r)
        beta = float(np.linalg.norm(r))
        diag.append(a_j)
        remainders.append(beta)
        if beta <= rank_tol * scale:
            found = j + 1
            break
        if j + 1 == m_max:
            break
        sub.append(beta)
        W[:, j + 1] = r / beta

    m = len(diag)
    if found is None and m == p:
        # K^(p+1) cannot exceed dimension p
        found = p
    basis = W[:, :m]
    ortho = np.max(np.abs(basis.T @ basis - np.eye(m)))
    if ortho > ORTHO_LIMIT:
        raise NumericalError(
            f"Lanczos lost orthogonality after {m} steps "
            f"(max |W^t W - I| = {ortho:.3g}, order {p})"
        )
    return KrylovState(
        basis=basis,
        tri=Tridiagonal(np.array(diag), np.array(sub)),
        m_star=found,
        residual_norms=np.array(remainders),
        b_norm=b_norm,
    )


def m_star(A, b, rank_tol=1e-10, eig=None):
    """Maximal Krylov dimension from the spectrum of A.

    Counts distinct eigenvalues of A (clustered within ``rank_tol`` of the
    spectral radius) whose eigenspace carries a component of b larger than
    ``rank_tol * ||b||``.
    """
    A = as_symmetric(A)
    b = np.asarray(b, dtype=float).reshape(-1)
    b_norm = np.linalg.norm(b)
    if b_norm == 0.0:
        raise ArgumentError("starting vector b is zero")
    eig = sym_eigen(A) if eig is None else eig
    vals = eig.values
    coords = eig.vectors.T @ b
    gap = rank_tol * max(np.max(np.abs(vals)), np.finfo(float).tiny)
    count = 0
    start = 0
    for i in range(1, vals.size + 1):
        if i == vals.size or vals[i - 1] - vals[i] > gap:
            if np.linalg.norm(coords[start:i]) > rank_tol * b_norm:
                count += 1
            start = i
    return count


@dataclass
class InterlacingReport:
    """Outcome of :func:`check_interlacing`.

    ``witnesses`` maps each required interval to the eigenvalue of the larger
    matrix assigned to it; the key ``"outside"`` holds the eigenvalue lying
    outside the open hull of the smaller spectrum.
    """

    ok: bool
    small: np.ndarray
    large: np.ndarray
    witnesses: dict = field(default_factory=dict)


def _match(candidates, n_right):
    """Maximum bipartite matching (Kuhn); candidates[i] lists allowed right nodes."""
    owner = [-1] * n_right

    def augment(i, seen):
        for j in candidates[i]:
            if not seen[j]:
                seen[j] = True
                if owner[j] < 0 or augment(owner[j], seen):
                    owner[j] = i
                    return True
        return False

    for i in range(len(candidates)):
        if not augment(i, [False] * n_right):
            return None
    return {owner[j]: j for j in range(n_right) if owner[j] >= 0}


def _interlaces(mu, nu, slack):
    """Injective assignment of ``nu`` values to the interlacing slots of ``mu``."""
    m = mu.size
    asc = mu[::-1]
    intervals = [(asc[j], asc[j + 1]) for j in range(m - 1)]
    candidates = [
        [i for i, x in enumerate(nu) if lo - slack <= x <= hi + slack] for lo, hi in intervals
    ]
    candidates.append(
        [i for i, x in enumerate(nu) if x <= mu[-1] + slack or x >= mu[0] - slack]
    )
    assignment = _match(candidates, nu.size)
    if assignment is None:
        return None
    witnesses = {intervals[j]: float(nu[assignment[j]]) for j in range(m - 1)}
    witnesses["outside"] = float(nu[assignment[m - 1]])
    return witnesses


def check_interlacing(small, large, tol=1e-10):
    """Verify Cauchy interlacing along a nested chain T^(m) inside T^(m+k).

    Every closed interval between consecutive eigenvalues of ``small`` must
    receive its own eigenvalue of ``large``, and one further eigenvalue of
    ``large`` must lie outside the open interval (mu_min, mu_max).  Intervals
    are widened by ``tol * ||large||``.

    Raises
    ------
    ArgumentError
        If ``small`` is not a proper leading block of ``large``.
    """
    m, mk = small.order, large.order
    if mk <= m:
        raise ArgumentError(f"need a strictly larger matrix (orders {m} and {mk})")
    if not (
        np.array_equal(large.diag[:m], small.diag)
        and np.array_equal(large.subdiag[: m - 1], small.subdiag)
    ):
        raise ArgumentError("matrices are not leading blocks of a common chain")
    mu = tridiag_eigenvalues(small)
    nu = tridiag_eigenvalues(large)
    slack = tol * max(large.norm(), np.finfo(float).tiny)
    witnesses = _interlaces(mu, nu, slack)
    if witnesses is None:
        return InterlacingReport(False, mu, nu)
    return InterlacingReport(True, mu, nu, witnesses)


def _mp_count(a, b2, x):
    """Sturm count (eigenvalues < x) in the current mpmath precision."""
    q = a[0] - x
    count = int(q < 0)
    for k in range(1, len(a)):
        if q == 0:
            q = -mpmath.eps
        q = (a[k] - x) - b2[k - 1] / q
        count += int(q < 0)
    return count


def _mp_window_eigs(T, lo, hi):
    """Eigenvalues of T inside (lo, hi] by bisection at the current precision."""
    a = [mpmath.mpf(float(v)) for v in T.diag]
    b2 = [mpmath.mpf(float(v)) ** 2 for v in T.subdiag]
    c_lo, c_hi = _mp_count(a, b2, lo), _mp_count(a, b2, hi)
    out = []
    for k in range(c_lo + 1, c_hi + 1):
        left, right = lo, hi
        while right - left > mpmath.eps * (abs(left) + abs(right)):
            mid = (left + right) / 2
            if _mp_count(a, b2, mid) >= k:
                right = mid
            else:
                left = mid
        out.append((left + right) / 2)
    return out


def certify_separated(T1, T2, center, halfwidth, max_dps=640):
    """Decide whether T1's eigenvalues near ``center`` are simple and apart from T2's.

    Double precision cannot separate Ritz values that agree to more than
    ~15 digits, yet the stored floating-point matrices still have exactly
    distinct spectra.  This re-solves both matrices inside the window
    ``center +- halfwidth`` with mpmath Sturm bisection, doubling the
    precision until every gap exceeds 2^10 ulps or ``max_dps`` is reached.
    ``T2`` may be None to test only the simplicity of T1's eigenvalues.
    """
    dps = 40
    while dps <= max_dps:
        with mpmath.workdps(dps):
            lo = mpmath.mpf(center) - mpmath.mpf(halfwidth)
            hi = mpmath.mpf(center) + mpmath.mpf(halfwidth)
            e1 = _mp_window_eigs(T1, lo, hi)
            e2 = [] if T2 is None else _mp_window_eigs(T2, lo, hi)
            resolution = 1024 * mpmath.eps * max(abs(lo), abs(hi))
            gaps = [abs(x - y) for i, x in enumerate(e1) for y in e1[i + 1 :]]
            gaps += [abs(x - y) for x in e1 for y in e2]
            if not gaps or min(gaps) > resolution:
                return True
        dps *= 2
    return False


def structural_report(state, tol=1e-10):
    """Check the structural facts about a Lanczos chain; return violations.

    Checked for every retained step m (all of which satisfy dim K^(m) = m):
    positive subdiagonals, simple Ritz values, disjoint spectra of T^(m) and
    T^(m-1), a positive smallest eigenvalue of T^(m-1), and interlacing for
    every nested pair.  Gaps are measured against ``tol * ||T^(m)||``; pairs
    closer than that are re-examined in extended precision by
    :func:`certify_separated` before being reported.

    Returns
    -------
    list of str
        Human-readable violations; empty when all checks pass.
    """
    problems = []
    tri = state.tri
    if np.any(tri.subdiag <= 0):
        problems.append(f"non-positive subdiagonal: {tri.subdiag.min():.3g}")
    blocks = [tri.leading(m) for m in range(1, tri.order + 1)]
    spectra = [tridiag_eigenvalues(T) for T in blocks]
    for m in range(2, tri.order + 1):
        T, T_prev = blocks[m - 1], blocks[m - 2]
        mu, prev = spectra[m - 1], spectra[m - 2]
        scale = T.norm()
        window = tol * scale
        for i in np.flatnonzero(-np.diff(mu) <= window):
            center = 0.5 * (mu[i] + mu[i + 1])
            if not certify_separated(T, None, center, 4 * window):
                problems.append(f"T^({m}) has a repeated eigenvalue near {center:.6g}")
        cross = np.abs(np.subtract.outer(mu, prev))
        for i, j in zip(*np.nonzero(cross <= window)):
            center = 0.5 * (mu[i] + prev[j])
            if not certify_separated(T, T_prev, center, 4 * window):
                problems.append(
                    f"T^({m}) and T^({m - 1}) share an eigenvalue near {center:.6g}"
                )
        if prev[-1] <= window:
            problems.append(f"T^({m - 1}) has non-positive smallest eigenvalue {prev[-1]:.3g}")
    for m in range(1, tri.order):
        for mk in range(m + 1, tri.order + 1):
            slack = tol * blocks[mk - 1].norm()
            if _interlaces(spectra[m - 1], spectra[mk - 1], slack) is None:
                problems.append(f"interlacing fails for T^({m}) inside T^({mk})")
    return problems
