"""Shrinkage factors of PLS and the factor-clipped BOUND estimator.

After m steps PLS equals sum_i f^(m)(lambda_i) z_i, where z_i is the OLS
component along the i-th eigenvector of A and

    f^(m)(lambda) = 1 - prod_i (1 - lambda / mu_i^(m))

with mu_i^(m) the (non-zero) eigenvalues of T^(m).  Since the mu depend on y,
the factors are random; the closed-form MSE in :func:`linear_shrinkage_mse`
only holds for deterministic factor rules such as PCR and Ridge.
"""

from dataclasses import dataclass

import mpmath as mp
import numpy as np

from .errors import ArgumentError, DomainError, NumericalError
from .linalg import shrinkage_polynomial, tridiag_eigenvalues

__all__ = [
    "ClippedProfile",
    "ShrinkageProfile",
    "SignDecomposition",
    "bound_estimator",
    "bound_from_factors",
    "clip",
    "clip_factors",
    "clipping_variance_example",
    "factor_path",
    "linear_shrinkage_mse",
    "shrinkage_factors",
    "sign_decomposition",
    "smallest_eigenvalue_bound",
]


@dataclass(frozen=True)
class ShrinkageProfile:
    """Shrinkage factors after ``m`` steps.

    Attributes
    ----------
    m : int
    ritz : ndarray
        Eigenvalues of T^(m), descending.
    ritz_nonzero : ndarray of bool
        Which Ritz values enter the product (those above the zero cutoff).
    lambdas : ndarray
        Retained eigenvalues of A (descending), always including lambda_p.
    eigen_index : ndarray of int
        Position of each entry of ``lambdas`` in the full eigenvalue list.
    factors : ndarray
        f^(m)(lambda) for each entry of ``lambdas``.
    """

    m: int
    ritz: np.ndarray
    ritz_nonzero: np.ndarray
    lambdas: np.ndarray
    eigen_index: np.ndarray
    factors: np.ndarray

    @property
    def roots(self):
        return self.ritz[self.ritz_nonzero]

    def factor(self, lam):
        """Evaluate f^(m) at arbitrary points."""
        return shrinkage_polynomial(lam, self.roots)


@dataclass(frozen=True)
class ClippedProfile:
    profile: ShrinkageProfile
    clipped: np.ndarray

    @property
    def n_clipped(self):
        return int(np.sum(self.clipped != self.profile.factors))


@dataclass(frozen=True)
class SignDecomposition:
    """Partition of [lambda_p, lambda_1] by the Ritz values.

    ``breakpoints`` are ascending: lambda_p, the Ritz values, lambda_1.
    Interval j (1-based) is [breakpoints[j-1], breakpoints[j]];
    ``interval_signs[j-1]`` is -1 where f <= 1 and +1 where f >= 1.
    ``assignment[i]`` is the 1-based interval holding ``lambdas[i]``.
    """

    breakpoints: np.ndarray
    interval_signs: np.ndarray
    assignment: np.ndarray
    consistent: bool


def _spectral_g(nodes, weights, points, steps, deflate=None, dps=50):
    """g^(m)(x) = prod_{mu != 0} (1 - x / mu^(m)) for every m in ``steps``.

    The Ritz values mu^(m) are the roots of the m-th monic orthogonal
    polynomial p_m of the discrete measure sum_i weights_i delta(nodes_i), so
    g^(m)(x) = p_m(x) / p_m(0).  When T^(m) has a zero eigenvalue (``deflate``)
    the root at zero is divided out: g^(m)(x) = p_m(x) / (x p_m'(0)).

    The three-term recursion runs in ``dps`` decimal digits.  Near m* the
    Ritz values agree with eigenvalues of A to roundoff, and the factors
    computed as a product of double-precision differences 1 - lambda/mu lose
    all accuracy; evaluating p_m directly at the nodes avoids that.
    """
    steps = list(steps)
    deflate = [False] * len(steps) if deflate is None else list(deflate)
    out = np.zeros((len(steps), len(points)))
    want = {m: j for j, m in enumerate(steps)}
    top = max(steps)
    with mp.workdps(dps):
        x = np.array([mp.mpf(float(v)) for v in nodes], dtype=object)
        w = np.array([mp.mpf(float(v)) for v in weights], dtype=object)
        pts = np.array([mp.mpf(float(v)) for v in points], dtype=object)
        # p_k at the nodes, at the evaluation points, at zero, and p_k'(0)
        node_prev, node_cur = np.zeros_like(x), np.ones_like(x) * mp.mpf(1)
        pt_prev, pt_cur = np.zeros_like(pts), np.ones_like(pts) * mp.mpf(1)
        z_prev, z_cur = mp.mpf(0), mp.mpf(1)
        d_prev, d_cur = mp.mpf(0), mp.mpf(0)
        norm_prev = None
        for k in range(top):
            norm = mp.fsum(w * node_cur * node_cur)
            if norm == 0:
                raise NumericalError(
                    f"spectral measure supports only {k} Ritz values, {top} requested"
                )
            alpha = mp.fsum(w * x * node_cur * node_cur) / norm
            beta = norm / norm_prev if norm_prev is not None else mp.mpf(0)
            node_prev, node_cur = node_cur, (x - alpha) * node_cur - beta * node_prev
            pt_prev, pt_cur = pt_cur, (pts - alpha) * pt_cur - beta * pt_prev
            d_prev, d_cur = d_cur, z_cur - alpha * d_cur - beta * d_prev
            z_prev, z_cur = z_cur, -alpha * z_cur - beta * z_prev
            norm_prev = norm
            j = want.get(k + 1)
            if j is None:
                continue
            if deflate[j]:
                g = [pc / (pv * d_cur) if pv != 0 else mp.mpf(1) for pc, pv in zip(pt_cur, pts)]
            else:
                g = pt_cur / z_cur
            out[j] = [float(v) for v in g]
    return out


def _polish_ritz(nodes, weights, ritz, dps=50, iters=60):
    """Refine double-precision Ritz values as roots of p_m in ``dps`` digits.

    Bisection on the stored tridiagonal leaves each Ritz value with an error
    of order eps * ||T||, which near m* is far larger than the spacing the
    extended-precision factors resolve.  Newton steps on p_m, evaluated by
    the same three-term recursion, bring them onto the roots the factors
    vanish at.  A value is kept unpolished if Newton leaves its bracket
    between the neighbouring midpoints.
    """
    m = len(ritz)
    out = np.array(ritz, dtype=float)
    with mp.workdps(dps):
        x = np.array([mp.mpf(float(v)) for v in nodes], dtype=object)
        w = np.array([mp.mpf(float(v)) for v in weights], dtype=object)
        alphas, betas = [], []
        prev, cur, norm_prev = np.zeros_like(x), np.ones_like(x) * mp.mpf(1), None
        for _ in range(m):
            norm = mp.fsum(w * cur * cur)
            if norm == 0:
                return out
            alphas.append(mp.fsum(w * x * cur * cur) / norm)
            betas.append(norm / norm_prev if norm_prev is not None else mp.mpf(0))
            prev, cur = cur, (x - alphas[-1]) * cur - betas[-1] * prev
            norm_prev = norm

        def newton(t):
            p0, p1, d0, d1 = mp.mpf(0), mp.mpf(1), mp.mpf(0), mp.mpf(0)
            for a, b in zip(alphas, betas):
                p0, p1, d0, d1 = p1, (t - a) * p1 - b * p0, d1, p1 + (t - a) * d1 - b * d0
            return p1 / d1 if d1 != 0 else mp.mpf(0)

        order = np.argsort(out)
        srt = out[order]
        mids = np.concatenate([[-np.inf], 0.5 * (srt[1:] + srt[:-1]), [np.inf]])
        for k, j in enumerate(order):
            if srt[k] == 0.0:
                continue
            t = mp.mpf(float(srt[k]))
            tol = mp.mpf(10) ** (-dps + 5) * abs(t)
            for _ in range(iters):
                step = newton(t)
                t -= step
                if abs(step) <= tol:
                    break
            if mids[k] < float(t) < mids[k + 1]:
                out[j] = float(t)
    return out


def _spectral_weights(state, eig):
    b = state.b_norm * state.basis[:, 0]
    return (eig.vectors.T @ b) ** 2


def _retained(eig, eigentol):
    values = eig.values
    if values[-1] < -eigentol * max(values[0], 0.0):
        raise DomainError(
            f"shrinkage factors need a positive semidefinite A; smallest eigenvalue "
            f"is {values[-1]:.6g}"
        )
    cut = eigentol * max(values[0], 0.0)
    keep = values > cut
    keep[-1] = True
    idx = np.flatnonzero(keep)
    return idx, values[idx] > cut


def shrinkage_factors(state, eig, m, eigentol=1e-10, dps=50):
    """Shrinkage factors f^(m)(lambda_i) from a Lanczos run.

    Ritz values come from Sturm bisection on the leading m x m block of the
    stored tridiagonal, polished in extended precision when T^(m) is
    nonsingular (see :func:`_polish_ritz`).  Ritz values at or below ``eigentol * mu_1`` are left
    out of the product, which keeps the formula finite when T^(m) is
    singular.  Factors are reported for every eigenvalue of A above
    ``eigentol * lambda_1`` and for the smallest eigenvalue lambda_p; the
    product is evaluated in extended precision (see :func:`_spectral_g`).
    """
    if not 1 <= m <= state.steps:
        raise ArgumentError(f"step {m} outside 1..{state.steps}")
    idx, positive = _retained(eig, eigentol)
    weights = _spectral_weights(state, eig)
    ritz = tridiag_eigenvalues(state.tri.leading(m))
    nonzero = ritz > eigentol * max(ritz[0], 0.0)
    if nonzero.all():
        ritz = _polish_ritz(eig.values, weights, ritz, dps)
    lambdas = eig.values[idx]
    g = _spectral_g(eig.values, weights, lambdas, [m], [not nonzero.all()], dps)[0]
    factors = 1.0 - g
    # f(0) = 0 exactly; lambda_p may carry roundoff below the cutoff
    factors[~positive] = 0.0
    return ShrinkageProfile(m, ritz, nonzero, lambdas, idx, factors)


def factor_path(state, eig, m_max=None, eigentol=1e-10, dps=50):
    """Factors for all steps 1..m_max in one pass, without the Ritz values.

    Assumes T^(m) is nonsingular, which holds whenever b lies in the range of
    A (always the case for b = X^t y).  Returns ``(eigen_index, factors)``
    with ``factors[m-1]`` the factors after m steps.
    """
    m_max = state.steps if m_max is None else min(int(m_max), state.steps)
    idx, positive = _retained(eig, eigentol)
    g = _spectral_g(eig.values, _spectral_weights(state, eig), eig.values[idx],
                    range(1, m_max + 1), None, dps)
    factors = 1.0 - g
    factors[:, ~positive] = 0.0
    return idx, factors


def sign_decomposition(profile, tol=1e-10):
    """Split [lambda_p, lambda_1] into m + 1 intervals of alternating f - 1 sign.

    1 - f vanishes exactly at the Ritz values and equals 1 at zero, so f <= 1
    on the lowest interval and the relation flips at every Ritz value.
    ``consistent`` reports whether each lambda_i's factor agrees with the
    label of its interval up to ``tol``.

    Raises
    ------
    ArgumentError
        If two Ritz values coincide within ``tol`` (a reduced chain).
    """
    roots = np.sort(profile.roots)
    if roots.size > 1 and np.min(np.diff(roots)) <= tol * roots[-1]:
        raise ArgumentError("repeated Ritz values: the chain is reduced")
    lam = profile.lambdas
    lam_p, lam_1 = float(lam[-1]), float(lam[0])
    breakpoints = np.concatenate([[min(lam_p, roots[0])], roots, [max(lam_1, roots[-1])]])
    signs = np.array([-1 if j % 2 == 0 else 1 for j in range(roots.size + 1)])
    # number of Ritz values strictly below lambda; closed at the Ritz values
    assignment = np.searchsorted(roots, lam, side="left") + 1
    consistent = True
    for f, j, x in zip(profile.factors, assignment, lam):
        if np.isclose(x, roots, rtol=tol, atol=0).any():
            continue
        if signs[j - 1] * (f - 1.0) < -tol:
            consistent = False
    return SignDecomposition(breakpoints, signs, assignment, consistent)


def smallest_eigenvalue_bound(profile, margin=1e-12):
    """Check 0 <= f^(m)(lambda_p) < 1 - margin; returns ``(ok, value)``."""
    value = float(profile.factors[-1])
    return (0.0 <= value < 1.0 - margin), value


def clip(factors):
    """Clip factors to [-1, 1]."""
    return np.clip(np.asarray(factors, dtype=float), -1.0, 1.0)


def clip_factors(profile):
    return ClippedProfile(profile, clip(profile.factors))


def clipping_variance_example(size=10_000, seed=0, max_exponent=3):
    """Clipping a random factor can increase variance.

    W = 2^U with U uniform on the integers -max_exponent..max_exponent and
    Z = 1/W.  Powers of two keep Z W = 1 exact, so var(Z W) = 0, while the
    clipped Z~ = clip(Z) gives Z~ W = min(W, 1), which is not constant.
    Returns ``(var(Z W), var(Z~ W))`` of a seeded sample.
    """
    if max_exponent < 1:
        raise ArgumentError(f"max_exponent must be at least 1, got {max_exponent}")
    u = np.random.default_rng(seed).integers(-max_exponent, max_exponent + 1, size)
    w = np.ldexp(1.0, u)
    z = 1.0 / w
    return float(np.var(z * w)), float(np.var(clip(z) * w))


def bound_estimator(data, m, rank_tol=1e-10, eigentol=1e-10, state=None):
    """BOUND estimator: PLS with every shrinkage factor clipped to [-1, 1].

    Computed as the Krylov PLS vector minus the clipped-away part
    sum_i (f_i - clip(f_i)) z_i, so it is bit-for-bit the PLS vector whenever
    no factor is clipped.  At m >= m* all factors with z_i != 0 equal one, so
    BOUND is PLS (= OLS) there as well.
    """
    from .estimators import EstimatorResult, pls_krylov
    from .krylov import lanczos

    if not np.any(data.cross):
        return EstimatorResult("BOUND", m, np.zeros(data.p), np.zeros(data.n), 0)
    if state is None:
        state = lanczos(data.gram, data.cross, m_max=max(int(m), 1), rank_tol=rank_tol)
    pls = pls_krylov(data, m, rank_tol, state)
    if state.m_star is not None and pls.steps >= state.m_star:
        return EstimatorResult("BOUND", m, pls.beta, pls.fitted, pls.steps, 0)
    profile = shrinkage_factors(state, data.eig, pls.steps, eigentol)
    return bound_from_factors(data, pls, profile.eigen_index, profile.factors, m)


def bound_from_factors(data, pls, eigen_index, factors, m=None):
    """Turn a PLS result into BOUND given its shrinkage factors."""
    from .estimators import EstimatorResult, ols_components

    m = pls.hyper if m is None else m
    keep = eigen_index < data.rank
    idx = eigen_index[keep]
    f = factors[keep]
    excess = f - clip(f)
    hit = np.flatnonzero(excess)
    if hit.size == 0:
        return EstimatorResult("BOUND", m, pls.beta, pls.fitted, pls.steps, 0)
    c = ols_components(data)[idx[hit]]
    beta = pls.beta - data.svd.right[:, idx[hit]] @ (excess[hit] * c)
    return EstimatorResult("BOUND", m, beta, data.X @ beta, pls.steps, int(hit.size))


def linear_shrinkage_mse(factors, lambdas, beta_components, sigma2):
    """Exact MSE of a shrinkage estimator with deterministic factors.

    For beta_hat = sum_i f(lambda_i) z_i with f not depending on y:

        MSE(beta_hat) = sum (f_i - 1)^2 (u_i^t beta)^2 + sigma^2 sum f_i^2 / lambda_i
        MSE(X beta_hat) = sum lambda_i (f_i - 1)^2 (u_i^t beta)^2 + sigma^2 sum f_i^2

    This does NOT apply to PLS or BOUND, whose factors depend on y.

    Parameters
    ----------
    factors, lambdas, beta_components : array_like
        f(lambda_i), lambda_i and u_i^t beta over the retained eigenvalues.
    sigma2 : float
        Noise variance.

    Returns
    -------
    (float, float)
        MSE for beta and for X beta.
    """
    f = np.asarray(factors, dtype=float)
    lam = np.asarray(lambdas, dtype=float)
    c = np.asarray(beta_components, dtype=float)
    if not f.shape == lam.shape == c.shape:
        raise ArgumentError("factors, lambdas and beta components must have equal length")
    if sigma2 < 0:
        raise ArgumentError("sigma2 must be non-negative")
    bias = (f - 1.0) ** 2 * c**2
    if np.any((lam <= 0) & (f != 0)):
        raise DomainError("non-positive eigenvalue with a non-zero factor")
    pos = lam > 0
    mse_beta = float(np.sum(bias) + sigma2 * np.sum(f[pos] ** 2 / lam[pos]))
    mse_y = float(np.sum(lam * bias) + sigma2 * np.sum(f**2))
    return mse_beta, mse_y
