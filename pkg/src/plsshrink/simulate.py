"""Monte-Carlo MSE experiments and k-fold cross-validation.

The synthetic designs draw rows of X from N(0, Sigma) with an equicorrelated
Sigma (1.5 on the diagonal, 1 elsewhere) and a coefficient vector whose
non-zero entries are N(2, 2^2).  Within one experiment X and beta are fixed;
only the noise is redrawn for each of the K replicates.

Randomness is derived from ``numpy.random.SeedSequence``: one child stream
draws the design, one child per replicate draws the noise.  The same noise
draws are reused across signal-to-noise levels.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, DataError
from .estimators import (
    RegressionData,
    ols,
    pcr,
    pls_krylov,
    predict,
    ridge,
    standardize,
)
from .krylov import lanczos
from .linalg import as_symmetric, cholesky
from .shrinkage import bound_from_factors, factor_path

__all__ = [
    "CVReport",
    "DesignSpec",
    "SimulationReport",
    "SIM_METHODS",
    "calibrate_sigma",
    "draw_response",
    "equicorrelated",
    "estimate_mse",
    "example_spec",
    "generate_design",
    "kfold_cv",
]

SIM_METHODS = ("pls", "bound", "ols", "pcr", "ridge")
TARGETS = ("beta", "xbeta")


def equicorrelated(p, diag=1.5, off=1.0):
    S = np.full((p, p), float(off))
    np.fill_diagonal(S, diag)
    return S


@dataclass(frozen=True)
class DesignSpec:
    """Recipe for a synthetic regression problem.

    ``n_nonzero`` coefficients are drawn from N(coef_mean, coef_sd^2) and
    randomly permuted among p - n_nonzero zeros.  ``beta`` overrides the
    random rule when given.
    """

    example_id: object
    n: int
    p: int
    covariance: np.ndarray
    n_nonzero: int
    coef_mean: float = 2.0
    coef_sd: float = 2.0
    seed: int = 0
    beta: np.ndarray | None = None

    def __post_init__(self):
        if self.n < 2 or self.p < 1:
            raise ArgumentError(f"need n >= 2 and p >= 1, got n={self.n}, p={self.p}")
        if not 0 <= self.n_nonzero <= self.p:
            raise ArgumentError(f"n_nonzero={self.n_nonzero} outside 0..{self.p}")
        cov = as_symmetric(self.covariance)
        if cov.shape != (self.p, self.p):
            raise ArgumentError(f"covariance has shape {cov.shape}, expected ({self.p}, {self.p})")
        object.__setattr__(self, "covariance", cov)


_EXAMPLES = {1: (30, 10, 5), 2: (40, 20, 10), 3: (10, 20, 20)}


def example_spec(example_id, seed=0):
    """Design of the synthetic examples 1-3 (n, p, number of non-zero coefficients)."""
    try:
        n, p, nonzero = _EXAMPLES[int(example_id)]
    except (KeyError, ValueError):
        raise ArgumentError(f"unknown example {example_id!r}; choose 1, 2 or 3") from None
    return DesignSpec(int(example_id), n, p, equicorrelated(p), nonzero, seed=seed)


def _streams(seed):
    design, noise = np.random.SeedSequence(seed).spawn(2)
    return design, noise


def generate_design(spec):
    """Draw (X, beta) for ``spec``; rows of X are i.i.d. N(0, Sigma)."""
    design_seq, _ = _streams(spec.seed)
    rng = np.random.default_rng(design_seq)
    L = cholesky(spec.covariance)
    X = rng.standard_normal((spec.n, spec.p)) @ L.T
    if spec.beta is not None:
        beta = np.asarray(spec.beta, dtype=float).reshape(-1)
        if beta.size != spec.p:
            raise ArgumentError(f"beta has length {beta.size}, expected {spec.p}")
    else:
        z = rng.normal(spec.coef_mean, spec.coef_sd, spec.n_nonzero)
        beta = rng.permutation(np.concatenate([np.zeros(spec.p - spec.n_nonzero), z]))
    return X, beta


def calibrate_sigma(Sigma, beta, stnr, X=None):
    """Noise level sigma with var(X beta) / sigma^2 = stnr.

    var(X beta) is the population value beta^t Sigma beta unless a realized
    design ``X`` is passed, in which case its sample variance is used.
    ``stnr = inf`` gives sigma = 0.
    """
    if not stnr > 0:
        raise ArgumentError(f"stnr must be positive, got {stnr}")
    beta = np.asarray(beta, dtype=float)
    if X is None:
        signal = float(beta @ as_symmetric(Sigma) @ beta)
    else:
        signal = float(np.var(np.asarray(X) @ beta, ddof=1))
    if not signal > 0:
        raise DataError(f"signal variance is {signal:.3g}; cannot calibrate the noise")
    return float(np.sqrt(signal / stnr))


def draw_response(X, beta, sigma, seed):
    """y = X beta + sigma * eps with i.i.d. standard normal eps.

    ``seed`` is anything ``numpy.random.default_rng`` accepts.
    """
    X = np.asarray(X, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if X.shape[1] != beta.size:
        raise ArgumentError(f"X has {X.shape[1]} columns but beta has length {beta.size}")
    eps = np.random.default_rng(seed).standard_normal(X.shape[0])
    return X @ beta + sigma * eps


@dataclass
class SimulationReport:
    """Monte-Carlo MSE curves for one signal-to-noise level.

    ``mse[(method, target)]`` is an array over steps m = 1..p; OLS and Ridge
    curves are constant and PCR uses k = min(m, p*) components.
    ``clip_counts[m-1]`` counts replicates in which BOUND clipped a factor.
    """

    example_id: object
    stnr: float
    sigma: float
    K: int
    seed: int
    steps: np.ndarray
    targets: tuple
    mse: dict
    m_star: np.ndarray
    clip_counts: np.ndarray
    beta: np.ndarray = field(repr=False, default=None)

    def optimal_step(self, method, target):
        """Step minimizing the estimated MSE; ties go to the smaller step."""
        return int(self.steps[np.argmin(self.mse[(method, target)])])


def _targets_for(spec, target):
    if target not in ("both",) + TARGETS:
        raise ArgumentError(f"unknown target {target!r}")
    if spec.p > spec.n:
        # beta is not identifiable; only X beta is estimated
        return ("xbeta",)
    return TARGETS if target == "both" else (target,)


def estimate_mse(spec, stnr_levels, K=200, methods=("pls", "bound"), target="both",
                 ridge_penalty=1.0, empirical_variance=False):
    """Monte-Carlo MSE of each method at every step m = 1..p.

    For each stnr level and replicate k a fresh response y_k is drawn, every
    method is fitted on the standardized X and the re-centered y_k, and

        MSE_hat = (1/K) sum_k ||theta_hat_k - theta||^2

    with theta the true coefficients on the standardized scale or the true
    centered signal X beta.

    Returns
    -------
    list of SimulationReport
        One report per entry of ``stnr_levels``.
    """
    if K < 2:
        raise ArgumentError(f"need at least 2 replicates, got K={K}")
    methods = tuple(m.lower() for m in methods)
    unknown = set(methods) - set(SIM_METHODS)
    if unknown:
        raise ArgumentError(f"unknown methods {sorted(unknown)}; choose from {SIM_METHODS}")
    targets = _targets_for(spec, target)

    X_raw, beta = generate_design(spec)
    base = standardize(X_raw, X_raw @ beta, scale_y=False)
    theta = {"beta": beta * base.standardization.x_scale}
    theta["xbeta"] = base.X @ theta["beta"]
    p = spec.p
    steps = np.arange(1, p + 1)
    _, noise_seq = _streams(spec.seed)
    replicate_seeds = noise_seq.spawn(K)

    reports = []
    for stnr in stnr_levels:
        if empirical_variance:
            sigma = calibrate_sigma(spec.covariance, beta, stnr, X=X_raw)
        else:
            sigma = calibrate_sigma(spec.covariance, beta, stnr)
        sums = {(m, t): np.zeros(p) for m in methods for t in targets}
        m_stars = np.zeros(K, dtype=int)
        clip_counts = np.zeros(p, dtype=int)
        for k in range(K):
            y = draw_response(X_raw, beta, sigma, replicate_seeds[k])
            data = base.with_response(y - y.mean())
            fits = _fit_path(data, methods, p, ridge_penalty)
            m_stars[k] = fits.pop("_m_star")
            clip_counts += fits.pop("_clipped")
            for (method, t), acc in sums.items():
                for j, b in enumerate(fits[method]):
                    est = b if t == "beta" else data.X @ b
                    diff = est - theta[t]
                    acc[j] += diff @ diff
        mse = {key: acc / K for key, acc in sums.items()}
        reports.append(
            SimulationReport(spec.example_id, float(stnr), sigma, K, spec.seed, steps,
                             targets, mse, m_stars, clip_counts, beta)
        )
    return reports


def _fit_path(data, methods, p, ridge_penalty):
    """Coefficient vectors of every method for m = 1..p on one response."""
    out = {}
    clipped = np.zeros(p, dtype=int)
    if not np.any(data.cross):
        zero = [np.zeros(data.p)] * p
        out = {m: zero for m in methods}
        out["_m_star"], out["_clipped"] = 0, clipped
        return out
    state = lanczos(data.gram, data.cross, m_max=p)
    top = state.steps
    if "pls" in methods or "bound" in methods:
        pls_path = [pls_krylov(data, m, state=state) for m in range(1, top + 1)]
        if "pls" in methods:
            out["pls"] = [pls_path[min(m, top) - 1].beta for m in range(1, p + 1)]
        if "bound" in methods:
            # factors for every step in a single recursion; BOUND is PLS at m*
            idx, factors = factor_path(state, data.eig, top)
            path = []
            for m in range(1, top + 1):
                if m == top:
                    path.append(pls_path[-1].beta)
                    continue
                res = bound_from_factors(data, pls_path[m - 1], idx, factors[m - 1])
                path.append(res.beta)
                clipped[m - 1] = res.clipped > 0
            out["bound"] = [path[min(m, top) - 1] for m in range(1, p + 1)]
    if "ols" in methods:
        out["ols"] = [ols(data).beta] * p
    if "ridge" in methods:
        out["ridge"] = [ridge(data, ridge_penalty).beta] * p
    if "pcr" in methods:
        rank = max(data.rank, 1)
        pcr_path = [pcr(data, k).beta for k in range(1, rank + 1)] if data.rank else []
        out["pcr"] = [pcr_path[min(m, rank) - 1] if pcr_path else np.zeros(data.p)
                      for m in range(1, p + 1)]
    out["_m_star"] = state.m_star or top
    out["_clipped"] = clipped
    return out


@dataclass
class CVReport:
    """k-fold cross-validation curves.

    ``errors[method]`` is the fold-averaged mean squared prediction error on
    the raw response scale, one entry per step in ``steps``.
    ``clip_events[f, j]`` is True when BOUND clipped a factor in fold f at
    ``steps[j]``.
    """

    steps: np.ndarray
    folds: int
    seed: int
    errors: dict
    fold_errors: dict
    clip_events: np.ndarray
    fold_of: np.ndarray


def kfold_cv(Xraw, yraw, methods=("pls", "bound"), m_range=None, folds=10, seed=0,
             ridge_penalty=1.0):
    """k-fold cross-validation error of each method as a function of m.

    Folds are a seeded random partition of balanced sizes.  Standardization is
    fitted on the training part of each split only.  Steps above the training
    fold's m* are clamped; PCR uses k = min(m, rank).
    """
    Xraw = np.asarray(Xraw, dtype=float)
    yraw = np.asarray(yraw, dtype=float).reshape(-1)
    n, p = Xraw.shape
    if folds < 2:
        raise ArgumentError(f"need at least 2 folds, got {folds}")
    if folds > n:
        raise ArgumentError(f"{folds} folds requested but only {n} observations")
    methods = tuple(m.lower() for m in methods)
    unknown = set(methods) - set(SIM_METHODS)
    if unknown:
        raise ArgumentError(f"unknown methods {sorted(unknown)}; choose from {SIM_METHODS}")
    steps = np.arange(1, p + 1) if m_range is None else np.asarray(list(m_range), dtype=int)
    if steps.size == 0 or steps.min() < 1:
        raise ArgumentError("step range must contain positive integers")

    perm = np.random.default_rng(np.random.SeedSequence(seed)).permutation(n)
    fold_of = np.empty(n, dtype=int)
    for f, idx in enumerate(np.array_split(perm, folds)):
        fold_of[idx] = f

    fold_errors = {m: np.zeros((folds, steps.size)) for m in methods}
    clip_events = np.zeros((folds, steps.size), dtype=bool)
    for f in range(folds):
        train, test = fold_of != f, fold_of == f
        data = standardize(Xraw[train], yraw[train])
        fits = _fit_path(data, methods, p, ridge_penalty)
        cols = np.minimum(steps, p) - 1
        for method in methods:
            for j, col in enumerate(cols):
                beta = fits[method][col]
                pred = data.standardization.inverse_y(
                    data.standardization.transform_x(Xraw[test]) @ beta
                )
                fold_errors[method][f, j] = np.mean((yraw[test] - pred) ** 2)
        clip_events[f] = fits["_clipped"][cols] > 0
    errors = {m: fe.mean(axis=0) for m, fe in fold_errors.items()}
    return CVReport(steps, folds, seed, errors, fold_errors, clip_events, fold_of)
