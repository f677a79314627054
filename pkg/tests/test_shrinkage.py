import numpy as np
import pytest

from plsshrink.errors import ArgumentError, DomainError
from plsshrink.estimators import RegressionData, ols, pls_krylov, ridge, standardize
from plsshrink.krylov import lanczos
from plsshrink.linalg import sym_eigen
from plsshrink.shrinkage import (
    _spectral_g,
    bound_estimator,
    bound_from_factors,
    clip,
    clip_factors,
    clipping_variance_example,
    factor_path,
    linear_shrinkage_mse,
    shrinkage_factors,
    sign_decomposition,
    smallest_eigenvalue_bound,
)

FIXTURE_A = np.diag([2.0, 0.0])
FIXTURE_B = np.array([1.0, 1.0])


@pytest.fixture
def fixture_state():
    return lanczos(FIXTURE_A, FIXTURE_B), sym_eigen(FIXTURE_A)


@pytest.fixture
def instance():
    rng = np.random.default_rng(21)
    X = rng.standard_normal((25, 8))
    y = X @ rng.standard_normal(8) + 0.5 * rng.standard_normal(25)
    d = standardize(X, y, scale_y=False)
    return d, lanczos(d.gram, d.cross)


class TestFactors:
    def test_fixture_first_step(self, fixture_state):
        st, eig = fixture_state
        prof = shrinkage_factors(st, eig, 1)
        np.testing.assert_allclose(prof.ritz, [1.0], atol=1e-15)
        np.testing.assert_allclose(prof.factors, [2.0, 0.0], atol=1e-12)
        assert prof.factor(0.0) == 0.0

    def test_fixture_second_step(self, fixture_state):
        st, eig = fixture_state
        prof = shrinkage_factors(st, eig, 2)
        np.testing.assert_array_equal(prof.ritz_nonzero, [True, False])
        np.testing.assert_allclose(prof.roots, [2.0], atol=1e-12)
        np.testing.assert_allclose(prof.factors, [1.0, 0.0], atol=1e-12)

    def test_terminal_factors_are_one(self, instance):
        d, st = instance
        prof = shrinkage_factors(st, d.eig, st.m_star)
        np.testing.assert_allclose(prof.factors[: d.rank], 1.0, atol=1e-8)

    def test_roots_and_origin(self, instance):
        d, st = instance
        weights = (d.eig.vectors.T @ d.cross) ** 2
        for m in range(1, st.m_star + 1):
            prof = shrinkage_factors(st, d.eig, m)
            assert prof.factor(0.0) == 0.0
            # evaluate 1 - f at the Ritz values through the spectral recursion
            g = _spectral_g(d.eig.values, weights, prof.roots, [m])[0]
            np.testing.assert_allclose(g, 0.0, atol=1e-8)

    def test_step_out_of_range(self, fixture_state):
        st, eig = fixture_state
        with pytest.raises(ArgumentError):
            shrinkage_factors(st, eig, 3)

    def test_path_matches_single_steps(self, instance):
        d, st = instance
        idx, path = factor_path(st, d.eig)
        for m in range(1, st.m_star + 1):
            prof = shrinkage_factors(st, d.eig, m)
            np.testing.assert_array_equal(prof.eigen_index, idx)
            np.testing.assert_allclose(path[m - 1], prof.factors, rtol=0, atol=1e-14)

    def test_product_formula_agrees_away_from_m_star(self, instance):
        d, st = instance
        prof = shrinkage_factors(st, d.eig, 2)
        np.testing.assert_allclose(prof.factor(prof.lambdas), prof.factors, atol=1e-9)


class TestSignDecomposition:
    def test_fixture_first_step(self, fixture_state):
        st, eig = fixture_state
        dec = sign_decomposition(shrinkage_factors(st, eig, 1))
        np.testing.assert_allclose(dec.breakpoints, [0.0, 1.0, 2.0], atol=1e-15)
        np.testing.assert_array_equal(dec.interval_signs, [-1, 1])
        np.testing.assert_array_equal(dec.assignment, [2, 1])
        assert dec.consistent

    def test_alternation_at_midpoints(self, instance):
        d, st = instance
        prof = shrinkage_factors(st, d.eig, 3)
        dec = sign_decomposition(prof)
        assert dec.consistent
        bp = dec.breakpoints
        mids = 0.5 * (bp[:-1] + bp[1:])
        signs = np.sign(prof.factor(mids) - 1.0)
        np.testing.assert_array_equal(signs, dec.interval_signs)
        assert np.all(signs[1:] == -signs[:-1])

    def test_terminal_eigenvalues_are_breakpoints(self, instance):
        d, st = instance
        prof = shrinkage_factors(st, d.eig, st.m_star)
        dec = sign_decomposition(prof)
        assert dec.consistent
        for lam in prof.lambdas[: d.rank]:
            assert np.min(np.abs(prof.roots - lam)) < 1e-8 * lam

    def test_repeated_ritz_values(self):
        from plsshrink.shrinkage import ShrinkageProfile

        prof = ShrinkageProfile(2, np.array([1.0, 1.0]), np.array([True, True]),
                                np.array([2.0, 0.5]), np.array([0, 1]), np.zeros(2))
        with pytest.raises(ArgumentError, match="reduced"):
            sign_decomposition(prof)


class TestSmallestEigenvalue:
    def test_fixture(self, fixture_state):
        st, eig = fixture_state
        ok, value = smallest_eigenvalue_bound(shrinkage_factors(st, eig, 1))
        assert ok and value == 0.0

    def test_first_step_formula(self, instance):
        d, st = instance
        prof = shrinkage_factors(st, d.eig, 1)
        ok, value = smallest_eigenvalue_bound(prof)
        assert ok
        assert value == pytest.approx(d.eig.values[-1] / st.tri.diag[0], rel=1e-10)

    def test_all_steps_below_m_star(self, instance):
        d, st = instance
        for m in range(1, st.m_star):
            assert smallest_eigenvalue_bound(shrinkage_factors(st, d.eig, m))[0]


class TestClipping:
    def test_clip_values(self):
        np.testing.assert_array_equal(clip([2.0, 0.5, -1.2]), [1.0, 0.5, -1.0])

    def test_idempotent(self, instance):
        d, st = instance
        cp = clip_factors(shrinkage_factors(st, d.eig, 2))
        np.testing.assert_array_equal(clip(cp.clipped), cp.clipped)
        assert cp.n_clipped == int(np.sum(np.abs(cp.profile.factors) > 1))

    def test_bound_terminal_is_ols(self, instance):
        d, st = instance
        np.testing.assert_allclose(bound_estimator(d, st.m_star, state=st).beta, ols(d).beta,
                                   atol=1e-8)

    def test_bound_without_clipping_is_pls(self, instance):
        d, st = instance
        pls = pls_krylov(d, 2, state=st)
        idx = np.arange(d.p)
        res = bound_from_factors(d, pls, idx, np.linspace(-1.0, 1.0, d.p))
        assert res.clipped == 0
        assert res.beta is pls.beta

    def test_below_m_star_some_factor_exceeds_one(self, instance):
        d, st = instance
        for m in range(1, st.m_star):
            prof = shrinkage_factors(st, d.eig, m)
            assert np.max(prof.factors) > 1.0
            assert bound_estimator(d, m, state=st).clipped >= 1

    def test_bound_clips_first_step(self):
        X = np.diag([np.sqrt(2.0), 0.1])
        d = RegressionData.from_centered(X, np.array([1.0, 10.0]))
        st = lanczos(d.gram, d.cross)
        prof = shrinkage_factors(st, d.eig, 1)
        assert prof.factors[0] > 1
        res = bound_estimator(d, 1, state=st)
        assert res.clipped == 1
        c = np.array([1.0 / np.sqrt(2.0), 100.0])  # OLS coefficients
        expected = clip(prof.factors) * c
        np.testing.assert_allclose(res.beta, expected, rtol=1e-10)

    def test_clipping_can_raise_variance(self):
        exact, clipped = clipping_variance_example(seed=3)
        assert exact == 0.0
        assert clipped > 0.0


class TestLinearShrinkageMSE:
    def test_unbiased(self):
        lam = np.array([4.0, 2.0, 0.5])
        mb, my = linear_shrinkage_mse(np.ones(3), lam, np.array([1.0, -1.0, 2.0]), 2.0)
        assert mb == pytest.approx(2.0 * np.sum(1 / lam))
        assert my == pytest.approx(2.0 * 3)

    def test_null_estimator(self):
        comps = np.array([1.0, -2.0])
        mb, my = linear_shrinkage_mse(np.zeros(2), np.array([3.0, 1.0]), comps, 1.0)
        assert mb == pytest.approx(5.0)
        assert my == pytest.approx(3.0 + 4.0)

    def test_ridge_hand_value(self):
        lam = np.array([2.0, 1.0])
        f = lam / (lam + 1.0)
        mb, _ = linear_shrinkage_mse(f, lam, np.ones(2), 1.0)
        # (1/9 + 1/4) + (4/18 + 1/4)
        assert mb == pytest.approx(5.0 / 6.0, rel=1e-14)

    def test_ridge_monte_carlo(self):
        X = np.diag([np.sqrt(2.0), 1.0])
        beta = np.array([1.0, 1.0])
        rng = np.random.default_rng(5)
        errs_b, errs_y = [], []
        base = RegressionData.from_centered(X, X @ beta)
        for _ in range(20000):
            d = base.with_response(X @ beta + rng.standard_normal(2))
            b = ridge(d, 1.0).beta
            errs_b.append(np.sum((b - beta) ** 2))
            errs_y.append(np.sum((X @ (b - beta)) ** 2))
        lam = np.array([2.0, 1.0])
        mb, my = linear_shrinkage_mse(lam / (lam + 1), lam, beta, 1.0)
        assert np.mean(errs_b) == pytest.approx(mb, rel=0.03)
        assert np.mean(errs_y) == pytest.approx(my, rel=0.03)

    def test_domain_error(self):
        with pytest.raises(DomainError):
            linear_shrinkage_mse(np.ones(2), np.array([1.0, 0.0]), np.ones(2), 1.0)

    def test_length_mismatch(self):
        with pytest.raises(ArgumentError):
            linear_shrinkage_mse(np.ones(2), np.ones(3), np.ones(2), 1.0)
