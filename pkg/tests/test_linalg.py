import numpy as np
import pytest

from plsshrink.errors import ArgumentError, DomainError, NotPositiveDefiniteError
from plsshrink.linalg import (
    Tridiagonal,
    as_symmetric,
    charpoly_eval,
    charpoly_scaled,
    cholesky,
    pi_polynomial,
    poly_generalized_inverse,
    shrinkage_polynomial,
    sturm_count,
    svd_thin,
    sym_eigen,
    tridiag_eigenvalues,
)


def dense_det_roots(B, n_grid=4000):
    """Roots of det(B - t I) by sign changes on a grid plus bisection."""
    lo, hi = -np.abs(B).sum() - 1, np.abs(B).sum() + 1
    f = lambda t: np.linalg.det(B - t * np.eye(B.shape[0]))
    grid = np.linspace(lo, hi, n_grid)
    vals = np.array([f(t) for t in grid])
    roots = []
    for a, b, fa, fb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
        if fa == 0:
            roots.append(a)
        elif fa * fb < 0:
            for _ in range(100):
                mid = 0.5 * (a + b)
                if f(mid) * fa <= 0:
                    b = mid
                else:
                    a, fa = mid, f(mid)
            roots.append(0.5 * (a + b))
    return np.sort(roots)[::-1]


def random_tridiagonal(rng, m):
    return Tridiagonal(rng.uniform(-2, 4, m), rng.uniform(0.2, 1.5, m - 1))


class TestSymEigen:
    def test_identity(self):
        eig = sym_eigen(np.eye(3))
        np.testing.assert_allclose(eig.values, [1, 1, 1])
        np.testing.assert_allclose(eig.vectors.T @ eig.vectors, np.eye(3), atol=1e-14)

    def test_diagonal(self):
        eig = sym_eigen(np.diag([2.0, 0.0]))
        np.testing.assert_array_equal(eig.values, [2.0, 0.0])
        np.testing.assert_allclose(np.abs(eig.vectors), np.eye(2))

    def test_matches_determinant_roots(self):
        rng = np.random.default_rng(1)
        M = rng.standard_normal((6, 6))
        B = M + M.T
        np.testing.assert_allclose(sym_eigen(B).values, dense_det_roots(B), atol=1e-8)

    def test_reconstruct(self):
        rng = np.random.default_rng(2)
        M = rng.standard_normal((5, 5))
        B = M @ M.T
        np.testing.assert_allclose(sym_eigen(B).reconstruct(), B, atol=1e-12)

    def test_rejects_asymmetric(self):
        with pytest.raises(ArgumentError, match="not symmetric"):
            sym_eigen(np.array([[1.0, 2.0], [0.0, 1.0]]))

    def test_rejects_nonsquare(self):
        with pytest.raises(ArgumentError):
            as_symmetric(np.ones((2, 3)))


class TestSvdThin:
    def test_identity(self):
        s = svd_thin(np.eye(2))
        np.testing.assert_allclose(s.singular_values, [1, 1])
        assert s.rank == 2

    def test_diagonal_rank_one(self):
        s = svd_thin(np.array([[3.0, 0.0], [0.0, 0.0]]))
        np.testing.assert_allclose(s.singular_values, [3, 0])
        assert s.rank == 1

    def test_gram_consistency(self):
        rng = np.random.default_rng(3)
        X = rng.standard_normal((8, 3))
        s = svd_thin(X)
        lam = s.singular_values**2
        np.testing.assert_allclose(X.T @ X, (s.right * lam) @ s.right.T, atol=1e-8)
        np.testing.assert_allclose(s.reconstruct(), X, atol=1e-10)
        np.testing.assert_allclose(s.left.T @ s.left, np.eye(3), atol=1e-12)

    def test_matches_numpy(self):
        rng = np.random.default_rng(4)
        X = rng.standard_normal((12, 5))
        np.testing.assert_allclose(svd_thin(X).singular_values,
                                   np.linalg.svd(X, compute_uv=False), rtol=1e-10)

    def test_wide_matrix_rank(self):
        rng = np.random.default_rng(5)
        X = rng.standard_normal((4, 9))
        s = svd_thin(X)
        assert s.rank == 4
        np.testing.assert_allclose(s.reconstruct(), X, atol=1e-10)


class TestPolynomials:
    def test_pi_times_x_is_shrinkage(self):
        roots = np.array([3.0, 1.5, 0.25])
        x = np.linspace(-1, 4, 11)
        np.testing.assert_allclose(x * pi_polynomial(x, roots), shrinkage_polynomial(x, roots),
                                   atol=1e-12)

    def test_pi_at_zero_is_reciprocal_sum(self):
        roots = np.array([2.0, 4.0, 8.0])
        assert pi_polynomial(0.0, roots) == pytest.approx(0.5 + 0.25 + 0.125)

    def test_shrinkage_is_one_at_roots(self):
        roots = np.array([5.0, 2.0, 0.5])
        np.testing.assert_allclose(shrinkage_polynomial(roots, roots), 1.0)
        assert shrinkage_polynomial(0.0, roots) == 0.0

    def test_empty_roots(self):
        assert shrinkage_polynomial(1.0, []) == 0.0
        assert pi_polynomial(1.0, []) == 0.0


class TestPolyGeneralizedInverse:
    def test_identity(self):
        np.testing.assert_allclose(poly_generalized_inverse(np.eye(2)), np.eye(2), atol=1e-15)

    def test_diagonal(self):
        np.testing.assert_allclose(poly_generalized_inverse(np.diag([1.0, 2.0])),
                                   np.diag([1.0, 0.5]), atol=1e-15)

    def test_singular_is_not_moore_penrose(self):
        B = np.diag([2.0, 0.0])
        G = poly_generalized_inverse(B)
        np.testing.assert_allclose(G, 0.5 * np.eye(2), atol=1e-15)
        np.testing.assert_allclose(B @ G @ B, B, atol=1e-15)
        assert not np.allclose(G @ B @ G, G)
        assert not np.allclose(G, np.linalg.pinv(B))

    def test_penrose_conditions_1_3_4(self):
        rng = np.random.default_rng(6)
        M = rng.standard_normal((6, 3))
        B = M @ M.T
        G = poly_generalized_inverse(B)
        np.testing.assert_allclose(B @ G @ B, B, atol=1e-9)
        np.testing.assert_allclose(B @ G, (B @ G).T, atol=1e-9)
        np.testing.assert_allclose(G @ B, (G @ B).T, atol=1e-9)

    def test_nonsingular_matches_inverse(self):
        rng = np.random.default_rng(7)
        M = rng.standard_normal((5, 5))
        B = M @ M.T + np.eye(5)
        np.testing.assert_allclose(poly_generalized_inverse(B), np.linalg.inv(B), rtol=1e-8,
                                   atol=1e-10)

    def test_rejects_indefinite(self):
        with pytest.raises(DomainError, match="not positive semidefinite"):
            poly_generalized_inverse(np.diag([1.0, -1.0]))


class TestCharpoly:
    def test_one_by_one_root(self):
        assert charpoly_eval(Tridiagonal(np.array([1.0]), np.array([])), 1.0) == 0.0

    def test_singular_example(self):
        T = Tridiagonal(np.array([1.0, 1.0]), np.array([1.0]))
        assert charpoly_eval(T, 0.0) == 0.0

    def test_matches_dense_determinant(self):
        rng = np.random.default_rng(8)
        T = random_tridiagonal(rng, 5)
        D = T.to_dense()
        for lam in rng.uniform(-3, 5, 20):
            expected = np.linalg.det(D - lam * np.eye(5))
            assert charpoly_eval(T, lam) == pytest.approx(expected, rel=1e-10, abs=1e-12)

    def test_scaled_survives_overflow(self):
        m = 400
        T = Tridiagonal(np.full(m, 1e3), np.full(m - 1, 1.0))
        mant, exp = charpoly_scaled(T, 0.0)
        assert mant > 0 and exp > 1024
        assert charpoly_eval(T, 0.0) == np.inf

    def test_sturm_count(self):
        T = Tridiagonal(np.array([1.0, 1.0]), np.array([1.0]))
        np.testing.assert_array_equal(sturm_count(T, np.array([-1.0, 1.0, 3.0])), [0, 1, 2])


class TestTridiagEigenvalues:
    def test_singular_two_by_two(self):
        T = Tridiagonal(np.array([1.0, 1.0]), np.array([1.0]))
        np.testing.assert_allclose(tridiag_eigenvalues(T), [2.0, 0.0], atol=1e-14)

    def test_one_by_one(self):
        assert tridiag_eigenvalues(Tridiagonal(np.array([3.0]), np.array([]))) == [3.0]

    def test_matches_dense(self):
        rng = np.random.default_rng(9)
        T = random_tridiagonal(rng, 8)
        np.testing.assert_allclose(tridiag_eigenvalues(T), sym_eigen(T.to_dense()).values,
                                   atol=1e-8)

    def test_reduced_matrix(self):
        T = Tridiagonal(np.array([2.0, 5.0, 1.0]), np.array([0.0, 0.0]))
        np.testing.assert_allclose(tridiag_eigenvalues(T), [5.0, 2.0, 1.0], atol=1e-13)

    def test_tridiagonal_validation(self):
        with pytest.raises(ArgumentError):
            Tridiagonal(np.ones(3), np.ones(3))
        T = Tridiagonal(np.ones(3), np.array([1.0, 0.0]))
        assert not T.is_unreduced()
        assert T.leading(2).order == 2


class TestCholesky:
    def test_identity(self):
        np.testing.assert_array_equal(cholesky(np.eye(3)), np.eye(3))

    def test_scalar(self):
        np.testing.assert_array_equal(cholesky(np.array([[4.0]])), [[2.0]])

    def test_equicorrelated_reconstruction(self):
        S = np.full((10, 10), 1.0)
        np.fill_diagonal(S, 1.5)
        L = cholesky(S)
        np.testing.assert_allclose(L @ L.T, S, atol=1e-10)
        assert np.allclose(L, np.tril(L))

    def test_names_pivot(self):
        S = np.array([[1.0, 2.0], [2.0, 1.0]])
        with pytest.raises(NotPositiveDefiniteError, match="pivot 1") as info:
            cholesky(S)
        assert info.value.pivot_index == 1
        assert info.value.pivot_value == pytest.approx(-3.0)
