import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rmtlab.errors import InputError, SingularResolventError
from rmtlab.linalg import Resolvent, SymMatrix, eig_sym, resolvent_quadratics, singular_values

from conftest import random_symmetric


def negative_count(a, x):
    """Number of eigenvalues below x, from the inertia of an unpivoted LDL^T of A - xI."""
    m = a - x * np.eye(a.shape[0])
    neg = 0
    for k in range(m.shape[0]):
        d = m[k, k]
        if d < 0:
            neg += 1
        if k + 1 < m.shape[0]:
            col = m[k + 1 :, k] / d
            m[k + 1 :, k + 1 :] -= np.outer(col, m[k, k + 1 :])
    return neg


def bisect_eigs(a, tol=1e-13):
    n = a.shape[0]
    radius = np.max(np.sum(np.abs(a), axis=1))
    out = []
    for k in range(n):
        # k-th largest: count of eigenvalues below x equals n - k - 1
        lo, hi = -radius - 1, radius + 1
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if negative_count(a, mid) >= n - k:
                hi = mid
            else:
                lo = mid
        out.append(0.5 * (lo + hi))
    return np.array(out)


class TestEigSym:
    def test_diagonal(self):
        s = eig_sym(np.diag([2.0, -1.0, 5.0]), want_vectors=True)
        np.testing.assert_array_equal(s.eigenvalues, [5.0, 2.0, -1.0])
        np.testing.assert_allclose(np.abs(s.eigenvectors), np.eye(3)[:, [2, 0, 1]])

    def test_two_by_two(self):
        s = eig_sym([[2.0, 1.0], [1.0, 2.0]], want_vectors=True)
        np.testing.assert_allclose(s.eigenvalues, [3.0, 1.0], atol=1e-14)
        np.testing.assert_allclose(s.eigenvectors[:, 0], np.array([1, 1]) / np.sqrt(2), atol=1e-14)

    def test_one_by_one(self):
        np.testing.assert_array_equal(eig_sym([[7.5]]).eigenvalues, [7.5])

    def test_bisection_oracle(self, rng):
        a = random_symmetric(rng, 8)
        np.testing.assert_allclose(eig_sym(a).eigenvalues, bisect_eigs(a), atol=1e-11)

    def test_repeated_eigenvalue(self):
        s = eig_sym(np.eye(4) * 3.0, want_vectors=True)
        np.testing.assert_array_equal(s.eigenvalues, [3.0] * 4)
        np.testing.assert_allclose(s.eigenvectors.T @ s.eigenvectors, np.eye(4), atol=1e-14)

    def test_sign_convention(self, rng):
        a = random_symmetric(rng, 6)
        V = eig_sym(a, want_vectors=True).eigenvectors
        first = V[np.argmax(np.abs(V) > 1e-12, axis=0), np.arange(6)]
        assert np.all(first > 0)

    @pytest.mark.parametrize("bad", [np.zeros((2, 3)), np.zeros((0, 0)), np.array([[np.nan]])])
    def test_rejects_bad_input(self, bad):
        with pytest.raises(InputError):
            eig_sym(bad)

    @settings(max_examples=40, deadline=None)
    @given(n=st.integers(1, 12), seed=st.integers(0, 2**32 - 1))
    def test_residual_and_orthonormality(self, n, seed):
        a = random_symmetric(np.random.default_rng(seed), n)
        s = eig_sym(a, want_vectors=True)
        scale = max(1.0, np.max(np.abs(s.eigenvalues)))
        assert np.all(s.residuals(a) <= 1e-10 * scale * n)
        np.testing.assert_allclose(s.eigenvectors.T @ s.eigenvectors, np.eye(n), atol=1e-12)
        assert np.all(np.diff(s.eigenvalues) <= 0)
        np.testing.assert_allclose(np.sum(s.eigenvalues), np.trace(a), atol=1e-10 * n * scale)


class TestSymMatrix:
    def test_copies_upper_triangle(self):
        m = SymMatrix.from_array([[1.0, 2.0], [5.0, 3.0]])
        np.testing.assert_array_equal(m.entries, [[1.0, 2.0], [2.0, 3.0]])
        assert m.n == 2

    def test_rejects_non_square(self):
        with pytest.raises(InputError):
            SymMatrix.from_array(np.zeros((2, 3)))


class TestSingularValues:
    def test_identity_block(self):
        np.testing.assert_allclose(singular_values(np.eye(3, 5)), [1.0, 1.0, 1.0])

    def test_matches_svd(self, rng):
        m = rng.standard_normal((4, 7))
        np.testing.assert_allclose(singular_values(m), np.linalg.svd(m, compute_uv=False), atol=1e-12)

    def test_zero_rows(self):
        assert singular_values(np.zeros((0, 3))).shape == (0,)


class TestResolvent:
    def test_dense_solve_oracle(self, rng):
        g = random_symmetric(rng, 30) / np.sqrt(30)
        v = rng.standard_normal(30)
        lam = np.max(np.linalg.eigvalsh(g)) + 0.7
        L1, L2, tr1, tr2 = resolvent_quadratics(g, lam, v)
        Rv = np.linalg.solve(g - lam * np.eye(30), v)
        np.testing.assert_allclose(L1, v @ Rv, rtol=1e-12)
        np.testing.assert_allclose(L2, Rv @ Rv, rtol=1e-12)
        Rinv = np.linalg.inv(g - lam * np.eye(30))
        np.testing.assert_allclose(tr1, np.trace(Rinv) / 30, rtol=1e-12)
        np.testing.assert_allclose(tr2, np.trace(Rinv @ Rinv) / 30, rtol=1e-12)

    def test_diagonal_case(self):
        L1, L2, tr1, tr2 = resolvent_quadratics(np.diag([0.0, 1.0]), 3.0, np.array([1.0, 1.0]))
        np.testing.assert_allclose([L1, L2, tr1, tr2], [-1 / 3 - 1 / 2, 1 / 9 + 1 / 4, (-1 / 3 - 1 / 2) / 2, (1 / 9 + 1 / 4) / 2])

    def test_singular_point(self):
        with pytest.raises(SingularResolventError):
            Resolvent(np.diag([0.0, 1.0]), 1.0)

    def test_vectorised_quadratics(self, rng):
        g = random_symmetric(rng, 10)
        R = Resolvent(g, 20.0)
        V = rng.standard_normal((10, 4))
        L1, L2 = R.quadratics(V)
        for j in range(4):
            a, b = R.quadratics(V[:, j])
            np.testing.assert_allclose([L1[j], L2[j]], [a, b], rtol=1e-13)

    def test_l2_is_nonnegative_and_l1_sign(self, rng):
        g = random_symmetric(rng, 10)
        top = np.max(np.linalg.eigvalsh(g))
        R = Resolvent(g, top + 1.0)
        L1, L2 = R.quadratics(rng.standard_normal(10))
        assert L2 > 0 and L1 < 0


class TestSmallCases:
    def test_diag_unsorted(self):
        np.testing.assert_array_equal(eig_sym(np.diag([3.0, 1.0, 2.0])).eigenvalues, [3.0, 2.0, 1.0])

    def test_zero_rectangular(self):
        np.testing.assert_array_equal(singular_values(np.zeros((3, 5))), [0.0, 0.0, 0.0])

    def test_random_rectangular(self, rng):
        m = rng.standard_normal((4, 6))
        np.testing.assert_allclose(singular_values(m), np.sqrt(np.clip(eig_sym(m @ m.T).eigenvalues, 0, None)), atol=1e-10)

    def test_zero_block_resolvent(self, rng):
        v = rng.standard_normal(5)
        L1, L2, _, _ = resolvent_quadratics(np.zeros((5, 5)), -1.0, v)
        np.testing.assert_allclose([L1, L2], [v @ v, v @ v], rtol=1e-14)

    def test_diag_resolvent_at_zero(self):
        L1, L2, _, _ = resolvent_quadratics(np.diag([1.0, 2.0]), 0.0, np.array([1.0, 1.0]))
        np.testing.assert_allclose([L1, L2], [1.5, 1.25], rtol=1e-14)
