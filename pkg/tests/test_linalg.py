import numpy as np
import pytest

from covalign import linalg
from covalign.errors import NotPositiveDefinite, NotSymmetric

from conftest import random_pd


class TestPermApply:
    def test_identity(self):
        a = np.array([[1.0, 2.0], [2.0, 3.0]])
        np.testing.assert_array_equal(linalg.perm_apply(a, np.array([0, 1])), a)

    def test_swap_indices(self):
        # (A^pi)_{00} = A_{pi(0),pi(0)} = A_11
        a = np.array([[1.0, 2.0], [2.0, 3.0]])
        out = linalg.perm_apply(a, np.array([1, 0]))
        np.testing.assert_array_equal(out, np.array([[3.0, 2.0], [2.0, 1.0]]))

    def test_composition(self, rng):
        a = random_pd(5, rng)
        for _ in range(20):
            p1 = rng.permutation(5)
            p2 = rng.permutation(5)
            lhs = linalg.perm_apply(linalg.perm_apply(a, p1), p2)
            rhs = linalg.perm_apply(a, linalg.perm_compose(p1, p2))
            np.testing.assert_array_equal(lhs, rhs)

    def test_matches_matrix_product(self, rng):
        # A^pi == P A P^T with P_ij = 1{pi(i)=j}
        for d in range(2, 9):
            a = random_pd(d, rng)
            p = rng.permutation(d)
            mat = linalg.perm_matrix(p)
            np.testing.assert_allclose(
                linalg.perm_apply(a, p), mat @ a @ mat.T, rtol=0, atol=0
            )

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            linalg.perm_apply(np.eye(3), np.array([0, 1]))


class TestPermOps:
    def test_invert_identity(self):
        np.testing.assert_array_equal(
            linalg.perm_invert(np.array([0, 1, 2])), np.array([0, 1, 2])
        )

    def test_invert_cycle(self):
        np.testing.assert_array_equal(
            linalg.perm_invert(np.array([1, 2, 0])), np.array([2, 0, 1])
        )

    def test_compose_with_inverse(self, rng):
        for _ in range(100):
            d = int(rng.integers(1, 9))
            p = rng.permutation(d)
            np.testing.assert_array_equal(
                linalg.perm_compose(p, linalg.perm_invert(p)), np.arange(d)
            )

    def test_compose_convention(self):
        # (p1 o p2)(i) = p1(p2(i))
        p1 = np.array([1, 2, 0])
        p2 = np.array([0, 2, 1])
        np.testing.assert_array_equal(
            linalg.perm_compose(p1, p2), np.array([1, 0, 2])
        )

    def test_matrix_antihomomorphism(self, rng):
        # P_{p1} P_{p2} = P_{p2 o p1} under P_ij = 1{p(i)=j}
        for _ in range(20):
            d = int(rng.integers(2, 8))
            p1, p2 = rng.permutation(d), rng.permutation(d)
            lhs = linalg.perm_matrix(p1) @ linalg.perm_matrix(p2)
            rhs = linalg.perm_matrix(linalg.perm_compose(p2, p1))
            np.testing.assert_array_equal(lhs, rhs)

    def test_rejects_non_permutation(self):
        with pytest.raises(ValueError):
            linalg.perm_invert(np.array([0, 0, 1]))
        assert not linalg.is_permutation(np.array([0, 2]))
        assert linalg.is_permutation(np.array([2, 0, 1]))


class TestCholesky:
    def test_identity(self):
        np.testing.assert_array_equal(linalg.cholesky(np.eye(4)), np.eye(4))

    def test_hand_case(self):
        a = np.array([[4.0, 2.0], [2.0, 2.0]])
        l = linalg.cholesky(a)
        np.testing.assert_allclose(l, np.array([[2.0, 0.0], [1.0, 1.0]]))

    def test_singular_raises(self):
        with pytest.raises(NotPositiveDefinite):
            linalg.cholesky(np.array([[1.0, 1.0], [1.0, 1.0]]))

    def test_factorization_residual(self, rng):
        for d in (2, 5, 8):
            a = random_pd(d, rng)
            l = linalg.cholesky(a)
            assert np.all(np.triu(l, 1) == 0)
            assert np.all(np.diag(l) > 0)
            resid = np.linalg.norm(l @ l.T - a) / np.linalg.norm(a)
            assert resid <= 1e-10


class TestEigen:
    def test_diagonal_ascending(self):
        w, v = linalg.sym_eigen(np.diag([3.0, 1.0]))
        np.testing.assert_allclose(w, [1.0, 3.0])
        # axis vectors up to sign
        assert abs(abs(v[1, 0]) - 1.0) < 1e-12
        assert abs(abs(v[0, 1]) - 1.0) < 1e-12

    def test_identity_all_ones(self):
        w, _ = linalg.sym_eigen(np.eye(5))
        np.testing.assert_allclose(w, np.ones(5))

    def test_reconstruction(self, rng):
        a = random_pd(6, rng)
        w, v = linalg.sym_eigen(a)
        np.testing.assert_allclose(v @ np.diag(w) @ v.T, a, atol=1e-10)
        assert np.linalg.norm(v.T @ v - np.eye(6)) <= 1e-10 * 6


class TestInverse:
    def test_diagonal(self):
        np.testing.assert_allclose(
            linalg.sym_inverse(np.diag([2.0, 4.0])), np.diag([0.5, 0.25])
        )

    def test_identity(self):
        np.testing.assert_allclose(linalg.sym_inverse(np.eye(3)), np.eye(3))

    def test_inverse_residual(self, rng):
        for d in (2, 4, 8):
            a = random_pd(d, rng)
            inv = linalg.sym_inverse(a)
            assert np.linalg.norm(a @ inv - np.eye(d)) <= 1e-8 * d

    def test_inv_sqrt_diagonal(self):
        np.testing.assert_allclose(
            linalg.sym_inv_sqrt(np.diag([4.0, 9.0])), np.diag([0.5, 1.0 / 3.0])
        )

    def test_inv_sqrt_whitens(self, rng):
        a = random_pd(5, rng)
        r = linalg.sym_inv_sqrt(a)
        assert np.linalg.norm(r @ a @ r - np.eye(5)) <= 1e-8 * 5

    def test_singular_raises(self):
        with pytest.raises(NotPositiveDefinite):
            linalg.sym_inverse(np.array([[1.0, 1.0], [1.0, 1.0]]))

    def test_inverse_commutes_with_relabeling(self, rng):
        # (A^pi)^{-1} == (A^{-1})^pi
        for _ in range(10):
            d = int(rng.integers(2, 9))
            a = random_pd(d, rng)
            p = rng.permutation(d)
            lhs = linalg.sym_inverse(linalg.perm_apply(a, p))
            rhs = linalg.perm_apply(linalg.sym_inverse(a), p)
            np.testing.assert_allclose(lhs, rhs, atol=1e-9)


class TestInnerNorm:
    def test_identity_inner(self):
        assert linalg.inner(np.eye(2), np.eye(2)) == 2.0

    def test_zero(self):
        assert linalg.inner(np.eye(3), np.zeros((3, 3))) == 0.0

    def test_hand_case(self):
        a = np.array([[1.0, 2.0], [2.0, 3.0]])
        b = np.array([[0.0, 1.0], [1.0, 0.0]])
        assert linalg.inner(a, b) == 4.0

    def test_norm_consistency(self, rng):
        a = random_pd(4, rng)
        assert linalg.frobenius_norm(a) == pytest.approx(
            np.sqrt(linalg.inner(a, a)), rel=1e-15
        )
        assert linalg.frobenius_norm(a) >= 0

    def test_norm_relabeling_invariance(self, rng):
        # same multiset of entries, equal norm up to summation reorder
        for _ in range(10):
            a = random_pd(7, rng)
            p = rng.permutation(7)
            assert linalg.frobenius_norm(linalg.perm_apply(a, p)) == pytest.approx(
                linalg.frobenius_norm(a), rel=1e-12
            )


class TestAsSymmetric:
    def test_accepts_roundoff_asymmetry(self, rng):
        a = random_pd(4, rng)
        a[0, 1] += 1e-12
        out = linalg.as_symmetric(a)
        np.testing.assert_array_equal(out, out.T)

    def test_rejects_gross_asymmetry(self):
        a = np.eye(3)
        a[0, 1] = 0.5
        with pytest.raises(NotSymmetric):
            linalg.as_symmetric(a)
