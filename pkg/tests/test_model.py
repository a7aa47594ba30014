import itertools

import numpy as np
import pytest

from covalign import linalg, model
from covalign.errors import NotPositiveDefinite

from conftest import random_pd


class TestSampleGaussian:
    def test_zero_sigma(self, rng):
        data = model.sample_gaussian(np.zeros((3, 3)), 10, rng)
        np.testing.assert_array_equal(data, np.zeros((3, 10)))

    def test_marginal_variance(self):
        rng = np.random.default_rng(7)
        data = model.sample_gaussian(np.eye(4), 100_000, rng)
        var = (data**2).mean(axis=1)
        assert np.all(var >= 0.97) and np.all(var <= 1.03)

    def test_seed_determinism(self):
        a = model.sample_gaussian(np.eye(3), 50, np.random.default_rng(5))
        b = model.sample_gaussian(np.eye(3), 50, np.random.default_rng(5))
        np.testing.assert_array_equal(a, b)

    def test_semidefinite_jitter_path(self, rng):
        # rank-1 PSD factor; columns must stay near span{(1,1)}
        sigma = np.array([[1.0, 1.0], [1.0, 1.0]])
        data = model.sample_gaussian(sigma, 100, rng)
        assert np.abs(data[0] - data[1]).max() < 1e-4

    def test_negative_definite_raises(self, rng):
        with pytest.raises(NotPositiveDefinite):
            model.sample_gaussian(np.diag([1.0, -1.0]), 5, rng)


class TestSampleCovariance:
    def test_single_column(self):
        out = model.sample_covariance(np.array([[1.0], [2.0]]))
        np.testing.assert_array_equal(out, np.array([[1.0, 2.0], [2.0, 4.0]]))

    def test_zero_data(self):
        np.testing.assert_array_equal(
            model.sample_covariance(np.zeros((3, 7))), np.zeros((3, 3))
        )

    def test_basis_columns(self):
        out = model.sample_covariance(np.eye(2))
        np.testing.assert_array_equal(out, np.diag([0.5, 0.5]))

    def test_no_centering_by_default(self):
        # constant data has zero centered covariance but not raw
        data = np.ones((2, 4))
        raw = model.sample_covariance(data)
        centered = model.sample_covariance(data, center=True)
        np.testing.assert_array_equal(raw, np.ones((2, 2)))
        np.testing.assert_array_equal(centered, np.zeros((2, 2)))


class TestQapObjective:
    def test_identity(self):
        assert model.qap_objective(np.eye(2), np.eye(2), np.array([0, 1])) == 2.0

    def test_von_neumann_floor(self, rng):
        # <Sigma^pi_inv, Sigma> is minimized at d over all relabelings
        d = 4
        sigma = random_pd(d, rng)
        inv = linalg.sym_inverse(sigma)
        vals = [
            model.qap_objective(inv, sigma, np.array(p))
            for p in itertools.permutations(range(d))
        ]
        ident = model.qap_objective(inv, sigma, np.arange(d))
        assert ident == pytest.approx(d, abs=1e-9)
        assert min(vals) >= d - 1e-9

    def test_hand_case(self):
        m = np.array([[1.0, 2.0], [2.0, 3.0]])
        b = np.array([[0.0, 1.0], [1.0, 0.0]])
        assert model.qap_objective(m, b, np.array([1, 0])) == 4.0

    def test_matches_inner_of_relabeled(self, rng):
        for _ in range(10):
            d = int(rng.integers(2, 8))
            m, b = random_pd(d, rng), random_pd(d, rng)
            p = rng.permutation(d)
            assert model.qap_objective(m, b, p) == pytest.approx(
                linalg.inner(linalg.perm_apply(m, p), b), rel=1e-13
            )


class TestFrobLoss:
    def test_zero_at_truth(self, rng):
        sigma = random_pd(5, rng)
        p = rng.permutation(5)
        assert model.frob_loss(sigma, p, p) == 0.0

    def test_identity_sigma_unidentifiable(self, rng):
        p1, p2 = rng.permutation(6), rng.permutation(6)
        assert model.frob_loss(np.eye(6), p1, p2) == 0.0

    def test_hand_case(self):
        assert model.frob_loss(
            np.diag([1.0, 2.0]), np.array([1, 0]), np.array([0, 1])
        ) == pytest.approx(np.sqrt(2.0))

    def test_pseudo_distance_axioms(self, rng):
        sigma = random_pd(4, rng)
        perms = [rng.permutation(4) for _ in range(3)]
        a, b, c = perms
        assert model.frob_loss(sigma, a, b) == model.frob_loss(sigma, b, a)
        assert (
            model.frob_loss(sigma, a, c)
            <= model.frob_loss(sigma, a, b) + model.frob_loss(sigma, b, c) + 1e-12
        )

    def test_matches_explicit_matrix_form(self, rng):
        sigma = random_pd(5, rng)
        p1, p2 = rng.permutation(5), rng.permutation(5)
        m1, m2 = linalg.perm_matrix(p1), linalg.perm_matrix(p2)
        direct = np.linalg.norm(m1 @ sigma @ m1.T - m2 @ sigma @ m2.T)
        assert model.frob_loss(sigma, p1, p2) == pytest.approx(direct, rel=1e-12)


class TestNfLoss:
    def test_zero_at_truth(self, rng):
        sigma = random_pd(4, rng)
        p = rng.permutation(4)
        assert model.nf_loss(sigma, p, p) == 0.0

    def test_scaled_identity(self, rng):
        p1, p2 = rng.permutation(5), rng.permutation(5)
        assert model.nf_loss(3.7 * np.eye(5), p1, p2) == pytest.approx(0.0, abs=1e-12)

    def test_hand_case(self):
        # delta = diag(3,-3); whitening by diag(1, 1/2) on both sides
        val = model.nf_loss(np.diag([1.0, 4.0]), np.array([1, 0]), np.array([0, 1]))
        assert val == pytest.approx(np.sqrt(9.0 + 9.0 / 16.0), rel=1e-12)

    def test_singular_truth_raises(self):
        sigma = np.array([[1.0, 1.0], [1.0, 1.0]])
        with pytest.raises(NotPositiveDefinite):
            model.nf_loss(sigma, np.array([1, 0]), np.array([0, 1]))


class TestHammingLoss:
    def test_identical(self):
        assert model.hamming_loss(np.array([2, 0, 1]), np.array([2, 0, 1])) == 0

    def test_transposition(self):
        assert model.hamming_loss(np.array([0, 1, 2]), np.array([1, 0, 2])) == 2

    def test_three_cycle(self):
        assert model.hamming_loss(np.array([0, 1, 2]), np.array([1, 2, 0])) == 3

    def test_range(self, rng):
        for _ in range(50):
            d = int(rng.integers(2, 10))
            h = model.hamming_loss(rng.permutation(d), rng.permutation(d))
            assert 0 <= h <= d


class TestTraceLoss:
    def test_zero_at_identity(self, rng):
        sigma = random_pd(5, rng)
        assert model.trace_loss(sigma, np.arange(5)) == pytest.approx(0.0, abs=1e-9)

    def test_identity_sigma(self, rng):
        assert model.trace_loss(np.eye(4), rng.permutation(4)) == pytest.approx(
            0.0, abs=1e-12
        )

    def test_hand_case(self):
        assert model.trace_loss(np.diag([1.0, 2.0]), np.array([1, 0])) == pytest.approx(
            0.5
        )

    def test_nonnegative(self, rng):
        # eigenvalues of the whitened relabeled matrix multiply to 1 (AM-GM)
        for _ in range(10_000):
            d = int(rng.integers(2, 9))
            sigma = random_pd(d, rng)
            assert model.trace_loss(sigma, rng.permutation(d)) >= -1e-9


class TestAlignmentInstance:
    def test_d_property(self, rng):
        sigma = random_pd(3, rng)
        inst = model.AlignmentInstance(
            sigma=sigma,
            pi_star=np.array([1, 2, 0]),
            m=model.EXACT,
            n=model.EXACT,
            sigma_hat_x=sigma,
            sigma_hat_y=linalg.perm_apply(sigma, np.array([1, 2, 0])),
            seed=0,
        )
        assert inst.d == 3
