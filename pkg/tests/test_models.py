"""
Testes para os modelos da grade e para a escolha da 5-tupla.
"""

import math
import unittest

import numpy as np
from scipy.stats import chisquare

from firing.errors import DomainError, InfeasibleTupleError, UndefinedPurityError
from firing.metrics import ScoreParams, precision_from_purity
from firing.models import (
    GridStream,
    SignalPlusNoiseModel,
    SparseGridModel,
    bit_activation_rate,
    estimate_joint_omega,
    expected_sample_size,
    fixed_tuple,
    select_sparse_tuple,
    select_tuple,
    sparse_omega,
    sparse_omega_minus,
    spn_margin,
    validate_tuple,
)


class TestSignalPlusNoise(unittest.TestCase):
    """Modelo de um fator com ruído independente por bit."""

    def setUp(self):
        self.model = SignalPlusNoiseModel(10, 3, 0.3, 0.5, target_bits=[1, 4, 7])

    def test_targets_fire_with_factor(self):
        grid, factors = self.model.draw_block(np.random.default_rng(0), 2000)
        self.assertEqual(grid.shape, (2000, 10))
        self.assertEqual(factors.shape, (2000, 1))
        active = factors[:, 0]
        self.assertTrue(grid[active][:, [1, 4, 7]].all())
        self.assertAlmostEqual(active.mean(), 0.3, delta=0.04)

    def test_next_state_matches_block(self):
        bits, factors = self.model.next_state(np.random.default_rng(3))
        grid, block_factors = self.model.draw_block(np.random.default_rng(3), 1)
        self.assertEqual(bits.width, 10)
        np.testing.assert_array_equal(bits.bits, grid[0])
        np.testing.assert_array_equal(factors, block_factors[0])

    def test_conditional_rates_closed_form(self):
        # dois bits de G(f) e um de ruído, nível 3: μ = p_N, ν = p_N³
        mu, nu = self.model.conditional_rates({1, 4, 2}, 3)
        self.assertAlmostEqual(mu, 0.5)
        self.assertAlmostEqual(nu, 0.125)

    def test_unreachable_level(self):
        self.assertEqual(self.model.conditional_rates({1, 2}, 3), (0.0, 0.0))

    def test_invalid_parameters(self):
        with self.assertRaises(DomainError):
            SignalPlusNoiseModel(10, 11, 0.3, 0.5)
        with self.assertRaises(DomainError):
            SignalPlusNoiseModel(10, 3, 0.3, 0.0)
        noiseless = SignalPlusNoiseModel(10, 3, 0.3, 0.0, target_bits=[0, 1, 2], allow_noiseless=True)
        self.assertEqual(noiseless.conditional_rates({0, 1, 2}, 3), (1.0, 0.0))

    def test_expected_sample_size(self):
        self.assertAlmostEqual(expected_sample_size(self.model, 1.0), 6.5)
        self.assertAlmostEqual(expected_sample_size(self.model, 0.5), 4.75)

    def test_preselect_from_targets(self):
        pre = self.model.preselect(0, 2, np.random.default_rng(1))
        self.assertEqual(len(pre), 2)
        self.assertTrue(set(pre) <= {1, 4, 7})
        with self.assertRaises(DomainError):
            self.model.preselect(0, 4, np.random.default_rng(1))

    def test_joint_omega_estimate(self):
        est = estimate_joint_omega(self.model, [1, 4], 0, 20000, np.random.default_rng(5))
        self.assertEqual(est.mu, 1.0)
        self.assertAlmostEqual(est.nu, 0.25, delta=0.03)
        self.assertAlmostEqual(est.omega, est.nu)

    def test_joint_omega_undefined(self):
        noiseless = SignalPlusNoiseModel(10, 3, 0.3, 0.0, target_bits=[1, 4, 7], allow_noiseless=True)
        with self.assertRaises(UndefinedPurityError):
            estimate_joint_omega(noiseless, [0, 2], 0, 200, np.random.default_rng(5))


class TestSparseGrid(unittest.TestCase):
    """Grade esparsa com ligação fixa."""

    def setUp(self):
        linkage = [[1, 1, 0], [0, 1, 1]]
        self.model = SparseGridModel(3, 2, 0.4, 0.5, linkage=linkage)

    def test_purity_ranks(self):
        self.assertEqual(list(self.model.purity_ranks()), [1, 2, 1])
        self.assertEqual(self.model.target_bits(0), frozenset({0, 1}))

    def test_conditional_rates(self):
        np.testing.assert_allclose(self.model.conditional_rates({0}, 1, 0), (1.0, 0.0))
        np.testing.assert_allclose(self.model.conditional_rates({1}, 1, 0), (1.0, 0.4))
        np.testing.assert_allclose(self.model.conditional_rates({2}, 1, 0), (0.4, 0.4))
        np.testing.assert_allclose(self.model.conditional_rates({0, 2}, 2, 0), (0.4, 0.0))

    def test_grid_given_factors(self):
        grid = self.model.grid_given_factors([[1, 0], [0, 1], [0, 0]])
        np.testing.assert_array_equal(grid, [[1, 1, 0], [0, 1, 1], [0, 0, 0]])

    def test_preselect_by_rank(self):
        self.assertEqual(self.model.preselect(0, 1, np.random.default_rng(0), rank=2), [1])
        with self.assertRaises(DomainError):
            self.model.preselect(0, 2, np.random.default_rng(0), rank=2)

    def test_empty_factor_rejected(self):
        with self.assertRaises(DomainError):
            SparseGridModel(3, 2, 0.4, 0.5, linkage=[[1, 0, 0], [0, 0, 0]])

    def test_drawn_linkage_has_no_empty_factor(self):
        model = SparseGridModel(20, 10, 0.3, 0.1, rng=np.random.default_rng(2))
        self.assertTrue(model.linkage.any(axis=1).all())

    def test_joint_distribution_marginal(self):
        d = self.model.joint_distribution(0)
        self.assertEqual(d.width, 4)
        factor_on = d.states()[:, 3]
        self.assertAlmostEqual(float(d.prob[factor_on].sum()), 0.4)


class TestGridStream(unittest.TestCase):

    def test_block_size_does_not_change_sequence(self):
        model = SignalPlusNoiseModel(8, 2, 0.3, 0.4, target_bits=[0, 5])
        small = GridStream(model, np.random.default_rng(9), block=3)
        large = GridStream(model, np.random.default_rng(9), block=50)
        a = np.vstack([small.take(c)[0] for c in (1, 4, 2, 7, 6)])
        b = large.take(20)[0]
        np.testing.assert_array_equal(a, b)

    def test_push_back(self):
        model = SignalPlusNoiseModel(8, 2, 0.3, 0.4, target_bits=[0, 5])
        stream = GridStream(model, np.random.default_rng(1))
        grid, factors = stream.take(5)
        stream.push_back(grid[2:], factors[2:])
        self.assertEqual(stream.consumed, 2)
        again, _ = stream.take(3)
        np.testing.assert_array_equal(again, grid[2:])


class TestFormulas(unittest.TestCase):
    """Fórmulas de pureza e escolha de (N, p, q)."""

    def test_spn_margin_five_bits(self):
        omega, delta = spn_margin(5, 0.6)
        self.assertAlmostEqual(omega, 0.0622, delta=0.001)
        self.assertAlmostEqual(delta, 0.4 * 0.6 ** 5 / 2)

    def test_joint_tuple(self):
        omega, delta = spn_margin(5, 0.6)
        sp = select_tuple(omega, delta, 0.3, 500)
        # φ exato dá −T·deriva = 7,01; o teto leva a 8
        self.assertEqual((sp.p, sp.q, sp.N), (7, 1, 8))
        self.assertTrue(validate_tuple(sp, omega, delta, 0.3))

    def test_caption_pairs(self):
        for p_N, (p, q) in ((0.3, (1, 1)), (0.5, (2, 3)), (0.7, (3, 5)), (0.9, (5, 11))):
            omega, delta = spn_margin(0, p_N)
            sp = ScoreParams(omega, 0, 500, p, q)
            self.assertTrue(validate_tuple(sp, omega, delta, 0.3), p_N)

    def test_fixed_tuple(self):
        omega, delta = spn_margin(0, 0.3)
        sp = fixed_tuple(omega, delta, 0.3, 500, 1, 1)
        self.assertEqual(sp.N, 103)
        with self.assertRaises(InfeasibleTupleError):
            fixed_tuple(omega, delta, 0.3, 500, 1, 3)

    def test_sparse_tuple(self):
        omega = sparse_omega(10, 0.3)
        self.assertAlmostEqual(omega, 0.9596, delta=1e-4)
        self.assertAlmostEqual(precision_from_purity(omega, 0.3), 0.3087, delta=1e-4)
        sp = select_sparse_tuple(omega, 0.3, 1000, 1, 1)
        self.assertEqual(sp.N, 383)
        with self.assertRaises(InfeasibleTupleError):
            select_sparse_tuple(omega, 0.3, 1000, 1, 5)

    def test_sparse_tuple_negative_omega(self):
        # ω abaixo de zero vira 0, isto é φ = 1: nenhum (p, q) drena
        with self.assertRaises(InfeasibleTupleError):
            select_sparse_tuple(-0.05, 0.3, 100)
        sp = select_sparse_tuple(0.5, 0.3, 100)
        self.assertEqual((sp.p, sp.q), (1, 1))

    def test_sparse_omegas(self):
        self.assertEqual(sparse_omega(1, 0.3), 0.0)
        self.assertAlmostEqual(sparse_omega_minus(10, 10, 0.3), 1.0)
        self.assertLess(sparse_omega_minus(2, 10, 0.3), sparse_omega_minus(8, 10, 0.3))
        self.assertAlmostEqual(bit_activation_rate(2, 0.3), 0.51)

    def test_initial_weight_is_ceiling(self):
        omega, delta = spn_margin(0, 0.3)
        sp = select_tuple(omega, delta, 0.3, 200)
        phi = precision_from_purity(omega, 0.3)
        self.assertEqual((sp.p, sp.q), (1, 1))
        self.assertEqual(sp.N, math.ceil(-200 * (2 * phi - 1)))
        self.assertEqual(sp.N, 42)

    def test_sparse_rank_bounded_by_factors(self):
        self.assertAlmostEqual(sparse_omega(10, 0.3, K=10), sparse_omega(10, 0.3))
        with self.assertRaises(DomainError):
            sparse_omega(11, 0.3, K=10)
        with self.assertRaises(DomainError):
            sparse_omega(0, 0.3)


class TestGridStatistics(unittest.TestCase):
    """Frequências amostradas contra as leis fechadas dos modelos."""

    def test_signal_plus_noise_joint_law(self):
        model = SignalPlusNoiseModel(4, 2, 0.3, 0.4, target_bits=[1, 2])
        draws = 10 ** 6
        grid, factors = model.draw_block(np.random.default_rng(17), draws)
        codes = (grid.astype(np.int64) << np.arange(4)).sum(axis=1)
        codes += factors[:, 0].astype(np.int64) << 4
        observed = np.bincount(codes, minlength=32)
        expected = model.joint_distribution().prob * draws
        impossible = expected == 0
        self.assertEqual(int(observed[impossible].sum()), 0)
        expected = expected[~impossible]
        expected *= observed[~impossible].sum() / expected.sum()
        result = chisquare(observed[~impossible], expected)
        self.assertGreater(result.pvalue, 0.001)

    def test_signal_plus_noise_conditional_rates(self):
        model = SignalPlusNoiseModel(10, 3, 0.3, 0.5, target_bits=[1, 4, 7])
        grid, factors = model.draw_block(np.random.default_rng(23), 200000)
        active = factors[:, 0]
        for I, l in (({1, 4, 2}, 3), ({0, 2, 5}, 2), ({1, 3}, 1), ({1, 4, 7, 9}, 4)):
            fires = grid[:, sorted(I)].sum(axis=1) >= l
            mu, nu = model.conditional_rates(I, l)
            for rate, sample in ((mu, fires[active]), (nu, fires[~active])):
                se = max(math.sqrt(rate * (1 - rate) / sample.size), 1e-9)
                self.assertLessEqual(abs(sample.mean() - rate), 4 * se, (I, l))

    def test_sparse_rate_depends_on_active_count(self):
        n, p_g = 4000, 0.3
        model = SparseGridModel(n, 10, 0.3, p_g, rng=np.random.default_rng(31))
        for k in (1, 2, 3):
            rows = np.zeros((2, 10), dtype=bool)
            rows[0, :k] = True
            rows[1, 5:5 + k] = True
            grid = model.grid_given_factors(rows)
            rate = bit_activation_rate(k, p_g)
            se = math.sqrt(rate * (1 - rate) / n)
            first, second = grid[0].mean(), grid[1].mean()
            self.assertLessEqual(abs(first - rate), 4 * se, k)
            self.assertLessEqual(abs(second - rate), 4 * se, k)
            self.assertLessEqual(abs(first - second), 4 * math.sqrt(2) * se, k)

    def test_sparse_conditional_rates_sampled(self):
        model = SparseGridModel(6, 3, 0.3, 0.4, rng=np.random.default_rng(2))
        grid, factors = model.draw_block(np.random.default_rng(8), 200000)
        active = factors[:, 0]
        for I, l in (({0, 1}, 1), ({0, 1, 2, 3}, 2), ({5}, 1)):
            fires = grid[:, sorted(I)].sum(axis=1) >= l
            mu, nu = model.conditional_rates(I, l, 0)
            for rate, sample in ((mu, fires[active]), (nu, fires[~active])):
                se = max(math.sqrt(rate * (1 - rate) / sample.size), 1e-9)
                self.assertLessEqual(abs(sample.mean() - rate), 4 * se, (I, l))


if __name__ == '__main__':
    unittest.main()
