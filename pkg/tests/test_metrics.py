"""
Testes para as métricas de pureza e o processo de pontuação.
"""

import itertools
import unittest

import numpy as np

from firing.draining import BuildConfig
from firing.errors import ContractError, DomainError, UndefinedPrecisionError, UndefinedPurityError
from firing.metrics import (
    ScoreParams,
    coefficients_exact,
    coefficients_from_distribution,
    coefficients_monte_carlo,
    estimate_stopping_probability,
    precision,
    precision_from_purity,
    recall_psi,
    score_stats,
    simulate_score,
    simulate_scores,
)
from firing.models import SignalPlusNoiseModel, SparseGridModel


class TestCoefficients(unittest.TestCase):
    """μ, ν e ω por fórmula, por enumeração e por amostragem."""

    def setUp(self):
        self.model = SignalPlusNoiseModel(8, 3, 0.3, 0.5, target_bits=[0, 3, 6])

    def test_exact(self):
        c = coefficients_exact({0, 3, 5}, 3, self.model)
        self.assertAlmostEqual(c.mu, 0.5)
        self.assertAlmostEqual(c.nu, 0.125)
        self.assertAlmostEqual(c.omega, 0.25)

    def test_exact_matches_enumeration(self):
        d = self.model.joint_distribution()
        for I, l in (({0, 3, 5}, 3), ({1, 2}, 1), ({0, 1, 2, 6}, 2), ({6}, 1)):
            exact = coefficients_exact(I, l, self.model)
            enumerated = coefficients_from_distribution(I, l, d)
            self.assertAlmostEqual(exact.mu, enumerated.mu, places=9)
            self.assertAlmostEqual(exact.nu, enumerated.nu, places=9)

    def test_sparse_matches_enumeration(self):
        model = SparseGridModel(5, 3, 0.3, 0.5, linkage=[[1, 1, 0, 0, 1], [0, 1, 1, 0, 0], [0, 0, 1, 1, 1]])
        d = model.joint_distribution(1)
        exact = coefficients_exact({1, 2}, 2, model, f=1)
        enumerated = coefficients_from_distribution({1, 2}, 2, d)
        self.assertAlmostEqual(exact.omega, enumerated.omega, places=9)

    def test_undefined_purity(self):
        noiseless = SignalPlusNoiseModel(6, 2, 0.3, 0.0, target_bits=[0, 1], allow_noiseless=True)
        with self.assertRaises(UndefinedPurityError):
            coefficients_exact({4, 5}, 1, noiseless)

    def test_monte_carlo(self):
        exact = coefficients_exact({0, 1}, 1, self.model)
        mc = coefficients_monte_carlo({0, 1}, 1, self.model, 0, 20000, np.random.default_rng(4))
        self.assertLess(abs(mc.mu - exact.mu), 4 * mc.mu_stderr + 1e-9)
        self.assertLess(abs(mc.nu - exact.nu), 4 * mc.nu_stderr + 1e-9)
        self.assertEqual(mc.draws, 20000)


class TestPrecisionRecall(unittest.TestCase):

    def test_single_target_bit(self):
        self.assertAlmostEqual(precision_from_purity(0.3, 0.3), 0.5882, places=4)
        self.assertAlmostEqual(precision(1.0, 0.3, 0.3), precision_from_purity(0.3, 0.3))

    def test_pure_set(self):
        self.assertEqual(precision_from_purity(0.0, 0.3), 1.0)

    def test_undefined(self):
        with self.assertRaises(UndefinedPrecisionError):
            precision_from_purity(0.5, 0.0)
        with self.assertRaises(UndefinedPrecisionError):
            precision(0.0, 0.0, 0.3)
        with self.assertRaises(DomainError):
            precision_from_purity(-0.1, 0.3)

    def test_recall_is_mu(self):
        model = SignalPlusNoiseModel(8, 3, 0.3, 0.4, target_bits=[0, 3, 6])
        for I, l in (({0, 3}, 2), ({1, 2, 3}, 2), ({5}, 1)):
            mu, _ = model.conditional_rates(I, l)
            self.assertEqual(recall_psi(I, l, model), mu)


class TestScoreProcess(unittest.TestCase):
    """Média N + T·(φ(p+q) - p) e variância (p+q)²φ(1-φ) por passo."""

    def test_invalid_params(self):
        with self.assertRaises(ContractError):
            ScoreParams(0.5, -1, 10, 1, 1)
        with self.assertRaises(ContractError):
            ScoreParams(0.5, 1, 10, 0, 1)

    def test_stats(self):
        stats = score_stats(ScoreParams(0.65, 0, 100, 1, 1), 0.5882)
        self.assertAlmostEqual(stats.mean, 17.64, places=2)
        self.assertAlmostEqual(stats.var_per_step, 0.9689, places=4)
        self.assertAlmostEqual(stats.sigma ** 2, stats.var_per_step)

    def test_simulated_moments(self):
        sp = ScoreParams(0.65, 0, 100, 1, 1)
        phi = 0.5882
        stats = score_stats(sp, phi)
        final = simulate_scores(sp, phi, 10 ** 4, 11)[:, -1]
        stderr = np.sqrt(sp.T * stats.var_per_step / final.size)
        self.assertLess(abs(final.mean() - 17.65), 3 * stderr + 0.01)
        self.assertLess(abs(final.var() / sp.T - 0.9689) / 0.9689, 0.05)

    def test_deterministic(self):
        sp = ScoreParams(0.5, 10, 50, 2, 3)
        np.testing.assert_array_equal(simulate_score(sp, 0.4, 7), simulate_score(sp, 0.4, 7))
        path = simulate_score(sp, 0.4, 7)
        self.assertEqual(path.shape, (50,))
        self.assertTrue(set(np.diff(np.concatenate([[10], path]))) <= {3, -2})


class TestStoppingProbability(unittest.TestCase):

    def test_no_budget_never_stops(self):
        model = SignalPlusNoiseModel(30, 5, 0.3, 0.3, rng=np.random.default_rng(0))
        sp = ScoreParams(0.65, 5, 20, 1, 1)
        estimate, stderr = estimate_stopping_probability(model, BuildConfig(), sp, 5, 3, T=0)
        self.assertEqual((estimate, stderr), (0.0, 0.0))


class TestPrecisionBound(unittest.TestCase):
    """Com recall total, nenhum par (I, l) supera a precisão de (G(f), k)."""

    def setUp(self):
        self.model = SignalPlusNoiseModel(8, 3, 0.3, 0.4, target_bits=[0, 3, 6])
        best = coefficients_exact({0, 3, 6}, 3, self.model)
        self.best = precision(best.mu, best.nu, 0.3)

    def test_exact_coefficients(self):
        checked = 0
        for size in range(1, 9):
            for I in itertools.combinations(range(8), size):
                for l in range(1, size + 1):
                    mu, nu = self.model.conditional_rates(I, l)
                    if mu < 1.0 - 1e-12:
                        continue
                    self.assertLessEqual(precision(mu, nu, 0.3), self.best + 1e-12, (I, l))
                    checked += 1
        self.assertGreater(checked, 100)

    def test_estimated_coefficients(self):
        rng = np.random.default_rng(13)
        slope = 0.7 / 0.3
        for I, l in (({0, 3, 6, 1}, 3), ({0, 1}, 1), ({0, 3, 6, 1, 2}, 2), ({0, 3, 6}, 3)):
            est = coefficients_monte_carlo(I, l, self.model, 0, 50000, rng)
            self.assertEqual(est.mu, 1.0)
            tolerance = slope * 4 * est.nu_stderr + 1e-9
            self.assertLessEqual(precision(est.mu, est.nu, 0.3), self.best + tolerance, (I, l))


if __name__ == '__main__':
    unittest.main()
