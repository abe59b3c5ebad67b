"""
Comportamento em T da drenagem no modelo sinal mais ruído: probabilidade de
parada sem sobreviventes e pureza dos sobreviventes.
"""

import time as time_module

import numpy as np
import pytest

from firing.draining import BuildConfig, run_repetition
from firing.metrics import estimate_stopping_probability
from firing.models import SignalPlusNoiseModel, select_tuple, spn_margin

pytestmark = pytest.mark.slow

BUDGETS = (50, 100, 200)


@pytest.fixture
def model():
    return SignalPlusNoiseModel(200, 10, 0.3, 0.3, rng=np.random.default_rng(np.random.SeedSequence([42])))


@pytest.fixture
def margins():
    return spn_margin(0, 0.3)


def test_stopping_probability_does_not_grow_with_budget(model, margins):
    """P(nenhuma entrada sobrevive) não aumenta com T (tolerância de 2 erros padrão)."""
    print("\n=== PROBABILIDADE DE PARADA POR ORÇAMENTO ===")
    omega, delta = margins
    estimates = []
    for T in BUDGETS:
        start_time = time_module.time()
        sp = select_tuple(omega, delta, 0.3, T)
        estimate, stderr = estimate_stopping_probability(model, BuildConfig(), sp, 200, 7)
        estimates.append((estimate, stderr))
        print(f"T={T}: N={sp.N} P(E)={estimate:.4f} +- {stderr:.4f} ({time_module.time() - start_time:.2f}s)")

    for (before, se_before), (after, se_after) in zip(estimates, estimates[1:]):
        assert after <= before + 2 * np.hypot(se_before, se_after) + 1e-12


def test_survivors_come_from_the_factor(model, margins):
    """Com T = 200, quase todas as repetições terminam só com bits de G(f)."""
    print("\n=== PUREZA DOS SOBREVIVENTES ===")
    omega, delta = margins
    sp = select_tuple(omega, delta, 0.3, 200)
    targets = model.target_bits()
    reps = 50
    pure = 0
    nonempty = 0
    for rep in range(reps):
        outcome = run_repetition(model, BuildConfig(), sp, 11, rep)
        survivors = outcome.sampled_survivors
        if survivors:
            nonempty += 1
        if survivors and survivors <= targets:
            pure += 1
    print(f"repetições puras: {pure}/{reps}, com sobreviventes: {nonempty}/{reps}")

    assert nonempty >= 0.9 * reps
    assert pure >= 0.8 * reps


def test_joint_survivor_purity_improves_with_budget():
    """Grafo conjunto: a fração de ruído que sobrevive não cresce com T."""
    print("\n=== PUREZA DO GRAFO CONJUNTO POR ORÇAMENTO ===")
    model = SignalPlusNoiseModel(200, 20, 0.3, 0.6, rng=np.random.default_rng(np.random.SeedSequence([42])))
    omega, delta = spn_margin(5, 0.6)
    targets = model.target_bits()
    reps = 20
    rates = []
    for T in (50, 200, 500):
        start_time = time_module.time()
        sp = select_tuple(omega, delta, 0.3, T)
        survival = []
        for rep in range(reps):
            outcome = run_repetition(model, BuildConfig(i_pre=5), sp, 13, rep)
            noise = set(outcome.sampling.sampled) - targets
            if noise:
                survival.append(len(outcome.sampled_survivors - targets) / len(noise))
        rate = float(np.mean(survival))
        stderr = float(np.std(survival, ddof=1) / np.sqrt(len(survival)))
        rates.append((rate, stderr))
        print(f"T={T}: N={sp.N} ruído sobrevivente={rate:.4f} +- {stderr:.4f} ({time_module.time() - start_time:.2f}s)")

    for (before, se_before), (after, se_after) in zip(rates, rates[1:]):
        assert after <= before + 2 * np.hypot(se_before, se_after) + 1e-12
