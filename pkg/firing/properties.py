"""
Suítes de verificação exaustiva usadas pelo experimento check-props: as
identidades de partição e decomposição dos polinômios, o oráculo de
subconjuntos e os oráculos das métricas por enumeração explícita.
"""

import logging
from dataclasses import dataclass
from typing import Callable, List

import numpy as np

from firing.errors import FiringError
from firing.f2core import (
    BitVector,
    CharPoly,
    eval_charpoly,
    norm,
    subset_oracle,
    verify_decomposition,
    verify_level_split,
    verify_partition,
)
from firing.metrics import (
    coefficients_exact,
    coefficients_from_distribution,
    precision,
    precision_from_purity,
    recall_psi,
)
from firing.models import SignalPlusNoiseModel, SparseGridModel

logger = logging.getLogger(__name__)

TOLERANCE = 1e-9


@dataclass
class SuiteResult:
    name: str
    checked: int
    failures: List[str]

    @property
    def passed(self) -> bool:
        return not self.failures


def _random_subset(rng: np.random.Generator, pool: np.ndarray, low: int, high: int) -> List[int]:
    size = int(rng.integers(low, high + 1))
    return sorted(int(b) for b in rng.choice(pool, size=size, replace=False))


def partition_suite(rng: np.random.Generator, configs: int = 200, max_width: int = 10) -> SuiteResult:
    failures = []
    for _ in range(configs):
        width = int(rng.integers(2, max_width + 1))
        I = _random_subset(rng, np.arange(width), 1, width)
        cut = int(rng.integers(0, len(I) + 1))
        shuffled = [int(b) for b in rng.permutation(I)]
        J, K = shuffled[:cut], shuffled[cut:]
        if not verify_partition(I, J, K, width):
            failures.append(f"partição I={I} J={sorted(J)} K={sorted(K)} width={width}")
        b = int(rng.choice(I))
        if not verify_level_split(I, b, width):
            failures.append(f"separação do bit {b} em I={I} width={width}")
    return SuiteResult("partition", configs, failures)


def decomposition_suite(
    rng: np.random.Generator, configs: int = 200, max_width: int = 10
) -> SuiteResult:
    failures = []
    for _ in range(configs):
        width = int(rng.integers(3, max_width + 1))
        bits = rng.permutation(width)
        cut = int(rng.integers(1, width))
        I = _random_subset(rng, bits[:cut], 1, min(cut, 4))
        Iprime = _random_subset(rng, bits[cut:], 1, width - cut)
        level_u = int(rng.integers(1, len(I) + 1))
        level_v = int(rng.integers(1, len(Iprime) + 1))
        K = _random_subset(rng, np.array(Iprime), level_v, len(Iprime))
        if not verify_decomposition(I, Iprime, K, width, level_u=level_u, level_v=level_v):
            failures.append(
                f"decomposição I={I} I'={Iprime} K={K} níveis=({level_u}, {level_v})"
            )
    return SuiteResult("decomposition", configs, failures)


def charpoly_oracle_suite(
    rng: np.random.Generator, draws: int = 10 ** 4, max_width: int = 12, max_set: int = 8
) -> SuiteResult:
    """Semântica de limiar contra a enumeração literal de subconjuntos."""
    failures = []
    for _ in range(draws):
        width = int(rng.integers(1, max_width + 1))
        I = _random_subset(rng, np.arange(width), 0, min(width, max_set))
        level = int(rng.integers(0, len(I) + 1))
        x = BitVector(rng.random(width) < 0.5)
        expected = subset_oracle(I, level, x)
        got = eval_charpoly(CharPoly(frozenset(I), level, width), x)
        if got != expected:
            failures.append(f"P({I}, {level})[{x}] = {got}, oráculo {expected}")
    return SuiteResult("charpoly-oracle", draws, failures)


def spn_metric_suite(rng: np.random.Generator, configs: int = 50, max_n: int = 11) -> SuiteResult:
    """
    Em modelos sinal mais ruído enumeráveis, confere (μ, ν, ω) no nível |I|
    com p_N^{|I|-i}, p_N^{|I|} e p_N^i, contra a distribuição explícita, e
    φ e ψ contra as fórmulas de precisão e recall.
    """
    failures = []
    for _ in range(configs):
        n = int(rng.integers(2, max_n + 1))
        k = int(rng.integers(1, n + 1))
        p_f = float(rng.uniform(0.05, 0.95))
        p_N = float(rng.uniform(0.05, 0.95))
        model = SignalPlusNoiseModel(n, k, p_f, p_N, rng=rng)
        d = model.joint_distribution()
        I = _random_subset(rng, np.arange(n), 1, n)
        level = int(rng.integers(1, len(I) + 1))
        exact = coefficients_exact(I, level, model)
        enumerated = coefficients_from_distribution(I, level, d)
        label = f"n={n} k={k} I={I} l={level}"
        if abs(exact.mu - enumerated.mu) > TOLERANCE or abs(exact.nu - enumerated.nu) > TOLERANCE:
            failures.append(f"{label}: {exact} != {enumerated}")
        i = len(set(I) & model.target_bits())
        full = coefficients_exact(I, len(I), model)
        analytic = (p_N ** (len(I) - i), p_N ** len(I), p_N ** i)
        if np.abs(np.array([full.mu, full.nu, full.omega]) - analytic).max() > TOLERANCE:
            failures.append(f"{label}: nível |I| difere das fórmulas fechadas")
        phi = precision(exact.mu, exact.nu, p_f)
        if abs(phi - precision_from_purity(exact.omega, p_f)) > TOLERANCE:
            failures.append(f"{label}: φ por (μ, ν) != φ por ω")
        poly = CharPoly(frozenset(I), level, n + 1)
        if abs(recall_psi(I, level, model) - norm(poly, d.conditional(n, True))) > TOLERANCE:
            failures.append(f"{label}: ψ != μ")
    return SuiteResult("spn-metrics", configs, failures)


def sparse_metric_suite(rng: np.random.Generator, configs: int = 30) -> SuiteResult:
    failures = []
    for _ in range(configs):
        n = int(rng.integers(2, 9))
        K = int(rng.integers(1, 5))
        model = SparseGridModel(n, K, float(rng.uniform(0.1, 0.9)), 0.5, rng=rng)
        f = int(rng.integers(0, K))
        I = _random_subset(rng, np.arange(n), 1, n)
        level = int(rng.integers(1, len(I) + 1))
        mu, nu = model.conditional_rates(I, level, f)
        d = model.joint_distribution(f)
        poly = CharPoly(frozenset(I), level, n + 1)
        mu_d = norm(poly, d.conditional(n, True))
        nu_d = norm(poly, d.conditional(n, False))
        if abs(mu - mu_d) > TOLERANCE or abs(nu - nu_d) > TOLERANCE:
            failures.append(f"esparsa n={n} K={K} f={f} I={I} l={level}: ({mu}, {nu}) != ({mu_d}, {nu_d})")
    return SuiteResult("sparse-metrics", configs, failures)


SUITES: List[Callable[[np.random.Generator], SuiteResult]] = [
    partition_suite,
    decomposition_suite,
    charpoly_oracle_suite,
    spn_metric_suite,
    sparse_metric_suite,
]


def run_all(seed: int) -> List[SuiteResult]:
    """Roda todas as suítes; uma exceção da biblioteca conta como falha."""
    results = []
    for index, suite in enumerate(SUITES):
        rng = np.random.default_rng(np.random.SeedSequence([seed, index]))
        try:
            result = suite(rng)
        except FiringError as e:
            result = SuiteResult(suite.__name__, 0, [f"{type(e).__name__}: {e}"])
        logger.info("%s: %d casos, %d falhas", result.name, result.checked, len(result.failures))
        results.append(result)
    return results
