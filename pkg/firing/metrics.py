"""
Métricas de pureza, precisão e recall, e o processo de pontuação s[N, T, p, q].

Os modelos são usados por "duck typing" (`conditional_rates`, `draw_block`),
de modo que este módulo não depende de `firing.models`.
"""

import logging
from dataclasses import dataclass
from typing import Collection, Optional, Tuple

import numpy as np

from firing.errors import (
    ContractError,
    DomainError,
    UndefinedPrecisionError,
    UndefinedPurityError,
)
from firing.f2core import CharPoly, ExplicitDistribution, norm, product

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Coefficients:
    """Recall μ, precisão ν e pureza ω = ν/μ de um par (I, l)."""

    mu: float
    nu: float
    omega: float


@dataclass(frozen=True)
class MonteCarloCoefficients:
    mu: float
    nu: float
    omega: float
    mu_stderr: float
    nu_stderr: float
    draws: int


@dataclass(frozen=True)
class ScoreParams:
    """5-tupla (ω, N, T, p, q) que governa a drenagem e o processo de pontuação."""

    omega_target: float
    N: int
    T: int
    p: int
    q: int

    def __post_init__(self) -> None:
        if self.N < 0 or self.T < 1 or self.p < 1 or self.q < 1:
            raise ContractError(
                f"exige N >= 0, T >= 1, p >= 1 e q >= 1: "
                f"(N={self.N}, T={self.T}, p={self.p}, q={self.q})"
            )


@dataclass(frozen=True)
class ScoreStats:
    mean: float
    var_per_step: float
    q_s: float

    @property
    def sigma(self) -> float:
        return float(np.sqrt(self.var_per_step))


def coefficients_exact(I: Collection[int], l: int, model, f: int = 0) -> Coefficients:
    """
    Coeficientes exatos a partir das taxas condicionais do modelo.

    Raises:
        UndefinedPurityError: se μ = 0.
    """
    mu, nu = model.conditional_rates(I, l, f)
    if mu == 0:
        raise UndefinedPurityError(f"mu = 0 para I={sorted(I)}, l={l}")
    return Coefficients(mu, nu, nu / mu)


def coefficients_from_distribution(
    I: Collection[int], l: int, d: ExplicitDistribution
) -> Coefficients:
    """
    Coeficientes por enumeração: o último bit de `d` é o fator, os demais a grade.
    μ = <P_I^l, P_f>_d / ||P_f||_d e ν = (||P_I^l||_d - <P_I^l, P_f>_d) / (1 - ||P_f||_d).
    """
    factor = CharPoly(frozenset({d.width - 1}), 1, d.width)
    poly = CharPoly(frozenset(I), l, d.width)
    rate = norm(factor, d)
    if not 0.0 < rate < 1.0:
        raise UndefinedPrecisionError(f"taxa do fator degenerada: {rate}")
    joint = product([poly, factor], d)
    mu = joint / rate
    nu = (norm(poly, d) - joint) / (1.0 - rate)
    if mu == 0:
        raise UndefinedPurityError(f"mu = 0 para I={sorted(I)}, l={l}")
    return Coefficients(mu, nu, nu / mu)


def coefficients_monte_carlo(
    I: Collection[int], l: int, model, f: int, draws: int, rng: np.random.Generator
) -> MonteCarloCoefficients:
    """μ̂, ν̂ e ω̂ a partir de `draws` instantes rotulados, com erros padrão."""
    if draws < 2:
        raise ContractError("draws deve ser >= 2")
    indices = sorted(I)
    grid, factors = model.draw_block(rng, draws)
    fires = grid[:, indices].sum(axis=1) >= l
    active = factors[:, f].astype(bool)
    if active.all() or not active.any():
        raise UndefinedPrecisionError("o fator não variou nas amostras")
    mu = float(fires[active].mean())
    nu = float(fires[~active].mean())
    if mu == 0:
        raise UndefinedPurityError(f"mu estimado = 0 em {draws} amostras")
    mu_se = float(np.sqrt(mu * (1 - mu) / active.sum()))
    nu_se = float(np.sqrt(nu * (1 - nu) / (~active).sum()))
    return MonteCarloCoefficients(mu, nu, nu / mu, mu_se, nu_se, draws)


def precision_from_purity(omega: float, factor_rate: float) -> float:
    """φ = p_f / (p_f + (1 - p_f)·ω)."""
    if omega < 0:
        raise DomainError(f"omega deve ser >= 0, recebido {omega}")
    if factor_rate == 0:
        raise UndefinedPrecisionError("taxa do fator nula")
    if not 0.0 < factor_rate <= 1.0:
        raise DomainError(f"factor_rate fora de (0, 1]: {factor_rate}")
    return factor_rate / (factor_rate + (1.0 - factor_rate) * omega)


def precision(mu: float, nu: float, factor_rate: float) -> float:
    """P(f ativo | P_I^l dispara) a partir de (μ, ν) e da taxa do fator."""
    fired = factor_rate * mu + (1.0 - factor_rate) * nu
    if fired == 0:
        raise UndefinedPrecisionError("o polinômio nunca dispara")
    return factor_rate * mu / fired


def recall_psi(I: Collection[int], l: int, model, f: int = 0) -> float:
    """ψ = μ; vale 0 quando o nível é inatingível."""
    mu, _ = model.conditional_rates(I, l, f)
    return mu


def score_stats(sp: ScoreParams, phi: float) -> ScoreStats:
    """Média N + T·(φ·(p+q) - p) e variância por passo (p+q)²·φ·(1-φ)."""
    if not 0.0 <= phi <= 1.0:
        raise DomainError(f"phi fora de [0, 1]: {phi}")
    s = sp.p + sp.q
    return ScoreStats(
        mean=sp.N + sp.T * (phi * s - sp.p),
        var_per_step=s * s * phi * (1.0 - phi),
        q_s=phi,
    )


def simulate_scores(sp: ScoreParams, phi: float, count: int, rng_seed) -> np.ndarray:
    """`count` trajetórias (count x T) do processo cumulativo com passos +q / -p."""
    rng = np.random.default_rng(rng_seed)
    success = rng.random((count, sp.T)) < phi
    steps = np.where(success, sp.q, -sp.p).astype(np.int64)
    return sp.N + np.cumsum(steps, axis=1)


def simulate_score(sp: ScoreParams, phi: float, rng_seed) -> np.ndarray:
    return simulate_scores(sp, phi, 1, rng_seed)[0]


def estimate_stopping_probability(
    model,
    build_config,
    sp: ScoreParams,
    reps: int,
    rng_seed: int,
    T: Optional[int] = None,
) -> Tuple[float, float]:
    """
    Estima por Monte Carlo a probabilidade de nenhuma entrada amostrada manter
    aresta de saída ao fim da drenagem. Cada repetição amostra, constrói e
    drena um grafo novo com sementes derivadas de (rng_seed, rep).

    Args:
        T: sobrescreve o orçamento de sp (0 significa nenhuma drenagem).

    Returns:
        (estimativa, erro padrão)
    """
    from firing.draining import run_repetition

    if reps < 1:
        raise ContractError("reps deve ser >= 1")
    budget = sp.T if T is None else T
    events = 0
    for rep in range(reps):
        outcome = run_repetition(model, build_config, sp, rng_seed, rep, T=budget)
        if not outcome.sampled_survivors:
            events += 1
    estimate = events / reps
    stderr = float(np.sqrt(estimate * (1.0 - estimate) / reps))
    logger.info("P(E) = %.4f +- %.4f em %d repetições (T=%d)", estimate, stderr, reps, budget)
    return estimate, stderr
