"""
Modelos generativos da grade de medidas: sinal mais ruído e grade esparsa.

Cada modelo emite pares (estado da grade, estados dos fatores) por instante e
expõe as fórmulas analíticas de recall/precisão usadas pelas métricas e pela
escolha da 5-tupla (ω, N, T, p, q).
"""

import logging
import math
from dataclasses import dataclass
from typing import Collection, FrozenSet, Iterator, List, Optional, Tuple

import numpy as np
from scipy.stats import binom

from firing.errors import ContractError, DomainError, InfeasibleTupleError, UndefinedPurityError
from firing.f2core import ENUMERATION_CAP, BitVector, ExplicitDistribution, state_matrix
from firing.metrics import ScoreParams, precision_from_purity

logger = logging.getLogger(__name__)

PQ_SEARCH_CAP = 64
MAX_LINKAGE_DRAWS = 1000


def _check_probability(name: str, value: float) -> None:
    if not 0.0 < value < 1.0:
        raise DomainError(f"{name} deve estar em (0, 1), recebido {value}")


class GridModel:
    """
    Interface comum dos modelos: `draw_block` gera `count` instantes de uma
    vez, na mesma ordem de consumo do gerador que `count` chamadas unitárias.
    """

    n: int
    n_factors: int

    def draw_block(self, rng: np.random.Generator, count: int) -> Tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def next_state(self, rng: np.random.Generator) -> Tuple[BitVector, np.ndarray]:
        grid, factors = self.draw_block(rng, 1)
        return BitVector(grid[0]), factors[0]

    def factor_rate(self, f: int) -> float:
        raise NotImplementedError

    def target_bits(self, f: int) -> FrozenSet[int]:
        raise NotImplementedError

    def conditional_rates(self, I: Collection[int], l: int, f: int) -> Tuple[float, float]:
        """(μ, ν): taxa de disparo de P_I^l com o fator f ativo / inativo."""
        raise NotImplementedError

    def joint_distribution(self, f: int) -> ExplicitDistribution:
        """Distribuição explícita de (grade, fator f); o bit n é o fator."""
        raise NotImplementedError

    def _check_factor(self, f: int) -> None:
        if not 0 <= f < self.n_factors:
            raise DomainError(f"fator {f} fora de [0, {self.n_factors})")

    def _check_set(self, I: Collection[int], l: int) -> List[int]:
        indices = sorted(set(I))
        if indices and (indices[0] < 0 or indices[-1] >= self.n):
            raise DomainError(f"índices fora de [0, {self.n})")
        if l < 0:
            raise ContractError(f"nível negativo: {l}")
        return indices


class SignalPlusNoiseModel(GridModel):
    """
    Um único fator f (id 0) que, quando ativo, acende os k bits de G(f); todo
    bit ainda acende de forma independente com probabilidade p_N.
    """

    def __init__(
        self,
        n: int,
        k: int,
        p_f: float,
        p_N: float,
        rng: Optional[np.random.Generator] = None,
        target_bits: Optional[Collection[int]] = None,
        allow_noiseless: bool = False,
    ):
        if not 1 <= k <= n:
            raise DomainError(f"k={k} fora de [1, n={n}]")
        _check_probability("p_f", p_f)
        if not (allow_noiseless and p_N == 0.0):
            _check_probability("p_N", p_N)
        self.n = n
        self.k = k
        self.p_f = p_f
        self.p_N = p_N
        self.n_factors = 1
        if target_bits is None:
            rng = rng if rng is not None else np.random.default_rng()
            target_bits = rng.choice(n, size=k, replace=False)
        self._targets = np.array(sorted(int(b) for b in target_bits), dtype=np.int64)
        if self._targets.size != k:
            raise DomainError("target_bits deve ter exatamente k bits distintos")
        self._target_mask = np.zeros(n, dtype=bool)
        self._target_mask[self._targets] = True

    def draw_block(self, rng: np.random.Generator, count: int) -> Tuple[np.ndarray, np.ndarray]:
        u = rng.random((count, self.n + 1))
        factor = u[:, 0] < self.p_f
        grid = (u[:, 1:] < self.p_N) | (factor[:, None] & self._target_mask[None, :])
        return grid, factor[:, None]

    def factor_rate(self, f: int = 0) -> float:
        self._check_factor(f)
        return self.p_f

    def target_bits(self, f: int = 0) -> FrozenSet[int]:
        self._check_factor(f)
        return frozenset(self._targets.tolist())

    def conditional_rates(self, I: Collection[int], l: int, f: int = 0) -> Tuple[float, float]:
        self._check_factor(f)
        indices = self._check_set(I, l)
        i = int(self._target_mask[indices].sum()) if indices else 0
        size = len(indices)
        if l > size:
            return 0.0, 0.0
        mu = float(binom.sf(l - i - 1, size - i, self.p_N))
        nu = float(binom.sf(l - 1, size, self.p_N))
        return mu, nu

    def joint_distribution(self, f: int = 0) -> ExplicitDistribution:
        self._check_factor(f)
        if self.n + 1 > ENUMERATION_CAP:
            raise DomainError(f"n={self.n} grande demais para enumeração exata")
        states = state_matrix(self.n + 1)
        grid, factor = states[:, : self.n], states[:, self.n]
        ones = grid.sum(axis=1)
        noise_only = self.p_N ** ones * (1.0 - self.p_N) ** (self.n - ones)
        free = grid[:, ~self._target_mask].sum(axis=1)
        n_free = self.n - self.k
        targets_on = grid[:, self._target_mask].all(axis=1)
        with_factor = np.where(
            targets_on, self.p_N ** free * (1.0 - self.p_N) ** (n_free - free), 0.0
        )
        weights = np.where(factor, self.p_f * with_factor, (1.0 - self.p_f) * noise_only)
        return ExplicitDistribution.from_weights(self.n + 1, weights)

    def preselect(self, f: int, i: int, rng: np.random.Generator, rank: Optional[int] = None) -> List[int]:
        """Escolhe i bits de G(f) ao acaso (o posto de pureza é irrelevante aqui)."""
        self._check_factor(f)
        if i > self.k:
            raise DomainError(f"não há {i} bits em G(f) (k={self.k})")
        return sorted(int(b) for b in rng.choice(self._targets, size=i, replace=False))

    def __repr__(self) -> str:
        return f"SignalPlusNoiseModel(n={self.n}, k={self.k}, p_f={self.p_f}, p_N={self.p_N})"


class SparseGridModel(GridModel):
    """
    K fatores independentes, cada um ativo com probabilidade p_f; a matriz de
    ligação K x n é sorteada uma vez (cada entrada com probabilidade p_g) e um
    bit acende sse ao menos um fator ativo estiver ligado a ele.
    """

    def __init__(
        self,
        n: int,
        K: int,
        p_f: float,
        p_g: float,
        rng: Optional[np.random.Generator] = None,
        linkage: Optional[np.ndarray] = None,
    ):
        if n < 1 or K < 1:
            raise DomainError("n e K devem ser positivos")
        _check_probability("p_f", p_f)
        _check_probability("p_g", p_g)
        self.n = n
        self.K = K
        self.n_factors = K
        self.p_f = p_f
        self.p_g = p_g
        if linkage is None:
            linkage = self._draw_linkage(rng if rng is not None else np.random.default_rng())
        self.linkage = np.array(linkage, dtype=bool)
        if self.linkage.shape != (K, n):
            raise DomainError(f"linkage deve ter forma ({K}, {n})")
        if not self.linkage.any(axis=1).all():
            raise DomainError("todo fator precisa de ao menos um bit ligado")
        self.linkage.setflags(write=False)
        self._linkage_int = self.linkage.astype(np.int64)

    def _draw_linkage(self, rng: np.random.Generator) -> np.ndarray:
        for attempt in range(MAX_LINKAGE_DRAWS):
            linkage = rng.random((self.K, self.n)) < self.p_g
            if linkage.any(axis=1).all():
                if attempt:
                    logger.debug("ligação degenerada resorteada %d vez(es)", attempt)
                return linkage
        raise DomainError("não foi possível sortear uma ligação sem fatores vazios")

    def grid_given_factors(self, factors: np.ndarray) -> np.ndarray:
        """Estados da grade (B x n) a partir dos estados dos fatores (B x K)."""
        factors = np.atleast_2d(np.asarray(factors, dtype=np.int64))
        return (factors @ self._linkage_int) > 0

    def draw_block(self, rng: np.random.Generator, count: int) -> Tuple[np.ndarray, np.ndarray]:
        factors = rng.random((count, self.K)) < self.p_f
        return self.grid_given_factors(factors), factors

    def factor_rate(self, f: int) -> float:
        self._check_factor(f)
        return self.p_f

    def target_bits(self, f: int) -> FrozenSet[int]:
        self._check_factor(f)
        return frozenset(np.flatnonzero(self.linkage[f]).tolist())

    def purity_ranks(self) -> np.ndarray:
        """Posto de pureza |G⁻¹(b)| de cada bit (0 para bits sem fator)."""
        return self.linkage.sum(axis=0)

    def _other_factor_states(self, f: int) -> Tuple[np.ndarray, np.ndarray]:
        if self.K - 1 > ENUMERATION_CAP:
            raise DomainError(f"K={self.K} grande demais para enumeração exata")
        others = state_matrix(self.K - 1) if self.K > 1 else np.zeros((1, 0), dtype=bool)
        active = others.sum(axis=1)
        weights = self.p_f ** active * (1.0 - self.p_f) ** (self.K - 1 - active)
        return others, weights

    def conditional_rates(self, I: Collection[int], l: int, f: int) -> Tuple[float, float]:
        """Taxas exatas, enumerando os 2^(K-1) estados dos demais fatores."""
        self._check_factor(f)
        indices = self._check_set(I, l)
        others, weights = self._other_factor_states(f)
        factors = np.insert(others, f, False, axis=1)
        rates = []
        for f_state in (True, False):
            factors[:, f] = f_state
            grid = self.grid_given_factors(factors)
            fires = grid[:, indices].sum(axis=1) >= l
            rates.append(float(weights[fires].sum()))
        return rates[0], rates[1]

    def joint_distribution(self, f: int) -> ExplicitDistribution:
        self._check_factor(f)
        if self.n + 1 > ENUMERATION_CAP or self.K > ENUMERATION_CAP:
            raise DomainError("modelo grande demais para enumeração exata")
        factors = state_matrix(self.K)
        active = factors.sum(axis=1)
        weights = self.p_f ** active * (1.0 - self.p_f) ** (self.K - active)
        grid = self.grid_given_factors(factors)
        codes = (grid.astype(np.int64) << np.arange(self.n)).sum(axis=1)
        codes += factors[:, f].astype(np.int64) << self.n
        prob = np.bincount(codes, weights=weights, minlength=1 << (self.n + 1))
        return ExplicitDistribution.from_weights(self.n + 1, prob)

    def preselect(self, f: int, i: int, rng: np.random.Generator, rank: Optional[int] = None) -> List[int]:
        """Escolhe i bits de G(f), restritos ao posto de pureza `rank` se dado."""
        self._check_factor(f)
        candidates = np.flatnonzero(self.linkage[f])
        if rank is not None:
            candidates = candidates[self.purity_ranks()[candidates] == rank]
        if candidates.size < i:
            raise DomainError(
                f"apenas {candidates.size} bits de G({f}) com posto {rank}, pedidos {i}"
            )
        return sorted(int(b) for b in rng.choice(candidates, size=i, replace=False))

    def __repr__(self) -> str:
        return f"SparseGridModel(n={self.n}, K={self.K}, p_f={self.p_f}, p_g={self.p_g})"


class GridStream:
    """
    Fluxo contínuo de instantes de um modelo, gerado em blocos. Estados não
    consumidos podem ser devolvidos com `push_back` e saem antes dos novos.
    """

    def __init__(self, model: GridModel, rng: np.random.Generator, block: int = 256):
        self.model = model
        self.rng = rng
        self.block = max(1, int(block))
        self._grid = np.zeros((0, model.n), dtype=bool)
        self._factors = np.zeros((0, model.n_factors), dtype=bool)
        self.consumed = 0

    def take(self, count: int) -> Tuple[np.ndarray, np.ndarray]:
        while self._grid.shape[0] < count:
            grid, factors = self.model.draw_block(self.rng, max(self.block, count))
            self._grid = np.vstack([self._grid, grid])
            self._factors = np.vstack([self._factors, factors])
        grid, self._grid = self._grid[:count], self._grid[count:]
        factors, self._factors = self._factors[:count], self._factors[count:]
        self.consumed += count
        return grid, factors

    def push_back(self, grid: np.ndarray, factors: np.ndarray) -> None:
        self._grid = np.vstack([grid, self._grid])
        self._factors = np.vstack([factors, self._factors])
        self.consumed -= grid.shape[0]

    def __iter__(self) -> Iterator[Tuple[np.ndarray, np.ndarray]]:
        while True:
            grid, factors = self.take(1)
            yield grid[0], factors[0]


# ----------------------------------------------------------------------
# Fórmulas analíticas e escolha da 5-tupla
# ----------------------------------------------------------------------


def spn_margin(i: int, p_N: float) -> Tuple[float, float]:
    """(ω_i, δ_i) que maximizam a margem de pureza com i bits pré-selecionados."""
    if i < 0:
        raise DomainError(f"i deve ser >= 0, recebido {i}")
    scale = p_N ** i / 2.0
    return (1.0 + p_N) * scale, (1.0 - p_N) * scale


def sparse_omega(l: int, p_f: float, K: Optional[int] = None) -> float:
    """
    Pureza de um bit de G(f) com posto l: 1 - (1 - p_f)^(l-1).

    Com K informado, o posto também é limitado pelo número de fatores.
    """
    if l < 1 or (K is not None and l > K):
        raise DomainError(f"posto de pureza {l} fora de [1, K={K}]")
    return 1.0 - (1.0 - p_f) ** (l - 1)


def sparse_omega_minus(l: int, K: int, p_f: float) -> float:
    """Menor pureza atingível para posto l: P(Binom(K, p_f) >= K - l - 1)."""
    if not 1 <= l <= K:
        raise DomainError(f"posto {l} fora de [1, K={K}]")
    return float(binom.sf(K - l - 2, K, p_f))


def bit_activation_rate(k: int, p_g: float) -> float:
    """P(bit ativo | k fatores ativos), marginalizando a ligação: 1 - (1 - p_g)^k."""
    return 1.0 - (1.0 - p_g) ** k


def _initial_weight(phi: float, p: int, q: int, T: int) -> int:
    drift = phi * (p + q) - p
    return max(1, math.ceil(-T * drift))


def validate_tuple(sp: ScoreParams, omega: float, delta: float, factor_rate: float) -> bool:
    """φ·(p+q) - p <= 0 e φ'·(p+q) - p > 0, com φ' calculado em ω - δ."""
    phi = precision_from_purity(omega, factor_rate)
    phi_prime = precision_from_purity(max(omega - delta, 0.0), factor_rate)
    s = sp.p + sp.q
    return phi * s - sp.p <= 0 and phi_prime * s - sp.p > 0


def select_tuple(omega: float, delta: float, factor_rate: float, T: int) -> ScoreParams:
    """
    Escolhe (p, q) com a menor soma p + q (empate: menor p) que satisfaz
    `validate_tuple`, e deriva N = ⌈-T·(φ·(p+q) - p)⌉.

    Raises:
        InfeasibleTupleError: nenhum par com p + q <= 64.
    """
    if not 0.0 < factor_rate < 1.0:
        raise DomainError(f"factor_rate deve estar em (0, 1), recebido {factor_rate}")
    if not 0.0 <= delta <= omega:
        raise ContractError(f"exige 0 <= delta <= omega, recebido ({omega}, {delta})")
    phi = precision_from_purity(omega, factor_rate)
    phi_prime = precision_from_purity(omega - delta, factor_rate)
    for s in range(2, PQ_SEARCH_CAP + 1):
        for p in range(1, s):
            q = s - p
            if phi * s - p <= 0 and phi_prime * s - p > 0:
                N = _initial_weight(phi, p, q, T)
                logger.debug("tupla escolhida: phi=%.6f N=%d p=%d q=%d", phi, N, p, q)
                return ScoreParams(omega, N, T, p, q)
    raise InfeasibleTupleError(
        f"nenhum (p, q) com p + q <= {PQ_SEARCH_CAP} para omega={omega}, delta={delta}"
    )


def fixed_tuple(
    omega: float, delta: float, factor_rate: float, T: int, p: int, q: int
) -> ScoreParams:
    """
    Tupla com (p, q) impostos: verifica `validate_tuple` e deriva N.

    Raises:
        InfeasibleTupleError: (p, q) não separa ω de ω - δ.
    """
    phi = precision_from_purity(omega, factor_rate)
    sp = ScoreParams(omega, _initial_weight(phi, p, q, T), T, p, q)
    if not validate_tuple(sp, omega, delta, factor_rate):
        raise InfeasibleTupleError(
            f"(p, q)=({p}, {q}) não separa omega={omega} de omega-delta={omega - delta}"
        )
    return sp


def select_sparse_tuple(
    omega: float,
    factor_rate: float,
    T: int,
    p: Optional[int] = None,
    q: Optional[int] = None,
) -> ScoreParams:
    """
    Tupla para a grade esparsa: basta φ·(p+q) - p < 0. Com (p, q) dados só
    verifica a desigualdade; sem eles usa a menor soma (empate: menor p).
    ω negativo (ω̂ - δ abaixo de zero) é tratado como 0.
    """
    omega = max(omega, 0.0)
    phi = precision_from_purity(omega, factor_rate)
    if p is not None and q is not None:
        if phi * (p + q) - p >= 0:
            raise InfeasibleTupleError(f"(p, q)=({p}, {q}) não satisfaz phi*(p+q) - p < 0")
        return ScoreParams(omega, _initial_weight(phi, p, q, T), T, p, q)
    for s in range(2, PQ_SEARCH_CAP + 1):
        for cand in range(1, s):
            if phi * s - cand < 0:
                return ScoreParams(omega, _initial_weight(phi, cand, s - cand, T), T, cand, s - cand)
    raise InfeasibleTupleError(f"nenhum (p, q) com p + q <= {PQ_SEARCH_CAP} para omega={omega}")


def expected_sample_size(model: SignalPlusNoiseModel, p_s: float) -> float:
    """E[|S|] = k + (n - k)·p_N·p_s."""
    if not 0.0 <= p_s <= 1.0:
        raise DomainError(f"p_s deve estar em [0, 1], recebido {p_s}")
    return model.k + (model.n - model.k) * model.p_N * p_s


@dataclass(frozen=True)
class JointOmegaEstimate:
    omega: float
    mu: float
    nu: float
    draws: int


def estimate_joint_omega(
    model: GridModel,
    preselected: Collection[int],
    f: int,
    draws: int,
    rng: np.random.Generator,
) -> JointOmegaEstimate:
    """
    ω̂ do conjunto pré-selecionado no nível |I|, estimado como ν̂/μ̂ a partir de
    `draws` instantes rotulados.
    """
    if draws < 1:
        raise ContractError("draws deve ser >= 1")
    indices = sorted(preselected)
    grid, factors = model.draw_block(rng, draws)
    fires = grid[:, indices].all(axis=1)
    active = factors[:, f]
    mu = float(fires[active].mean()) if active.any() else 0.0
    nu = float(fires[~active].mean()) if (~active).any() else 0.0
    if mu == 0:
        raise UndefinedPurityError("o conjunto pré-selecionado nunca disparou com o fator ativo")
    omega = nu / mu
    logger.info("omega estimado %.4f (mu=%.4f, nu=%.4f, %d amostras)", omega, mu, nu, draws)
    return JointOmegaEstimate(omega, mu, nu, draws)
