"""
Álgebra de vetores binários e polinômios característicos.

Convenções:
    - índices começam em 0 e o bit 0 é o mais à esquerda na representação
      textual ("1010" tem suporte {0, 2});
    - a soma "+" dos polinômios é o OU lógico, logo
      P_I^{l0}[x] = 1 se e somente se |I ∩ supp(x)| >= l0;
    - P_{I,0} é a constante 1.
"""

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Collection, FrozenSet, Iterable, Mapping, Optional, Sequence

import numpy as np

from firing.errors import ContractError, DomainError

# Acima disso 2^width estados não cabem: use os estimadores de Monte Carlo.
ENUMERATION_CAP = 20


class BitVector:
    """
    Estado binário de largura fixa (grade de medida ou camada de vértices).
    """

    __slots__ = ("_bits",)

    def __init__(self, bits: Iterable[int]):
        arr = np.array(list(bits) if not isinstance(bits, np.ndarray) else bits)
        arr = arr.astype(bool).ravel()
        if arr.size == 0:
            raise DomainError("a largura de um BitVector deve ser positiva")
        arr.setflags(write=False)
        self._bits = arr

    @classmethod
    def zeros(cls, width: int) -> "BitVector":
        return cls(np.zeros(width, dtype=bool))

    @classmethod
    def from_string(cls, text: str) -> "BitVector":
        """Lê "1010" (bit 0 à esquerda)."""
        if any(ch not in "01" for ch in text):
            raise DomainError(f"representação binária inválida: {text!r}")
        return cls([ch == "1" for ch in text])

    @property
    def width(self) -> int:
        return int(self._bits.size)

    @property
    def bits(self) -> np.ndarray:
        return self._bits

    def support(self) -> FrozenSet[int]:
        return frozenset(np.flatnonzero(self._bits).tolist())

    def packed(self) -> bytes:
        return np.packbits(self._bits).tobytes()

    def __len__(self) -> int:
        return self.width

    def __getitem__(self, index: int) -> int:
        return int(self._bits[index])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BitVector):
            return NotImplemented
        return self.width == other.width and self.packed() == other.packed()

    def __hash__(self) -> int:
        return hash((self.width, self.packed()))

    def __str__(self) -> str:
        return "".join("1" if b else "0" for b in self._bits)

    def __repr__(self) -> str:
        return f"BitVector('{self}')"


def _check_indices(indices: Collection[int], width: int) -> None:
    if width < 1:
        raise DomainError(f"largura inválida: {width}")
    bad = [i for i in indices if not 0 <= i < width]
    if bad:
        raise DomainError(f"índices fora de [0, {width - 1}]: {sorted(bad)}")


def indicator(index_set: Collection[int], width: int) -> BitVector:
    """
    Operador indicador: vetor com 1 exatamente nos índices de `index_set`.

    Raises:
        DomainError: se algum índice estiver fora de [0, width).
    """
    _check_indices(index_set, width)
    bits = np.zeros(width, dtype=bool)
    bits[list(index_set)] = True
    return BitVector(bits)


@dataclass(frozen=True)
class CharPoly:
    """
    Polinômio característico P_I^{level} num domínio de largura `width`.
    """

    index_set: FrozenSet[int]
    level: int
    width: int
    _idx: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "index_set", frozenset(self.index_set))
        _check_indices(self.index_set, self.width)
        if not 0 <= self.level <= len(self.index_set):
            raise ContractError(
                f"nível {self.level} fora de [0, {len(self.index_set)}]"
            )
        idx = np.array(sorted(self.index_set), dtype=np.intp)
        idx.setflags(write=False)
        object.__setattr__(self, "_idx", idx)

    @property
    def indices(self) -> np.ndarray:
        return self._idx

    def __str__(self) -> str:
        return f"P({sorted(self.index_set)}, {self.level})"


def _segment(indices: Sequence[int], level: int, states: np.ndarray) -> np.ndarray:
    """
    Segmento P_{I,level} avaliado em cada linha de `states`.

    Nível 0 é a constante 1; níveis fora de {0..|I|} valem 0.
    """
    m = states.shape[0]
    if level == 0:
        return np.ones(m, dtype=bool)
    if level < 0 or level > len(indices):
        return np.zeros(m, dtype=bool)
    return states[:, list(indices)].sum(axis=1) >= level


def evaluate_many(p: CharPoly, states: np.ndarray) -> np.ndarray:
    """Avalia `p` em cada linha de uma matriz de estados (m x width)."""
    states = np.asarray(states, dtype=bool)
    if states.ndim != 2 or states.shape[1] != p.width:
        raise DomainError(
            f"estados de largura {states.shape[-1]} para polinômio de largura {p.width}"
        )
    if p.level == 0:
        return np.ones(states.shape[0], dtype=bool)
    return states[:, p.indices].sum(axis=1) >= p.level


def eval_charpoly(p: CharPoly, x: BitVector) -> int:
    """
    Avalia P_I^{l0}[x]: 1 se |I ∩ supp(x)| >= l0, senão 0.

    Raises:
        DomainError: se as larguras não coincidirem.
    """
    if x.width != p.width:
        raise DomainError(f"largura {x.width} != largura do polinômio {p.width}")
    if p.level == 0:
        return 1
    return int(int(x.bits[p.indices].sum()) >= p.level)


def subset_oracle(index_set: Collection[int], level: int, x: BitVector) -> int:
    """
    Definição literal: OU, sobre todo subconjunto de I com tamanho >= level,
    do produto (E) das entradas de x. Exponencial; serve só de oráculo.
    """
    items = sorted(index_set)
    if level <= 0:
        return 1
    for size in range(level, len(items) + 1):
        for combo in itertools.combinations(items, size):
            if all(x[i] for i in combo):
                return 1
    return 0


@lru_cache(maxsize=None)
def state_matrix(width: int) -> np.ndarray:
    """Todos os 2^width estados; a linha `c` tem o bit b igual a (c >> b) & 1."""
    if not 1 <= width <= ENUMERATION_CAP:
        raise DomainError(f"largura {width} fora de [1, {ENUMERATION_CAP}]")
    codes = np.arange(1 << width, dtype=np.int64)
    states = ((codes[:, None] >> np.arange(width)) & 1).astype(bool)
    states.setflags(write=False)
    return states


def state_code(x: BitVector) -> int:
    return int(np.dot(x.bits.astype(np.int64), 1 << np.arange(x.width, dtype=np.int64)))


@dataclass(frozen=True)
class ExplicitDistribution:
    """
    Distribuição explícita sobre os 2^width estados (indexados por `state_code`).
    """

    width: int
    prob: np.ndarray

    def __post_init__(self) -> None:
        if not 1 <= self.width <= ENUMERATION_CAP:
            raise DomainError(
                f"largura {self.width} fora do limite de enumeração {ENUMERATION_CAP}"
            )
        prob = np.array(self.prob, dtype=float)
        if prob.shape != (1 << self.width,):
            raise DomainError(f"esperadas {1 << self.width} probabilidades")
        if (prob < 0).any():
            raise ContractError("probabilidades negativas")
        if abs(prob.sum() - 1.0) > 1e-9:
            raise ContractError(f"probabilidades somam {prob.sum():.12f}")
        prob.setflags(write=False)
        object.__setattr__(self, "prob", prob)

    @classmethod
    def uniform(cls, width: int) -> "ExplicitDistribution":
        return cls(width, np.full(1 << width, 1.0 / (1 << width)))

    @classmethod
    def point_mass(cls, x: BitVector) -> "ExplicitDistribution":
        prob = np.zeros(1 << x.width)
        prob[state_code(x)] = 1.0
        return cls(x.width, prob)

    @classmethod
    def bernoulli(cls, rates: Sequence[float]) -> "ExplicitDistribution":
        """Bits independentes, o bit b ativo com probabilidade rates[b]."""
        rates = np.asarray(rates, dtype=float)
        states = state_matrix(rates.size)
        prob = np.where(states, rates, 1.0 - rates).prod(axis=1)
        return cls(rates.size, prob / prob.sum())

    @classmethod
    def from_weights(cls, width: int, weights: np.ndarray) -> "ExplicitDistribution":
        weights = np.asarray(weights, dtype=float)
        total = weights.sum()
        if total <= 0:
            raise ContractError("pesos sem massa")
        return cls(width, weights / total)

    @classmethod
    def from_mapping(
        cls, width: int, mapping: Mapping[BitVector, float]
    ) -> "ExplicitDistribution":
        prob = np.zeros(1 << width)
        for x, value in mapping.items():
            if x.width != width:
                raise DomainError("estado de largura diferente da distribuição")
            prob[state_code(x)] += value
        return cls(width, prob)

    def states(self) -> np.ndarray:
        return state_matrix(self.width)

    def conditional(self, index: int, value: bool) -> "ExplicitDistribution":
        """Distribuição condicionada ao bit `index` valer `value`."""
        _check_indices([index], self.width)
        keep = self.states()[:, index] == bool(value)
        if self.prob[keep].sum() <= 0:
            raise ContractError(f"evento bit {index} = {int(bool(value))} tem massa nula")
        return ExplicitDistribution.from_weights(self.width, np.where(keep, self.prob, 0.0))


def _check_same_width(p: CharPoly, d: ExplicitDistribution) -> None:
    if p.width != d.width:
        raise DomainError(f"polinômio de largura {p.width} e distribuição {d.width}")


def norm(p: CharPoly, d: ExplicitDistribution) -> float:
    """
    Norma de P_I^{l0} em relação a d: soma de P[x] * d_x sobre todos os estados.
    """
    _check_same_width(p, d)
    fires = evaluate_many(p, d.states())
    return float(min(1.0, d.prob[fires].sum()))


def product(ps: Sequence[CharPoly], d: ExplicitDistribution) -> float:
    """
    Produto <P_1, ..., P_k>_d: massa dos estados em que todos os polinômios valem 1.

    Raises:
        ContractError: com menos de dois polinômios.
    """
    if len(ps) < 2:
        raise ContractError("o produto exige ao menos dois polinômios")
    for p in ps:
        _check_same_width(p, d)
    states = d.states()
    fires = np.ones(states.shape[0], dtype=bool)
    for p in ps:
        fires &= evaluate_many(p, states)
    return float(min(1.0, d.prob[fires].sum()))


def _enumerable(width: int, *sets: Collection[int]) -> np.ndarray:
    for s in sets:
        _check_indices(s, width)
    return state_matrix(width)


def verify_partition(
    I: Collection[int], J: Collection[int], K: Collection[int], width: int
) -> bool:
    """
    Verifica exaustivamente a identidade de partição

        P_I^{l0}[x] = Σ_{l=l0}^{|I|} Σ_{j=0}^{|J|} P_{J,j}[x] · P_{K,l-j}[x]

    para todo estado x e todo l0 em 1..|I|.

    Raises:
        ContractError: se (J, K) não for uma partição de I.
    """
    I, J, K = set(I), set(J), set(K)
    if J | K != I or J & K:
        raise ContractError("(J, K) não é uma partição de I")
    states = _enumerable(width, I)
    i_idx, j_idx, k_idx = sorted(I), sorted(J), sorted(K)
    for level in range(1, len(I) + 1):
        lhs = _segment(i_idx, level, states)
        rhs = np.zeros(states.shape[0], dtype=bool)
        for l in range(level, len(I) + 1):
            for j in range(0, len(J) + 1):
                rhs |= _segment(j_idx, j, states) & _segment(k_idx, l - j, states)
        if not np.array_equal(lhs, rhs):
            return False
    return True


def verify_level_split(I: Collection[int], b: int, width: int) -> bool:
    """
    Caso particular da partição com um único bit b ∈ I:

        P_{I,l}[x] = P_{I∖{b},l}[x] · P_{{b},0}[x] + P_{I∖{b},l-1}[x] · P_{{b},1}[x]
    """
    I = set(I)
    if b not in I:
        raise ContractError(f"bit {b} não pertence a I")
    states = _enumerable(width, I)
    rest = sorted(I - {b})
    for level in range(1, len(I) + 1):
        lhs = _segment(sorted(I), level, states)
        rhs = (_segment(rest, level, states) & _segment([b], 0, states)) | (
            _segment(rest, level - 1, states) & _segment([b], 1, states)
        )
        if not np.array_equal(lhs, rhs):
            return False
    return True


def verify_decomposition(
    I: Collection[int],
    Iprime: Collection[int],
    K: Collection[int],
    width: int,
    level_u: Optional[int] = None,
    level_v: int = 1,
) -> bool:
    """
    Verifica a decomposição em duas camadas. Com u(I, level_u), v(I', level_v)
    na camada 1 e w({u, v}, 2) na camada 2, x' = [P_u[x], P_v[x]]:

        P_{K,|K|}[x] · P_{{u,v},2}[x'] = Σ_{l=level_u}^{|I|} Σ_{J ⊆ I, |J|=l} P_{J∪K, l+|K|}[x]

    Quando level_u = |I|, level_v = 1 e K = {b}, verifica também
    P_{b,1}[x] · P_{{u,v},2}[x'] = P_{I∪{b}, |I|+1}[x].

    Args:
        I: entradas de u.
        Iprime: entradas de v, disjuntas de I.
        K: subconjunto de Iprime com |K| >= level_v.
        width: largura da grade (no máximo ENUMERATION_CAP).
        level_u: nível de u (padrão |I|).
        level_v: nível de v.

    Returns:
        True se a identidade vale em todos os 2^width estados.
    """
    I, Iprime, K = set(I), set(Iprime), set(K)
    if I & Iprime:
        raise ContractError("I e I' devem ser disjuntos")
    if not I or not Iprime:
        raise ContractError("I e I' devem ser não vazios")
    if level_u is None:
        level_u = len(I)
    if not 1 <= level_u <= len(I) or not 1 <= level_v <= len(Iprime):
        raise ContractError("níveis de u/v fora do intervalo")
    if not K <= Iprime or len(K) < level_v:
        raise ContractError("K deve estar contido em I' com |K| >= nível de v")
    states = _enumerable(width, I, Iprime)
    u = _segment(sorted(I), level_u, states)
    v = _segment(sorted(Iprime), level_v, states)
    xprime = np.stack([u, v], axis=1)
    lhs = _segment(sorted(K), len(K), states) & _segment([0, 1], 2, xprime)
    rhs = np.zeros(states.shape[0], dtype=bool)
    for l in range(level_u, len(I) + 1):
        for J in itertools.combinations(sorted(I), l):
            rhs |= _segment(sorted(set(J) | K), l + len(K), states)
    if not np.array_equal(lhs, rhs):
        return False
    if level_u == len(I) and level_v == 1 and len(K) == 1:
        joint = _segment(sorted(I | K), len(I) + 1, states)
        return bool(np.array_equal(lhs, joint))
    return True
