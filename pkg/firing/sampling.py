"""
Amostragem de bits da grade e construção dos grafos de disparo amostrados
(simples e conjunto).
"""

import logging
from dataclasses import dataclass
from typing import Collection, Optional, Tuple

import numpy as np
import scipy.sparse as sp

from firing.errors import ContractError, SamplingTimeout
from firing.graph import FiringGraph
from firing.models import GridModel, GridStream

logger = logging.getLogger(__name__)

MAX_SAMPLING_INSTANTS = 10 ** 6


@dataclass(frozen=True)
class SampleResult:
    sampled: Tuple[int, ...]
    preselected: Tuple[int, ...]
    instants_consumed: int


def sample(
    model: GridModel,
    f: int,
    p_s: float,
    S_p: Collection[int],
    rng: np.random.Generator,
    stream: Optional[GridStream] = None,
    max_instants: int = MAX_SAMPLING_INSTANTS,
) -> SampleResult:
    """
    Percorre os instantes até o primeiro em que o fator f e todos os bits de
    S_p estão ativos; cada bit ativo fora de S ∪ S_p entra em S com
    probabilidade p_s. Repete até S não ser vazio.

    Args:
        rng: gerador das moedas de admissão (e dos estados, se `stream` for None).
        stream: fluxo de instantes compartilhado com a drenagem.

    Raises:
        SamplingTimeout: mais de `max_instants` instantes consumidos.
    """
    if not 0.0 < p_s <= 1.0:
        raise ContractError(f"p_s deve estar em (0, 1], recebido {p_s}")
    stream = stream if stream is not None else GridStream(model, rng)
    preselected = sorted(set(S_p))
    selected = np.zeros(model.n, dtype=bool)
    blocked = np.zeros(model.n, dtype=bool)
    blocked[preselected] = True
    consumed = 0
    while consumed < max_instants:
        count = min(stream.block, max_instants - consumed)
        grid, factors = stream.take(count)
        gate = factors[:, f].astype(bool)
        if preselected:
            gate &= grid[:, preselected].all(axis=1)
        for row in np.flatnonzero(gate):
            candidates = np.flatnonzero(grid[row] & ~selected & ~blocked)
            admitted = candidates[rng.random(candidates.size) < p_s]
            selected[admitted] = True
            if selected.any():
                stream.push_back(grid[row + 1:], factors[row + 1:])
                consumed += int(row) + 1
                result = SampleResult(
                    tuple(np.flatnonzero(selected).tolist()), tuple(preselected), consumed
                )
                logger.debug("amostrados %d bits em %d instantes", len(result.sampled), consumed)
                return result
        consumed += count
    raise SamplingTimeout(f"nenhuma amostra após {max_instants} instantes")


def build_single(S: Collection[int], N: int, grid_width: Optional[int] = None) -> FiringGraph:
    """
    Grafo simples: entradas S, um núcleo v(S, 1) e uma saída; só as arestas
    das entradas são atualizáveis, todas com peso inicial N.
    """
    bits = sorted(set(S))
    if not bits:
        raise ContractError("S vazio")
    if N < 1:
        raise ContractError(f"N deve ser >= 1, recebido {N}")
    n_s = len(bits)
    return FiringGraph(
        np.full((n_s, 1), N, dtype=np.int64),
        sp.csr_matrix((1, 1), dtype=np.int64),
        np.ones((1, 1), dtype=np.int64),
        levels=[1],
        mask_i=np.ones(n_s, dtype=bool),
        mask_c=np.zeros(1, dtype=bool),
        input_bits=bits,
        grid_width=grid_width,
    )


def build_joint(
    S: Collection[int], pre: Collection[int], N: int, grid_width: Optional[int] = None
) -> FiringGraph:
    """
    Grafo conjunto: núcleos u(pre, |pre|) e v(S, 1) na camada 1, w({u, v}, 2)
    na camada 2 e uma saída alimentada por w. Entradas 0..|S|-1 são S e as
    seguintes são os pré-selecionados; só as arestas de S são atualizáveis.
    """
    sampled, preselected = sorted(set(S)), sorted(set(pre))
    if not sampled or not preselected:
        raise ContractError("S e pre devem ser não vazios")
    if set(sampled) & set(preselected):
        raise ContractError("S e pre se sobrepõem")
    if N < 1:
        raise ContractError(f"N deve ser >= 1, recebido {N}")
    n_s, n_p = len(sampled), len(preselected)
    u, v, w = 0, 1, 2
    I_w = np.zeros((n_s + n_p, 3), dtype=np.int64)
    I_w[:n_s, v] = N
    I_w[n_s:, u] = 1
    C_w = np.zeros((3, 3), dtype=np.int64)
    C_w[u, w] = C_w[v, w] = 1
    O_w = np.zeros((3, 1), dtype=np.int64)
    O_w[w, 0] = 1
    mask_i = np.zeros(n_s + n_p, dtype=bool)
    mask_i[:n_s] = True
    return FiringGraph(
        I_w,
        C_w,
        O_w,
        levels=[n_p, 1, 2],
        mask_i=mask_i,
        mask_c=np.zeros(3, dtype=bool),
        input_bits=sampled + preselected,
        grid_width=grid_width,
    )
