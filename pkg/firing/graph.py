"""
Grafo de disparo: estrutura em camadas com matrizes de ligação ponderadas
(entrada->núcleo, núcleo->núcleo, núcleo->saída) e os núcleos de propagação
FT/FP (para frente), injeção de feedback, BT/BP (para trás) e SU
(atualização de estrutura).

Linha do tempo adotada:
    - a entrada apresentada no tique t é x_i(t);
    - x_c(t) = [x_i(t-1)·I + x_c(t-1)·C >= níveis], x_o(t) = [x_c(t-1)·O >= 1];
    - um pacote de feedback que chega a um núcleo de profundidade a (a = 0
      para núcleos ligados às saídas) é filtrado pela atividade desse núcleo
      no slot de memória 2a+1; ao atravessar uma aresta até a fonte (profundidade
      a+1) é filtrado pelo slot 2a+3.
"""

import logging
from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
import scipy.sparse as sp

from firing.errors import DomainError, GraphError
from firing.f2core import BitVector

logger = logging.getLogger(__name__)


def _csr(matrix, shape: Tuple[int, int]) -> sp.csr_matrix:
    m = sp.csr_matrix(matrix, shape=shape, dtype=np.int64, copy=True)
    m.sum_duplicates()
    m.sort_indices()
    return m


def _edge_rows(m: sp.csr_matrix) -> np.ndarray:
    """Linha (vértice de origem) de cada entrada de `m.data`."""
    return np.repeat(np.arange(m.shape[0]), np.diff(m.indptr))


def _structure(m: sp.csr_matrix) -> sp.csr_matrix:
    """Matriz não ponderada A = A_w > 0 (mesmo padrão de esparsidade)."""
    return sp.csr_matrix(
        ((m.data > 0).astype(np.int64), m.indices, m.indptr), shape=m.shape
    )


class FiringGraph:
    """
    Grafo de disparo G(V, D_w) separado em entradas, núcleos e saídas.

    Uma aresta existe se e somente se seu peso é positivo. Arestas removidas
    continuam no padrão esparso com peso 0, para que os orçamentos de
    atualização (um por aresta) fiquem alinhados com `data`.
    """

    def __init__(
        self,
        I_w,
        C_w,
        O_w,
        levels: Sequence[int],
        mask_i: Optional[Sequence[bool]] = None,
        mask_c: Optional[Sequence[bool]] = None,
        d_max: Optional[int] = None,
        input_bits: Optional[Sequence[int]] = None,
        grid_width: Optional[int] = None,
        budgets: Optional[Tuple[np.ndarray, np.ndarray, np.ndarray]] = None,
        validate: bool = True,
        layers: Optional[np.ndarray] = None,
    ):
        self.levels = np.asarray(levels, dtype=np.int64)
        n_c = self.levels.size
        n_i = np.shape(I_w)[0]
        n_o = np.shape(O_w)[1]
        self.I_w = _csr(I_w, (n_i, n_c)) if validate else I_w
        self.C_w = _csr(C_w, (n_c, n_c)) if validate else C_w
        self.O_w = _csr(O_w, (n_c, n_o)) if validate else O_w
        if validate:
            for m in (self.I_w, self.C_w, self.O_w):
                if (m.data < 0).any():
                    raise GraphError("pesos negativos")
                m.eliminate_zeros()
        self.mask_i = (
            np.zeros(n_i, dtype=bool) if mask_i is None else np.asarray(mask_i, dtype=bool)
        )
        self.mask_c = (
            np.zeros(n_c, dtype=bool) if mask_c is None else np.asarray(mask_c, dtype=bool)
        )
        self.input_bits = (
            np.arange(n_i) if input_bits is None else np.asarray(input_bits, dtype=np.int64)
        )
        self.grid_width = (
            int(self.input_bits.max()) + 1 if grid_width is None else int(grid_width)
        )
        self.I = _structure(self.I_w)
        self.C = _structure(self.C_w)
        self.O = _structure(self.O_w)
        self.layers = self._core_layers(strict=validate) if layers is None else layers
        n_layers = int(self.layers.max()) + 1 if n_c else 1
        minimum = (n_layers - 1) * 2 + 1
        self.d_max = minimum if d_max is None else int(d_max)
        if budgets is None:
            budgets = (
                np.zeros(self.I_w.nnz, dtype=np.int64),
                np.zeros(self.C_w.nnz, dtype=np.int64),
                np.zeros(self.O_w.nnz, dtype=np.int64),
            )
        self.budget_i, self.budget_c, self.budget_o = budgets
        if validate:
            self._validate(minimum)

    # ------------------------------------------------------------------
    # Construção e validação
    # ------------------------------------------------------------------

    @property
    def n_i(self) -> int:
        return self.I_w.shape[0]

    @property
    def n_c(self) -> int:
        return self.levels.size

    @property
    def n_o(self) -> int:
        return self.O_w.shape[1]

    def _core_layers(self, strict: bool) -> np.ndarray:
        """Camada de cada núcleo: 1 + maior camada entre seus predecessores."""
        dag = nx.DiGraph()
        dag.add_nodes_from(range(self.n_c))
        src, dst = self.C.nonzero()
        dag.add_edges_from(zip(src.tolist(), dst.tolist()))
        try:
            order = list(nx.topological_sort(dag))
        except nx.NetworkXUnfeasible:
            raise GraphError("as ligações núcleo->núcleo formam um ciclo")
        fed_by_input = np.asarray(self.I.sum(axis=0)).ravel() > 0
        layers = np.ones(self.n_c, dtype=np.int64)
        for c in order:
            preds = list(dag.predecessors(c))
            if preds:
                layers[c] = 1 + max(layers[p] for p in preds)
            elif strict and not fed_by_input[c]:
                raise GraphError(f"núcleo {c} sem arestas de entrada")
        return layers

    def _validate(self, minimum_d_max: int) -> None:
        if (self.levels < 1).any():
            raise GraphError("níveis devem ser >= 1")
        in_degree = (
            np.asarray(self.I.sum(axis=0)).ravel() + np.asarray(self.C.sum(axis=0)).ravel()
        )
        if (self.levels > in_degree).any():
            raise GraphError("nível maior que o grau de entrada do núcleo")
        if self.d_max < minimum_d_max:
            raise GraphError(f"d_max={self.d_max} < {minimum_d_max} exigido pelas camadas")
        if self.mask_i.size != self.n_i or self.mask_c.size != self.n_c:
            raise GraphError("máscaras com tamanho incompatível")
        if self.input_bits.size != self.n_i:
            raise GraphError("input_bits com tamanho incompatível")

    def _replace(self, I_w, C_w, O_w, mask_i, mask_c, budgets) -> "FiringGraph":
        return FiringGraph(
            I_w,
            C_w,
            O_w,
            self.levels,
            mask_i=mask_i,
            mask_c=mask_c,
            d_max=self.d_max,
            input_bits=self.input_bits,
            grid_width=self.grid_width,
            budgets=budgets,
            validate=False,
            layers=self.layers,
        )

    def with_budget(self, T: int) -> "FiringGraph":
        """Cópia com orçamento T em cada aresta viva de vértice mascarado."""
        budgets = []
        for m, mask in ((self.I_w, self.mask_i), (self.C_w, self.mask_c), (self.O_w, self.mask_c)):
            live = mask[_edge_rows(m)] & (m.data > 0)
            budgets.append(np.where(live, int(T), 0).astype(np.int64))
        return self._replace(
            self.I_w, self.C_w, self.O_w, self.mask_i.copy(), self.mask_c.copy(), tuple(budgets)
        )

    # ------------------------------------------------------------------
    # Consultas
    # ------------------------------------------------------------------

    def updatable_edge_count(self) -> int:
        """Arestas que ainda podem receber feedback (máscara, orçamento, peso)."""
        total = 0
        for m, budget, mask in (
            (self.I_w, self.budget_i, self.mask_i),
            (self.C_w, self.budget_c, self.mask_c),
            (self.O_w, self.budget_o, self.mask_c),
        ):
            total += int((mask[_edge_rows(m)] & (budget > 0) & (m.data > 0)).sum())
        return total

    def live_edge_count(self) -> int:
        return int(
            (self.I_w.data > 0).sum() + (self.C_w.data > 0).sum() + (self.O_w.data > 0).sum()
        )

    def input_weights(self) -> Dict[Tuple[int, int], int]:
        """Peso de cada aresta entrada->núcleo, removidas incluídas (peso 0)."""
        rows = _edge_rows(self.I_w)
        return {
            (int(r), int(c)): int(w)
            for r, c, w in zip(rows, self.I_w.indices, self.I_w.data)
        }

    def to_networkx(self) -> nx.DiGraph:
        graph = nx.DiGraph()
        graph.add_nodes_from(("i", j) for j in range(self.n_i))
        graph.add_nodes_from(("c", j) for j in range(self.n_c))
        graph.add_nodes_from(("o", j) for j in range(self.n_o))
        for kind_src, kind_dst, m in (("i", "c", self.I_w), ("c", "c", self.C_w), ("c", "o", self.O_w)):
            rows = _edge_rows(m)
            for r, c, w in zip(rows, m.indices, m.data):
                if w > 0:
                    graph.add_edge((kind_src, int(r)), (kind_dst, int(c)), weight=int(w))
        return graph

    def __repr__(self) -> str:
        return (
            f"FiringGraph(n_i={self.n_i}, n_c={self.n_c}, n_o={self.n_o}, "
            f"d_max={self.d_max}, edges={int((self.I_w.data > 0).sum())}"
            f"+{int((self.C_w.data > 0).sum())}+{int((self.O_w.data > 0).sum())})"
        )


def output_reachable_inputs(g: FiringGraph) -> FrozenSet[int]:
    """Entradas com caminho de arestas de peso positivo até alguma saída."""
    graph = g.to_networkx()
    reaching = set()
    for j in range(g.n_o):
        reaching |= nx.ancestors(graph, ("o", j))
    return frozenset(idx for kind, idx in reaching if kind == "i")


def connected_component_count(g: FiringGraph) -> int:
    """Componentes fracamente conexas do grafo de arestas positivas."""
    return nx.number_weakly_connected_components(g.to_networkx())


# ----------------------------------------------------------------------
# Estados
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class ForwardState:
    """
    Estados da camada no tique corrente e memórias dos últimos d_max+1 estados
    (slot 0 é o mais recente).
    """

    x_i: BitVector
    x_c: BitVector
    x_o: BitVector
    mem_i: np.ndarray
    mem_c: np.ndarray

    @classmethod
    def initial(cls, g: FiringGraph) -> "ForwardState":
        return cls(
            BitVector.zeros(g.n_i),
            BitVector.zeros(g.n_c),
            BitVector.zeros(g.n_o),
            np.zeros((g.d_max + 1, g.n_i), dtype=bool),
            np.zeros((g.d_max + 1, g.n_c), dtype=bool),
        )

    def advance(self, x_i: np.ndarray, x_c: np.ndarray, x_o: np.ndarray) -> "ForwardState":
        mem_i = np.vstack([x_i[None, :], self.mem_i[:-1]])
        mem_c = np.vstack([x_c[None, :], self.mem_c[:-1]])
        return ForwardState(BitVector(x_i), BitVector(x_c), BitVector(x_o), mem_i, mem_c)


@dataclass(frozen=True)
class BackwardState:
    """
    Feedback em trânsito. A coluna a de X_b_c guarda os pacotes que estão em
    núcleos de profundidade a; a coluna 1 de X_b_o guarda o feedback recém
    emitido pelas saídas. Valores em {0, q, -p} (somas quando um núcleo
    alimenta várias saídas).
    """

    X_b_c: np.ndarray
    X_b_o: np.ndarray

    @classmethod
    def initial(cls, g: FiringGraph) -> "BackwardState":
        return cls(
            np.zeros((g.n_c, g.d_max), dtype=np.int64),
            np.zeros((g.n_o, g.d_max), dtype=np.int64),
        )


# ----------------------------------------------------------------------
# Propagação para frente (FT + FP)
# ----------------------------------------------------------------------


def _spdot(structure: sp.csr_matrix, rows: np.ndarray) -> np.ndarray:
    """rows (B x n_src) · structure (n_src x n_dst) -> (B x n_dst) inteiro."""
    return np.asarray(structure.T @ rows.astype(np.int64).T).T


def propagate_block(
    g: FiringGraph, s: ForwardState, inputs: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Propaga um bloco de B tiques consecutivos com a estrutura de `g` fixa.

    A linha k de `inputs` é a entrada apresentada no tique t+k+1. Os núcleos
    são resolvidos camada por camada, vetorizados no tempo, o que dá exatamente
    o mesmo resultado que B chamadas de `forward_step`.

    Returns:
        (estados dos núcleos, estados das saídas), cada um com B linhas.
    """
    inputs = np.asarray(inputs, dtype=bool)
    B = inputs.shape[0]
    prev_inputs = np.vstack([s.x_i.bits[None, :], inputs[:-1]])
    from_inputs = _spdot(g.I, prev_inputs)
    cores = np.zeros((B + 1, g.n_c), dtype=bool)
    cores[0] = s.x_c.bits
    for layer in np.unique(g.layers):
        cols = np.flatnonzero(g.layers == layer)
        total = from_inputs[:, cols] + _spdot(g.C, cores[:-1])[:, cols]
        cores[1:, cols] = total >= g.levels[cols]
    outputs = _spdot(g.O, cores[:-1]) >= 1
    return cores[1:], outputs


def forward_step(g: FiringGraph, x_i_new: BitVector, s: ForwardState) -> ForwardState:
    """
    Um tique de FT/FP: núcleos e saídas calculados a partir do tique anterior,
    memórias deslocadas com os novos estados no slot 0.

    Raises:
        DomainError: se a largura da entrada for diferente de n_i.
    """
    if x_i_new.width != g.n_i:
        raise DomainError(f"entrada de largura {x_i_new.width}, grafo com n_i={g.n_i}")
    cores, outputs = propagate_block(g, s, x_i_new.bits[None, :])
    return s.advance(x_i_new.bits, cores[0], outputs[0])


# ----------------------------------------------------------------------
# Propagação para trás (feedback, BT + BP, SU)
# ----------------------------------------------------------------------


def inject_feedback(
    g: FiringGraph, s: ForwardState, b: BackwardState, x_f: int, p: int, q: int
) -> BackwardState:
    """
    Feedback das saídas: x_o ∘ ((p + q)·x_f − p), escrito na coluna 1 de X_b_o.

    `x_f` é o estado do fator já atrasado para o instante que causou o disparo.
    """
    fresh = s.x_o.bits.astype(np.int64) * ((p + q) * int(x_f) - p)
    X_b_o = np.zeros_like(b.X_b_o)
    X_b_o[:, 1] = fresh
    return BackwardState(b.X_b_c, X_b_o)


def backward_step(g: FiringGraph, s: ForwardState, b: BackwardState) -> BackwardState:
    """
    Transmite o feedback uma camada para trás. Um núcleo de profundidade a
    só recebe o pacote se estava ativo no slot de memória 2a+1.
    """
    X_b_c = np.zeros_like(b.X_b_c)
    X_b_c[:, 0] = np.asarray(g.O @ b.X_b_o[:, 1]).ravel() * s.mem_c[1]
    for age in range(g.d_max - 1):
        slot = 2 * age + 3
        if slot > g.d_max:
            break
        X_b_c[:, age + 1] = np.asarray(g.C @ b.X_b_c[:, age]).ravel() * s.mem_c[slot]
    return BackwardState(X_b_c, b.X_b_o)


def _apply_feedback(
    weights: sp.csr_matrix,
    budget: np.ndarray,
    src_mask: np.ndarray,
    events: List[np.ndarray],
) -> Tuple[sp.csr_matrix, np.ndarray, int]:
    data = weights.data.copy()
    budget = budget.copy()
    live = src_mask[_edge_rows(weights)] & (data > 0)
    removed = 0
    for values in events:
        hit = live & (budget > 0) & (values != 0)
        data[hit] += values[hit]
        budget[hit] -= 1
        dead = hit & (data <= 0)
        if dead.any():
            data[dead] = 0
            budget[dead] = 0
            live &= ~dead
            removed += int(dead.sum())
    updated = sp.csr_matrix(
        (data, weights.indices.copy(), weights.indptr.copy()), shape=weights.shape
    )
    return updated, budget, removed


def _still_updatable(
    n: int, weights: sp.csr_matrix, budget: np.ndarray, mask: np.ndarray
) -> np.ndarray:
    rows = _edge_rows(weights)
    alive = (budget > 0) & (weights.data > 0)
    has = np.zeros(n, dtype=bool)
    has[rows[alive]] = True
    return mask & has


def structure_update(g: FiringGraph, s: ForwardState, b: BackwardState) -> FiringGraph:
    """
    SU: cada aresta existente, mascarada e com orçamento recebe o feedback a
    que sua origem é elegível (+q ou -p por evento). Peso <= 0 remove a
    aresta de vez; cada evento consome uma unidade do orçamento.
    """
    ages = [a for a in range(g.d_max) if 2 * a + 3 <= g.d_max]

    rows, cols = _edge_rows(g.I_w), g.I_w.indices
    input_events = [b.X_b_c[cols, a] * s.mem_i[2 * a + 3, rows] for a in ages]
    I_w, budget_i, removed_i = _apply_feedback(g.I_w, g.budget_i, g.mask_i, input_events)

    rows, cols = _edge_rows(g.C_w), g.C_w.indices
    core_events = [b.X_b_c[cols, a] * s.mem_c[2 * a + 3, rows] for a in ages]
    C_w, budget_c, removed_c = _apply_feedback(g.C_w, g.budget_c, g.mask_c, core_events)

    rows, cols = _edge_rows(g.O_w), g.O_w.indices
    output_events = [b.X_b_o[cols, 1] * s.mem_c[1, rows]]
    O_w, budget_o, removed_o = _apply_feedback(g.O_w, g.budget_o, g.mask_c, output_events)

    if removed_i or removed_c or removed_o:
        logger.debug("arestas removidas: %d entrada, %d núcleo, %d saída",
                     removed_i, removed_c, removed_o)

    mask_i = _still_updatable(g.n_i, I_w, budget_i, g.mask_i)
    mask_c = _still_updatable(g.n_c, C_w, budget_c, g.mask_c) | _still_updatable(
        g.n_c, O_w, budget_o, g.mask_c
    )
    return g._replace(I_w, C_w, O_w, mask_i, mask_c, (budget_i, budget_c, budget_o))


# ----------------------------------------------------------------------
# Formato texto (snapshot)
# ----------------------------------------------------------------------


def _bits(values: np.ndarray) -> str:
    return "".join("1" if v else "0" for v in values) or "-"


def dump_snapshot(g: FiringGraph) -> str:
    """
    Serializa o grafo em texto estável: cabeçalho e uma linha `src dst peso`
    por aresta viva, ordenadas por (src, dst). Vértices numerados globalmente:
    entradas, depois núcleos, depois saídas.
    """
    lines = [
        "firing-graph v1",
        f"layers {g.n_i} {g.n_c} {g.n_o}",
        f"d_max {g.d_max}",
        f"grid_width {g.grid_width}",
        "inputs " + " ".join(str(b) for b in g.input_bits),
        "levels " + " ".join(str(l) for l in g.levels),
        f"mask_i {_bits(g.mask_i)}",
        f"mask_c {_bits(g.mask_c)}",
        "edges",
    ]
    edges = []
    offsets = ((g.I_w, 0, g.n_i), (g.C_w, g.n_i, g.n_i), (g.O_w, g.n_i, g.n_i + g.n_c))
    for m, src_offset, dst_offset in offsets:
        rows = _edge_rows(m)
        for r, c, w in zip(rows, m.indices, m.data):
            if w > 0:
                edges.append((int(r) + src_offset, int(c) + dst_offset, int(w)))
    lines.extend(f"{s} {d} {w}" for s, d, w in sorted(edges))
    return "\n".join(lines) + "\n"


def load_snapshot(text: str) -> FiringGraph:
    """Reconstrói um grafo escrito por `dump_snapshot` (orçamentos zerados)."""
    header: Dict[str, List[str]] = {}
    lines = [line.strip() for line in text.strip().splitlines()]
    if not lines or lines[0] != "firing-graph v1":
        raise GraphError("snapshot sem cabeçalho 'firing-graph v1'")
    cut = lines.index("edges")
    for line in lines[1:cut]:
        key, *values = line.split()
        header[key] = values
    n_i, n_c, n_o = (int(v) for v in header["layers"])
    I_w = sp.lil_matrix((n_i, n_c), dtype=np.int64)
    C_w = sp.lil_matrix((n_c, n_c), dtype=np.int64)
    O_w = sp.lil_matrix((n_c, n_o), dtype=np.int64)
    for line in lines[cut + 1:]:
        src, dst, weight = (int(v) for v in line.split())
        if src < n_i:
            I_w[src, dst - n_i] = weight
        elif dst < n_i + n_c:
            C_w[src - n_i, dst - n_i] = weight
        else:
            O_w[src - n_i, dst - n_i - n_c] = weight

    def mask(key: str) -> np.ndarray:
        raw = header[key][0]
        return np.array([ch == "1" for ch in raw] if raw != "-" else [], dtype=bool)

    return FiringGraph(
        _csr(I_w, (n_i, n_c)),
        _csr(C_w, (n_c, n_c)),
        _csr(O_w, (n_c, n_o)),
        [int(v) for v in header["levels"]],
        mask_i=mask("mask_i"),
        mask_c=mask("mask_c"),
        d_max=int(header["d_max"][0]),
        input_bits=[int(v) for v in header.get("inputs", [])] or None,
        grid_width=int(header["grid_width"][0]),
        validate=False,
    )
