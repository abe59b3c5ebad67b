"""
Drenagem: propagação para frente e retropropagação de feedback até que as
arestas de baixa pureza desapareçam ou o orçamento acabe.
"""

import csv
import logging
from collections import deque
from dataclasses import dataclass, field
from typing import IO, Any, Collection, Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from firing.errors import ContractError
from firing.graph import (
    BackwardState,
    FiringGraph,
    ForwardState,
    backward_step,
    inject_feedback,
    output_reachable_inputs,
    propagate_block,
    structure_update,
)
from firing.metrics import ScoreParams
from firing.models import GridModel, GridStream
from firing.sampling import SampleResult, build_joint, build_single, sample

logger = logging.getLogger(__name__)

T_MAX_FACTOR = 20

STOP_DISCONNECTED = "disconnected"
STOP_MASK_EMPTY = "mask-empty"
STOP_T_MAX = "t-max"


@dataclass(frozen=True)
class DrainConfig:
    """
    Parâmetros da drenagem. `decay` é o número de camadas menos um (1 no grafo
    simples, 2 no conjunto); T_max padrão é 20·T.
    """

    T: int
    p: int
    q: int
    decay: int = 1
    T_max: Optional[int] = None
    batch_size: int = 64

    def __post_init__(self) -> None:
        if self.T < 0 or self.p < 1 or self.q < 1:
            raise ContractError(f"exige T >= 0, p >= 1, q >= 1: ({self.T}, {self.p}, {self.q})")
        if self.decay < 1:
            raise ContractError(f"decay deve ser >= 1, recebido {self.decay}")
        if self.batch_size < 1:
            raise ContractError("batch_size deve ser >= 1")
        if self.T_max is None:
            object.__setattr__(self, "T_max", T_MAX_FACTOR * self.T)
        if self.T_max < self.T:
            raise ContractError(f"T_max={self.T_max} < T={self.T}")

    @classmethod
    def from_tuple(cls, sp: ScoreParams, decay: int, T: Optional[int] = None, **kwargs) -> "DrainConfig":
        return cls(T=sp.T if T is None else T, p=sp.p, q=sp.q, decay=decay, **kwargs)

    @property
    def lag(self) -> int:
        """Tiques entre a entrada e o disparo da saída que ela causa."""
        return self.decay + 1


class DrainTrace:
    """
    Registra o peso de cada aresta entrada->núcleo a cada `every` tiques.
    `edge_src` é o bit da grade e `edge_dst` o índice do núcleo.
    """

    COLUMNS = ["tick", "edge_src", "edge_dst", "weight", "is_target"]

    def __init__(
        self,
        every: int,
        targets: Collection[int],
        extra: Optional[Mapping[str, Mapping[int, Any]]] = None,
    ):
        self.every = every
        self.targets = frozenset(targets)
        self.extra = dict(extra or {})
        self.rows: List[Dict[str, Any]] = []
        self._last_tick: Optional[int] = None

    @property
    def columns(self) -> List[str]:
        return self.COLUMNS + list(self.extra)

    def record(self, tick: int, g: FiringGraph, force: bool = False) -> None:
        if self.every <= 0 or tick == self._last_tick:
            return
        if not force and tick % self.every:
            return
        self._last_tick = tick
        for (src, dst), weight in sorted(g.input_weights().items()):
            bit = int(g.input_bits[src])
            row = {
                "tick": tick,
                "edge_src": bit,
                "edge_dst": dst,
                "weight": weight,
                "is_target": int(bit in self.targets),
            }
            for name, values in self.extra.items():
                row[name] = values.get(bit, "")
            self.rows.append(row)

    def write(self, handle: IO[str], header: Mapping[str, Any], rep: Optional[int] = None) -> None:
        """CSV precedido de linhas `# chave=valor` com a configuração."""
        write_traces(handle, header, [(0 if rep is None else rep, self)], with_rep=rep is not None)


def write_traces(
    handle: IO[str],
    header: Mapping[str, Any],
    traces: Sequence[Tuple[int, DrainTrace]],
    with_rep: bool = True,
    summary: Optional[Mapping[str, Any]] = None,
) -> None:
    """
    Junta os traços de várias repetições num CSV, com a coluna `rep` ao final.
    `summary`, se dado, fecha o arquivo numa linha `# summary chave=valor ...`.
    """
    for key, value in header.items():
        handle.write(f"# {key}={value}\n")
    columns = list(traces[0][1].columns) if traces else list(DrainTrace.COLUMNS)
    if with_rep:
        columns.append("rep")
    writer = csv.DictWriter(handle, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for rep, trace in traces:
        for row in trace.rows:
            writer.writerow(dict(row, rep=rep) if with_rep else row)
    if summary:
        pairs = " ".join(f"{key}={value}" for key, value in summary.items())
        handle.write(f"# summary {pairs}\n")


def survivor_counts(
    outcomes: Sequence["RepetitionOutcome"], targets: Collection[int]
) -> Dict[str, int]:
    """Contagens de sobreviventes usadas na linha final dos traços."""
    targets = frozenset(targets)
    counts = {"reps": len(outcomes)}
    counts.update(dict.fromkeys(("sampled", "survivors", "target_survivors", "no_survivor_reps"), 0))
    for outcome in outcomes:
        counts["sampled"] += len(outcome.sampling.sampled)
        counts["survivors"] += len(outcome.sampled_survivors)
        counts["target_survivors"] += len(outcome.sampled_survivors & targets)
        counts["no_survivor_reps"] += int(not outcome.sampled_survivors)
    return counts


@dataclass
class DrainResult:
    graph: FiringGraph
    ticks: int
    stop_reason: str


def _drainable_reachable(g: FiringGraph, drainable: FrozenSet[int]) -> bool:
    return bool(output_reachable_inputs(g) & drainable)


def run_drain(
    g: FiringGraph,
    model: GridModel,
    f: int,
    cfg: DrainConfig,
    stream: GridStream,
    trace: Optional[DrainTrace] = None,
) -> DrainResult:
    """
    Laço da drenagem. Em cada tique: propagação para frente, injeção do
    feedback com o fator atrasado de `cfg.lag` tiques, SU gerando G', BT sobre
    G e adoção de G'. Os tiques são propagados em blocos de `batch_size`;
    quando uma aresta some no meio do bloco o restante é recalculado.

    Paradas, verificadas após cada tique e nesta ordem: nenhuma entrada
    drenável alcança a saída, nenhuma aresta atualizável, T_max atingido.
    """
    g = g.with_budget(cfg.T)
    drainable = frozenset(np.flatnonzero(g.mask_i).tolist())
    s = ForwardState.initial(g)
    b = BackwardState.initial(g)
    history: deque = deque(maxlen=cfg.lag + 1)
    tick = 0
    if trace is not None:
        trace.record(0, g, force=True)
    if g.updatable_edge_count() == 0 or cfg.T_max == 0:
        return DrainResult(g, 0, STOP_MASK_EMPTY)

    reason = None
    while reason is None:
        count = min(cfg.batch_size, cfg.T_max - tick)
        grid, factors = stream.take(count)
        inputs = grid[:, g.input_bits]
        cores, outputs = propagate_block(g, s, inputs)
        for k in range(count):
            s = s.advance(inputs[k], cores[k], outputs[k])
            history.append(bool(factors[k, f]))
            x_f = history[0] if len(history) > cfg.lag else 0
            b = inject_feedback(g, s, b, x_f, cfg.p, cfg.q)
            updated = structure_update(g, s, b)
            b = backward_step(g, s, b)
            removed = updated.live_edge_count() < g.live_edge_count()
            g = updated
            tick += 1
            if trace is not None:
                trace.record(tick, g)
            if removed and not _drainable_reachable(g, drainable):
                reason = STOP_DISCONNECTED
            elif g.updatable_edge_count() == 0:
                reason = STOP_MASK_EMPTY
            elif tick >= cfg.T_max:
                reason = STOP_T_MAX
            if reason is not None or removed:
                stream.push_back(grid[k + 1:], factors[k + 1:])
                break

    if trace is not None:
        trace.record(tick, g, force=True)
    logger.debug("drenagem encerrada no tique %d (%s)", tick, reason)
    return DrainResult(g, tick, reason)


def drain(
    g: FiringGraph,
    model: GridModel,
    f: int,
    cfg: DrainConfig,
    stream: Optional[GridStream] = None,
    rng: Optional[np.random.Generator] = None,
) -> FiringGraph:
    """Drena `g` e devolve o grafo resultante."""
    if stream is None:
        stream = GridStream(model, rng if rng is not None else np.random.default_rng())
    return run_drain(g, model, f, cfg, stream).graph


def sampled_survivors(g: FiringGraph, preselected: Collection[int] = ()) -> FrozenSet[int]:
    """Bits amostrados (fora dos pré-selecionados) que ainda alcançam a saída."""
    reachable = {int(g.input_bits[j]) for j in output_reachable_inputs(g)}
    return frozenset(reachable - set(preselected))


# ----------------------------------------------------------------------
# Uma repetição completa: amostragem, construção e drenagem
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class BuildConfig:
    """Como amostrar e construir o grafo de cada repetição."""

    f: int = 0
    p_s: float = 1.0
    i_pre: int = 0
    rank: Optional[int] = None
    batch_size: int = 64
    T_max: Optional[int] = None


@dataclass
class RepetitionOutcome:
    rep: int
    sampling: SampleResult
    initial: FiringGraph
    result: DrainResult
    sampled_survivors: FrozenSet[int]
    stream: GridStream
    trace: Optional[DrainTrace] = field(default=None, repr=False)

    @property
    def graph(self) -> FiringGraph:
        return self.result.graph


def repetition_seeds(master_seed: int, rep: int) -> Tuple[np.random.SeedSequence, ...]:
    """Sementes independentes (estados, moedas, pré-seleção, avaliação) da repetição."""
    return tuple(np.random.SeedSequence([master_seed, rep]).spawn(4))


def run_repetition(
    model: GridModel,
    build: BuildConfig,
    sp: ScoreParams,
    master_seed: int,
    rep: int,
    T: Optional[int] = None,
    trace_every: int = 0,
    trace_extra: Optional[Mapping[str, Mapping[int, Any]]] = None,
    preselected: Optional[Collection[int]] = None,
) -> RepetitionOutcome:
    """
    Amostra S, constrói o grafo simples (sem pré-seleção) ou conjunto e o
    drena, tudo sobre um único fluxo contínuo de instantes da repetição.
    """
    grid_seed, coin_seed, pre_seed, _ = repetition_seeds(master_seed, rep)
    stream = GridStream(model, np.random.default_rng(grid_seed))
    if preselected is None:
        preselected = (
            model.preselect(build.f, build.i_pre, np.random.default_rng(pre_seed), rank=build.rank)
            if build.i_pre
            else []
        )
    preselected = sorted(preselected)
    drawn = sample(model, build.f, build.p_s, preselected, np.random.default_rng(coin_seed), stream=stream)
    if preselected:
        g = build_joint(drawn.sampled, preselected, sp.N, grid_width=model.n)
        decay = 2
    else:
        g = build_single(drawn.sampled, sp.N, grid_width=model.n)
        decay = 1
    cfg = DrainConfig.from_tuple(sp, decay, T=T, T_max=build.T_max, batch_size=build.batch_size)
    trace = (
        DrainTrace(trace_every, model.target_bits(build.f), trace_extra)
        if trace_every > 0
        else None
    )
    result = run_drain(g, model, build.f, cfg, stream, trace)
    survivors = sampled_survivors(result.graph, preselected)
    logger.info(
        "rep %d: |S|=%d, sobreviventes=%d, %d tiques (%s)",
        rep, len(drawn.sampled), len(survivors), result.ticks, result.stop_reason,
    )
    return RepetitionOutcome(rep, drawn, g, result, survivors, stream, trace)
