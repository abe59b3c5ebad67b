"""
Experimentos reproduzíveis: cada um recebe uma ExperimentConfig resolvida,
roda as repetições e grava CSVs e um summary.txt no diretório de saída.

Os arquivos começam com linhas `# chave=valor` com a configuração completa e
a semente mestra; nenhum deles contém horários ou durações.
"""

import csv
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import spearmanr

from firing.config import ExperimentConfig
from firing.draining import (
    BuildConfig,
    RepetitionOutcome,
    repetition_seeds,
    run_repetition,
    survivor_counts,
    write_traces,
)
from firing.errors import ConfigError, EstimatorFailure, InfeasibleTupleError
from firing.estimator import evaluate_estimator, extract_estimator
from firing.metrics import ScoreParams, precision_from_purity, score_stats
from firing.models import (
    GridModel,
    SignalPlusNoiseModel,
    SparseGridModel,
    estimate_joint_omega,
    fixed_tuple,
    select_sparse_tuple,
    select_tuple,
    sparse_omega,
    spn_margin,
)
from firing.properties import run_all

logger = logging.getLogger(__name__)

TARGET_FACTOR = 0


@dataclass
class ExperimentResult:
    """Arquivos gravados, linhas do resumo e código de saída."""

    files: List[str] = field(default_factory=list)
    summary: List[Tuple[str, Any]] = field(default_factory=list)
    status: int = 0


def _fmt(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.6f}"
    return str(value)


def _header_value(value: Any) -> str:
    return "None" if value is None else _fmt(value)


def _write_header(handle, header: Dict[str, Any]) -> None:
    for key, value in header.items():
        handle.write(f"# {key}={_header_value(value)}\n")


def _write_rows(path: str, header: Dict[str, Any], columns: Sequence[str], rows: List[Dict[str, Any]]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        _write_header(handle, header)
        writer = csv.DictWriter(handle, fieldnames=list(columns), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({key: _fmt(value) for key, value in row.items()})


def _write_summary(path: str, header: Dict[str, Any], summary: List[Tuple[str, Any]]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        _write_header(handle, header)
        for key, value in summary:
            handle.write(f"{key}={_fmt(value)}\n")


def _write_trace_file(
    path: str, header: Dict[str, Any], outcomes: Sequence[RepetitionOutcome], targets: FrozenSet[int]
) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        write_traces(
            handle,
            {key: _header_value(value) for key, value in header.items()},
            [(o.rep, o.trace) for o in outcomes if o.trace is not None],
            summary=survivor_counts(outcomes, targets),
        )


def _map_reps(fn: Callable[[int], Any], reps: int, workers: int) -> List[Any]:
    """Roda `fn(rep)` para cada repetição; o resultado segue a ordem de rep."""
    if workers <= 1:
        return [fn(rep) for rep in range(reps)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(reps)))


def build_model(config: ExperimentConfig) -> GridModel:
    """Modelo do experimento; a estrutura (G(f) ou ligação) vem de SeedSequence([seed])."""
    rng = np.random.default_rng(np.random.SeedSequence([config.seed]))
    if config.is_sparse:
        return SparseGridModel(config.n, config.K, config.p_f, config.p_g, rng=rng)
    return SignalPlusNoiseModel(config.n, config.k, config.p_f, config.p_N, rng=rng)


def spn_tuple(config: ExperimentConfig) -> Tuple[ScoreParams, float, float]:
    """5-tupla do modelo sinal mais ruído com i = i_pre bits pré-selecionados."""
    omega, delta = spn_margin(config.i_pre, config.p_N)
    if config.auto_pq:
        sp = select_tuple(omega, delta, config.p_f, config.T)
    else:
        sp = fixed_tuple(omega, delta, config.p_f, config.T, config.p, config.q)
    return sp, omega, delta


def _build_config(config: ExperimentConfig, i_pre: int = 0) -> BuildConfig:
    return BuildConfig(
        f=TARGET_FACTOR,
        p_s=config.p_s,
        i_pre=i_pre,
        rank=config.rank,
        batch_size=config.batch_size,
        T_max=config.T_max,
    )


def _survival(outcomes: Sequence[RepetitionOutcome], targets) -> Tuple[int, int, int, int]:
    """(alvos sobreviventes, alvos amostrados, ruído removido, ruído amostrado)."""
    kept = sampled = removed = noise = 0
    for o in outcomes:
        for bit in o.sampling.sampled:
            if bit in targets:
                sampled += 1
                kept += bit in o.sampled_survivors
            else:
                noise += 1
                removed += bit not in o.sampled_survivors
    return kept, sampled, removed, noise


def _ratio(num: int, den: int) -> Optional[float]:
    return num / den if den else None


def _final_weights(outcome: RepetitionOutcome) -> Dict[int, int]:
    g = outcome.graph
    return {int(g.input_bits[src]): w for (src, _), w in g.input_weights().items()}


# ----------------------------------------------------------------------
# Experimentos
# ----------------------------------------------------------------------


def run_spn_single(config: ExperimentConfig, header: Dict[str, Any]) -> ExperimentResult:
    """Pesos das arestas do grafo simples e a linha teórica da média."""
    model = build_model(config)
    sp, omega, delta = spn_tuple(config)
    targets = model.target_bits()
    build = _build_config(config)
    outcomes = _map_reps(
        lambda rep: run_repetition(model, build, sp, config.seed, rep, trace_every=config.trace_every),
        config.reps,
        config.workers,
    )
    phi = precision_from_purity(config.p_N, config.p_f)
    mean_line = score_stats(sp, phi).mean
    kept, sampled, removed, noise = _survival(outcomes, targets)
    header = dict(header, omega=omega, delta=delta, N=sp.N, p=sp.p, q=sp.q, mean_line=mean_line)
    result = ExperimentResult()
    path = os.path.join(config.out, "spn-single_trace.csv")
    _write_trace_file(path, header, outcomes, model.target_bits(TARGET_FACTOR))
    result.files.append(path)
    result.summary = [
        ("N", sp.N),
        ("p", sp.p),
        ("q", sp.q),
        ("phi_target", phi),
        ("mean_line", mean_line),
        ("target_edges_kept", _ratio(kept, sampled)),
        ("noise_edges_removed", _ratio(removed, noise)),
        ("sampled_total", sampled + noise),
    ]
    return result


def run_spn_estimator(config: ExperimentConfig, header: Dict[str, Any]) -> ExperimentResult:
    """Precisão e recall do estimador extraído de cada repetição."""
    model = build_model(config)
    sp, omega, delta = spn_tuple(config)
    build = _build_config(config)

    def repetition(rep: int) -> Dict[str, Any]:
        outcome = run_repetition(model, build, sp, config.seed, rep)
        row = {
            "rep": rep,
            "sampled": len(outcome.sampling.sampled),
            "survivors": len(outcome.sampled_survivors),
            "ticks": outcome.result.ticks,
            "stop_reason": outcome.result.stop_reason,
            "precision": None,
            "recall": None,
            "fail": 0,
        }
        try:
            est = extract_estimator(outcome.graph)
        except EstimatorFailure:
            row["fail"] = 1
            return row
        eval_rng = np.random.default_rng(repetition_seeds(config.seed, rep)[3])
        score = evaluate_estimator(est, model, TARGET_FACTOR, config.eval_steps, rng=eval_rng)
        row["precision"], row["recall"] = score.precision, score.recall
        return row

    rows = _map_reps(repetition, config.reps, config.workers)
    precisions = np.array([r["precision"] for r in rows if r["precision"] is not None])
    recalls = np.array([r["recall"] for r in rows if r["recall"] is not None])
    fails = sum(r["fail"] for r in rows)
    undefined = sum(1 for r in rows if not r["fail"] and r["precision"] is None)
    header = dict(header, omega=omega, delta=delta, N=sp.N, p=sp.p, q=sp.q)
    result = ExperimentResult()
    path = os.path.join(config.out, "spn-estimator_reps.csv")
    _write_rows(path, header, list(rows[0]), rows)
    result.files.append(path)
    result.summary = [
        ("N", sp.N),
        ("p", sp.p),
        ("q", sp.q),
        ("precision_mean", float(precisions.mean()) if precisions.size else None),
        ("precision_std", float(precisions.std()) if precisions.size else None),
        ("recall_mean", float(recalls.mean()) if recalls.size else None),
        ("recall_std", float(recalls.std()) if recalls.size else None),
        ("fails", fails),
        ("precision_undefined", undefined),
    ]
    return result


def run_spn_joint(config: ExperimentConfig, header: Dict[str, Any]) -> ExperimentResult:
    """Grafo conjunto com i bits pré-selecionados de G(f); ecoa (ω_i, δ_i, N)."""
    model = build_model(config)
    sp, omega, delta = spn_tuple(config)
    targets = model.target_bits()
    build = _build_config(config, i_pre=config.i_pre)
    outcomes = _map_reps(
        lambda rep: run_repetition(model, build, sp, config.seed, rep, trace_every=config.trace_every),
        config.reps,
        config.workers,
    )
    kept, sampled, removed, noise = _survival(outcomes, targets)
    header = dict(header, omega=omega, delta=delta, N=sp.N, p=sp.p, q=sp.q)
    result = ExperimentResult()
    path = os.path.join(config.out, "spn-joint_trace.csv")
    _write_trace_file(path, header, outcomes, model.target_bits(TARGET_FACTOR))
    result.files.append(path)
    result.summary = [
        ("omega_i", omega),
        ("delta_i", delta),
        ("N", sp.N),
        ("p", sp.p),
        ("q", sp.q),
        ("target_edges_kept", _ratio(kept, sampled)),
        ("noise_edges_removed", _ratio(removed, noise)),
    ]
    return result


def _rank_columns(model: SparseGridModel) -> Dict[str, Dict[int, Any]]:
    ranks = model.purity_ranks()
    return {"purity_rank": {b: int(ranks[b]) for b in range(model.n)}}


def weight_by_rank(model: SparseGridModel, outcomes: Sequence[RepetitionOutcome]) -> Dict[int, float]:
    """Peso final médio das arestas de bits de G(f), agrupado por posto de pureza."""
    ranks = model.purity_ranks()
    targets = model.target_bits(TARGET_FACTOR)
    groups: Dict[int, List[int]] = {}
    for outcome in outcomes:
        weights = _final_weights(outcome)
        for bit in outcome.sampling.sampled:
            if bit in targets:
                groups.setdefault(int(ranks[bit]), []).append(weights.get(bit, 0))
    return {rank: float(np.mean(values)) for rank, values in sorted(groups.items())}


def run_sparse_single(config: ExperimentConfig, header: Dict[str, Any]) -> ExperimentResult:
    """Grafo simples na grade esparsa, com ω = ω_K e o posto de pureza no traço."""
    model = build_model(config)
    omega = sparse_omega(config.K, config.p_f, config.K)
    p, q = (None, None) if config.auto_pq else (config.p, config.q)
    sp = select_sparse_tuple(omega, config.p_f, config.T, p, q)
    build = _build_config(config)
    extra = _rank_columns(model)
    outcomes = _map_reps(
        lambda rep: run_repetition(
            model, build, sp, config.seed, rep, trace_every=config.trace_every, trace_extra=extra
        ),
        config.reps,
        config.workers,
    )
    by_rank = weight_by_rank(model, outcomes)
    rho = None
    if len(by_rank) > 1:
        rho = float(spearmanr(list(by_rank), list(by_rank.values())).correlation)
    header = dict(header, omega=omega, N=sp.N, p=sp.p, q=sp.q)
    result = ExperimentResult()
    path = os.path.join(config.out, "sparse-single_trace.csv")
    _write_trace_file(path, header, outcomes, model.target_bits(TARGET_FACTOR))
    result.files.append(path)
    result.summary = [("omega", omega), ("N", sp.N), ("p", sp.p), ("q", sp.q)]
    result.summary += [(f"mean_weight_rank_{rank}", w) for rank, w in by_rank.items()]
    result.summary.append(("spearman_rank_weight", rho))
    return result


def run_sparse_delta(config: ExperimentConfig, header: Dict[str, Any]) -> ExperimentResult:
    """
    Grafo conjunto na grade esparsa para cada δ: ω = ω̂ - δ, com ω̂ estimado
    por repetição a partir de `omega_draws` instantes rotulados. Repetições em
    que ω̂ - δ não admite nenhum (p, q) são puladas e contadas no resumo.
    """
    model = build_model(config)
    build = _build_config(config, i_pre=config.i_pre)
    extra = _rank_columns(model)
    result = ExperimentResult()

    def prepare(rep: int):
        _, _, pre_seed, eval_seed = repetition_seeds(config.seed, rep)
        pre = model.preselect(TARGET_FACTOR, config.i_pre, np.random.default_rng(pre_seed), rank=config.rank)
        est = estimate_joint_omega(model, pre, TARGET_FACTOR, config.omega_draws, np.random.default_rng(eval_seed))
        return pre, est

    prepared = _map_reps(prepare, config.reps, config.workers)
    omegas = [est.omega for _, est in prepared]
    p, q = (None, None) if config.auto_pq else (config.p, config.q)
    for delta in config.delta_list:
        def repetition(rep: int) -> Optional[RepetitionOutcome]:
            pre, est = prepared[rep]
            try:
                sp = select_sparse_tuple(est.omega - delta, config.p_f, config.T, p, q)
            except InfeasibleTupleError as e:
                logger.warning("rep %d, delta=%g: %s", rep, delta, e)
                return None
            return run_repetition(
                model, build, sp, config.seed, rep,
                trace_every=config.trace_every, trace_extra=extra, preselected=pre,
            )

        ran = _map_reps(repetition, config.reps, config.workers)
        outcomes = [o for o in ran if o is not None]
        survivors = [len(o.sampled_survivors) for o in outcomes]
        path = os.path.join(config.out, f"sparse-delta_trace_delta_{delta:g}.csv")
        _write_trace_file(
            path, dict(header, delta=delta, omega_hat_mean=float(np.mean(omegas))), outcomes,
            model.target_bits(TARGET_FACTOR),
        )
        result.files.append(path)
        result.summary += [
            (f"delta_{delta:g}.omega_hat_mean", float(np.mean(omegas))),
            (f"delta_{delta:g}.survivors_mean", float(np.mean(survivors)) if survivors else None),
            (f"delta_{delta:g}.no_survivor_reps", sum(1 for s in survivors if s == 0)),
            (f"delta_{delta:g}.infeasible_reps", len(ran) - len(outcomes)),
        ]
    return result


def run_check_props(config: ExperimentConfig, header: Dict[str, Any]) -> ExperimentResult:
    """Suítes exaustivas; o código de saída é 1 se alguma falhar."""
    result = ExperimentResult()
    for suite in run_all(config.seed):
        result.summary.append((f"{suite.name}.checked", suite.checked))
        result.summary.append((f"{suite.name}.failures", len(suite.failures)))
        for failure in suite.failures[:5]:
            logger.error("%s: %s", suite.name, failure)
        if not suite.passed:
            result.status = 1
    return result


RUNNERS: Dict[str, Callable[[ExperimentConfig, Dict[str, Any]], ExperimentResult]] = {
    "spn-single": run_spn_single,
    "spn-estimator": run_spn_estimator,
    "spn-joint": run_spn_joint,
    "sparse-single": run_sparse_single,
    "sparse-delta": run_sparse_delta,
    "check-props": run_check_props,
}


def run(config: ExperimentConfig) -> ExperimentResult:
    """
    Resolve e valida a configuração, roda o experimento e grava summary.txt.

    Raises:
        ConfigError: configuração inválida.
    """
    config = config.resolved().validate()
    runner = RUNNERS.get(config.experiment)
    if runner is None:
        raise ConfigError(f"experimento desconhecido: {config.experiment}")
    os.makedirs(config.out, exist_ok=True)
    header = config.header()
    logger.info("experimento %s, semente %d", config.experiment, config.seed)
    result = runner(config, header)
    path = os.path.join(config.out, "summary.txt")
    _write_summary(path, header, result.summary)
    result.files.append(path)
    return result
