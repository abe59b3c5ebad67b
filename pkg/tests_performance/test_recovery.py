"""
Execuções de Monte Carlo em escala de bancada dos experimentos completos.
"""

import os
import time as time_module

import numpy as np
import pytest

from firing.config import ExperimentConfig
from firing.draining import BuildConfig, run_repetition
from firing.experiments import run
from firing.metrics import precision_from_purity, score_stats
from firing.models import SignalPlusNoiseModel, fixed_tuple, spn_margin

pytestmark = pytest.mark.slow


@pytest.fixture
def out_dir(tmp_path):
    return str(tmp_path)


def _run(out_dir, **fields):
    start_time = time_module.time()
    result = run(ExperimentConfig(out=out_dir, **fields))
    summary = dict(result.summary)
    print(f"\n=== {fields['experiment']} ({time_module.time() - start_time:.2f}s) ===")
    for key, value in result.summary:
        print(f"  {key}: {value}")
    return result, summary


def test_single_graph_separates_target_from_noise(out_dir):
    """Grafo simples, p_N = 0.3 e (p, q) = (1, 1): alvos ficam, ruído sai."""
    result, summary = _run(out_dir, experiment="spn-single", n=200, k=20, T=500, reps=10)

    assert result.status == 0
    assert summary["N"] == 103
    assert summary["target_edges_kept"] >= 0.95
    assert summary["noise_edges_removed"] >= 0.95
    assert os.path.exists(os.path.join(out_dir, "spn-single_trace.csv"))


def test_estimator_precision_and_recall(out_dir):
    """Estimador do grafo drenado: precisão alta, nenhuma falha."""
    result, summary = _run(out_dir, experiment="spn-estimator", reps=20)

    assert result.status == 0
    assert summary["fails"] == 0
    assert summary["precision_mean"] >= 0.95
    assert 0.5 <= summary["recall_mean"] <= 1.0


def test_joint_graph_echoes_margins(out_dir):
    """Cinco bits pré-selecionados com p_N = 0.6 levam a (p, q) = (7, 1) e N = 8."""
    result, summary = _run(out_dir, experiment="spn-joint", reps=3)

    assert result.status == 0
    assert (summary["p"], summary["q"], summary["N"]) == (7, 1, 8)
    assert summary["omega_i"] == pytest.approx(0.0622, abs=1e-3)


def test_sparse_weight_decreases_with_purity_rank(out_dir):
    """Na grade esparsa, o peso final cai com o número de fatores ligados ao bit."""
    result, summary = _run(out_dir, experiment="sparse-single", reps=10)

    assert result.status == 0
    assert summary["N"] == 383
    assert summary["spearman_rank_weight"] <= -0.8


def test_sparse_delta_writes_one_trace_per_delta(out_dir):
    result, summary = _run(out_dir, experiment="sparse-delta", reps=3, delta_list=[0.0, 0.05])

    assert result.status == 0
    names = sorted(os.path.basename(path) for path in result.files)
    assert "sparse-delta_trace_delta_0.csv" in names
    assert "sparse-delta_trace_delta_0.05.csv" in names


def test_property_suites_pass(out_dir):
    result, summary = _run(out_dir, experiment="check-props")

    assert result.status == 0
    failures = {key: value for key, value in summary.items() if key.endswith(".failures")}
    assert failures and not any(failures.values())


def test_surviving_target_weights_follow_mean_line():
    """Peso final de cada alvo sobrevivente dentro de média ± 4σ√T."""
    model = SignalPlusNoiseModel(200, 20, 0.3, 0.3, rng=np.random.default_rng(np.random.SeedSequence([42])))
    omega, delta = spn_margin(0, 0.3)
    sp = fixed_tuple(omega, delta, 0.3, 500, 1, 1)
    stats = score_stats(sp, precision_from_purity(0.3, 0.3))
    band = 4 * stats.sigma * np.sqrt(sp.T)
    targets = model.target_bits()
    print(f"\n=== LEI DOS PESOS: média {stats.mean:.1f}, faixa ±{band:.1f} ===")
    checked = 0
    for rep in range(10):
        outcome = run_repetition(model, BuildConfig(), sp, 42, rep)
        g = outcome.graph
        for (j, _), weight in g.input_weights().items():
            bit = int(g.input_bits[j])
            if bit in targets and bit in outcome.sampled_survivors:
                assert abs(weight - stats.mean) <= band, (rep, bit, weight)
                checked += 1
    print(f"alvos verificados: {checked}")
    assert checked >= 100
