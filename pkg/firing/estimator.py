"""
Estimador extraído de um grafo drenado e sua avaliação por Monte Carlo.
"""

import logging
from dataclasses import dataclass
from typing import Collection, Optional

import numpy as np

from firing.errors import ContractError, EstimatorFailure
from firing.f2core import CharPoly, evaluate_many
from firing.graph import FiringGraph, output_reachable_inputs
from firing.models import GridModel, GridStream

logger = logging.getLogger(__name__)

DEFAULT_EVAL_STEPS = 10 ** 4


@dataclass(frozen=True)
class EstimatorScore:
    """
    Precisão e recall estimados. `precision` é None quando o estimador nunca
    disparou e `recall` é None quando o fator nunca esteve ativo.
    """

    precision: Optional[float]
    recall: Optional[float]
    fires: int
    factor_active: int
    steps: int


def extract_estimator(g: FiringGraph, preselected: Collection[int] = ()) -> CharPoly:
    """
    Conjunção das entradas que ainda alcançam a saída: (S_surv, |S_surv|).
    No grafo conjunto os bits pré-selecionados continuam na conjunção.

    Raises:
        EstimatorFailure: nenhuma entrada amostrada sobreviveu.
    """
    reachable = {int(g.input_bits[j]) for j in output_reachable_inputs(g)}
    if not reachable - set(preselected):
        raise EstimatorFailure("nenhuma entrada amostrada sobreviveu à drenagem")
    return CharPoly(frozenset(reachable), len(reachable), g.grid_width)


def evaluate_estimator(
    est: CharPoly,
    model: GridModel,
    f: int,
    steps: int = DEFAULT_EVAL_STEPS,
    rng: Optional[np.random.Generator] = None,
    stream: Optional[GridStream] = None,
) -> EstimatorScore:
    """
    Roda o modelo por `steps` instantes e mede P̂(f | est dispara) e
    P̂(est dispara | f).
    """
    if steps < 1:
        raise ContractError(f"steps deve ser >= 1, recebido {steps}")
    if stream is None:
        stream = GridStream(model, rng if rng is not None else np.random.default_rng())
    grid, factors = stream.take(steps)
    fires = evaluate_many(est, grid)
    active = factors[:, f].astype(bool)
    n_fires = int(fires.sum())
    n_active = int(active.sum())
    hits = int((fires & active).sum())
    score = EstimatorScore(
        precision=hits / n_fires if n_fires else None,
        recall=hits / n_active if n_active else None,
        fires=n_fires,
        factor_active=n_active,
        steps=steps,
    )
    logger.debug("estimador %s: %s", est, score)
    return score
