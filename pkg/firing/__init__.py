"""
Módulo principal do pacote firing.
"""

from firing.config import ExperimentConfig
from firing.draining import BuildConfig, DrainConfig, drain, run_repetition
from firing.estimator import evaluate_estimator, extract_estimator
from firing.f2core import BitVector, CharPoly, ExplicitDistribution, eval_charpoly, indicator
from firing.graph import FiringGraph
from firing.metrics import ScoreParams
from firing.models import GridStream, SignalPlusNoiseModel, SparseGridModel
from firing.sampling import build_joint, build_single, sample

__all__ = [
    'ExperimentConfig',
    'BuildConfig',
    'DrainConfig',
    'drain',
    'run_repetition',
    'evaluate_estimator',
    'extract_estimator',
    'BitVector',
    'CharPoly',
    'ExplicitDistribution',
    'eval_charpoly',
    'indicator',
    'FiringGraph',
    'ScoreParams',
    'GridStream',
    'SignalPlusNoiseModel',
    'SparseGridModel',
    'build_joint',
    'build_single',
    'sample',
]
