"""Bayesian optimization for discrete, constrained auto-tuning search spaces."""

from .evaluation import Evaluator, Measurement, TuningRun
from .gp import MaternKernel, fit
from .simulator import MeasurementCache, SyntheticSpec, gen_synthetic, load_cache
from .space import Configuration, ParameterDef, SearchSpace
from .strategies import StrategyConfig, run_strategy

__version__ = "0.1.0"

__all__ = [
    "Configuration",
    "Evaluator",
    "MaternKernel",
    "Measurement",
    "MeasurementCache",
    "ParameterDef",
    "SearchSpace",
    "StrategyConfig",
    "SyntheticSpec",
    "TuningRun",
    "fit",
    "gen_synthetic",
    "load_cache",
    "run_strategy",
]
