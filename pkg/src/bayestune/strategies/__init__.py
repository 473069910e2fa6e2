"""Search strategies behind one entry point, :func:`run_strategy`."""

from __future__ import annotations

import numpy as np

from ..evaluation import Objective, TuningRun
from ..space import SearchSpace
from .baselines import metropolis_accept, run_ga, run_mls, run_random, run_sa
from .bo import make_portfolio, run_bo
from .config import BO_STRATEGIES, STRATEGIES, StrategyConfig

__all__ = [
    "BO_STRATEGIES",
    "STRATEGIES",
    "StrategyConfig",
    "metropolis_accept",
    "make_portfolio",
    "run_bo",
    "run_ga",
    "run_mls",
    "run_random",
    "run_sa",
    "run_strategy",
]

_BASELINES = {"random": run_random, "sa": run_sa, "ga": run_ga, "mls": run_mls}


def run_strategy(
    space: SearchSpace,
    objective: Objective,
    config: StrategyConfig,
    rng: np.random.Generator | None = None,
) -> TuningRun:
    if rng is None:
        rng = np.random.default_rng(config.seed)
    if config.strategy in BO_STRATEGIES:
        return run_bo(space, objective, config, rng)
    return _BASELINES[config.strategy](space, objective, config, rng)
