"""Bayesian optimization over the discrete set of valid configurations.

Every round the surrogate predicts all unevaluated valid configurations
once; those predictions are shared by the acquisition functions consulted
in that round. Runtime-invalid configurations are marked visited and never
reach the surrogate.
"""

from __future__ import annotations

import numpy as np

from ..acquisition import (
    AdvancedMultiPortfolio,
    CandidatePool,
    ContextualVariance,
    MultiPortfolio,
    SinglePortfolio,
    substitute_invalid,
)
from ..evaluation import BudgetExhausted, Evaluator, Objective, TuningRun
from ..gp import GpModel, MaternKernel, fit, mean_posterior_variance
from ..sampling import draw_initial_sample
from ..space import SearchSpace
from .config import StrategyConfig

__all__ = ["run_bo", "make_portfolio"]


def make_portfolio(config: StrategyConfig):
    s = config.strategy
    if s == "bo-advanced-multi":
        return AdvancedMultiPortfolio(
            config.afs, config.effective_gamma, config.skip_threshold, config.required_improvement
        )
    if s == "bo-multi":
        return MultiPortfolio(config.afs, config.effective_gamma, config.skip_threshold)
    if s in ("bo-ei", "bo-poi", "bo-lcb"):
        return SinglePortfolio(s[3:])
    raise ValueError(f"{s!r} is not a Bayesian optimization strategy")


class _Surrogate:
    """Keeps the GP in sync with the valid observations, in evaluation order."""

    def __init__(self, space: SearchSpace, config: StrategyConfig):
        self.coords = space.coords
        self.kernel = MaternKernel(config.nu, config.effective_lengthscale)
        self.noise = config.noise
        self.jitter = config.jitter
        self.model: GpModel | None = None

    def refit(self, run: TuningRun) -> GpModel:
        idx = list(run.observations)
        y = [run.observations[i] for i in idx]
        self.model = fit(self.kernel, self.coords[idx], y, self.noise, self.jitter)
        return self.model

    def predict(self, candidates: np.ndarray):
        return self.model.predict(self.coords[candidates])


def run_bo(
    space: SearchSpace,
    objective: Objective,
    config: StrategyConfig,
    rng: np.random.Generator,
) -> TuningRun:
    if len(space) <= config.n_init:
        raise ValueError(
            f"space has {len(space)} valid configurations; BO needs more than n_init={config.n_init}"
        )
    if config.budget <= config.n_init:
        raise ValueError(f"budget {config.budget} must exceed n_init={config.n_init}")

    ev = Evaluator(space, objective, config.budget, config.name, config.invalid_costs)
    run = ev.run
    sample = draw_initial_sample(space, ev, config.n_init, rng, config.lhs_restarts)

    surrogate = _Surrogate(space, config)
    model = surrogate.refit(run)
    explore = None
    if config.contextual and not ev.exhausted:
        initial = surrogate.predict(ev.unvisited())
        explore = ContextualVariance(
            initial_mean=float(np.mean(sample.observations)),
            initial_variance=mean_posterior_variance(initial),
        )

    portfolio = make_portfolio(config)
    try:
        while not ev.exhausted:
            candidates = ev.unvisited()
            pred = surrogate.predict(candidates)
            if explore is not None:
                lam = explore(mean_posterior_variance(pred), run.best_value)
            else:
                lam = float(config.exploration)
            pool = CandidatePool(
                candidates, pred.mean, pred.std, float(model.standardize(run.best_value)), lam
            )
            run.diagnostics.append({
                "evaluations": ev.invocations,
                "gp_points": model.n,
                "valid": len(run.observations),
                "lambda": lam,
                "active": list(portfolio.active),
            })
            for af in portfolio.round_order():
                if ev.exhausted:
                    break
                cand = portfolio.suggest(af, pool)
                if cand is None:
                    last = portfolio.records[af].last
                    if portfolio.kind == "multi" and last is not None and ev.is_visited(last):
                        # a duplicate shares the observation of the candidate it repeats
                        portfolio.record(af, _score_value(ev, run, last))
                    continue
                if ev.is_visited(cand):
                    raise RuntimeError(f"acquisition suggested visited configuration {cand}")
                ev.evaluate(cand)
                portfolio.record(af, _score_value(ev, run, cand))
            portfolio.end_round()
            model = surrogate.refit(run)
    except BudgetExhausted:
        pass
    run.events = list(portfolio.events)
    return run


def _score_value(ev: Evaluator, run: TuningRun, index: int) -> float:
    value = ev.lookup(index).value
    if value is None:
        return substitute_invalid(list(run.observations.values()))
    return value
