"""Baseline strategies: random search, simulated annealing, a genetic
algorithm and multi-start local search.

Neighbourhoods are single-parameter steps to an adjacent value rank,
restricted to valid configurations. Revisiting a configuration is answered
from the evaluator's cache and costs no budget.
"""

from __future__ import annotations

import math

import numpy as np

from ..evaluation import BudgetExhausted, Evaluator, Objective, TuningRun
from ..space import SearchSpace
from .config import StrategyConfig

__all__ = ["run_random", "run_sa", "run_ga", "run_mls", "metropolis_accept"]

# free (cached) steps tolerated before a strategy jumps to an unvisited point
_STALL_LIMIT = 200


def _evaluator(space, objective, config: StrategyConfig) -> Evaluator:
    return Evaluator(space, objective, config.budget, config.name, config.invalid_costs)


def _random_unvisited(ev: Evaluator, rng: np.random.Generator) -> int:
    return int(rng.choice(ev.unvisited()))


def run_random(space: SearchSpace, objective: Objective, config: StrategyConfig,
               rng: np.random.Generator) -> TuningRun:
    """Uniform sampling without replacement."""
    ev = _evaluator(space, objective, config)
    try:
        for idx in rng.permutation(len(space)):
            if ev.exhausted:
                break
            ev.evaluate(int(idx))
    except BudgetExhausted:
        pass
    return ev.run


def metropolis_accept(delta: float, temperature: float, rng: np.random.Generator) -> bool:
    """Accept improvements always, deteriorations with probability exp(-delta/T)."""
    if delta < 0:
        return True
    if temperature <= 0:
        return False
    return bool(rng.random() < math.exp(-delta / temperature))


def _scale(ev: Evaluator) -> float:
    values = list(ev.run.observations.values())
    if len(values) < 2:
        return 1.0
    s = float(np.std(values))
    return s if s > 0 else 1.0


def run_sa(space: SearchSpace, objective: Objective, config: StrategyConfig,
           rng: np.random.Generator) -> TuningRun:
    """Simulated annealing with geometric cooling on the standardized objective."""
    ev = _evaluator(space, objective, config)
    temperature = config.sa_t0
    try:
        current, value = _valid_start(ev, rng)
        stalled = 0
        while not ev.exhausted:
            neighbors = space.neighbors(current)
            if not neighbors or stalled > _STALL_LIMIT:
                current, value = _valid_start(ev, rng)
                stalled = 0
                continue
            candidate = int(neighbors[rng.integers(len(neighbors))])
            fresh = not ev.is_visited(candidate)
            cand_value = ev.evaluate(candidate)
            stalled = 0 if fresh else stalled + 1
            if cand_value is not None:
                delta = (cand_value - value) / _scale(ev)
                if metropolis_accept(delta, temperature, rng):
                    current, value = candidate, cand_value
            temperature *= config.sa_cooling
    except BudgetExhausted:
        pass
    return ev.run


def _valid_start(ev: Evaluator, rng: np.random.Generator) -> tuple[int, float]:
    """Evaluate random unvisited configurations until one is valid."""
    while True:
        if ev.exhausted:
            raise BudgetExhausted("no unvisited configurations left")
        idx = _random_unvisited(ev, rng)
        value = ev.evaluate(idx)
        if value is not None:
            return idx, value


def run_ga(space: SearchSpace, objective: Objective, config: StrategyConfig,
           rng: np.random.Generator) -> TuningRun:
    """Generational GA over value ranks with tournament selection,
    uniform crossover, uniform-reset mutation and single elitism."""
    ev = _evaluator(space, objective, config)
    sizes = np.array([len(p) for p in space.params])
    ranks = space.ranks

    def fitness(idx: int) -> float:
        value = ev.evaluate(idx)
        return math.inf if value is None else value

    def tournament(pop, fits) -> int:
        picks = rng.integers(len(pop), size=min(config.ga_tournament, len(pop)))
        best = min(picks, key=lambda p: (fits[p], p))
        return pop[best]

    def breed(a: int, b: int) -> int | None:
        for _ in range(config.ga_rerolls + 1):
            if rng.random() < config.ga_crossover:
                mask = rng.random(len(sizes)) < 0.5
                child = np.where(mask, ranks[a], ranks[b])
            else:
                child = ranks[a].copy()
            mutate = rng.random(len(sizes)) < config.ga_mutation
            child = np.where(mutate, rng.integers(0, sizes), child)
            idx = space.index_of_ranks(child.tolist())
            if idx is not None:
                return idx
        return None

    try:
        size = min(config.ga_population, len(space))
        pop = [int(i) for i in rng.choice(len(space), size=size, replace=False)]
        fits = [fitness(i) for i in pop]
        stalled = 0
        while not ev.exhausted:
            before = ev.invocations
            elite = min(range(len(pop)), key=lambda p: (fits[p], p))
            new_pop, new_fits = [pop[elite]], [fits[elite]]
            attempts = 0
            while len(new_pop) < size and not ev.exhausted:
                attempts += 1
                if attempts > 20 * size:
                    child = _random_unvisited(ev, rng)
                else:
                    child = breed(tournament(pop, fits), tournament(pop, fits))
                    if child is None:
                        continue
                new_pop.append(child)
                new_fits.append(fitness(child))
            pop, fits = new_pop, new_fits
            stalled = stalled + 1 if ev.invocations == before else 0
            if stalled > _STALL_LIMIT // size and not ev.exhausted:
                # inject fresh genetic material when the population has converged
                worst = max(range(len(pop)), key=lambda p: (fits[p], p))
                pop[worst] = _random_unvisited(ev, rng)
                fits[worst] = fitness(pop[worst])
                stalled = 0
    except BudgetExhausted:
        pass
    return ev.run


def run_mls(space: SearchSpace, objective: Objective, config: StrategyConfig,
            rng: np.random.Generator) -> TuningRun:
    """Best-improvement hill climbing restarted from random valid points."""
    ev = _evaluator(space, objective, config)
    try:
        while not ev.exhausted:
            current, value = _valid_start(ev, rng)
            while True:
                best, best_value = current, value
                for nb in space.neighbors(current):
                    v = ev.evaluate(nb)
                    if v is not None and v < best_value:
                        best, best_value = nb, v
                if best == current:
                    break
                current, value = best, best_value
    except BudgetExhausted:
        pass
    return ev.run
