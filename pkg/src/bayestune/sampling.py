"""Initial designs: maximin Latin hypercube snapped to valid configurations."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist

from .evaluation import Evaluator
from .space import SearchSpace

__all__ = ["lhs", "lhs_maximin", "min_pairwise_distance", "InitialSample", "draw_initial_sample"]


def lhs(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """One Latin hypercube design: a point per stratum per dimension,
    uniformly jittered inside its stratum."""
    if n < 1 or d < 1:
        raise ValueError("need n >= 1 and d >= 1")
    strata = np.column_stack([rng.permutation(n) for _ in range(d)])
    return (strata + rng.random((n, d))) / n


def min_pairwise_distance(points: np.ndarray) -> float:
    if len(points) < 2:
        return np.inf
    return float(pdist(points).min())


def lhs_maximin(n: int, d: int, rng: np.random.Generator, restarts: int = 50) -> np.ndarray:
    """Best of ``restarts`` independent LHS designs by minimum pairwise distance."""
    best, best_score = None, -np.inf
    for _ in range(max(restarts, 1)):
        design = lhs(n, d, rng)
        score = min_pairwise_distance(design)
        if best is None or score > best_score:
            best, best_score = design, score
    return best


def snap(space: SearchSpace, points: np.ndarray) -> np.ndarray:
    """Canonical index of the nearest valid configuration for each point."""
    coords = space.coords
    out = np.empty(len(points), dtype=np.int64)
    for i, p in enumerate(points):
        dist = np.einsum("ij,ij->i", coords - p, coords - p)
        out[i] = int(np.argmin(dist))
    return out


@dataclass
class InitialSample:
    indices: list[int]
    observations: list[float]
    invocations: int

    @property
    def n(self) -> int:
        return len(self.indices)


def draw_initial_sample(
    space: SearchSpace,
    evaluator: Evaluator,
    n: int,
    rng: np.random.Generator,
    restarts: int = 50,
) -> InitialSample:
    """Collect ``n`` distinct valid observations starting from a maximin LHS.

    Snapping collisions and runtime-invalid results are replaced by uniformly
    random unevaluated configurations. Every objective call counts against
    the evaluator's budget.
    """
    if len(space) < n:
        raise ValueError(f"space has {len(space)} valid configurations, fewer than n={n}")
    start = evaluator.invocations
    design = lhs_maximin(n, space.dimension, rng, restarts)
    queue = []
    seen = set(evaluator.visited)
    for idx in snap(space, design).tolist():
        if idx not in seen:
            queue.append(idx)
            seen.add(idx)

    indices, values = [], []
    for idx in queue:
        value = evaluator.evaluate(idx)
        if value is not None:
            indices.append(idx)
            values.append(value)

    while len(indices) < n:
        unvisited = evaluator.unvisited()
        if unvisited.size == 0:
            raise ValueError(
                f"only {len(indices)} valid configurations found, fewer than n={n}"
            )
        idx = int(rng.choice(unvisited))
        value = evaluator.evaluate(idx)
        if value is not None:
            indices.append(idx)
            values.append(value)
    return InitialSample(indices, values, evaluator.invocations - start)
