"""Objective bookkeeping shared by every strategy.

The :class:`Evaluator` is the only path from a strategy to the objective.
It enforces the budget, caches results so no configuration is ever
evaluated twice, and records the best-so-far trace.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Protocol

import numpy as np

from .space import Configuration, SearchSpace

__all__ = [
    "Measurement",
    "Objective",
    "BudgetExhausted",
    "ObjectiveError",
    "Evaluator",
    "TuningRun",
    "INVALID_REASONS",
]

INVALID_REASONS = ("compile_error", "runtime_error", "restricted")


@dataclass(frozen=True)
class Measurement:
    """Either a positive value or an invalid marker with a reason."""

    value: float | None = None
    invalid: str | None = None

    def __post_init__(self):
        if (self.value is None) == (self.invalid is None):
            raise ValueError("a measurement has exactly one of value / invalid")
        if self.invalid is not None and self.invalid not in INVALID_REASONS:
            raise ValueError(f"unknown invalid reason {self.invalid!r}")

    @property
    def valid(self) -> bool:
        return self.value is not None

    @classmethod
    def failed(cls, reason: str = "runtime_error") -> "Measurement":
        return cls(invalid=reason)


class Objective(Protocol):
    def __call__(self, config: Configuration) -> Measurement: ...


class BudgetExhausted(RuntimeError):
    pass


class ObjectiveError(RuntimeError):
    """The objective itself failed, as opposed to reporting an invalid configuration."""


@dataclass
class TuningRun:
    """Everything a strategy produced, in evaluation order."""

    strategy: str
    budget: int
    evaluations: list[tuple[int, float | None, str | None]] = field(default_factory=list)
    observations: dict[int, float] = field(default_factory=dict)
    visited: set[int] = field(default_factory=set)
    trace: list[tuple[int, float]] = field(default_factory=list)
    best_index: int | None = None
    best_value: float = math.inf
    invalid_count: int = 0
    diagnostics: list[dict] = field(default_factory=list)
    events: list[tuple] = field(default_factory=list)

    @property
    def invocations(self) -> int:
        return len(self.evaluations)

    def best_at(self, count: int) -> float:
        """Best value after ``count`` evaluations; the final best is carried forward."""
        if count <= 0 or not self.trace:
            return math.inf
        pos = min(count, len(self.trace)) - 1
        return self.trace[pos][1]


class Evaluator:
    """Budgeted, caching gateway to the objective.

    Parameters
    ----------
    space : SearchSpace
    objective : callable
        Maps a :class:`Configuration` to a :class:`Measurement`.
    budget : int
        Maximum number of objective invocations.
    invalid_costs : bool
        When False, runtime-invalid results do not consume budget.
    """

    def __init__(
        self,
        space: SearchSpace,
        objective: Callable[[Configuration], Measurement],
        budget: int,
        strategy: str = "",
        invalid_costs: bool = True,
    ):
        self.space = space
        self.objective = objective
        self.invalid_costs = invalid_costs
        self.run = TuningRun(strategy=strategy, budget=budget)
        self._cache: dict[int, Measurement] = {}
        self._charged = 0
        self._visited_mask = np.zeros(len(space), dtype=bool)

    @property
    def budget(self) -> int:
        return self.run.budget

    @property
    def invocations(self) -> int:
        return self.run.invocations

    @property
    def remaining(self) -> int:
        return self.budget - self._charged

    @property
    def exhausted(self) -> bool:
        return self.remaining <= 0 or self._visited_mask.all()

    @property
    def visited(self) -> set[int]:
        return self.run.visited

    def is_visited(self, index: int) -> bool:
        return bool(self._visited_mask[index])

    def unvisited(self) -> np.ndarray:
        return np.flatnonzero(~self._visited_mask)

    def lookup(self, index: int) -> Measurement | None:
        return self._cache.get(index)

    def evaluate(self, index: int) -> float | None:
        """Value of configuration ``index``, or None if it is invalid.

        Already visited configurations are answered from the cache without
        touching the objective or the budget.
        """
        cached = self._cache.get(index)
        if cached is not None:
            return cached.value
        if self.remaining <= 0:
            raise BudgetExhausted(f"budget of {self.budget} evaluations exhausted")
        config = self.space.configs[index]
        try:
            m = self.objective(config)
        except (BudgetExhausted, ObjectiveError):
            raise
        except Exception as exc:
            raise ObjectiveError(f"objective failed on {config.values}: {exc}") from exc
        if not isinstance(m, Measurement):
            raise ObjectiveError(f"objective returned {m!r}, expected a Measurement")
        if m.valid and not (math.isfinite(m.value)):
            raise ObjectiveError(f"objective returned non-finite value {m.value!r}")
        self._cache[index] = m
        self._visited_mask[index] = True
        run = self.run
        run.visited.add(index)
        run.evaluations.append((index, m.value, m.invalid))
        if m.valid or self.invalid_costs:
            self._charged += 1
        if m.valid:
            run.observations[index] = m.value
            if m.value < run.best_value:
                run.best_value = m.value
                run.best_index = index
        else:
            run.invalid_count += 1
        run.trace.append((run.invocations, run.best_value))
        return m.value
