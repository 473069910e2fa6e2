"""Acquisition functions, the contextual-variance exploration factor, and the
``multi`` / ``advanced multi`` acquisition portfolios.

All scores assume minimization and work in the surrogate's standardized
scale. PI and EI are maximized, LCB is minimized; ties are broken towards
the lowest candidate position, which is the lowest canonical index because
candidate pools are kept in canonical order.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import ndtr

logger = logging.getLogger(__name__)

__all__ = [
    "AF_ORDER",
    "acq_pi",
    "acq_ei",
    "acq_lcb",
    "ContextualVariance",
    "contextual_variance",
    "dos",
    "substitute_invalid",
    "CandidatePool",
    "SinglePortfolio",
    "MultiPortfolio",
    "AdvancedMultiPortfolio",
]

AF_ORDER = ("ei", "poi", "lcb")

_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


def _norm_pdf(z):
    return _INV_SQRT_2PI * np.exp(-0.5 * z * z)


def acq_pi(mean, std, f_best, lam):
    """Probability that the posterior falls at or below ``f_best + lam``."""
    mean, std = np.asarray(mean, dtype=float), np.asarray(std, dtype=float)
    threshold = f_best + lam
    with np.errstate(divide="ignore", invalid="ignore"):
        z = (threshold - mean) / std
        score = ndtr(z)
    degenerate = (mean < threshold).astype(float)
    return np.where(std > 0, score, degenerate)


def acq_ei(mean, std, f_best, lam):
    """Expected improvement below ``f_best - lam``."""
    mean, std = np.asarray(mean, dtype=float), np.asarray(std, dtype=float)
    gap = f_best - lam - mean
    with np.errstate(divide="ignore", invalid="ignore"):
        z = gap / std
        score = gap * ndtr(z) + std * _norm_pdf(z)
    # the closed form can dip a hair below zero in the far tail
    return np.where(std > 0, np.maximum(score, 0.0), np.maximum(gap, 0.0))


def acq_lcb(mean, std, lam):
    mean, std = np.asarray(mean, dtype=float), np.asarray(std, dtype=float)
    return mean - lam * std


def af_choice(name: str, mean, std, f_best, lam) -> int:
    """Position of the best candidate under acquisition function ``name``."""
    if name == "ei":
        return int(np.argmax(acq_ei(mean, std, f_best, lam)))
    if name == "poi":
        return int(np.argmax(acq_pi(mean, std, f_best, lam)))
    if name == "lcb":
        return int(np.argmin(acq_lcb(mean, std, lam)))
    raise ValueError(f"unknown acquisition function {name!r}")


# Exploration factor ---------------------------------------------------------


def contextual_variance(
    mean_variance: float,
    initial_mean: float,
    f_best: float,
    initial_variance: float,
    fallback: float = 0.01,
) -> float:
    """Exploration factor from the current mean posterior variance.

    ``initial_mean`` and ``f_best`` are raw-scale observations (the ratio is
    scale free); the two variances come from the standardized model.
    Non-positive observations make the ratio meaningless, in which case the
    constant ``fallback`` is returned.
    """
    if not (initial_mean > 0 and f_best > 0):
        logger.warning(
            "contextual variance needs positive observations (mean %r, best %r); "
            "using constant exploration factor %r", initial_mean, f_best, fallback,
        )
        return fallback
    initial_variance = max(initial_variance, 1e-12)
    lam = (mean_variance / (initial_mean / f_best)) / initial_variance
    return max(lam, 0.0)


@dataclass
class ContextualVariance:
    """Captures the post-initial-sample state the exploration factor is scaled by."""

    initial_mean: float
    initial_variance: float
    fallback: float = 0.01

    def __call__(self, mean_variance: float, f_best: float) -> float:
        return contextual_variance(
            mean_variance, self.initial_mean, f_best, self.initial_variance, self.fallback
        )


# Discounted observation score -----------------------------------------------


def substitute_invalid(valid_observations: Sequence[float]) -> float:
    """Score recorded for an invalid result: the median valid observation."""
    if len(valid_observations) == 0:
        raise ValueError("no valid observations to substitute an invalid result with")
    return float(np.median(valid_observations))


def dos(history: Sequence[float], gamma: float) -> float:
    """Discounted sum of observations, most recent weighted highest."""
    t = len(history)
    return float(sum(o * gamma ** (t - i) for i, o in enumerate(history, start=1)))


@dataclass
class AfRecord:
    name: str
    gamma: float
    history: list[float] = field(default_factory=list)
    score: float = 0.0
    duplicates: int = 0
    above: int = 0
    below: int = 0
    last: int | None = None

    def observe(self, value: float) -> None:
        self.history.append(value)
        self.score = self.score * self.gamma + value


# Portfolios -----------------------------------------------------------------


@dataclass
class CandidatePool:
    """Shared predictions for one round, in canonical candidate order.

    ``indices`` are canonical configuration indices; ``mean``/``std`` are the
    standardized posterior moments and ``f_best`` the standardized incumbent.
    """

    indices: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    f_best: float
    lam: float
    taken: np.ndarray = field(default=None)

    def __post_init__(self):
        self.indices = np.asarray(self.indices)
        if self.taken is None:
            self.taken = np.zeros(len(self.indices), dtype=bool)

    @property
    def available(self) -> int:
        return int((~self.taken).sum())

    def best_for(self, name: str, exclude_taken: bool) -> int:
        """Canonical index of ``name``'s optimum."""
        if exclude_taken:
            keep = np.flatnonzero(~self.taken)
            if keep.size == 0:
                raise LookupError("no candidates remaining")
            pos = af_choice(name, self.mean[keep], self.std[keep], self.f_best, self.lam)
            pos = keep[pos]
        else:
            if len(self.indices) == 0:
                raise LookupError("no candidates remaining")
            pos = af_choice(name, self.mean, self.std, self.f_best, self.lam)
        self.taken[pos] = True
        return int(self.indices[pos])


class SinglePortfolio:
    """A lone acquisition function behind the portfolio interface."""

    kind = "single"

    def __init__(self, name: str):
        if name not in AF_ORDER:
            raise ValueError(f"unknown acquisition function {name!r}")
        self.active = [name]
        self.records = {name: AfRecord(name, 1.0)}
        self.events: list[tuple] = []

    def round_order(self) -> list[str]:
        return list(self.active)

    def suggest(self, name: str, pool: CandidatePool) -> int | None:
        return pool.best_for(name, exclude_taken=True)

    def record(self, name: str, value: float) -> None:
        self.records[name].observe(value)

    def end_round(self) -> None:
        pass


class MultiPortfolio:
    """Round-robin portfolio that drops acquisition functions which keep
    suggesting the same candidates as another one.

    Within a round all active functions share the same predictions and may
    pick the same candidate. Such a duplicate is not evaluated again; both
    functions' duplicate counters are incremented. Once a counter exceeds
    ``skip_threshold`` the two conflicting functions are compared by their
    discounted observation score and only the lower one stays active.
    """

    kind = "multi"

    def __init__(self, afs: Sequence[str] = AF_ORDER, gamma: float = 0.65, skip_threshold: int = 5):
        afs = [a for a in AF_ORDER if a in afs]
        if not afs:
            raise ValueError("a portfolio needs at least one acquisition function")
        self.active = list(afs)
        self.gamma = gamma
        self.skip_threshold = skip_threshold
        self.records = {a: AfRecord(a, gamma) for a in afs}
        self.events: list[tuple] = []
        self._round: dict[str, int] = {}

    def round_order(self) -> list[str]:
        self._round = {}
        return list(self.active)

    def suggest(self, name: str, pool: CandidatePool) -> int | None:
        """Consult ``name`` on the shared pool.

        Returns the candidate to evaluate, or ``None`` if the suggestion
        duplicates one made earlier this round (nothing new to evaluate).
        """
        if name not in self.active:
            return None
        candidate = pool.best_for(name, exclude_taken=False)
        rec = self.records[name]
        rec.last = candidate
        conflicts = [
            other for other, cand in self._round.items()
            if other != name and other in self.active and cand == candidate
        ]
        self._round[name] = candidate
        if not conflicts:
            return candidate
        other = conflicts[0]
        rec.duplicates += 1
        self.records[other].duplicates += 1
        self.events.append(("duplicate", name, other, candidate))
        if max(rec.duplicates, self.records[other].duplicates) > self.skip_threshold:
            self._resolve((other, name))
        return None

    def _resolve(self, names: tuple[str, ...]) -> None:
        # stable: on equal scores the earlier function in AF order survives
        ordered = sorted(names, key=lambda a: (self.records[a].score, AF_ORDER.index(a)))
        keep = ordered[0]
        for loser in ordered[1:]:
            if loser in self.active and len(self.active) > 1:
                self.active.remove(loser)
                self.events.append(("skip", loser, keep))
        self.records[keep].duplicates = 0

    def record(self, name: str, value: float) -> None:
        self.records[name].observe(value)

    def end_round(self) -> None:
        pass


class AdvancedMultiPortfolio:
    """Round-robin portfolio judged directly on discounted observation scores.

    A candidate taken by one function is removed from the shared pool for
    the rest of the round, so functions never duplicate. After each full
    round every active function's score is compared with the mean score of
    the active functions: scoring above ``(1 + rho) * mean`` on
    ``skip_threshold`` rounds gets it skipped (and resets the others'
    counters), scoring below ``(1 - rho) * mean`` on ``skip_threshold``
    rounds promotes it to the only function for the rest of the run.
    """

    kind = "advanced-multi"

    def __init__(
        self,
        afs: Sequence[str] = AF_ORDER,
        gamma: float = 0.75,
        skip_threshold: int = 5,
        required_improvement: float = 0.1,
    ):
        afs = [a for a in AF_ORDER if a in afs]
        if not afs:
            raise ValueError("a portfolio needs at least one acquisition function")
        self.active = list(afs)
        self.gamma = gamma
        self.skip_threshold = skip_threshold
        self.rho = required_improvement
        self.records = {a: AfRecord(a, gamma) for a in afs}
        self.events: list[tuple] = []

    def round_order(self) -> list[str]:
        return list(self.active)

    def suggest(self, name: str, pool: CandidatePool) -> int | None:
        if name not in self.active or pool.available == 0:
            return None
        candidate = pool.best_for(name, exclude_taken=True)
        self.records[name].last = candidate
        return candidate

    def record(self, name: str, value: float) -> None:
        self.records[name].observe(value)

    def end_round(self) -> None:
        if len(self.active) < 2:
            return
        scores = {a: self.records[a].score for a in self.active}
        mean = float(np.mean(list(scores.values())))
        for a in self.active:
            rec = self.records[a]
            if scores[a] > (1 + self.rho) * mean:
                rec.above += 1
            elif scores[a] < (1 - self.rho) * mean:
                rec.below += 1

        promoted = [a for a in self.active if self.records[a].below >= self.skip_threshold]
        if promoted:
            winner = promoted[0]
            for a in self.active:
                if a != winner:
                    self.events.append(("skip", a, winner))
            self.active = [winner]
            self.events.append(("promote", winner))
            return
        for a in list(self.active):
            if self.records[a].above >= self.skip_threshold and len(self.active) > 1:
                self.active.remove(a)
                self.events.append(("skip", a, None))
                for other in self.active:
                    self.records[other].above = 0
                    self.records[other].below = 0
