"""Scoring of tuning runs: MAE over checkpoints, Mean Deviation Factor,
extended budget matching and plot-ready series."""

from __future__ import annotations

import math
from typing import Mapping, Sequence

import numpy as np

__all__ = ["checkpoints", "best_curve", "mae", "mdf", "extended_match", "series"]


def checkpoints(step: int = 20, budget: int = 220) -> list[int]:
    """Evaluation counts at which the error is sampled: 2*step, 3*step, ..., budget."""
    return list(range(2 * step, budget + 1, step))


def best_curve(trace: Sequence[tuple[int, float]] | Sequence[float], length: int) -> np.ndarray:
    """Best-so-far after 1..length evaluations, carrying the final best forward.

    ``trace`` is either ``(count, best)`` pairs or a plain sequence of best
    values indexed by count - 1.
    """
    if len(trace) and isinstance(trace[0], (tuple, list)):
        values = [b for _, b in trace]
    else:
        values = list(trace)
    out = np.full(length, math.inf)
    if values:
        n = min(len(values), length)
        out[:n] = values[:n]
        out[n:] = values[n - 1]
    return out


def mae(trace, f_min: float | None, step: int = 20, budget: int = 220) -> float:
    """Mean absolute gap between best-found and ``f_min`` at the checkpoints."""
    if f_min is None or not math.isfinite(f_min):
        raise ValueError("MAE needs the true minimum of the space")
    curve = best_curve(trace, budget)
    points = checkpoints(step, budget)
    if not points:
        raise ValueError(f"budget {budget} has no checkpoints for step {step}")
    gaps = [abs(curve[c - 1] - f_min) for c in points]
    return float(np.mean(gaps))


def mdf(table: Mapping[str, Mapping[str, float]]) -> dict[str, tuple[float, float]]:
    """Mean Deviation Factor per strategy.

    ``table[space][strategy]`` is the mean MAE of a strategy on a space. On
    each space a strategy's factor is its mean MAE over the cross-strategy
    average; a strategy's MDF is the mean of its factors over spaces, with
    their standard deviation. A space where every strategy has MAE 0 gives
    factor 1 to all.
    """
    strategies = None
    factors: dict[str, list[float]] = {}
    for space, row in table.items():
        names = list(row)
        if strategies is None:
            strategies = set(names)
        elif set(names) != strategies:
            raise ValueError(f"space {space!r} covers strategies {sorted(names)}, expected {sorted(strategies)}")
        values = np.array([row[s] for s in names], dtype=float)
        denom = values.mean()
        if denom == 0:
            ratios = np.ones_like(values)
        else:
            ratios = values / denom
        for s, r in zip(names, ratios):
            factors.setdefault(s, []).append(float(r))
    return {s: (float(np.mean(f)), float(np.std(f))) for s, f in factors.items()}


def extended_match(
    reference_traces: Sequence,
    others: Mapping[str, Sequence],
    max_budget: int = 1020,
    reference_budget: int = 220,
) -> tuple[float, dict[str, int | None]]:
    """Evaluation count at which each strategy's median best-so-far first
    matches the reference's median best at ``reference_budget``.

    Returns ``(target, counts)``; a count is ``None`` when the target is not
    reached within ``max_budget`` evaluations (or within the traces' length).
    """
    ref = np.array([best_curve(t, reference_budget)[-1] for t in reference_traces])
    target = float(np.median(ref))
    counts: dict[str, int | None] = {}
    for name, traces in others.items():
        horizon = min(max_budget, max(len(t) for t in traces))
        curves = np.vstack([best_curve(t, horizon) for t in traces])
        median = np.median(curves, axis=0)
        hit = np.flatnonzero(median <= target)
        counts[name] = int(hit[0]) + 1 if hit.size else None
    return target, counts


def series(traces: Sequence, length: int) -> np.ndarray:
    """Rows of (evaluation, median, q25, q75) of best-so-far over runs."""
    curves = np.vstack([best_curve(t, length) for t in traces])
    # no interpolation: curves start at +inf before the first valid result
    q25, q75 = np.percentile(curves, [25, 75], axis=0, method="nearest")
    med = np.median(curves, axis=0)
    counts = np.arange(1, length + 1)
    return np.column_stack([counts, med, q25, q75])
