import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bayestune.metrics import best_curve, checkpoints, extended_match, mae, mdf, series
from bayestune.simulator import SyntheticSpec, gen_synthetic
from bayestune.strategies import StrategyConfig, run_strategy


def _step_trace(values_at_checkpoints, step=20, budget=220):
    """Per-evaluation best values that equal the given values at the checkpoints."""
    trace = np.full(budget, values_at_checkpoints[0], dtype=float)
    for c, v in zip(checkpoints(step, budget), values_at_checkpoints):
        trace[c - 20:] = v
    return trace.tolist()


def test_checkpoints():
    assert checkpoints() == [40, 60, 80, 100, 120, 140, 160, 180, 200, 220]


def test_mae_perfect_run():
    assert mae([1.0] * 220, 1.0) == 0.0


def test_mae_constant_gap():
    assert mae([3.0] * 220, 2.0) == pytest.approx(1.0)


def test_mae_geometric_halving():
    eps = 1e-3
    gaps = [512 * eps / 2**k for k in range(10)]
    trace = _step_trace([5.0 + g for g in gaps])
    assert mae(trace, 5.0) == pytest.approx(1023 * eps / 10, rel=1e-12)


def test_mae_short_trace_carries_best_forward():
    # a run that exhausted a small space early keeps its final best
    assert mae([(1, 4.0), (2, 2.0)], 2.0) == 0.0


def test_mae_needs_minimum():
    with pytest.raises(ValueError):
        mae([1.0], None)


def test_best_curve_formats_agree():
    assert best_curve([(1, 3.0), (2, 1.0)], 4).tolist() == best_curve([3.0, 1.0], 4).tolist() == [3, 1, 1, 1]
    assert np.all(np.isinf(best_curve([], 3)))


def test_mdf_two_strategies():
    out = mdf({"s": {"a": 1.0, "b": 3.0}})
    assert out["a"][0] == pytest.approx(0.5)
    assert out["b"][0] == pytest.approx(1.5)


def test_mdf_single_strategy():
    assert mdf({"s": {"a": 0.3}, "t": {"a": 7.0}})["a"] == (1.0, 0.0)


def test_mdf_consistent_ratio():
    table = {f"s{i}": {"a": 2.0 * (i + 1), "b": 1.0 * (i + 1)} for i in range(5)}
    out = mdf(table)
    ratio = out["a"][0] / out["b"][0]
    assert ratio == pytest.approx(2.0)
    assert out["a"][1] == pytest.approx(0.0, abs=1e-15)


def test_mdf_all_zero_space():
    assert mdf({"s": {"a": 0.0, "b": 0.0}}) == {"a": (1.0, 0.0), "b": (1.0, 0.0)}


def test_mdf_mismatched_strategies():
    with pytest.raises(ValueError):
        mdf({"s": {"a": 1.0}, "t": {"b": 1.0}})


@settings(max_examples=100, deadline=None)
@given(
    st.lists(
        st.lists(st.floats(1e-6, 1e3), min_size=3, max_size=3),
        min_size=1, max_size=6,
    ),
)
def test_mdf_factors_average_to_one(rows):
    table = {f"s{i}": dict(zip("abc", row)) for i, row in enumerate(rows)}
    out = mdf(table)
    assert np.mean([m for m, _ in out.values()]) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.floats(-1e3, 1e3), st.lists(st.floats(0.0, 10.0), min_size=220, max_size=220))
def test_mae_is_translation_invariant(shift, gaps):
    curve = np.minimum.accumulate(np.array(gaps))
    base = mae((1.0 + curve).tolist(), 1.0)
    moved = mae((1.0 + shift + curve).tolist(), 1.0 + shift)
    assert moved == pytest.approx(base, rel=1e-9, abs=1e-9)


def test_extended_match():
    ref = [[5.0] * 100 + [2.0] * 120, [5.0] * 220, [2.0] * 220]
    fast = [[3.0] * 10 + [2.0] * 210] * 3
    slow = [[9.0] * 500 + [2.0] * 520] * 3
    never = [[9.0] * 1020] * 3
    target, counts = extended_match(ref, {"fast": fast, "slow": slow, "never": never})
    assert target == 2.0
    assert counts == {"fast": 11, "slow": 501, "never": None}


def test_extended_match_limit():
    ref = [[1.0] * 220]
    late = [[2.0] * 600 + [1.0] * 420]
    assert extended_match(ref, {"late": late}, max_budget=500)[1] == {"late": None}


def test_series_quantiles():
    rows = series([[3.0, 1.0], [4.0, 2.0], [5.0, 3.0]], 3)
    assert rows[:, 0].tolist() == [1, 2, 3]
    assert rows[0, 1:].tolist() == [4.0, 3.0, 5.0]
    assert rows[2, 1:].tolist() == [2.0, 1.0, 3.0]


def test_extended_match_bo_beats_random_on_tiny_basin():
    cache = gen_synthetic(SyntheticSpec("step-plateau", (30, 30), levels=30, seed=3))
    assert sum(m.value == cache.true_minimum for m in cache.measurements) < 10

    def traces(strategy, budget):
        config = StrategyConfig(strategy, budget=budget, n_init=10)
        return [[b for _, b in run_strategy(cache.space, cache.objective(), config, np.random.default_rng(s)).trace]
                for s in range(10)]

    bo = traces("bo-advanced-multi", 60)
    _, counts = extended_match(bo, {"bo": bo, "random": traces("random", 900)}, max_budget=900, reference_budget=60)
    assert counts["bo"] <= 60
    assert counts["random"] is None or counts["random"] > counts["bo"]
