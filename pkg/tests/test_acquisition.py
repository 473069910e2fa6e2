import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import norm

from bayestune.acquisition import (
    AdvancedMultiPortfolio,
    AfRecord,
    CandidatePool,
    ContextualVariance,
    MultiPortfolio,
    SinglePortfolio,
    acq_ei,
    acq_lcb,
    acq_pi,
    af_choice,
    contextual_variance,
    dos,
    substitute_invalid,
)

from oracles import dos_direct, mc_ei, mc_pi, stratified_normals


# Acquisition functions -------------------------------------------------------


def test_pi_at_threshold_is_half():
    assert acq_pi(0.0, 1.0, 0.0, 0.0) == pytest.approx(0.5)


def test_pi_far_below():
    assert acq_pi(-1.96, 1.0, 0.0, 0.0) == pytest.approx(0.975, abs=1e-3)


def test_pi_lambda_raises_threshold():
    assert acq_pi(0.5, 1.0, 0.0, 0.5) == pytest.approx(0.5)


def test_ei_zero_gap():
    assert acq_ei(0.0, 1.0, 0.0, 0.0) == pytest.approx(1 / np.sqrt(2 * np.pi))


def test_ei_matches_closed_form():
    mean, std, f_best, lam = 0.3, 0.7, 0.1, 0.05
    gap = f_best - lam - mean
    z = gap / std
    expected = gap * norm.cdf(z) + std * norm.pdf(z)
    assert acq_ei(mean, std, f_best, lam) == pytest.approx(expected, rel=1e-12)


def test_zero_std_is_deterministic():
    assert acq_ei(-1.0, 0.0, 0.0, 0.0) == pytest.approx(1.0)
    assert acq_ei(1.0, 0.0, 0.0, 0.0) == 0.0
    assert acq_pi(-1.0, 0.0, 0.0, 0.0) == 1.0
    assert acq_pi(1.0, 0.0, 0.0, 0.0) == 0.0


def test_ei_nonnegative_in_far_tail():
    assert acq_ei(40.0, 1.0, 0.0, 0.0) >= 0.0


def test_lcb_exact():
    assert acq_lcb(1.0, 2.0, 0.25) == 0.5


def test_against_monte_carlo():
    rng = np.random.default_rng(7)
    z = stratified_normals(1_000_000, rng)
    for _ in range(20):
        mean, f_best = rng.normal(size=2)
        std, lam = rng.uniform(0.05, 1.0), rng.uniform(0.0, 0.5)
        assert acq_ei(mean, std, f_best, lam) == pytest.approx(mc_ei(mean, std, f_best, lam, z), abs=1e-3)
        assert acq_pi(mean, std, f_best, lam) == pytest.approx(mc_pi(mean, std, f_best, lam, z), abs=1e-3)


def test_choice_ties_go_to_lowest_position():
    mean = np.zeros(4)
    std = np.ones(4)
    for name in ("ei", "poi", "lcb"):
        assert af_choice(name, mean, std, 0.0, 0.1) == 0


def test_unknown_af():
    with pytest.raises(ValueError):
        af_choice("ucb", [0.0], [1.0], 0.0, 0.0)


# Contextual variance ---------------------------------------------------------


def test_contextual_variance_example():
    assert contextual_variance(0.5, 10.0, 5.0, 1.0) == pytest.approx(0.25, abs=1e-12)


def test_contextual_variance_unity():
    assert contextual_variance(0.3, 2.0, 2.0, 0.3) == pytest.approx(1.0, abs=1e-12)


def test_contextual_variance_never_negative():
    assert contextual_variance(-1e-15, 1.0, 1.0, 1.0) == 0.0


def test_contextual_variance_fallback(caplog):
    with caplog.at_level(logging.WARNING):
        assert contextual_variance(0.5, -1.0, 1.0, 1.0) == 0.01
    assert "constant exploration" in caplog.text
    cv = ContextualVariance(initial_mean=1.0, initial_variance=1.0, fallback=0.02)
    assert cv(0.5, 0.0) == 0.02


def test_contextual_variance_is_scale_free():
    a = contextual_variance(0.4, 3.0, 1.5, 0.8)
    b = contextual_variance(0.4, 3.0 * 1e4, 1.5 * 1e4, 0.8)
    assert a == pytest.approx(b, rel=1e-12)


# Discounted observation score ------------------------------------------------


def test_dos_examples():
    assert dos([5.0], 0.5) == pytest.approx(5.0)
    assert dos([1.0, 2.0], 0.9) == pytest.approx(2.9)
    assert dos([], 0.9) == 0.0


@settings(max_examples=100, deadline=None)
@given(
    st.lists(st.floats(0.0, 1e3, allow_nan=False), max_size=60),
    st.floats(0.05, 1.0),
)
def test_incremental_dos_matches_direct(history, gamma):
    rec = AfRecord("ei", gamma)
    for o in history:
        rec.observe(o)
    direct = dos_direct(history, gamma)
    assert rec.score == pytest.approx(direct, rel=1e-12, abs=1e-12)
    assert dos(history, gamma) == pytest.approx(direct, rel=1e-12, abs=1e-12)


def test_substitute_invalid_median():
    assert substitute_invalid([2.0, 4.0, 6.0]) == 4.0
    with pytest.raises(ValueError):
        substitute_invalid([])


# Portfolios ------------------------------------------------------------------


def _agreeing_pool(n=5):
    """Every acquisition function prefers position 0: lowest mean, highest std."""
    mean = np.linspace(0.0, 1.0, n)
    std = np.linspace(1.0, 0.5, n)
    return CandidatePool(np.arange(n), mean, std, f_best=0.5, lam=0.1)


def test_single_portfolio_takes_best_remaining():
    p = SinglePortfolio("ei")
    pool = _agreeing_pool()
    assert p.suggest("ei", pool) == 0
    assert p.suggest("ei", pool) == 1


def test_multi_skips_duplicating_af_with_higher_score():
    p = MultiPortfolio(("ei", "poi"), gamma=0.65, skip_threshold=5)
    for _ in range(3):
        p.record("poi", 0.1)
    rounds = 0
    while len(p.active) == 2:
        rounds += 1
        pool = _agreeing_pool()
        order = p.round_order()
        assert order == ["ei", "poi"]
        cand = p.suggest("ei", pool)
        assert cand == 0
        p.record("ei", 1.0)
        assert p.suggest("poi", pool) is None
        p.record("poi", 1.0)
        p.end_round()
        assert rounds <= 6
    assert rounds == 6
    dups = [e for e in p.events if e[0] == "duplicate"]
    assert len(dups) == 6
    assert p.events[-1] == ("skip", "ei", "poi")
    assert p.active == ["poi"]
    assert p.records["poi"].duplicates == 0


def test_multi_never_drops_last_af():
    p = MultiPortfolio(("ei",), skip_threshold=0)
    for _ in range(10):
        p.round_order()
        p.suggest("ei", _agreeing_pool())
    assert p.active == ["ei"]


def _advanced_rounds(p, values, rounds):
    for _ in range(rounds):
        pool = _agreeing_pool(10)
        seen = set()
        for af in p.round_order():
            cand = p.suggest(af, pool)
            assert cand not in seen
            seen.add(cand)
            p.record(af, values[af])
        p.end_round()


def test_advanced_promotes_consistently_better_af():
    p = AdvancedMultiPortfolio(gamma=0.75, skip_threshold=5, required_improvement=0.1)
    values = {"ei": 1.0, "poi": 1.0, "lcb": 0.5}
    _advanced_rounds(p, values, 4)
    assert p.events == []
    _advanced_rounds(p, values, 1)
    assert p.events == [("skip", "ei", "lcb"), ("skip", "poi", "lcb"), ("promote", "lcb")]
    assert p.active == ["lcb"]


def test_advanced_skips_consistently_worse_af():
    p = AdvancedMultiPortfolio(gamma=0.75, skip_threshold=5, required_improvement=0.1)
    values = {"ei": 1.2, "poi": 1.0, "lcb": 1.0}
    _advanced_rounds(p, values, 4)
    assert p.events == []
    _advanced_rounds(p, values, 1)
    assert p.events == [("skip", "ei", None)]
    assert p.active == ["poi", "lcb"]
    assert all(p.records[a].above == 0 and p.records[a].below == 0 for a in p.active)


def test_advanced_identical_performance_no_events():
    p = AdvancedMultiPortfolio()
    _advanced_rounds(p, {"ei": 1.0, "poi": 1.0, "lcb": 1.0}, 30)
    assert p.events == []
    assert p.active == ["ei", "poi", "lcb"]


def test_advanced_scale_invariant():
    def events(scale):
        p = AdvancedMultiPortfolio()
        rng = np.random.default_rng(4)
        for _ in range(30):
            pool = _agreeing_pool(10)
            for af in p.round_order():
                p.suggest(af, pool)
                p.record(af, scale * (1.0 + 0.5 * rng.random() + (af == "poi")))
            p.end_round()
        return p.events

    assert events(1.0) == events(1000.0)
    assert events(1.0)


def test_advanced_keeps_an_active_af():
    p = AdvancedMultiPortfolio(skip_threshold=1)
    rng = np.random.default_rng(0)
    for _ in range(50):
        pool = _agreeing_pool(10)
        for af in p.round_order():
            p.suggest(af, pool)
            p.record(af, rng.uniform(0.1, 10.0))
        p.end_round()
        assert len(p.active) >= 1


def test_pool_exhaustion():
    pool = CandidatePool(np.arange(1), np.zeros(1), np.ones(1), 0.0, 0.0)
    assert pool.best_for("ei", exclude_taken=True) == 0
    with pytest.raises(LookupError):
        pool.best_for("poi", exclude_taken=True)
    p = AdvancedMultiPortfolio()
    assert p.suggest("ei", pool) is None
