import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bayestune.restrictions import RestrictionError
from bayestune.space import EmptySearchSpaceError, ParameterDef, SearchSpace


def test_restriction_prunes_one(small_space):
    configs = small_space.enumerate_valid()
    assert len(configs) == 5
    assert small_space.cartesian_size == 6
    assert (4, "b") not in [c.values for c in configs]


def test_cartesian_without_restrictions():
    space = SearchSpace.build([("p", [1, 2, 4]), ("q", ["a", "b"])])
    assert len(space.enumerate_valid()) == 6


def test_canonical_order_is_lexicographic_over_ranks():
    space = SearchSpace.build([("p", [4, 1, 2]), ("q", ["b", "a"])])
    assert [c.values for c in space.configs] == [
        (4, "b"), (4, "a"), (1, "b"), (1, "a"), (2, "b"), (2, "a")
    ]
    assert [c.index for c in space.configs] == list(range(6))


def test_empty_result_is_reported():
    with pytest.raises(EmptySearchSpaceError):
        SearchSpace.build([("p", [1, 2])], ["p > 5"]).enumerate_valid()


def test_restriction_error_during_enumeration_surfaces():
    space = SearchSpace.build([("p", [0, 1])], ["4 / p > 1"])
    with pytest.raises(RestrictionError):
        space.enumerate_valid()


def test_normalize_examples():
    space = SearchSpace.build([("a", [1, 2, 4]), ("b", [32])])
    assert space.normalize((2, 32)).tolist() == [0.5, 0.0]
    assert space.normalize((4, 32)).tolist() == [1.0, 0.0]
    with pytest.raises(ValueError):
        space.normalize((3, 32))


def test_denormalize_nearest_rank():
    space = SearchSpace.build([("a", [1, 2, 4])])
    assert space.denormalize([0.49]).values == (2,)     # 0.98 -> rank 1
    assert space.denormalize([0.25]).values == (1,)     # tie at 0.5 -> lower rank
    assert space.denormalize([0.75]).values == (2,)     # tie at 1.5 -> lower rank
    assert space.denormalize([0.76]).values == (4,)
    for bad in ([-0.1], [1.1], [float("nan")]):
        with pytest.raises(ValueError):
            space.denormalize(bad)


def test_denormalize_marks_pruned(small_space):
    c = small_space.denormalize([1.0, 1.0])
    assert c.values == (4, "b") and c.index is None


def test_mixed_kinds_and_duplicates():
    p = ParameterDef("flag", (False, True))
    assert p.kind == "boolean"
    assert ParameterDef("m", ("x", 1)).kind == "categorical"
    with pytest.raises(ValueError):
        ParameterDef("d", (1, 1))
    with pytest.raises(ValueError):
        ParameterDef("n", (1.0, float("inf")))
    with pytest.raises(ValueError):
        SearchSpace.build([("a", [1]), ("a", [2])])


def test_neighbors_are_single_rank_steps(small_space):
    # (2, 'a') has neighbours (1,'a'), (4,'a'), (2,'b')
    idx = small_space.index_of((2, "a"))
    got = {small_space.configs[j].values for j in small_space.neighbors(idx)}
    assert got == {(1, "a"), (4, "a"), (2, "b")}
    # (4, 'a') cannot step to the pruned (4, 'b')
    idx = small_space.index_of((4, "a"))
    got = {small_space.configs[j].values for j in small_space.neighbors(idx)}
    assert got == {(2, "a")}


value_lists = st.lists(st.integers(-50, 50), min_size=1, max_size=5, unique=True)


@st.composite
def spaces(draw):
    params = [ParameterDef(f"p{i}", tuple(draw(value_lists))) for i in range(draw(st.integers(1, 3)))]
    restrictions = []
    if draw(st.booleans()):
        a, b = draw(st.sampled_from(params)), draw(st.sampled_from(params))
        bound = draw(st.integers(-60, 60))
        restrictions.append(f"{a.name} + {b.name} < {bound} or {a.name} == {a.values[0]}")
    return SearchSpace.build(params, restrictions)


@settings(max_examples=60, deadline=None)
@given(spaces())
def test_space_properties(space):
    configs = space.configs
    cart = list(itertools.product(*(p.values for p in space.params)))
    allowed = [c for c in cart if space.is_allowed(c)]   # totality: never raises
    assert len(configs) <= space.cartesian_size
    assert (len(configs) == space.cartesian_size) == (len(allowed) == len(cart))
    assert [c.values for c in configs] == allowed
    coords = np.array([space.normalize(c) for c in configs])
    np.testing.assert_array_equal(coords, space.coords)
    assert len({tuple(r) for r in coords.tolist()}) == len(configs)   # injective
    for c, x in zip(configs, coords):
        assert space.denormalize(x) == c                               # round trip
    for dim, p in enumerate(space.params):
        k = len(p)
        if k >= 2:
            got = sorted(space.normalize_value(dim, v) for v in p.values)
            assert got == [i / (k - 1) for i in range(k)]
