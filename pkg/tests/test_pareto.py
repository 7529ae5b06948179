import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import brute_front
from paretoarch.pareto import (
    DimensionMismatch,
    EmptyInput,
    UncertifiedPreference,
    discover,
    dominates,
    pareto_front,
    rescale,
    select,
)
from paretoarch.prefs import evaluate, parse, weighted_sum

vectors = st.lists(st.integers(0, 4).map(float), min_size=3, max_size=3)


def _records(points):
    return {f"k{i:03d}": tuple(p) for i, p in enumerate(points)}


def test_dominates_examples():
    assert dominates((1, 1, 1), (1, 1, 2))
    assert not dominates((1, 1, 1), (1, 1, 1))
    assert not dominates((1, 2, 3), (2, 1, 3))
    assert not dominates((2, 1, 3), (1, 2, 3))
    with pytest.raises(DimensionMismatch):
        dominates((1, 2), (1, 2, 3))


@given(vectors, vectors, vectors)
def test_dominance_order_properties(a, b, c):
    assert not dominates(a, a)
    assert not (dominates(a, b) and dominates(b, a))
    if dominates(a, b) and dominates(b, c):
        assert dominates(a, c)


def test_front_examples():
    assert pareto_front({"a": (0, 1), "b": (1, 0), "c": (1, 1)}).keys == ["a", "b"]
    assert pareto_front({"only": (3, 2, 1)}).keys == ["only"]
    with pytest.raises(EmptyInput):
        pareto_front({})


def test_duplicates_are_kept_and_sorted():
    front = pareto_front({"z": (1, 2), "a": (1, 2), "m": (2, 1), "x": (3, 3)})
    assert front.keys == ["a", "m", "z"]


def test_front_matches_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(50):
        items = _records(rng.random((200, 3)))
        assert set(pareto_front(items).keys) == brute_front(items)


@given(st.lists(vectors, min_size=1, max_size=40))
def test_front_matches_brute_force_with_ties(points):
    items = _records(points)
    assert set(pareto_front(items).keys) == brute_front(items)


@given(st.lists(vectors, min_size=1, max_size=40))
def test_front_of_front_is_fixpoint(points):
    front = pareto_front(_records(points))
    assert pareto_front(dict(front.members)).keys == front.keys


@given(st.lists(vectors, min_size=1, max_size=40), st.integers(0, 2), st.sampled_from([0.5, 3.0, 1000.0]))
def test_front_is_scale_invariant(points, axis, c):
    items = _records(points)
    scaled = {k: tuple(v * c if i == axis else v for i, v in enumerate(vec)) for k, vec in items.items()}
    assert pareto_front(scaled).keys == pareto_front(items).keys


def test_rescale_examples():
    front = pareto_front({"lo": (1, 10, 300), "hi": (3, 20, 100), "mid": (2, 15, 200)})
    scaled = rescale(front)
    assert scaled["lo"] == (0.0, 0.0, 1.0)
    assert scaled["hi"] == (1.0, 1.0, 0.0)
    assert scaled["mid"] == (0.5, 0.5, 0.5)
    two = rescale(pareto_front({"a": (1, 10, 100), "b": (3, 20, 300), "c": (0, 30, 400)}))
    assert two["c"] == (0.0, 1.0, 1.0)


def test_rescale_degenerate_coordinate():
    scaled = rescale(pareto_front({"a": (0, 5, 1), "b": (1, 5, 0)}))
    assert scaled["a"][1] == scaled["b"][1] == 0.0


@given(st.lists(vectors, min_size=1, max_size=40))
def test_rescale_preserves_front(points):
    items = _records(points)
    front = pareto_front(items)
    rescaled_front = {k: front.rescale_point(v) for k, v in front.members}
    assert pareto_front(rescaled_front).keys == front.keys
    if all(u > l for u, l in zip(front.upper, front.lower)):
        # a degenerate coordinate collapses to 0 and can hide off-front dominance
        rescaled_all = {k: front.rescale_point(v) for k, v in items.items()}
        assert pareto_front(rescaled_all).keys == front.keys
    values = np.array(list(rescale(front).values()))
    assert values.min() >= 0.0 and values.max() <= 1.0


def test_evaluate_examples():
    p1 = weighted_sum([1 / 3, 1 / 3, 1 / 3])
    assert evaluate(p1, (9, 9, 9), (0.3, 0.6, 0.9)) == pytest.approx(0.6, abs=1e-15)
    assert evaluate(parse("step(f1, 0.06, 1e3)"), (0.07, 1, 1), (0, 0, 0)) == 1000.0
    assert evaluate(parse("step(f1, 0.06, 1e3)"), (0.06, 1, 1), (0, 0, 0)) == 0.0
    assert evaluate(parse("0.01*hinge(f3, 20000)"), (0, 0, 20000), (0, 0, 0)) == 0.0
    assert evaluate(parse("0.01*hinge(f3, 20000)"), (0, 0, 20100), (0, 0, 0)) == pytest.approx(1.0)


def test_discover_examples():
    front = pareto_front({"a": (0.0, 1.0), "b": (1.0, 0.0)})
    assert discover(front, parse("0.2*fhat2 + 0.7*fhat1"))[0] == "a"
    assert discover(front, parse("0.5*fhat1 + 0.5*fhat2")) == ("a", 0.5)
    tie = pareto_front({"B": (1.0, 0.0), "A": (0.0, 1.0)})
    assert discover(tie, parse("0.5*fhat1 + 0.5*fhat2"))[0] == "A"


def test_discover_front_equals_global_argmin():
    rng = np.random.default_rng(1)
    for _ in range(50):
        items = _records(rng.random((50, 3)))
        front = pareto_front(items)
        pref = weighted_sum(rng.random(3))
        key, value = discover(front, pref)
        global_key, global_value = discover(front, pref, candidates=items)
        assert value == global_value
        assert key == global_key


def test_select_warns_and_searches_everything_for_non_monotone():
    items = {"a": (0.0, 1.0), "b": (1.0, 0.0), "c": (2.0, 2.0)}
    pref = parse("-1*f1 - 1*f2")
    with pytest.warns(UncertifiedPreference):
        key, value, restricted = select(items, pref)
    assert (key, value, restricted) == ("c", -4.0, False)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert select(items, parse("f1 + f2"))[2] is True
