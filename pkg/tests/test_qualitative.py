from fractions import Fraction
import random

import pytest
from hypothesis import given, settings, strategies as st

from conftest import build, coin
from limgame.generate import random_instance
from limgame.graph import GraphError, RewardFunction
from limgame.oracle import analyze_chain, enumerate_end_components, enumerate_values
from limgame.qualitative import (
    almost_sure_buchi,
    almost_sure_cobuchi,
    almost_sure_reach,
    attractor_p,
    buchi_witness,
    cobuchi_witness,
    is_end_component,
    mec_decompose,
    sccs,
)


def indicator(g, members):
    members = set(members)
    return RewardFunction({s: Fraction(int(s in members)) for s in g.states})


def value_one(g, r, kind):
    return {s for s, v in enumerate_values(g, r, kind).items() if v == 1}


def random_subset(g, seed):
    rng = random.Random(seed)
    return [s for s in g.states if rng.random() < 0.4]


def test_sccs_small():
    comps = sccs(range(4), {0: [1], 1: [0], 2: [3], 3: []})
    assert sorted(sorted(c) for c in comps) == [[0, 1], [2], [3]]


def test_self_loop_is_mec():
    g, _ = build({"s": "p1"}, [("s", "s", None)], {"s": 1})
    assert list(mec_decompose(g)) == [frozenset({"s"})]


def test_choice_state_outside_mecs():
    g, _ = build(
        {"s": "p1", "a": "p1", "b": "p1"},
        [("s", "a", None), ("s", "b", None), ("a", "a", None), ("b", "b", None)],
        {"s": 0, "a": 0, "b": 0},
    )
    dec = mec_decompose(g)
    assert set(dec) == {frozenset({"a"}), frozenset({"b"})}
    assert dec.component_of["s"] is None


def test_end_component_rejects_leaky_prob_state():
    g, _ = coin()
    assert not is_end_component(g, ["p", "a"])
    assert is_end_component(g, ["a"])


def maximal(sets):
    return {u for u in sets if not any(u < w for w in sets)}


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_mecs_match_subset_enumeration(seed):
    g, _ = random_instance(8, seed, "mdp", density=0.3)
    ecs = enumerate_end_components(g)
    assert set(mec_decompose(g)) == maximal(set(ecs))


def test_attractor_examples():
    g, _ = coin()
    assert attractor_p(g, []) == frozenset()
    # p has a successor in {a}; s can still avoid it by going to b
    assert attractor_p(g, ["a"]) == frozenset({"a", "p"})


def test_reach_along_player_chain():
    g, _ = build(
        {"x": "p1", "y": "p1", "t": "p1"},
        [("x", "y", None), ("y", "t", None), ("t", "t", None)],
        {"x": 0, "y": 0, "t": 0},
    )
    assert almost_sure_reach(g, ["t"]) == {"x", "y", "t"}


def test_reach_excludes_probabilistic_escape():
    g, _ = coin()
    assert "p" not in almost_sure_reach(g, ["a"])
    assert almost_sure_reach(g, ["a", "b"]) == set(g.states)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_reach_matches_oracle(seed):
    g, _ = random_instance(7, seed, "mdp", density=0.3)
    t = random_subset(g, seed)
    assert almost_sure_reach(g, t) == value_one(g, indicator(g, t), "max")


def test_buchi_trivial():
    g, _ = coin()
    assert almost_sure_buchi(g, g.states) == set(g.states)
    assert almost_sure_buchi(g, []) == frozenset()


def test_cobuchi_trivial():
    g, _ = coin()
    assert almost_sure_cobuchi(g, g.states) == set(g.states)
    assert almost_sure_cobuchi(g, ["s", "p"]) == frozenset()


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_buchi_matches_oracle(seed):
    g, _ = random_instance(7, seed, "mdp", density=0.3)
    b = random_subset(g, seed)
    assert almost_sure_buchi(g, b) == value_one(g, indicator(g, b), "limsup")


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_cobuchi_matches_oracle(seed):
    g, _ = random_instance(7, seed, "mdp", density=0.3)
    c = random_subset(g, seed + 1)
    assert almost_sure_cobuchi(g, c) == value_one(g, indicator(g, c), "liminf")


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_witnesses_win(seed):
    """Fixing the witness choices keeps the winning set winning."""
    from limgame.graph import Owner, PureMemorylessStrategy, fix_strategy

    g, _ = random_instance(7, seed, "mdp", density=0.3)
    b = random_subset(g, seed)
    for fn, kind in ((buchi_witness, "limsup"), (cobuchi_witness, "liminf")):
        win, choice = fn(g, b)
        picks = {s: choice.get(s, g.succ(s)[0]) for s in g.states_of(Owner.P1)}
        chain = fix_strategy(g, PureMemorylessStrategy(Owner.P1, picks))
        assert win <= value_one(chain, indicator(g, b), kind)


def test_games_rejected():
    g, _ = build({"a": "p1", "b": "p2"}, [("a", "b", None), ("b", "a", None)], {"a": 0, "b": 0})
    with pytest.raises(GraphError):
        mec_decompose(g)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_attractor_monotone_and_idempotent(seed):
    g, _ = random_instance(7, seed, "mdp", density=0.3)
    small = random_subset(g, seed)
    big = set(small) | set(random_subset(g, seed + 7))
    x = attractor_p(g, small)
    assert attractor_p(g, x) == x
    assert x <= attractor_p(g, big)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_chain_buchi_cobuchi_complement(seed):
    g, _ = random_instance(7, seed, "chain", density=0.3)
    b = set(random_subset(g, seed))
    rest = set(g.states) - b
    win_b = almost_sure_buchi(g, b)
    win_c = almost_sure_cobuchi(g, rest)
    assert not (win_b & win_c)
    # the probabilities are complementary even where neither set wins
    pb = analyze_chain(g, indicator(g, b), include_max=False).value("limsup")
    pc = analyze_chain(g, indicator(g, rest), include_max=False).value("liminf")
    for s in g.states:
        assert pb[s] + pc[s] == 1
        assert (s in win_b) == (pb[s] == 1)
        assert (s in win_c) == (pc[s] == 1)


def test_cobuchi_inside_larger_mec():
    # the only MEC {a, b} is not inside c = {a}, yet a can loop on itself
    g, _ = build({"a": "p1", "b": "p1"},
                 [("a", "a", None), ("a", "b", None), ("b", "a", None)],
                 {"a": 0, "b": 0})
    assert list(mec_decompose(g)) == [frozenset({"a", "b"})]
    assert almost_sure_cobuchi(g, ["a"]) == {"a", "b"}
    assert value_one(g, indicator(g, ["a"]), "liminf") == {"a", "b"}
