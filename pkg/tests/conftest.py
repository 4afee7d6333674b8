"""Shared small instances."""

from fractions import Fraction

import pytest

from limgame.graph import GameGraph, Owner, RewardFunction


def build(states, edges, rewards):
    """Shorthand: ``states`` maps id -> owner string, ``rewards`` id -> int."""
    g = GameGraph.build(list(states.items()), edges)
    return g, RewardFunction({s: Fraction(v) for s, v in rewards.items()})


def coin():
    """Player 1 at s either flips a fair coin between rewards 10 and 2, or
    takes the 2 directly."""
    return build(
        {"s": "p1", "p": "prob", "a": "p1", "b": "p1"},
        [("s", "p", None), ("s", "b", None),
         ("p", "a", "1/2"), ("p", "b", "1/2"),
         ("a", "a", None), ("b", "b", None)],
        {"s": 0, "p": 0, "a": 10, "b": 2},
    )


def two_cycle():
    """Chain bouncing between rewards 1 and 3."""
    return build(
        {"x": "prob", "y": "prob"},
        [("x", "y", "1"), ("y", "x", "1")],
        {"x": 1, "y": 3},
    )


@pytest.fixture
def coin_instance():
    return coin()


@pytest.fixture
def coin_file(tmp_path):
    from limgame.formats import dump_game

    path = tmp_path / "coin.json"
    path.write_text(dump_game(*coin()))
    return path


P1, P2, PROB = Owner.P1, Owner.P2, Owner.PROB
