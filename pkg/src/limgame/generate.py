"""Seeded random instances for tests, benchmarks and ``limgame gen``."""

from __future__ import annotations

import random
from fractions import Fraction

from .graph import GameGraph, Owner, RewardFunction

__all__ = ["INSTANCE_KINDS", "random_instance"]

INSTANCE_KINDS = ("mdp", "mdp2", "game", "chain")


def random_instance(
    states: int,
    seed: int,
    kind: str = "mdp",
    density: float = 0.3,
    reward_range: tuple[int, int] = (-3, 5),
    max_out: int = 3,
    max_p2: int = 2,
    prob_share: float = 0.5,
) -> tuple[GameGraph, RewardFunction]:
    """A random valid instance.

    ``kind`` is ``"mdp"`` (player 1 and chance), ``"mdp2"`` (player 2 and
    chance), ``"game"`` (both players, at most ``max_p2`` player-2 states)
    or ``"chain"``.  Every state gets each possible edge with probability
    ``density`` (at least one, at most ``max_out``); transition
    probabilities are small-denominator rationals.
    """
    if states < 1:
        raise ValueError("need at least one state")
    if not 0 < density <= 1:
        raise ValueError("density must lie in (0, 1]")
    if kind not in INSTANCE_KINDS:
        raise ValueError(f"kind must be one of {INSTANCE_KINDS}")
    lo, hi = reward_range
    if lo > hi:
        raise ValueError("empty reward range")
    rng = random.Random(seed)
    player = Owner.P2 if kind == "mdp2" else Owner.P1
    owners = []
    for _ in range(states):
        if kind == "chain" or rng.random() < prob_share:
            owners.append(Owner.PROB)
        else:
            owners.append(player)
    if kind == "game":
        slots = list(range(states))
        rng.shuffle(slots)
        for i in slots[: rng.randint(1, max(1, min(max_p2, states)))]:
            owners[i] = Owner.P2
    ids = [f"s{i}" for i in range(states)]
    edges = []
    for i in range(states):
        targets = [j for j in range(states) if rng.random() < density]
        if not targets:
            targets = [rng.randrange(states)]
        if len(targets) > max_out:
            targets = sorted(rng.sample(targets, max_out))
        if owners[i] is Owner.PROB:
            weights = [rng.randint(1, 3) for _ in targets]
            total = sum(weights)
            for j, w in zip(targets, weights):
                edges.append((ids[i], ids[j], Fraction(w, total)))
        else:
            for j in targets:
                edges.append((ids[i], ids[j], None))
    g = GameGraph.build(zip(ids, owners), edges)
    rewards = RewardFunction({s: Fraction(rng.randint(lo, hi)) for s in ids})
    return g, rewards
