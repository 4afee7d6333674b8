"""Polynomial-time solving of MDPs with limsup and liminf objectives.

:func:`solve_mdp` accepts any MDP with arbitrary rational rewards: it makes
the rewards positive, normalizes the graph to be bipartite, runs the level
reduction, converts to a max objective, solves that exactly, and maps
values and strategies back.  Player-2 MDPs are solved by swapping the
players and negating the rewards.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Optional

from .graph import (
    BipartiteMapping,
    GameGraph,
    GraphError,
    Owner,
    PureMemorylessStrategy,
    RewardFunction,
    bipartite_normalize,
    make_positive,
    mirror,
)
from .maxsolver import CertificateError, MaxSolution, solve_max
from .qualitative import buchi_witness, cobuchi_witness
from .reductions import (
    KINDS,
    ConvertedMdp,
    ReductionOutput,
    TwoPhaseStrategy,
    liminf_convert,
    limsup_convert,
    mdp_liminf_reduce,
    mdp_limsup_reduce,
    recover_strategy,
)

__all__ = ["MdpSolution", "dual_kind", "solve_mdp", "optimal_strategy", "value_preserving"]


def dual_kind(kind: str) -> str:
    """limsup(r) = -liminf(-r) on every play, and vice versa."""
    return {"limsup": "liminf", "liminf": "limsup"}[kind]


@dataclass(frozen=True)
class MdpSolution:
    kind: str
    controller: Owner
    values: Mapping[str, Fraction]
    strategy: PureMemorylessStrategy
    shift: Fraction
    bipartite: BipartiteMapping
    reward: RewardFunction  # shifted, on the bipartite graph
    reduction: ReductionOutput
    converted: ConvertedMdp
    max_solution: MaxSolution
    two_phase: TwoPhaseStrategy
    inner: Optional["MdpSolution"] = None  # set when solved through the mirror


def _check_kind(kind: str) -> None:
    if kind not in KINDS:
        raise ValueError(f"objective must be one of {KINDS}, got {kind!r}")


def value_preserving(g: GameGraph, values: Mapping[str, Fraction]) -> GameGraph:
    """Drop every player edge that leads to a strictly worse value."""
    succ = []
    for i, ss in enumerate(g.successors):
        if g.owner[i] is Owner.PROB:
            succ.append(ss)
        else:
            v = values[g.states[i]]
            succ.append(tuple(j for j in ss if values[g.states[j]] == v))
    return GameGraph(g.states, g.owner, tuple(succ), g.probs)


def optimal_strategy(
    g: GameGraph, r: RewardFunction, kind: str, values: Mapping[str, Fraction]
) -> PureMemorylessStrategy:
    """A pure memoryless optimal strategy for player 1 of an MDP, given its
    exact values.

    Restricted to value-preserving edges, an optimal strategy must make the
    play settle, almost surely, where the reward reaches the value: seen
    infinitely often for limsup, never undercut eventually for liminf.
    """
    try:
        h = value_preserving(g, values)
    except GraphError as exc:
        raise CertificateError(f"values are not a fixed point: {exc}") from None
    if kind == "limsup":
        win, choice = buchi_witness(h, [s for s in g.states if r[s] == values[s]])
    else:
        win, choice = cobuchi_witness(h, [s for s in g.states if r[s] >= values[s]])
    if len(win) != len(g):
        raise CertificateError("values are not attainable almost surely")
    return PureMemorylessStrategy(
        Owner.P1, {s: choice[s] for s in g.states_of(Owner.P1)}
    )


def _solve_p1(g: GameGraph, r: RewardFunction, kind: str) -> MdpSolution:
    positive, c = make_positive(r.restrict_to(g))
    bm, rb = bipartite_normalize(g, positive)
    h = bm.transformed
    if kind == "limsup":
        out = mdp_limsup_reduce(h, rb)
        conv = limsup_convert(h, rb, out)
    else:
        out = mdp_liminf_reduce(h, rb)
        conv = liminf_convert(h, rb, out)
    sol = solve_max(conv)
    two_phase = recover_strategy(h, rb, out, conv, sol.strategy)
    values = {s: sol.values[s] - c for s in g.states}
    strategy = optimal_strategy(g, r, kind, values)
    return MdpSolution(
        kind, Owner.P1, values, strategy, c, bm, rb, out, conv, sol, two_phase
    )


def solve_mdp(g: GameGraph, r: RewardFunction, kind: str) -> MdpSolution:
    """Values of ``kind(r)`` for player 1 (the maximizer) on an MDP.

    On a player-2 MDP the values are still player 1's, i.e. what the
    minimizing controller can hold the objective down to, and ``strategy``
    is player 2's optimal strategy.
    """
    _check_kind(kind)
    r.check_defined_on(g)
    ctrl = g.controller()
    if ctrl is Owner.P2:
        inner = _solve_p1(mirror(g), r.negate(), dual_kind(kind))
        return MdpSolution(
            kind,
            Owner.P2,
            {s: -v for s, v in inner.values.items()},
            PureMemorylessStrategy(Owner.P2, dict(inner.strategy.choices)),
            inner.shift,
            inner.bipartite,
            inner.reward,
            inner.reduction,
            inner.converted,
            inner.max_solution,
            inner.two_phase,
            inner,
        )
    return _solve_p1(g, r, kind)
