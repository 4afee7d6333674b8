"""Reductions from limsup / liminf MDPs to MDPs with a max objective.

The level iteration walks the distinct rewards from the top down.  At each
level it computes an almost-sure region in what is left of the MDP (Büchi
for "this reward", coBüchi for "this reward or better"), stars the player
states of that region with the level, and removes the region's
probabilistic attractor.  The conversion then gives every starred state an
absorbing copy that pays its level, and nothing else pays anything.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional

from .graph import (
    GameGraph,
    GraphError,
    Owner,
    PureMemorylessStrategy,
    RewardFunction,
    restrict,
)
from .qualitative import attractor_p, buchi_witness, cobuchi_witness

__all__ = [
    "KINDS",
    "ReductionError",
    "LevelRecord",
    "ReductionOutput",
    "ConvertedMdp",
    "TwoPhaseStrategy",
    "is_bipartite",
    "mdp_limsup_reduce",
    "mdp_liminf_reduce",
    "limsup_convert",
    "liminf_convert",
    "recover_strategy",
]

KINDS = ("limsup", "liminf")


class ReductionError(ValueError):
    pass


@dataclass(frozen=True)
class LevelRecord:
    level: Fraction
    surviving: frozenset[str]  # S^i, the states alive when the level starts
    region: frozenset[str]  # U_i
    removed: frozenset[str]  # B_i = Attr_P(U_i, G_i)
    witness: Mapping[str, str] = field(repr=False)  # almost-sure choices on U_i

    @property
    def skipped(self) -> bool:
        return not self.region


@dataclass(frozen=True)
class ReductionOutput:
    kind: str
    graph: GameGraph
    reward: RewardFunction
    starred: tuple[str, ...]
    level_assignment: Mapping[str, Fraction]
    log: tuple[LevelRecord, ...]
    final: frozenset[str]

    def level_index(self, s: str) -> int:
        v = self.level_assignment[s]
        return next(i for i, rec in enumerate(self.log) if rec.level == v)

    def trace_lines(self) -> list[str]:
        return [
            f"v={rec.level} |U|={len(rec.region)} |B|={len(rec.removed)}"
            for rec in self.log
        ]


def is_bipartite(g: GameGraph) -> bool:
    return all(
        (g.owner[i] is Owner.PROB) != (g.owner[j] is Owner.PROB)
        for i, succ in enumerate(g.successors)
        for j in succ
    )


def _check_input(g: GameGraph, r: RewardFunction) -> None:
    if not g.is_mdp() or g.has_owner(Owner.P2):
        raise ReductionError("the reduction expects a player-1 MDP")
    if not is_bipartite(g):
        raise ReductionError("the reduction expects a bipartite MDP")
    r.check_defined_on(g)
    bad = [s for s in g.states if r[s] <= 0]
    if bad:
        raise ReductionError(f"rewards must be positive; offending states {bad}")


def _reduce(g: GameGraph, r: RewardFunction, kind: str) -> ReductionOutput:
    _check_input(g, r)
    levels = r.levels
    level_of: dict[str, Fraction] = {}
    log: list[LevelRecord] = []
    cur: Optional[GameGraph] = g
    empty: frozenset[str] = frozenset()
    for v in levels:
        alive = frozenset(cur.states) if cur is not None else empty
        if kind == "limsup":
            target = [s for s in alive if r[s] == v]
        else:
            target = [s for s in alive if r[s] >= v]
        if not target:
            log.append(LevelRecord(v, alive, empty, empty, {}))
            continue
        if kind == "limsup":
            region, witness = buchi_witness(cur, target)
        else:
            region, witness = cobuchi_witness(cur, target)
        if not region:
            log.append(LevelRecord(v, alive, empty, empty, {}))
            continue
        for u in region:
            if g.owner_of(u) is Owner.P1:
                level_of[u] = v
        removed = attractor_p(cur, region)
        log.append(LevelRecord(v, alive, region, removed, witness))
        rest = alive - removed
        cur = restrict(cur, rest) if rest else None
    final = frozenset(cur.states) if cur is not None else frozenset()
    starred = tuple(s for s in g.states if s in level_of)
    return ReductionOutput(
        kind, g, r, starred, {s: level_of[s] for s in starred}, tuple(log), final
    )


def mdp_limsup_reduce(g: GameGraph, r: RewardFunction) -> ReductionOutput:
    """Star player-1 states with the best reward they can see infinitely
    often almost surely, level by level from the top."""
    return _reduce(g, r, "limsup")


def mdp_liminf_reduce(g: GameGraph, r: RewardFunction) -> ReductionOutput:
    """Star player-1 states with the best floor they can eventually stay
    above almost surely, level by level from the top."""
    return _reduce(g, r, "liminf")


@dataclass(frozen=True)
class ConvertedMdp:
    kind: str
    source: GameGraph
    graph: GameGraph
    reward: RewardFunction
    copy_of: Mapping[str, str]  # starred state -> its absorbing copy

    @property
    def copies(self) -> frozenset[str]:
        return frozenset(self.copy_of.values())


def _convert(g: GameGraph, r: RewardFunction, out: ReductionOutput, kind: str):
    if out.kind != kind:
        raise ReductionError(f"expected a {kind} reduction, got {out.kind}")
    if out.graph != g or out.reward != r:
        raise ReductionError("reduction output was computed for another instance")
    if not out.starred:
        raise ReductionError("no starred states; every MDP has an end component")
    taken = set(g.states)
    copy_of = {}
    for s in out.starred:
        name = f"{s}^"
        while name in taken:
            name += "^"
        taken.add(name)
        copy_of[s] = name
    states = list(zip(g.states, g.owner)) + [(c, Owner.P1) for c in copy_of.values()]
    edges = []
    for i, succ in enumerate(g.successors):
        for k, j in enumerate(succ):
            p = g.probs[i][k] if g.probs[i] is not None else None
            edges.append((g.states[i], g.states[j], p))
    for s, c in copy_of.items():
        edges.append((s, c, None))
        edges.append((c, c, None))
    reward = {s: Fraction(0) for s in g.states}
    for s, c in copy_of.items():
        reward[c] = out.level_assignment[s]
    return ConvertedMdp(
        kind, g, GameGraph.build(states, edges), RewardFunction(reward), copy_of
    )


def limsup_convert(g: GameGraph, r: RewardFunction, out: ReductionOutput) -> ConvertedMdp:
    return _convert(g, r, out, "limsup")


def liminf_convert(g: GameGraph, r: RewardFunction, out: ReductionOutput) -> ConvertedMdp:
    return _convert(g, r, out, "liminf")


@dataclass(frozen=True)
class TwoPhaseStrategy:
    """Follow ``phase1`` until reaching a commit state, then play the
    almost-sure choices of that state's level region forever.

    ``commit`` maps each commit state to the index of its level in the
    reduction log; ``phase2[i]`` holds the choices on region ``U_i``.
    """

    phase1: Mapping[str, str]
    commit: Mapping[str, int]
    phase2: Mapping[int, Mapping[str, str]]

    def to_chain(self, g: GameGraph, r: RewardFunction):
        """Product Markov chain over (state, phase) pairs.

        Returns ``(chain, rewards, start)`` where ``start[s]`` is the chain
        state in which a play from ``s`` begins.
        """

        def name(x, ph):
            return f"{x}|{'-' if ph is None else ph}"

        def effective(x, ph):
            if ph is None and x in self.commit:
                return self.commit[x]
            return ph

        start = {s: name(s, None) for s in g.states}
        seen = set()
        order = []
        frontier = [(s, None) for s in g.states]
        edges = []
        while frontier:
            node = frontier.pop()
            if node in seen:
                continue
            seen.add(node)
            order.append(node)
            x, ph = node
            e = effective(x, ph)
            i = g.index[x]
            if g.owner[i] is Owner.PROB:
                nxt = [(g.states[j], p) for j, p in zip(g.successors[i], g.probs[i])]
            else:
                table = self.phase1 if e is None else self.phase2[e]
                if x not in table:
                    raise ReductionError(f"two-phase strategy undefined at {x!r}")
                nxt = [(table[x], Fraction(1))]
            for y, p in nxt:
                edges.append((name(x, ph), name(y, e), p))
                frontier.append((y, e))
        states = [(name(x, ph), Owner.PROB) for x, ph in order]
        rewards = RewardFunction({name(x, ph): r[x] for x, ph in order})
        return GameGraph.build(states, edges), rewards, start


def recover_strategy(
    g: GameGraph,
    r: RewardFunction,
    out: ReductionOutput,
    conv: ConvertedMdp,
    max_strategy: PureMemorylessStrategy,
) -> TwoPhaseStrategy:
    """Turn an optimal max-objective strategy on the converted MDP into a
    two-phase strategy on ``g``.

    Raises :class:`~limgame.maxsolver.CertificateError` if ``max_strategy``
    is not optimal for the converted MDP.
    """
    from .maxsolver import CertificateError, MaxSolution, certify, evaluate_strategy

    if conv.source != g:
        raise ReductionError("converted MDP was built from another graph")
    max_strategy.validate(conv.graph)
    values = evaluate_strategy(conv, max_strategy)
    if not certify(conv, MaxSolution(values, max_strategy)):
        raise CertificateError("max strategy is not optimal on the converted MDP")
    commit = {}
    phase1 = {}
    for s in g.states_of(Owner.P1):
        t = max_strategy[s]
        if conv.copy_of.get(s) == t:
            commit[s] = out.level_index(s)
        else:
            phase1[s] = t
    phase2 = {commit[s]: out.log[commit[s]].witness for s in commit}
    return TwoPhaseStrategy(phase1, commit, phase2)
