"""Game graphs, reward functions and pure memoryless strategies.

A game graph partitions its states between player 1, player 2 and chance.
States are stored densely in declaration order; every integer index used in
this package refers to that order, and ties are always broken towards the
lowest index.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Optional, Sequence

__all__ = [
    "Owner",
    "GraphError",
    "UnknownStateError",
    "DuplicateStateError",
    "DuplicateEdgeError",
    "DistributionError",
    "ProbabilityError",
    "DeadEndError",
    "RationalFormatError",
    "RestrictionError",
    "StrategyError",
    "parse_rational",
    "format_rational",
    "GameGraph",
    "RewardFunction",
    "PureMemorylessStrategy",
    "BipartiteMapping",
    "shift_rewards",
    "make_positive",
    "bipartite_normalize",
    "restrict",
    "fix_strategy",
    "mirror",
]


class Owner(str, enum.Enum):
    P1 = "p1"
    P2 = "p2"
    PROB = "prob"

    @property
    def opponent(self) -> "Owner":
        if self is Owner.P1:
            return Owner.P2
        if self is Owner.P2:
            return Owner.P1
        return self


class GraphError(ValueError):
    """Base class for malformed game graphs and instance files."""


class UnknownStateError(GraphError):
    pass


class DuplicateStateError(GraphError):
    pass


class DuplicateEdgeError(GraphError):
    pass


class DistributionError(GraphError):
    """A probabilistic state whose outgoing probabilities do not sum to 1."""


class ProbabilityError(GraphError):
    """A missing, misplaced or nonpositive transition probability."""


class DeadEndError(GraphError):
    pass


class RationalFormatError(GraphError):
    pass


class RestrictionError(GraphError):
    pass


class StrategyError(ValueError):
    pass


_RATIONAL = re.compile(r"^(-?\d+)(?:/(\d+))?$")


def parse_rational(text) -> Fraction:
    """Parse ``"n"``, ``"-n"`` or ``"n/d"`` (d > 0) into a Fraction.

    Plain ints are accepted as well; floats and bools are not, since they
    cannot be trusted to be exact.
    """
    if isinstance(text, bool):
        raise RationalFormatError(f"malformed rational literal {text!r}")
    if isinstance(text, int):
        return Fraction(text)
    if isinstance(text, Fraction):
        return text
    if not isinstance(text, str):
        raise RationalFormatError(f"malformed rational literal {text!r}")
    m = _RATIONAL.match(text.strip())
    if m is None:
        raise RationalFormatError(f"malformed rational literal {text!r}")
    num, den = m.groups()
    if den is not None and int(den) == 0:
        raise RationalFormatError(f"zero denominator in {text!r}")
    return Fraction(int(num), int(den) if den is not None else 1)


def format_rational(q: Fraction) -> str:
    q = Fraction(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True, eq=False)
class GameGraph:
    """Turn-based stochastic game graph.

    ``successors[i]`` lists the targets of state ``i`` in increasing index
    order; for a probabilistic state, ``probs[i]`` holds the matching
    probabilities (``None`` for player states).  Use :meth:`build` to
    construct a graph from state ids.
    """

    states: tuple[str, ...]
    owner: tuple[Owner, ...]
    successors: tuple[tuple[int, ...], ...]
    probs: tuple[Optional[tuple[Fraction, ...]], ...]
    index: Mapping[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        index = {}
        for i, s in enumerate(self.states):
            if s in index:
                raise DuplicateStateError(f"duplicate state id {s!r}")
            index[s] = i
        object.__setattr__(self, "index", index)
        n = len(self.states)
        if not (len(self.owner) == len(self.successors) == len(self.probs) == n):
            raise GraphError("per-state tables have inconsistent lengths")
        for i in range(n):
            succ = self.successors[i]
            name = self.states[i]
            if not succ:
                raise DeadEndError(f"state {name!r} has no outgoing edge")
            if any(not 0 <= t < n for t in succ):
                raise UnknownStateError(f"edge from {name!r} to an unknown state")
            if any(a >= b for a, b in zip(succ, succ[1:])):
                raise DuplicateEdgeError(
                    f"successors of {name!r} must be strictly increasing"
                )
            p = self.probs[i]
            if self.owner[i] is Owner.PROB:
                if p is None or len(p) != len(succ):
                    raise ProbabilityError(f"state {name!r} lacks probabilities")
                if any(x <= 0 for x in p):
                    raise ProbabilityError(
                        f"nonpositive probability out of {name!r}"
                    )
                total = sum(p, Fraction(0))
                if total != 1:
                    raise DistributionError(
                        f"distribution of {name!r} sums to "
                        f"{format_rational(total)} != 1"
                    )
            elif p is not None:
                raise ProbabilityError(f"player state {name!r} carries probabilities")

    @classmethod
    def build(
        cls,
        states: Iterable[tuple[str, Owner | str]],
        edges: Iterable[tuple[str, str, object]],
    ) -> "GameGraph":
        """Validate and build a graph from ``(id, owner)`` pairs and
        ``(source, target, prob)`` triples; ``prob`` is ``None`` exactly for
        edges leaving player states."""
        ids: list[str] = []
        owners: list[Owner] = []
        seen: set[str] = set()
        for sid, own in states:
            if not isinstance(sid, str):
                raise GraphError(f"state id must be a string, got {sid!r}")
            if sid in seen:
                raise DuplicateStateError(f"duplicate state id {sid!r}")
            try:
                owners.append(Owner(own))
            except ValueError:
                raise GraphError(f"unknown owner {own!r} for state {sid!r}") from None
            seen.add(sid)
            ids.append(sid)
        index = {s: i for i, s in enumerate(ids)}
        out: list[dict[int, Optional[Fraction]]] = [{} for _ in ids]
        for src, dst, prob in edges:
            for end in (src, dst):
                if end not in index:
                    raise UnknownStateError(f"edge references unknown state {end!r}")
            i, j = index[src], index[dst]
            if j in out[i]:
                raise DuplicateEdgeError(f"duplicate edge {src!r} -> {dst!r}")
            if owners[i] is Owner.PROB:
                if prob is None:
                    raise ProbabilityError(
                        f"edge {src!r} -> {dst!r} leaves a probabilistic state "
                        "and needs a probability"
                    )
                p = parse_rational(prob)
                if p <= 0:
                    raise ProbabilityError(
                        f"nonpositive probability {format_rational(p)} on "
                        f"{src!r} -> {dst!r}"
                    )
                out[i][j] = p
            else:
                if prob is not None:
                    raise ProbabilityError(
                        f"edge {src!r} -> {dst!r} leaves a player state and "
                        "must not carry a probability"
                    )
                out[i][j] = None
        successors = []
        probs = []
        for i, row in enumerate(out):
            succ = tuple(sorted(row))
            successors.append(succ)
            if owners[i] is Owner.PROB:
                probs.append(tuple(row[t] for t in succ))
            else:
                probs.append(None)
        return cls(tuple(ids), tuple(owners), tuple(successors), tuple(probs))

    def __len__(self) -> int:
        return len(self.states)

    def __eq__(self, other) -> bool:
        if not isinstance(other, GameGraph):
            return NotImplemented
        return (
            self.states == other.states
            and self.owner == other.owner
            and self.successors == other.successors
            and self.probs == other.probs
        )

    def __hash__(self) -> int:
        return hash((self.states, self.owner, self.successors))

    @cached_property
    def edges(self) -> frozenset[tuple[str, str]]:
        st = self.states
        return frozenset(
            (st[i], st[j]) for i, succ in enumerate(self.successors) for j in succ
        )

    @cached_property
    def predecessors(self) -> tuple[tuple[int, ...], ...]:
        pred: list[list[int]] = [[] for _ in self.states]
        for i, succ in enumerate(self.successors):
            for j in succ:
                pred[j].append(i)
        return tuple(tuple(p) for p in pred)

    def succ(self, s: str) -> tuple[str, ...]:
        """E(s) as state ids."""
        return tuple(self.states[j] for j in self.successors[self.index[s]])

    def delta(self, s: str) -> dict[str, Fraction]:
        i = self.index[s]
        if self.owner[i] is not Owner.PROB:
            raise GraphError(f"{s!r} is not a probabilistic state")
        return {self.states[j]: p for j, p in zip(self.successors[i], self.probs[i])}

    def owner_of(self, s: str) -> Owner:
        return self.owner[self.index[s]]

    def states_of(self, owner: Owner) -> tuple[str, ...]:
        return tuple(s for s, o in zip(self.states, self.owner) if o is owner)

    def indices_of(self, owner: Owner) -> tuple[int, ...]:
        return tuple(i for i, o in enumerate(self.owner) if o is owner)

    @property
    def num_edges(self) -> int:
        return sum(len(s) for s in self.successors)

    def has_owner(self, owner: Owner) -> bool:
        return owner in self.owner

    def is_mdp(self) -> bool:
        return not (self.has_owner(Owner.P1) and self.has_owner(Owner.P2))

    def is_chain(self) -> bool:
        return all(
            o is Owner.PROB or len(s) == 1 for o, s in zip(self.owner, self.successors)
        )

    def controller(self) -> Optional[Owner]:
        """The single player owning states in an MDP (``None`` for chains
        without player states).  Raises on games."""
        if not self.is_mdp():
            raise GraphError("graph has states of both players; not an MDP")
        if self.has_owner(Owner.P1):
            return Owner.P1
        if self.has_owner(Owner.P2):
            return Owner.P2
        return None

    def ids(self, idx: Iterable[int]) -> frozenset[str]:
        st = self.states
        return frozenset(st[i] for i in idx)

    def idx(self, ids: Iterable[str]) -> set[int]:
        index = self.index
        try:
            return {index[s] for s in ids}
        except KeyError as exc:
            raise UnknownStateError(f"unknown state {exc.args[0]!r}") from None


@dataclass(frozen=True, eq=False)
class RewardFunction:
    """Exact rewards keyed by state id."""

    rewards: Mapping[str, Fraction]

    def __post_init__(self):
        object.__setattr__(
            self, "rewards", {s: parse_rational(v) for s, v in self.rewards.items()}
        )

    def __getitem__(self, s: str) -> Fraction:
        return self.rewards[s]

    def __eq__(self, other) -> bool:
        if not isinstance(other, RewardFunction):
            return NotImplemented
        return self.rewards == other.rewards

    def __hash__(self) -> int:
        return hash(frozenset(self.rewards.items()))

    def __repr__(self) -> str:
        body = ", ".join(f"{s}: {format_rational(v)}" for s, v in self.rewards.items())
        return f"RewardFunction({{{body}}})"

    @cached_property
    def levels(self) -> tuple[Fraction, ...]:
        """Distinct reward values, strictly decreasing."""
        return tuple(sorted(set(self.rewards.values()), reverse=True))

    def check_defined_on(self, g: GameGraph) -> None:
        missing = [s for s in g.states if s not in self.rewards]
        if missing:
            raise GraphError(f"no reward for state(s) {missing}")

    def vector(self, g: GameGraph) -> list[Fraction]:
        self.check_defined_on(g)
        return [self.rewards[s] for s in g.states]

    def negate(self) -> "RewardFunction":
        return RewardFunction({s: -v for s, v in self.rewards.items()})

    def restrict_to(self, g: GameGraph) -> "RewardFunction":
        return RewardFunction({s: self.rewards[s] for s in g.states})


@dataclass(frozen=True)
class PureMemorylessStrategy:
    """A choice of successor for every state owned by ``player``."""

    player: Owner
    choices: Mapping[str, str]

    def __getitem__(self, s: str) -> str:
        return self.choices[s]

    def validate(self, g: GameGraph) -> None:
        own = set(g.states_of(self.player))
        if set(self.choices) != own:
            raise StrategyError(
                f"strategy domain differs from the {self.player.value} states"
            )
        for s, t in self.choices.items():
            if (s, t) not in g.edges:
                raise StrategyError(f"strategy picks missing edge {s!r} -> {t!r}")

    def as_indices(self, g: GameGraph) -> dict[int, int]:
        index = g.index
        return {index[s]: index[t] for s, t in self.choices.items()}


def shift_rewards(r: RewardFunction, c) -> RewardFunction:
    c = parse_rational(c)
    return RewardFunction({s: v + c for s, v in r.rewards.items()})


def make_positive(r: RewardFunction) -> tuple[RewardFunction, Fraction]:
    """Shift rewards so that all are strictly positive.

    Returns the shifted rewards and the constant that was added (0 when the
    input is already positive).
    """
    low = min(r.rewards.values())
    if low > 0:
        return r, Fraction(0)
    c = 1 - low
    return shift_rewards(r, c), c


@dataclass(frozen=True)
class BipartiteMapping:
    """Result of :func:`bipartite_normalize`.

    ``dummies`` lists ``(dummy_id, source_id, target_id)`` in insertion order;
    every original state keeps its id in ``transformed``.
    """

    original: GameGraph
    transformed: GameGraph
    dummies: tuple[tuple[str, str, str], ...]

    @property
    def forward(self) -> dict[str, str]:
        return {s: s for s in self.original.states}

    def dummy_edge(self, d: str) -> tuple[str, str]:
        for name, s, t in self.dummies:
            if name == d:
                return s, t
        raise KeyError(d)

    def splice(self) -> GameGraph:
        """Remove the dummies and reconnect their in/out edges."""
        g = self.transformed
        via = {d: t for d, _, t in self.dummies}
        states = [(s, g.owner_of(s)) for s in self.original.states]
        edges = []
        for s, _ in states:
            i = g.index[s]
            for k, j in enumerate(g.successors[i]):
                t = g.states[j]
                p = g.probs[i][k] if g.probs[i] is not None else None
                edges.append((s, via.get(t, t), p))
        return GameGraph.build(states, edges)

    def project(self, strategy: PureMemorylessStrategy) -> PureMemorylessStrategy:
        """Map a strategy on the transformed graph back to the original."""
        via = {d: t for d, _, t in self.dummies}
        own = set(self.original.states_of(strategy.player))
        return PureMemorylessStrategy(
            strategy.player,
            {s: via.get(t, t) for s, t in strategy.choices.items() if s in own},
        )


def _fresh(name: str, taken: set[str]) -> str:
    cand = name
    k = 1
    while cand in taken:
        k += 1
        cand = f"{name}~{k}"
    taken.add(cand)
    return cand


def bipartite_normalize(
    g: GameGraph, r: RewardFunction
) -> tuple[BipartiteMapping, RewardFunction]:
    """Insert a dummy state on every edge joining two player states or two
    probabilistic states.

    Player-to-player edges get a probabilistic dummy with a single
    successor; probabilistic-to-probabilistic edges get a player dummy
    (owned by the graph's controller, player 1 for games and chains).  Each
    dummy carries the reward of the edge's source.
    """
    r.check_defined_on(g)
    dummy_owner = Owner.P1
    if g.is_mdp() and g.controller() is Owner.P2:
        dummy_owner = Owner.P2
    taken = set(g.states)
    states: list[tuple[str, Owner]] = list(zip(g.states, g.owner))
    edges: list[tuple[str, str, object]] = []
    dummies: list[tuple[str, str, str]] = []
    rewards = dict(r.rewards)
    for i, succ in enumerate(g.successors):
        s = g.states[i]
        src_prob = g.owner[i] is Owner.PROB
        for k, j in enumerate(succ):
            t = g.states[j]
            p = g.probs[i][k] if src_prob else None
            if src_prob == (g.owner[j] is Owner.PROB):
                d = _fresh(f"{s}->{t}", taken)
                if src_prob:
                    states.append((d, dummy_owner))
                    edges.append((d, t, None))
                else:
                    states.append((d, Owner.PROB))
                    edges.append((d, t, Fraction(1)))
                edges.append((s, d, p))
                dummies.append((d, s, t))
                rewards[d] = r[s]
            else:
                edges.append((s, t, p))
    if not dummies:
        return BipartiteMapping(g, g, ()), r
    h = GameGraph.build(states, edges)
    return BipartiteMapping(g, h, tuple(dummies)), RewardFunction(rewards)


def restrict(g: GameGraph, keep: Iterable[str]) -> GameGraph:
    """Subgraph induced on ``keep``; distributions are left untouched."""
    keep_idx = g.idx(keep)
    states = []
    edges = []
    for i in sorted(keep_idx):
        s = g.states[i]
        states.append((s, g.owner[i]))
        inside = [k for k, j in enumerate(g.successors[i]) if j in keep_idx]
        if g.owner[i] is Owner.PROB:
            if len(inside) != len(g.successors[i]):
                raise RestrictionError(
                    f"probabilistic state {s!r} would lose a successor"
                )
        elif not inside:
            raise RestrictionError(f"player state {s!r} would lose all successors")
        for k in inside:
            p = g.probs[i][k] if g.probs[i] is not None else None
            edges.append((s, g.states[g.successors[i][k]], p))
    return GameGraph.build(states, edges)


def fix_strategy(g: GameGraph, strategy: PureMemorylessStrategy) -> GameGraph:
    """Fix one player's choices; their states become one-successor
    probabilistic states, so the result is an MDP (or a chain)."""
    strategy.validate(g)
    states = []
    edges = []
    for i, s in enumerate(g.states):
        if g.owner[i] is strategy.player:
            states.append((s, Owner.PROB))
            edges.append((s, strategy[s], Fraction(1)))
            continue
        states.append((s, g.owner[i]))
        for k, j in enumerate(g.successors[i]):
            p = g.probs[i][k] if g.probs[i] is not None else None
            edges.append((s, g.states[j], p))
    return GameGraph.build(states, edges)


def mirror(g: GameGraph) -> GameGraph:
    """Swap the roles of the two players."""
    return GameGraph(
        g.states, tuple(o.opponent for o in g.owner), g.successors, g.probs
    )
