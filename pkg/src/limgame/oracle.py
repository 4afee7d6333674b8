"""Brute-force ground truth.

Nothing here shares code with the solving pipeline beyond the graph data
model and the dense Bareiss solver: Markov chains are analyzed through
their closed recurrent classes, game values come from enumerating every
pair of pure memoryless strategies, and end components from enumerating
every subset of states.

Simulation uses numpy's PCG64 generator seeded with the given integer, and
runs all episodes as one vectorized stream, so a fixed seed reproduces its
output exactly.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Optional

import numpy as np

from .graph import (
    GameGraph,
    GraphError,
    Owner,
    PureMemorylessStrategy,
    RewardFunction,
)
from .linalg import solve_dense

__all__ = [
    "OBJECTIVES",
    "NotAChainError",
    "ChainAnalysis",
    "analyze_chain",
    "fixed_chain",
    "enumerate_all",
    "enumerate_values",
    "enumerate_end_components",
    "uniform_chain",
    "Estimate",
    "simulate",
]

OBJECTIVES = ("limsup", "liminf", "max")


class NotAChainError(GraphError):
    pass


def _transitions(g: GameGraph) -> list[dict[int, Fraction]]:
    rows = []
    for i, succ in enumerate(g.successors):
        if g.owner[i] is Owner.PROB:
            rows.append(dict(zip(succ, g.probs[i])))
        elif len(succ) == 1:
            rows.append({succ[0]: Fraction(1)})
        else:
            raise NotAChainError(f"state {g.states[i]!r} has a choice")
    return rows


def _reachable(rows: list[dict[int, Fraction]], start: int) -> set[int]:
    seen = {start}
    stack = [start]
    while stack:
        v = stack.pop()
        for w in rows[v]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return seen


def _recurrent_classes(rows) -> list[frozenset[int]]:
    reach = [_reachable(rows, v) for v in range(len(rows))]
    classes = []
    done: set[int] = set()
    for v in range(len(rows)):
        if v in done:
            continue
        if all(v in reach[w] for w in reach[v]):
            cls = frozenset(reach[v])
            classes.append(cls)
            done |= cls
    return classes


def _hit_probability(rows, target: set[int]) -> list[Fraction]:
    """Probability of ever visiting ``target`` from each state."""
    n = len(rows)
    pred: list[list[int]] = [[] for _ in range(n)]
    for v, row in enumerate(rows):
        for w in row:
            pred[w].append(v)
    can = set(target)
    stack = list(target)
    while stack:
        w = stack.pop()
        for v in pred[w]:
            if v not in can:
                can.add(v)
                stack.append(v)
    unknown = sorted(can - set(target))
    col = {v: k for k, v in enumerate(unknown)}
    m = len(unknown)
    a = [[Fraction(0)] * m for _ in range(m)]
    b = [Fraction(0)] * m
    for v in unknown:
        k = col[v]
        a[k][k] += 1
        for w, p in rows[v].items():
            if w in target:
                b[k] += p
            elif w in col:
                a[k][col[w]] -= p
    x = solve_dense(a, b)
    out = [Fraction(0)] * n
    for v in range(n):
        if v in target:
            out[v] = Fraction(1)
        elif v in col:
            out[v] = x[col[v]]
    return out


@dataclass(frozen=True)
class ChainAnalysis:
    chain: GameGraph
    recurrent_classes: tuple[frozenset[str], ...]
    absorption: Mapping[tuple[str, int], Fraction]
    class_value: Mapping[tuple[int, str], Fraction]
    max_value: Mapping[str, Fraction]

    def value(self, kind: str) -> dict[str, Fraction]:
        """Expected objective from every state."""
        if kind == "max":
            return dict(self.max_value)
        return {
            s: sum(
                (
                    self.absorption[(s, k)] * self.class_value[(k, kind)]
                    for k in range(len(self.recurrent_classes))
                ),
                Fraction(0),
            )
            for s in self.chain.states
        }


def analyze_chain(
    chain: GameGraph, r: RewardFunction, include_max: bool = True
) -> ChainAnalysis:
    rows = _transitions(chain)
    rv = r.vector(chain)
    st = chain.states
    classes = _recurrent_classes(rows)
    absorption = {}
    class_value = {}
    for k, cls in enumerate(classes):
        probs = _hit_probability(rows, set(cls))
        for v, s in enumerate(st):
            absorption[(s, k)] = probs[v]
        class_value[(k, "limsup")] = max(rv[v] for v in cls)
        class_value[(k, "liminf")] = min(rv[v] for v in cls)
    levels = sorted(set(rv))
    max_value = {s: levels[0] for s in st} if include_max else {}
    for lo, hi in zip(levels, levels[1:]) if include_max else ():
        probs = _hit_probability(rows, {v for v in range(len(st)) if rv[v] >= hi})
        for v, s in enumerate(st):
            max_value[s] += (hi - lo) * probs[v]
    return ChainAnalysis(
        chain,
        tuple(frozenset(st[v] for v in cls) for cls in classes),
        absorption,
        class_value,
        max_value,
    )


def fixed_chain(g: GameGraph, *strategies: PureMemorylessStrategy) -> GameGraph:
    """The Markov chain left after fixing the given strategies."""
    picks = {}
    for strat in strategies:
        for s, t in strat.choices.items():
            picks[g.index[s]] = g.index[t]
    succ = []
    probs = []
    owner = []
    for i, ss in enumerate(g.successors):
        if g.owner[i] is Owner.PROB:
            succ.append(ss)
            probs.append(g.probs[i])
        else:
            if i not in picks:
                raise NotAChainError(f"no choice fixed at {g.states[i]!r}")
            if picks[i] not in ss:
                raise GraphError(f"strategy picks a missing edge at {g.states[i]!r}")
            succ.append((picks[i],))
            probs.append((Fraction(1),))
        owner.append(Owner.PROB)
    return GameGraph(g.states, tuple(owner), tuple(succ), tuple(probs))


def _strategies(g: GameGraph, player: Owner):
    own = g.states_of(player)
    for pick in itertools.product(*(g.succ(s) for s in own)):
        yield PureMemorylessStrategy(player, dict(zip(own, pick)))


def enumerate_all(
    g: GameGraph,
    r: RewardFunction,
    kinds: Iterable[str] = OBJECTIVES,
    budget: int = 2**16,
) -> dict[str, dict[str, Fraction]]:
    """max over player-1 strategies of min over player-2 strategies of the
    exact chain expectation, per state, for each objective in ``kinds``."""
    kinds = tuple(kinds)
    n1 = math.prod(len(g.succ(s)) for s in g.states_of(Owner.P1))
    n2 = math.prod(len(g.succ(s)) for s in g.states_of(Owner.P2))
    if n1 * n2 > budget:
        raise ValueError(f"{n1 * n2} strategy pairs exceed the oracle budget {budget}")
    best: dict[str, dict[str, Fraction]] = {}
    for sigma in _strategies(g, Owner.P1):
        worst: dict[str, dict[str, Fraction]] = {}
        for pi in _strategies(g, Owner.P2):
            a = analyze_chain(fixed_chain(g, sigma, pi), r, "max" in kinds)
            for kind in kinds:
                val = a.value(kind)
                cur = worst.setdefault(kind, val)
                for s in g.states:
                    if val[s] < cur[s]:
                        cur[s] = val[s]
        for kind in kinds:
            cur = best.setdefault(kind, dict(worst[kind]))
            for s in g.states:
                if worst[kind][s] > cur[s]:
                    cur[s] = worst[kind][s]
    return best


def enumerate_values(
    g: GameGraph, r: RewardFunction, kind: str, budget: int = 2**16
) -> dict[str, Fraction]:
    return enumerate_all(g, r, (kind,), budget)[kind]


def _is_ec(g: GameGraph, members: set[int]) -> bool:
    for v in members:
        inside = [w for w in g.successors[v] if w in members]
        if not inside:
            return False
        if g.owner[v] is Owner.PROB and len(inside) != len(g.successors[v]):
            return False
    start = next(iter(members))
    rows = [
        {w: 1 for w in g.successors[v] if w in members} if v in members else {}
        for v in range(len(g))
    ]
    if _reachable(rows, start) != members:
        return False
    back = [{} for _ in range(len(g))]
    for v in members:
        for w in rows[v]:
            back[w][v] = 1
    return _reachable(back, start) == members


def enumerate_end_components(g: GameGraph, max_states: int = 20) -> list[frozenset[str]]:
    """Every end component, by checking all nonempty subsets."""
    n = len(g)
    if n > max_states:
        raise ValueError(f"{n} states is too many to enumerate subsets of")
    found = []
    for mask in range(1, 1 << n):
        members = {v for v in range(n) if mask >> v & 1}
        if _is_ec(g, members):
            found.append(g.ids(members))
    return found


def uniform_chain(g: GameGraph, u: Iterable[str]) -> GameGraph:
    """Chain on ``u`` where each player state moves uniformly at random
    among its successors inside ``u``."""
    keep = g.idx(u)
    order = sorted(keep)
    states = []
    edges = []
    for v in order:
        s = g.states[v]
        states.append((s, Owner.PROB))
        if g.owner[v] is Owner.PROB:
            for w, p in zip(g.successors[v], g.probs[v]):
                if w not in keep:
                    raise GraphError(f"{s!r} leaves the set with positive probability")
                edges.append((s, g.states[w], p))
        else:
            inside = [w for w in g.successors[v] if w in keep]
            for w in inside:
                edges.append((s, g.states[w], Fraction(1, len(inside))))
    return GameGraph.build(states, edges)


@dataclass(frozen=True)
class Estimate:
    mean: Fraction
    stderr: float
    half_width: float  # 95% normal-approximation half-width

    def covers(self, exact: Fraction, k: float = 3.0) -> bool:
        return abs(float(self.mean - exact)) <= k * self.stderr


def simulate(
    g: GameGraph,
    r: RewardFunction,
    s1: Optional[PureMemorylessStrategy],
    s2: Optional[PureMemorylessStrategy],
    kind: str,
    episodes: int,
    horizon: int,
    seed: int,
    start: Optional[Iterable[str]] = None,
) -> dict[str, Estimate]:
    """Monte Carlo estimate of the objective from each start state.

    limsup and liminf are read off the tail window after a burn-in of
    ``horizon // 2`` steps (largest and smallest reward there); max is the
    largest reward over the whole prefix.
    """
    if kind not in OBJECTIVES:
        raise ValueError(f"unknown objective {kind!r}")
    if horizon < 2 or episodes < 1:
        raise ValueError("need horizon >= 2 and at least one episode")
    chain = fixed_chain(g, *(s for s in (s1, s2) if s is not None))
    n = len(chain)
    rv = r.vector(chain)
    levels = sorted(set(rv), reverse=True)  # level 0 is the largest reward
    level_of = np.array([levels.index(x) for x in rv], dtype=np.int64)
    width = max(len(s) for s in chain.successors)
    succ = np.zeros((n, width), dtype=np.int64)
    cdf = np.ones((n, width), dtype=np.float64)
    for i, (ss, ps) in enumerate(zip(chain.successors, chain.probs)):
        acc = Fraction(0)
        for k, (j, p) in enumerate(zip(ss, ps)):
            acc += p
            succ[i, k] = j
            cdf[i, k] = float(acc)
        cdf[i, len(ss) - 1] = 1.0
        succ[i, len(ss):] = ss[-1]
    starts = list(chain.states) if start is None else list(start)
    start_idx = np.repeat(np.array([chain.index[s] for s in starts]), episodes)
    rng = np.random.Generator(np.random.PCG64(seed))
    state = start_idx.copy()
    burn = horizon // 2
    best_all = level_of[state].copy()
    best_tail = np.full(state.shape, len(levels), dtype=np.int64)
    worst_tail = np.full(state.shape, -1, dtype=np.int64)
    for step in range(horizon):
        if step >= burn:
            lv = level_of[state]
            np.minimum(best_tail, lv, out=best_tail)
            np.maximum(worst_tail, lv, out=worst_tail)
        if step == horizon - 1:
            break
        u = rng.random(state.shape[0])
        pick = (cdf[state] <= u[:, None]).sum(axis=1)
        state = succ[state, pick]
        np.minimum(best_all, level_of[state], out=best_all)
    outcome = {"limsup": best_tail, "liminf": worst_tail, "max": best_all}[kind]
    result = {}
    for k, s in enumerate(starts):
        block = outcome[k * episodes : (k + 1) * episodes]
        counts = np.bincount(block, minlength=len(levels))
        total = sum((int(c) * levels[lv] for lv, c in enumerate(counts)), Fraction(0))
        mean = total / episodes
        sq = sum(
            (int(c) * (float(levels[lv] - mean)) ** 2 for lv, c in enumerate(counts)),
            0.0,
        )
        var = sq / (episodes - 1) if episodes > 1 else 0.0
        se = math.sqrt(var / episodes)
        result[s] = Estimate(mean, se, 1.96 * se)
    return result
