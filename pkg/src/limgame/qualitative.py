"""Qualitative analysis of MDPs.

End components, the probabilistic attractor, and almost-sure winning sets
for reachability, Büchi and coBüchi objectives.  In an MDP every player
state belongs to the single controlling player, who is taken to *maximize*
the probability of the qualitative objective.  Callers that need the
opponent's view of a player-2 MDP state so explicitly.

The public functions take and return state ids; the ``_``-prefixed helpers
work on integer indices and an optional ``alive`` set describing a
subgraph.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Optional

from .graph import GameGraph, GraphError, Owner

__all__ = [
    "MecDecomposition",
    "sccs",
    "is_end_component",
    "mec_decompose",
    "attractor_p",
    "almost_sure_reach",
    "almost_sure_buchi",
    "almost_sure_cobuchi",
    "buchi_witness",
    "cobuchi_witness",
]


def sccs(nodes: Iterable[int], succ) -> list[list[int]]:
    """Strongly connected components of the graph induced on ``nodes``.

    ``succ[v]`` lists the successors of ``v``; successors outside ``nodes``
    are ignored.  Iterative Tarjan, components in reverse topological order.
    """
    nodes = list(nodes)
    inside = set(nodes)
    index: dict[int, int] = {}
    low: dict[int, int] = {}
    on_stack: set[int] = set()
    stack: list[int] = []
    out: list[list[int]] = []
    counter = 0
    for root in nodes:
        if root in index:
            continue
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        work = [(root, iter(succ[root]))]
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in inside:
                    continue
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(succ[w])))
                    advanced = True
                    break
                if w in on_stack and index[w] < low[v]:
                    low[v] = index[w]
            if advanced:
                continue
            work.pop()
            if work:
                u = work[-1][0]
                if low[v] < low[u]:
                    low[u] = low[v]
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                out.append(sorted(comp))
    return out


def _require_mdp(g: GameGraph) -> None:
    if not g.is_mdp():
        raise GraphError("qualitative analysis needs an MDP (one player kind only)")


def _attr(
    g: GameGraph,
    target: set[int],
    alive: Optional[set[int]] = None,
    blocked: frozenset[int] | set[int] = frozenset(),
) -> set[int]:
    """Probabilistic attractor of ``target`` inside the subgraph ``alive``.

    A probabilistic state joins once any successor is in; a player state
    joins once all its successors inside ``alive`` are in.  States in
    ``blocked`` never join.
    """
    if alive is None:
        alive = set(range(len(g)))
    result = set(target) & alive
    succ, pred, owner = g.successors, g.predecessors, g.owner
    remaining = {}
    for v in alive:
        if owner[v] is not Owner.PROB and v not in result:
            remaining[v] = sum(1 for w in succ[v] if w in alive)
    queue = deque(result)
    while queue:
        w = queue.popleft()
        for v in pred[w]:
            if v not in alive or v in result or v in blocked:
                continue
            if owner[v] is Owner.PROB:
                result.add(v)
                queue.append(v)
            else:
                remaining[v] -= 1
                if remaining[v] == 0:
                    result.add(v)
                    queue.append(v)
    return result


def _is_end_component(g: GameGraph, u: set[int]) -> bool:
    if not u:
        return False
    for v in u:
        inside = [w for w in g.successors[v] if w in u]
        if not inside:
            return False
        if g.owner[v] is Owner.PROB and len(inside) != len(g.successors[v]):
            return False
    return len(sccs(sorted(u), g.successors)) == 1


def _mecs(g: GameGraph, alive: Optional[set[int]] = None) -> list[frozenset[int]]:
    """Maximal end components of the subgraph ``alive``, by repeated SCC
    refinement.  Probabilistic states with a successor outside ``alive`` can
    never belong to one."""
    if alive is None:
        alive = set(range(len(g)))
    succ, owner = g.successors, g.owner
    found: list[frozenset[int]] = []
    work = [set(alive)]
    while work:
        cand = work.pop()
        for comp in sccs(sorted(cand), succ):
            c = set(comp)
            bad = set()
            for v in c:
                if owner[v] is Owner.PROB:
                    if any(w not in c for w in succ[v]):
                        bad.add(v)
                elif not any(w in c for w in succ[v]):
                    bad.add(v)
            if not bad:
                found.append(frozenset(c))
                continue
            rest = c - _attr(g, bad, c)
            if rest:
                work.append(rest)
    found.sort(key=min)
    return found


def _reach_ranks(
    g: GameGraph, region: set[int], target: set[int]
) -> dict[int, int]:
    """Shortest positive-probability distance to ``target`` inside
    ``region`` (player states may pick, chance needs one lucky edge)."""
    rank = {v: 0 for v in target if v in region}
    queue = deque(rank)
    pred = g.predecessors
    while queue:
        w = queue.popleft()
        for v in pred[w]:
            if v in region and v not in rank:
                rank[v] = rank[w] + 1
                queue.append(v)
    return rank


def _almost_sure_reach(
    g: GameGraph, target: set[int], alive: Optional[set[int]] = None
) -> set[int]:
    if alive is None:
        alive = set(range(len(g)))
    target = target & alive
    dead: set[int] = set()
    while True:
        region = alive - dead
        can_reach = set(_reach_ranks(g, region, target))
        if can_reach == region:
            return region
        dead = _attr(g, dead | (region - can_reach), alive, blocked=target)


def _descend(g: GameGraph, v: int, region: set[int], rank: dict[int, int]) -> int:
    best = None
    for w in g.successors[v]:
        if w in region and (best is None or rank[w] < rank[best]):
            best = w
    return best


def _reach_choices(
    g: GameGraph, region: set[int], target: set[int]
) -> dict[int, int]:
    rank = _reach_ranks(g, region, target)
    return {
        v: _descend(g, v, region, rank)
        for v in region - target
        if g.owner[v] is not Owner.PROB
    }


def _buchi(
    g: GameGraph, b: set[int], alive: Optional[set[int]] = None
) -> tuple[set[int], dict[int, int]]:
    """Almost-sure Büchi region and a pure memoryless witness on it."""
    good = [m for m in _mecs(g, alive) if m & b]
    core = set().union(*good) if good else set()
    win = _almost_sure_reach(g, core, alive)
    choice = _reach_choices(g, win, core)
    for m in good:
        m = set(m)
        rank = _reach_ranks(g, m, m & b)
        for v in m:
            if g.owner[v] is not Owner.PROB:
                choice[v] = _descend(g, v, m, rank)
    return win, choice


def _cobuchi(
    g: GameGraph, c: set[int], alive: Optional[set[int]] = None
) -> tuple[set[int], dict[int, int]]:
    """Almost-sure coBüchi region and a pure memoryless witness on it."""
    inner = c if alive is None else c & alive
    good = _mecs(g, inner)
    core = set().union(*good) if good else set()
    win = _almost_sure_reach(g, core, alive)
    choice = _reach_choices(g, win, core)
    for m in good:
        for v in m:
            if g.owner[v] is not Owner.PROB:
                choice[v] = next(w for w in g.successors[v] if w in m)
    return win, choice


@dataclass(frozen=True)
class MecDecomposition:
    components: tuple[frozenset[str], ...]
    component_of: dict[str, Optional[int]]

    def __len__(self) -> int:
        return len(self.components)

    def __iter__(self):
        return iter(self.components)


def is_end_component(g: GameGraph, u: Iterable[str]) -> bool:
    """δ-closed, every state keeps a successor inside, strongly connected."""
    return _is_end_component(g, g.idx(u))


def mec_decompose(g: GameGraph) -> MecDecomposition:
    _require_mdp(g)
    comps = tuple(g.ids(m) for m in _mecs(g))
    where: dict[str, Optional[int]] = {s: None for s in g.states}
    for k, m in enumerate(comps):
        for s in m:
            where[s] = k
    return MecDecomposition(comps, where)


def attractor_p(g: GameGraph, u: Iterable[str]) -> frozenset[str]:
    return g.ids(_attr(g, g.idx(u)))


def almost_sure_reach(g: GameGraph, t: Iterable[str]) -> frozenset[str]:
    _require_mdp(g)
    return g.ids(_almost_sure_reach(g, g.idx(t)))


def almost_sure_buchi(g: GameGraph, b: Iterable[str]) -> frozenset[str]:
    _require_mdp(g)
    return g.ids(_buchi(g, g.idx(b))[0])


def almost_sure_cobuchi(g: GameGraph, c: Iterable[str]) -> frozenset[str]:
    _require_mdp(g)
    return g.ids(_cobuchi(g, g.idx(c))[0])


def _as_ids(g, win, choice):
    st = g.states
    return g.ids(win), {st[v]: st[w] for v, w in choice.items()}


def buchi_witness(g: GameGraph, b: Iterable[str]) -> tuple[frozenset[str], dict[str, str]]:
    """Almost-sure Büchi winning set with a pure memoryless winning choice
    for every player state inside it."""
    _require_mdp(g)
    return _as_ids(g, *_buchi(g, g.idx(b)))


def cobuchi_witness(
    g: GameGraph, c: Iterable[str]
) -> tuple[frozenset[str], dict[str, str]]:
    _require_mdp(g)
    return _as_ids(g, *_cobuchi(g, g.idx(c)))
