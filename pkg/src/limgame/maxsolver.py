"""Exact values for max objectives on converted MDPs.

Only the absorbing copies carry a (positive) reward, so the max objective
is the expected reward of the copy a play gets absorbed in, and 0 for plays
that are never absorbed.  Values are found by policy iteration over exact
rationals.  The linear program

    x_s >= 0                      for every state
    x_s  = reward(s)              for every copy
    x_s >= x_t                    for every player edge (s, t)
    x_s  = sum_t delta(s)(t) x_t  for every probabilistic state

bounds the value from above at every feasible point, so a feasible point
that is also the value of some strategy is optimal; :func:`certify` checks
exactly that.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Optional

from .graph import Owner, PureMemorylessStrategy
from .linalg import solve_sparse
from .reductions import ConvertedMdp

__all__ = [
    "CertificateError",
    "Certificate",
    "MaxSolution",
    "evaluate_strategy",
    "initial_strategy",
    "residuals",
    "certify",
    "solve_max",
]


class CertificateError(RuntimeError):
    """An optimality certificate failed; this signals a bug, not bad input."""


@dataclass(frozen=True)
class Certificate:
    """Per-constraint slack; equalities must be 0 and inequalities >= 0."""

    nonnegative: Mapping[str, Fraction]
    copies: Mapping[str, Fraction]
    player: Mapping[tuple[str, str], Fraction]
    chance: Mapping[str, Fraction]

    def feasible(self) -> bool:
        return (
            all(v >= 0 for v in self.nonnegative.values())
            and all(v == 0 for v in self.copies.values())
            and all(v >= 0 for v in self.player.values())
            and all(v == 0 for v in self.chance.values())
        )


@dataclass(frozen=True)
class MaxSolution:
    values: Mapping[str, Fraction]
    strategy: PureMemorylessStrategy
    certificate: Optional[Certificate] = field(default=None, compare=False)
    iterations: int = 0


def _check_converted(m: ConvertedMdp) -> None:
    g, r = m.graph, m.reward
    if g.has_owner(Owner.P2):
        raise ValueError("converted MDP must not contain player-2 states")
    copies = m.copies
    for s in g.states:
        if s in copies:
            if r[s] <= 0:
                raise ValueError(f"copy {s!r} must carry a positive reward")
            if g.owner_of(s) is not Owner.P1 or g.succ(s) != (s,):
                raise ValueError(f"copy {s!r} must be an absorbing player-1 state")
        elif r[s] != 0:
            raise ValueError(f"original state {s!r} must carry reward 0")


def evaluate_strategy(
    m: ConvertedMdp, strategy: PureMemorylessStrategy
) -> dict[str, Fraction]:
    """Expected absorbed reward of every state under ``strategy``."""
    g = m.graph
    n = len(g)
    index = g.index
    pay = {index[c]: m.reward[c] for c in m.copies}
    choice = strategy.as_indices(g)
    succ = [
        g.successors[v] if g.owner[v] is Owner.PROB else (choice[v],) for v in range(n)
    ]
    pred: list[list[int]] = [[] for _ in range(n)]
    for v in range(n):
        for w in succ[v]:
            pred[w].append(v)
    # states that reach a copy with positive probability
    live = set(pay)
    stack = list(pay)
    while stack:
        w = stack.pop()
        for v in pred[w]:
            if v not in live:
                live.add(v)
                stack.append(v)
    # collapse one-successor player chains onto the state they lead to
    rep: dict[int, int] = {}

    def resolve(v: int) -> int:
        path = []
        while v in live and g.owner[v] is not Owner.PROB and v not in pay:
            if v in rep:
                v = rep[v]
                break
            path.append(v)
            v = succ[v][0]
        for u in path:
            rep[u] = v
        return v

    unknowns = sorted(v for v in live if g.owner[v] is Owner.PROB)
    col = {v: k for k, v in enumerate(unknowns)}
    rows = []
    rhs = []
    for v in unknowns:
        row: dict[int, Fraction] = {col[v]: Fraction(1)}
        b = Fraction(0)
        for w, p in zip(g.successors[v], g.probs[v]):
            w = resolve(w)
            if w in pay:
                b += p * pay[w]
            elif w in col:
                row[col[w]] = row.get(col[w], 0) - p
        rows.append(row)
        rhs.append(b)
    x = solve_sparse(rows, rhs)
    values = {}
    for v in range(n):
        w = resolve(v)
        if w in pay:
            val = pay[w]
        elif w in col:
            val = x[col[w]]
        else:
            val = Fraction(0)
        values[g.states[v]] = val
    return values


def initial_strategy(m: ConvertedMdp) -> PureMemorylessStrategy:
    """Take the copy edge where there is one, else the lowest successor."""
    g = m.graph
    choices = {}
    for s in g.states_of(Owner.P1):
        c = m.copy_of.get(s)
        choices[s] = c if c is not None else g.succ(s)[0]
    return PureMemorylessStrategy(Owner.P1, choices)


def residuals(m: ConvertedMdp, values: Mapping[str, Fraction]) -> Certificate:
    g = m.graph
    copies = m.copies
    player = {}
    chance = {}
    for s in g.states:
        if g.owner_of(s) is Owner.PROB:
            chance[s] = values[s] - sum(
                (p * values[t] for t, p in g.delta(s).items()), Fraction(0)
            )
        else:
            for t in g.succ(s):
                player[(s, t)] = values[s] - values[t]
    return Certificate(
        nonnegative={s: values[s] for s in g.states},
        copies={c: values[c] - m.reward[c] for c in copies},
        player=player,
        chance=chance,
    )


def certify(m: ConvertedMdp, sol: MaxSolution) -> bool:
    """Exact optimality check.

    The values must satisfy every LP constraint, the strategy must pick a
    successor attaining each player state's value (so greedy improvement
    has nothing left to do), and the values must be what the strategy
    actually earns.
    """
    g = m.graph
    if set(sol.values) != set(g.states):
        return False
    try:
        sol.strategy.validate(g)
    except ValueError:
        return False
    if not residuals(m, sol.values).feasible():
        return False
    for s, t in sol.strategy.choices.items():
        if sol.values[s] != sol.values[t]:
            return False
    return evaluate_strategy(m, sol.strategy) == dict(sol.values)


def solve_max(
    m: ConvertedMdp,
    on_iteration: Optional[Callable[[int, Mapping[str, Fraction]], None]] = None,
) -> MaxSolution:
    """Policy iteration: evaluate, then switch every player state whose
    best successor is strictly better than its current one (lowest index
    among the best), until stable."""
    _check_converted(m)
    g = m.graph
    strategy = initial_strategy(m)
    choices = dict(strategy.choices)
    values = evaluate_strategy(m, strategy)
    it = 0
    if on_iteration is not None:
        on_iteration(it, values)
    while True:
        changed = False
        for s in choices:
            best = max(g.succ(s), key=lambda t: values[t])
            if values[best] > values[choices[s]]:
                choices[s] = best
                changed = True
        if not changed:
            break
        strategy = PureMemorylessStrategy(Owner.P1, dict(choices))
        new = evaluate_strategy(m, strategy)
        if any(new[s] < values[s] for s in values) or new == values:
            raise CertificateError("policy iteration failed to improve")
        values = new
        it += 1
        if on_iteration is not None:
            on_iteration(it, values)
    cert = residuals(m, values)
    sol = MaxSolution(values, strategy, cert, it)
    if not certify(m, sol):
        raise CertificateError("policy iteration result fails its certificate")
    return sol
