"""Turn-based stochastic games with limsup and liminf objectives.

Games are solved by enumerating one player's pure memoryless strategies and
solving each residual MDP in polynomial time.  This is exponential in the
number of player states, so a budget caps the number of strategies tried;
``LIMGAME_BUDGET`` overrides the default of 2**20.
"""

from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Mapping, Optional

from .graph import (
    GameGraph,
    Owner,
    PureMemorylessStrategy,
    RewardFunction,
    fix_strategy,
    mirror,
    parse_rational,
)
from .pipeline import dual_kind, solve_mdp

__all__ = [
    "DEFAULT_BUDGET",
    "BudgetExceededError",
    "DeterminacyError",
    "GameSolution",
    "Decision",
    "DeterminacyReport",
    "default_budget",
    "strategy_count",
    "enumerate_strategies",
    "solve_game",
    "decide",
    "check_determinacy",
]

DEFAULT_BUDGET = 2**20


class BudgetExceededError(RuntimeError):
    pass


class DeterminacyError(RuntimeError):
    """No enumerated strategy is optimal from every state at once."""


def default_budget() -> int:
    raw = os.environ.get("LIMGAME_BUDGET")
    return int(raw) if raw else DEFAULT_BUDGET


def strategy_count(g: GameGraph, player: Owner) -> int:
    return math.prod(len(g.successors[i]) for i in g.indices_of(player))


def enumerate_strategies(
    g: GameGraph, player: Owner, budget: Optional[int] = None
) -> Iterator[PureMemorylessStrategy]:
    """All pure memoryless strategies of ``player``, lexicographic in state
    order and successor index."""
    budget = default_budget() if budget is None else budget
    count = strategy_count(g, player)
    if count > budget:
        raise BudgetExceededError(
            f"{count} pure memoryless strategies for {player.value} exceed "
            f"the budget of {budget}"
        )
    own = g.states_of(player)
    for pick in itertools.product(*(g.succ(s) for s in own)):
        yield PureMemorylessStrategy(player, dict(zip(own, pick)))


@dataclass(frozen=True)
class GameSolution:
    kind: str
    values: Mapping[str, Fraction]
    strategy1: PureMemorylessStrategy
    strategy2: PureMemorylessStrategy


def _residual_values(args):
    g, r, kind, strategy = args
    return solve_mdp(fix_strategy(g, strategy), r, kind).values


def _best_response_table(g, r, kind, player, budget, jobs):
    cands = list(enumerate_strategies(g, player, budget))
    work = [(g, r, kind, c) for c in cands]
    if jobs and jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            tables = list(pool.map(_residual_values, work, chunksize=8))
    else:
        tables = [_residual_values(w) for w in work]
    return cands, tables


def _uniform_optimum(g, cands, tables, pick):
    values = {s: pick(t[s] for t in tables) for s in g.states}
    for c, t in zip(cands, tables):
        if all(t[s] == values[s] for s in g.states):
            return values, c
    raise DeterminacyError(
        "no single pure memoryless strategy is optimal from every state"
    )


def solve_game(
    g: GameGraph,
    r: RewardFunction,
    kind: str,
    budget: Optional[int] = None,
    jobs: int = 1,
) -> GameSolution:
    """Values of ``kind(r)`` and optimal pure memoryless strategies for
    both players.

    Player 2's strategies are enumerated and each residual player-1 MDP is
    solved exactly; the value is the pointwise minimum, and player 2's
    witness is a strategy attaining it everywhere.  Player 1's witness is
    found the same way from the other side.
    """
    r.check_defined_on(g)
    empty1 = PureMemorylessStrategy(Owner.P1, {})
    empty2 = PureMemorylessStrategy(Owner.P2, {})
    if g.is_mdp():
        sol = solve_mdp(g, r, kind)
        if sol.controller is Owner.P2:
            return GameSolution(kind, dict(sol.values), empty1, sol.strategy)
        return GameSolution(kind, dict(sol.values), sol.strategy, empty2)
    cands2, tables2 = _best_response_table(g, r, kind, Owner.P2, budget, jobs)
    values, pi = _uniform_optimum(g, cands2, tables2, min)
    cands1, tables1 = _best_response_table(g, r, kind, Owner.P1, budget, jobs)
    values1, sigma = _uniform_optimum(g, cands1, tables1, max)
    if values1 != values:
        raise DeterminacyError("the two enumerations disagree on the value")
    return GameSolution(kind, values, sigma, pi)


@dataclass(frozen=True)
class Decision:
    holds: bool
    value: Fraction
    threshold: Fraction
    witness: PureMemorylessStrategy
    witness_value: Fraction  # value at the state once the witness is fixed


def decide(
    g: GameGraph,
    r: RewardFunction,
    kind: str,
    state: str,
    threshold,
    budget: Optional[int] = None,
) -> Decision:
    """Is player 1's value at ``state`` at least ``threshold``?

    The witness is player 1's optimal strategy when the answer is yes and
    player 2's when it is no; fixing it and solving the remaining MDP
    confirms the answer.
    """
    q = parse_rational(threshold)
    if state not in g.index:
        raise KeyError(state)
    sol = solve_game(g, r, kind, budget)
    v = sol.values[state]
    holds = v >= q
    witness = sol.strategy1 if holds else sol.strategy2
    check = solve_mdp(fix_strategy(g, witness), r, kind).values[state]
    if (check >= q) != holds:
        raise DeterminacyError(f"witness for {state!r} does not confirm the answer")
    return Decision(holds, v, q, witness, check)


@dataclass(frozen=True)
class DeterminacyReport:
    limsup_sums: Mapping[str, Fraction]  # Val1(limsup r) + Val2(liminf -r)
    liminf_sums: Mapping[str, Fraction]  # Val1(liminf r) + Val2(limsup -r)

    @property
    def ok(self) -> bool:
        return all(v == 0 for v in self.limsup_sums.values()) and all(
            v == 0 for v in self.liminf_sums.values()
        )


def check_determinacy(
    g: GameGraph, r: RewardFunction, budget: Optional[int] = None
) -> DeterminacyReport:
    """Compute each player's value separately and add them up.

    Player 2's value is obtained as player 1's value in the mirrored game
    with negated rewards, which enumerates the other player's strategies.
    """
    mg, neg = mirror(g), r.negate()
    sums = {}
    for kind in ("limsup", "liminf"):
        mine = solve_game(g, r, kind, budget).values
        theirs = solve_game(mg, neg, dual_kind(kind), budget).values
        sums[kind] = {s: mine[s] + theirs[s] for s in g.states}
    return DeterminacyReport(sums["limsup"], sums["liminf"])
