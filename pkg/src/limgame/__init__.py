"""Exact values and optimal strategies for MDPs and turn-based stochastic
games with limsup and liminf objectives."""

from .formats import dump_game, load_game, parse_game
from .games import GameSolution, check_determinacy, decide, solve_game
from .graph import (
    GameGraph,
    Owner,
    PureMemorylessStrategy,
    RewardFunction,
    bipartite_normalize,
    make_positive,
    restrict,
    shift_rewards,
)
from .pipeline import MdpSolution, solve_mdp

__all__ = [
    "GameGraph",
    "Owner",
    "RewardFunction",
    "PureMemorylessStrategy",
    "bipartite_normalize",
    "make_positive",
    "restrict",
    "shift_rewards",
    "parse_game",
    "dump_game",
    "load_game",
    "solve_mdp",
    "MdpSolution",
    "solve_game",
    "GameSolution",
    "decide",
    "check_determinacy",
]

__version__ = "0.1.0"
