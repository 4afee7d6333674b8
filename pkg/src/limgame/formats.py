"""JSON instance files.

::

    {"states": [{"id": "s", "owner": "p1" | "p2" | "prob", "reward": "n/d"}, ...],
     "edges":  [{"from": "s", "to": "t"} | {"from": "p", "to": "t", "prob": "1/2"}, ...]}

"prob" is present exactly on edges leaving probabilistic states.
"""

from __future__ import annotations

import json

from .graph import (
    GameGraph,
    GraphError,
    Owner,
    RewardFunction,
    format_rational,
    parse_rational,
)

__all__ = ["InstanceFormatError", "parse_game", "dump_game", "load_game"]


class InstanceFormatError(GraphError):
    pass


def _field(obj, key, where):
    if not isinstance(obj, dict) or key not in obj:
        raise InstanceFormatError(f"{where}: missing field {key!r}")
    return obj[key]


def parse_game(text: str) -> tuple[GameGraph, RewardFunction]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise InstanceFormatError("instance must be a JSON object")
    raw_states = _field(doc, "states", "instance")
    raw_edges = _field(doc, "edges", "instance")
    if not isinstance(raw_states, list) or not isinstance(raw_edges, list):
        raise InstanceFormatError("'states' and 'edges' must be lists")
    states = []
    rewards = {}
    for k, st in enumerate(raw_states):
        where = f"states[{k}]"
        sid = _field(st, "id", where)
        owner = _field(st, "owner", where)
        if owner not in {o.value for o in Owner}:
            raise InstanceFormatError(f"{where}: unknown owner {owner!r}")
        states.append((sid, owner))
        if isinstance(sid, str) and sid not in rewards:
            rewards[sid] = parse_rational(_field(st, "reward", where))
    edges = []
    for k, e in enumerate(raw_edges):
        where = f"edges[{k}]"
        edges.append(
            (_field(e, "from", where), _field(e, "to", where), e.get("prob"))
        )
    g = GameGraph.build(states, edges)
    return g, RewardFunction(rewards)


def load_game(path) -> tuple[GameGraph, RewardFunction]:
    with open(path, encoding="utf-8") as fh:
        return parse_game(fh.read())


def dump_game(g: GameGraph, r: RewardFunction, indent=None) -> str:
    states = [
        {"id": s, "owner": o.value, "reward": format_rational(r[s])}
        for s, o in zip(g.states, g.owner)
    ]
    edges = []
    for i, succ in enumerate(g.successors):
        for k, j in enumerate(succ):
            e = {"from": g.states[i], "to": g.states[j]}
            if g.probs[i] is not None:
                e["prob"] = format_rational(g.probs[i][k])
            edges.append(e)
    return json.dumps({"states": states, "edges": edges}, indent=indent)
