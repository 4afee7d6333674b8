"""Command-line front end.

Exit codes: 0 success (and YES for ``decide``), 1 NO for ``decide``,
2 oracle or determinacy mismatch, 64 usage error, 65 invalid instance or
enumeration budget exceeded, 70 internal certificate failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, TextIO

from .formats import dump_game, parse_game
from .games import BudgetExceededError, DeterminacyError, check_determinacy, decide, solve_game
from .generate import INSTANCE_KINDS, random_instance
from .graph import (
    GameGraph,
    GraphError,
    Owner,
    PureMemorylessStrategy,
    RewardFunction,
    format_rational,
    parse_rational,
)
from .maxsolver import CertificateError, solve_max
from .oracle import enumerate_values, simulate
from .pipeline import solve_mdp
from .qualitative import almost_sure_buchi, almost_sure_cobuchi, mec_decompose
from .reductions import ConvertedMdp

EX_OK, EX_NO, EX_MISMATCH = 0, 1, 2
EX_USAGE, EX_DATAERR, EX_SOFTWARE = 64, 65, 70

__all__ = ["RunConfig", "UsageError", "run", "main", "build_parser"]


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    subcommand: str
    input: Optional[str] = None
    objective: str = "limsup"
    state: Optional[str] = None
    threshold: Optional[Fraction] = None
    trace: bool = False
    witness: bool = False
    check_determinacy: bool = False
    oracle_verify: bool = False
    targets: list[str] = field(default_factory=list)
    states: int = 6
    density: float = 0.3
    reward_min: int = -3
    reward_max: int = 5
    seed: int = 0
    kind: str = "mdp"
    episodes: int = 10000
    horizon: int = 200
    machine: bool = False
    approx: bool = False
    jobs: int = 1
    budget: Optional[int] = None

    def validate(self) -> None:
        if self.threshold is not None and self.subcommand != "decide":
            raise UsageError("--threshold only applies to decide")
        if self.subcommand == "decide" and (self.state is None or self.threshold is None):
            raise UsageError("decide needs --state and --threshold")
        if self.subcommand == "gen":
            if self.states < 1:
                raise UsageError("--states must be at least 1")
            if not 0 < self.density <= 1:
                raise UsageError("--density must lie in (0, 1]")
            if self.reward_min > self.reward_max:
                raise UsageError("--reward-min exceeds --reward-max")
        elif self.input is None:
            raise UsageError(f"{self.subcommand} needs an input file")
        if self.subcommand == "simulate" and (self.episodes < 1 or self.horizon < 2):
            raise UsageError("need --episodes >= 1 and --horizon >= 2")
        if self.jobs < 1:
            raise UsageError("--jobs must be at least 1")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="limgame",
        description="Exact limsup/liminf values of MDPs and stochastic games",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    def common(p, objectives=("limsup", "liminf")):
        p.add_argument("input", help="instance file, or - for stdin")
        p.add_argument("--objective", choices=objectives, default="limsup")
        p.add_argument("--json", dest="machine", action="store_true",
                       help="emit one JSON object")
        p.add_argument("--approx", action="store_true",
                       help="also print decimals (text mode only)")
        p.add_argument("--budget", type=int, default=None,
                       help="strategy enumeration budget (default $LIMGAME_BUDGET or 2**20)")

    p = sub.add_parser("solve", help="values (and witnesses) of an instance")
    common(p, ("limsup", "liminf", "max"))
    p.add_argument("--witness", action="store_true")
    p.add_argument("--trace", action="store_true", help="print the level iteration log")
    p.add_argument("--oracle-verify", action="store_true",
                   help="compare against brute-force enumeration")
    p.add_argument("--check-determinacy", action="store_true")
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("decide", help="is the value at a state at least a threshold")
    common(p)
    p.add_argument("--state", required=True)
    p.add_argument("--threshold", required=True, type=_rational)

    p = sub.add_parser("qualitative", help="almost-sure Büchi/coBüchi set of an MDP")
    p.add_argument("input")
    p.add_argument("--objective", choices=("buchi", "cobuchi"), default="buchi")
    p.add_argument("--targets", required=True,
                   help="comma-separated state ids (may be empty)")
    p.add_argument("--json", dest="machine", action="store_true")

    p = sub.add_parser("mec", help="maximal end components of an MDP")
    p.add_argument("input")
    p.add_argument("--json", dest="machine", action="store_true")

    p = sub.add_parser("oracle", help="values by exhaustive strategy enumeration")
    common(p, ("limsup", "liminf", "max"))

    p = sub.add_parser("simulate", help="Monte Carlo estimate under optimal play")
    common(p, ("limsup", "liminf"))
    p.add_argument("--episodes", type=int, default=10000)
    p.add_argument("--horizon", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("gen", help="emit a random valid instance")
    p.add_argument("--states", type=int, default=6)
    p.add_argument("--density", type=float, default=0.3)
    p.add_argument("--reward-min", type=int, default=-3)
    p.add_argument("--reward-max", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--kind", choices=INSTANCE_KINDS, default="mdp")
    return parser


def _rational(text: str) -> Fraction:
    try:
        return parse_rational(text)
    except GraphError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def config_from_args(argv: Sequence[str]) -> RunConfig:
    ns = build_parser().parse_args(argv)
    cfg = RunConfig(subcommand=ns.subcommand)
    for key, val in vars(ns).items():
        if key == "targets":
            val = [t for t in val.split(",") if t]
        if hasattr(cfg, key):
            setattr(cfg, key, val)
    cfg.validate()
    return cfg


def _read(path: str, stdin: TextIO) -> tuple[GameGraph, RewardFunction]:
    if path == "-":
        return parse_game(stdin.read())
    with open(path, encoding="utf-8") as fh:
        return parse_game(fh.read())


def _fmt(q: Fraction, approx: bool) -> str:
    text = format_rational(q)
    return f"{text} (~{float(q):.6f})" if approx else text


def _strategy_json(s: PureMemorylessStrategy) -> dict[str, str]:
    return dict(s.choices)


def _converted_from_instance(g: GameGraph, r: RewardFunction) -> ConvertedMdp:
    copies = [
        s for s in g.states
        if g.owner_of(s) is Owner.P1 and g.succ(s) == (s,) and r[s] > 0
    ]
    return ConvertedMdp("max", g, g, r, {c: c for c in copies})


def _solve(cfg: RunConfig, g, r, out: TextIO) -> int:
    report: dict = {"objective": cfg.objective}
    lines: list[str] = []
    status = EX_OK
    if cfg.objective == "max":
        sol = solve_max(_converted_from_instance(g, r))
        values = {s: sol.values[s] for s in g.states}
        s1, s2 = sol.strategy, PureMemorylessStrategy(Owner.P2, {})
        trace = [f"policy iterations: {sol.iterations}"]
    else:
        trace = []
        if cfg.trace:
            if g.is_mdp():
                trace = solve_mdp(g, r, cfg.objective).reduction.trace_lines()
            else:
                trace = ["game: one reduction per enumerated strategy, none shown"]
        gsol = solve_game(g, r, cfg.objective, cfg.budget, cfg.jobs)
        values, s1, s2 = gsol.values, gsol.strategy1, gsol.strategy2
    report["values"] = {s: format_rational(v) for s, v in values.items()}
    lines += [f"{s} = {_fmt(v, cfg.approx)}" for s, v in values.items()]
    if cfg.witness:
        report["strategy1"] = _strategy_json(s1)
        report["strategy2"] = _strategy_json(s2)
        lines += [f"strategy1: {s} -> {t}" for s, t in s1.choices.items()]
        lines += [f"strategy2: {s} -> {t}" for s, t in s2.choices.items()]
    if cfg.trace:
        report["trace"] = trace
        lines += [f"trace: {t}" for t in trace]
    if cfg.oracle_verify:
        expected = enumerate_values(g, r, cfg.objective)
        bad = [s for s in g.states if expected[s] != values[s]]
        report["oracle_verify"] = {"ok": not bad, "mismatches": bad}
        if bad:
            status = EX_MISMATCH
            lines += [
                f"oracle mismatch at {s}: pipeline {format_rational(values[s])}, "
                f"oracle {format_rational(expected[s])}"
                for s in bad
            ]
        else:
            lines.append("oracle: ok")
    if cfg.check_determinacy:
        rep = check_determinacy(g, r, cfg.budget)
        report["determinacy"] = {
            "ok": rep.ok,
            "limsup_sums": {s: format_rational(v) for s, v in rep.limsup_sums.items()},
            "liminf_sums": {s: format_rational(v) for s, v in rep.liminf_sums.items()},
        }
        lines.append("determinacy: ok" if rep.ok else "determinacy: FAILED")
        if not rep.ok:
            status = EX_MISMATCH
    _emit(cfg, out, report, lines)
    return status


def _emit(cfg: RunConfig, out: TextIO, report: dict, lines: list[str]) -> None:
    if cfg.machine:
        out.write(json.dumps(report, sort_keys=True) + "\n")
    else:
        out.write("".join(line + "\n" for line in lines))


def run(cfg: RunConfig, out: Optional[TextIO] = None, stdin: Optional[TextIO] = None) -> int:
    out = sys.stdout if out is None else out
    stdin = sys.stdin if stdin is None else stdin
    if cfg.subcommand == "gen":
        g, r = random_instance(
            cfg.states, cfg.seed, cfg.kind, cfg.density, (cfg.reward_min, cfg.reward_max)
        )
        out.write(dump_game(g, r) + "\n")
        return EX_OK
    g, r = _read(cfg.input, stdin)
    if cfg.subcommand == "solve":
        return _solve(cfg, g, r, out)
    if cfg.subcommand == "decide":
        d = decide(g, r, cfg.objective, cfg.state, cfg.threshold, cfg.budget)
        report = {
            "answer": "YES" if d.holds else "NO",
            "value": format_rational(d.value),
            "threshold": format_rational(d.threshold),
            "witness_player": d.witness.player.value,
            "witness": _strategy_json(d.witness),
        }
        lines = ["YES" if d.holds else "NO", f"value: {_fmt(d.value, cfg.approx)}"]
        lines += [f"witness ({d.witness.player.value}): {s} -> {t}"
                  for s, t in d.witness.choices.items()]
        _emit(cfg, out, report, lines)
        return EX_OK if d.holds else EX_NO
    if cfg.subcommand == "qualitative":
        fn = almost_sure_buchi if cfg.objective == "buchi" else almost_sure_cobuchi
        win = fn(g, cfg.targets)
        ordered = [s for s in g.states if s in win]
        _emit(cfg, out, {"objective": cfg.objective, "winning": ordered},
              [" ".join(ordered)])
        return EX_OK
    if cfg.subcommand == "mec":
        dec = mec_decompose(g)
        comps = [[s for s in g.states if s in m] for m in dec.components]
        _emit(cfg, out, {"mecs": comps}, [" ".join(c) for c in comps])
        return EX_OK
    if cfg.subcommand == "oracle":
        values = enumerate_values(g, r, cfg.objective)
        _emit(cfg, out,
              {"objective": cfg.objective,
               "values": {s: format_rational(v) for s, v in values.items()}},
              [f"{s} = {_fmt(v, cfg.approx)}" for s, v in values.items()])
        return EX_OK
    if cfg.subcommand == "simulate":
        sol = solve_game(g, r, cfg.objective, cfg.budget)
        est = simulate(g, r, sol.strategy1, sol.strategy2, cfg.objective,
                       cfg.episodes, cfg.horizon, cfg.seed)
        report = {
            s: {"mean": format_rational(e.mean), "stderr": e.stderr,
                "half_width": e.half_width, "exact": format_rational(sol.values[s])}
            for s, e in est.items()
        }
        lines = [
            f"{s} ~ {float(e.mean):.6f} +/- {e.half_width:.6f} "
            f"(exact {format_rational(sol.values[s])})"
            for s, e in est.items()
        ]
        _emit(cfg, out, {"objective": cfg.objective, "estimates": report}, lines)
        return EX_OK
    raise UsageError(f"unknown subcommand {cfg.subcommand!r}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = config_from_args(argv)
        return run(cfg)
    except UsageError as exc:
        print(f"limgame: usage error: {exc}", file=sys.stderr)
        return EX_USAGE
    except (ValueError, BudgetExceededError, OSError) as exc:
        print(f"limgame: {exc}", file=sys.stderr)
        return EX_DATAERR
    except (CertificateError, DeterminacyError) as exc:
        print(f"limgame: internal check failed: {exc}", file=sys.stderr)
        return EX_SOFTWARE


if __name__ == "__main__":
    sys.exit(main())
