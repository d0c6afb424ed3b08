"""Command-line entry point: ``eth2game {rewards,equilibrium,simulate,sweep}``."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from fractions import Fraction
from pathlib import Path

from . import __version__, report
from .config import ConfigError, RunConfig, load, to_dict
from .equilibrium import (
    SWEEP_AXES,
    StrategyProfile,
    UnknownAxisError,
    sensitivity_sweep,
    verify_bne,
    verify_ex_ante_dominance,
)
from .game_core import Strategy
from .incentive_model import DomainError, summarize
from .slot_simulator import compare_to_analytic, run_simulation

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_DOMAIN = 4


class UsageError(Exception):
    pass


def parse_grid(text: str) -> list[Fraction]:
    """``a,b,c`` or ``start:stop:count`` (inclusive, evenly spaced)."""
    text = text.strip()
    if not text:
        return []
    try:
        if ":" in text and "," not in text:
            start, stop, count = text.split(":")
            lo, hi, m = Fraction(start), Fraction(stop), int(count)
            if m < 1:
                raise ValueError
            if m == 1:
                return [lo]
            return [lo + (hi - lo) * k / (m - 1) for k in range(m)]
        return [Fraction(v) for v in text.split(",") if v.strip()]
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"cannot parse grid {text!r}") from None


def manifest(args, cfg: RunConfig, seed=None) -> dict:
    return {
        "subcommand": args.command,
        "config_path": args.config,
        "format": args.format,
        "out": args.out,
        "seed": seed,
        "version": __version__,
        "config": to_dict(cfg),
    }


def _with_agents(cfg: RunConfig, n) -> RunConfig:
    if n is None:
        return cfg
    if n < 2:
        raise UsageError(f"--n-agents must be >= 2, got {n}")
    return replace(cfg, game=cfg.game.with_(n_agents=n))


def cmd_rewards(args, cfg: RunConfig) -> str:
    s = summarize(cfg.game.incentive_params)
    rows = s.rows()
    if args.format == "json":
        return report.dumps({"manifest": manifest(args, cfg),
                             "rewards": {k: report.exact(v) for k, v in rows}})
    if args.format == "csv":
        return report.csv_text(["quantity", "gwei"], [[k, report.exact(v)] for k, v in rows])
    return report.table(["quantity", "GWei"], [[k, report.gwei(v)] for k, v in rows])


def cmd_equilibrium(args, cfg: RunConfig) -> str:
    cfg = _with_agents(cfg, args.n_agents)
    method = "bruteforce" if args.brute_force else "classes"
    g = cfg.game
    bne = verify_bne(StrategyProfile.all_cooperate(g.n_agents), g, method)
    dom = verify_ex_ante_dominance(g, method)
    if args.format == "json":
        return report.dumps({"manifest": manifest(args, cfg),
                             "bne": report.equilibrium_dict(bne),
                             "dominance": report.equilibrium_dict(dom)})
    if args.format == "csv":
        return report.csv_text(report.CASE_HEADER, report.case_rows(dom))
    return report.equilibrium_table(bne, dom)


def cmd_simulate(args, cfg: RunConfig) -> str:
    cfg = _with_agents(cfg, args.n_agents)
    sim = cfg.simulation
    overrides = {}
    if args.epochs is not None:
        overrides["epochs"] = args.epochs
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.proposer_cooperate is not None:
        overrides["proposer_cooperate"] = Fraction(args.proposer_cooperate)
    if args.attester_cooperate is not None:
        overrides["attester_cooperate"] = Fraction(args.attester_cooperate)
    if overrides.get("epochs", 1) < 1:
        raise UsageError("--epochs must be >= 1")
    sim = replace(sim, **overrides)
    cfg = replace(cfg, simulation=sim)
    profile = StrategyProfile.uniform(cfg.game.n_agents, Strategy(sim.proposer_cooperate, sim.attester_cooperate))
    res = run_simulation(cfg.game, profile, sim.epochs, sim.seed)
    comps = compare_to_analytic(res, cfg.game, profile)
    if args.trace:
        Path(args.trace).write_text(report.trace_csv(res))
    if args.format == "json":
        return report.dumps({"manifest": manifest(args, cfg, sim.seed),
                             "result": report.simulation_dict(res, comps)})
    if args.format == "csv":
        return report.trace_csv(res)
    return report.simulation_table(res, comps)


def cmd_sweep(args, cfg: RunConfig) -> str:
    cfg = _with_agents(cfg, args.n_agents)
    if args.axis is None:
        raise UsageError("sweep needs --axis")
    grid = parse_grid(args.grid or "")
    try:
        results = sensitivity_sweep(cfg.game, args.axis, grid)
    except UnknownAxisError as exc:
        raise UsageError(str(exc)) from None
    if args.format == "json":
        return report.dumps({
            "manifest": manifest(args, cfg),
            "axis": args.axis,
            "points": [{"value": report.exact(v), "report": report.equilibrium_dict(r)} for v, r in results],
        })
    header = [args.axis, "dominant", "dominance", "min gap", "best responses"]
    if args.format == "csv":
        rows = [[report.exact(v), r.dominance_verdict, r.dominance_label, report.exact(r.min_gap),
                 ";".join(sorted({b.label() for b in r.best_responses}))] for v, r in results]
        return report.csv_text(header, rows)
    rows = [[report.gwei(v) if args.axis != "n_validators" else str(v),
             str(r.dominance_verdict), r.dominance_label, report.gwei(r.min_gap),
             ", ".join(sorted({b.label() for b in r.best_responses}))] for v, r in results]
    return report.table(header, rows)


COMMANDS = {
    "rewards": cmd_rewards,
    "equilibrium": cmd_equilibrium,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--format", choices=("table", "csv", "json"), default="table")
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--n-agents", type=int, help="number of agents in the game")

    parser = argparse.ArgumentParser(prog="eth2game", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("rewards", parents=[common], help="per-epoch rewards, penalties and cost")

    eq = sub.add_parser("equilibrium", parents=[common], help="verify BNE and ex ante dominance")
    eq.add_argument("--brute-force", action="store_true", help="enumerate every atom instead of classes")

    sim = sub.add_parser("simulate", parents=[common], help="Monte Carlo over epochs")
    sim.add_argument("--epochs", type=int)
    sim.add_argument("--seed", type=int)
    sim.add_argument("--proposer-cooperate", help="probability of cooperating as proposer")
    sim.add_argument("--attester-cooperate", help="probability of cooperating as attester")
    sim.add_argument("--trace", help="also write the per-epoch trace CSV here")

    sw = sub.add_parser("sweep", parents=[common], help="dominance across a parameter grid")
    sw.add_argument("--axis", choices=SWEEP_AXES)
    sw.add_argument("--grid", help="a,b,c or start:stop:count")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load(args.config)
        text = COMMANDS[args.command](args, cfg)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"eth2game: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"eth2game: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DomainError, ValueError) as exc:
        print(f"eth2game: domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
