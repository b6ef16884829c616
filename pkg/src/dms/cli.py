"""Command line entry point.

Subcommands: gen-topology, run-gbr, run-be, run-dms, oracle, report.
Exit codes: 0 success (including recorded infeasible epochs), 2 configuration
error, 3 oracle capacity error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .config import ScenarioConfig
from .errors import CapacityError, ConfigurationError
from .harness import build_instance, run_experiment
from .oracle import solve_be_central, solve_gbr_central
from .radio import compute_gains
from .report import render_report
from .scenario import fading_rng, save_gains, save_topology

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CAPACITY = 3


def _add_common(parser):
    parser.add_argument("--config", required=True, help="scenario config JSON")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--seeds", help="comma-separated seed override")
    parser.add_argument("--epochs", type=int, help="epoch count override")
    parser.add_argument("--trace", action="store_true", help="write per-round JSON traces")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dms",
        description="ABSF inter-cell interference coordination experiments")
    parser.add_argument("--version", action="version", version=f"dms-icic {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (
            ("run-dms", "guaranteed + best-effort traffic, full supervisor loop"),
            ("run-gbr", "guaranteed traffic only (time squeezing study)"),
            ("run-be", "best-effort traffic only over the whole horizon"),
            ("gen-topology", "generate and persist seeded topologies and gains"),
            ("oracle", "exact centralized solutions for a tiny scenario")):
        p = sub.add_parser(name, help=help_text)
        _add_common(p)

    p = sub.add_parser("report", help="render figures and summary from a run directory")
    p.add_argument("--run", required=True, help="directory holding records.csv")
    p.add_argument("--out", help="directory for figures (default: the run directory)")
    return parser


def _load_config(args) -> ScenarioConfig:
    config = ScenarioConfig.from_json_file(args.config)
    overrides = {}
    if args.seeds:
        overrides["seeds"] = [int(s) for s in args.seeds.split(",") if s.strip()]
    if args.epochs:
        overrides["epochs"] = args.epochs
    if overrides:
        config = ScenarioConfig.from_dict({**config.to_dict(), **overrides})
    return config


def _cmd_gen_topology(args) -> int:
    config = _load_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for seed in config.seeds:
        instance = build_instance(config, seed)
        save_topology(out / f"topology_seed{seed}.json", instance.topology)
        gains = compute_gains(instance.topology, instance.channel, fading_rng(seed, 0))
        save_gains(out / f"gains_seed{seed}.json", gains)
    print(f"wrote {len(config.seeds)} topologies to {out}")
    return EXIT_OK


def _cmd_oracle(args) -> int:
    config = _load_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    results = []
    for seed in config.seeds:
        instance = build_instance(config, seed)
        gains = compute_gains(instance.topology, instance.channel, fading_rng(seed, 0))
        all_gbr = [u for us in instance.gbr_users_of for u in us]
        from .scheduling import demands_from_rate_mbps
        demands = demands_from_rate_mbps(all_gbr, config.gbr_rate_mbps,
                                         config.W, config.t_slot_s())
        scenario = instance.scenario(gains, demands, alpha=config.alpha,
                                     penalty_mode=config.penalty_mode,
                                     fixed_penalty=config.fixed_penalty)
        entry = {"seed": seed}
        if all_gbr:
            sol = solve_gbr_central(scenario, config.W, config.alpha)
            entry["gbr"] = {
                "objective": sol.objective, "L": sol.L,
                "per_bs_usage": {str(k): v for k, v in sol.per_bs_usage.items()},
                "penalties": {str(k): v for k, v in sol.penalties.items()},
            }
        if any(instance.be_users_of):
            sol = solve_be_central(scenario, config.W)
            entry["be"] = {
                "utility": sol.utility,
                "per_bs_min_volume": {str(k): v for k, v in sol.per_bs_min_volume.items()},
            }
        results.append(entry)
    with open(out / "oracle.json", "w") as fh:
        json.dump(results, fh, indent=1, sort_keys=True)
    print(f"wrote oracle.json for {len(results)} seeds to {out}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "report":
            written = render_report(args.run, args.out)
            print("\n".join(str(p) for p in written))
            return EXIT_OK
        if args.command == "gen-topology":
            return _cmd_gen_topology(args)
        if args.command == "oracle":
            return _cmd_oracle(args)
        config = _load_config(args)
        mode = {"run-dms": "dms", "run-gbr": "gbr", "run-be": "be"}[args.command]
        records = run_experiment(config, args.out, mode=mode, trace=args.trace)
        print(f"wrote {len(records)} records to {args.out}")
        return EXIT_OK
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY


if __name__ == "__main__":
    sys.exit(main())
