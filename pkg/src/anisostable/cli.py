"""Command-line interface.

Subcommands map onto the experiment runners; `suite` runs a directory of
configs in isolated processes.  Exit status: 0 all verdicts pass, 1 verdict
failure, 2 configuration/schema error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ConfigError, ExperimentConfig, load_config
from .experiments import run_experiment, run_full_suite

_SUBCOMMANDS = {
    "simulate": "simulate",
    "density": "density",
    "resolvent": "resolvent",
    "generator": "generator",
    "multiplier": "multiplier",
    "transience": "transience",
    "verify-martingale": "martingale",
    "verify-uniqueness": "uniqueness",
    "maximal": "maximal",
}


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="anisostable",
        description="Simulation and operator toolkit for diagonal stable-driven "
                    "SDE systems")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in _SUBCOMMANDS:
        p = sub.add_parser(name, help=f"run the {_SUBCOMMANDS[name]} experiment")
        p.add_argument("--config", required=True, help="TOML config file")
        p.add_argument("--seed", type=int, default=None, help="seed override")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--threads", type=int, default=1,
                       help="accepted for interface parity; single experiments "
                            "run in-process")
    p = sub.add_parser("suite", help="run every config in a directory")
    p.add_argument("--config", required=True, help="directory of TOML configs")
    p.add_argument("--seed", type=int, default=None, help="seed override")
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--threads", type=int, default=1,
                   help="parallel experiment processes")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "suite":
        out = Path(args.out or "out")
        code, bundle = run_full_suite(args.config, out, threads=args.threads,
                                      seed_override=args.seed)
        n = len(bundle["experiments"])
        fails = sum(1 for e in bundle["experiments"] if e["hard_fail"])
        print(f"suite: {n} experiments, {fails} with failures -> exit {code}")
        return code

    try:
        cfg = load_config(args.config)
        expected = _SUBCOMMANDS[args.command]
        if cfg.experiment != expected:
            raise ConfigError(
                f"config declares experiment '{cfg.experiment}' but the "
                f"subcommand expects '{expected}'", key="experiment")
        if args.seed is not None:
            cfg = ExperimentConfig(
                experiment=cfg.experiment, seed=args.seed,
                output_dir=cfg.output_dir, problem=cfg.problem,
                numerics=cfg.numerics, name=cfg.name, sha256=cfg.sha256,
                raw=cfg.raw)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    out = Path(args.out or cfg.output_dir or "out")
    rep = run_experiment(cfg, out)
    rep.print_lines()
    return 1 if rep.hard_fail else 0


if __name__ == "__main__":
    sys.exit(main())
