"""Command-line front end.

Exit codes: 0 success, 2 usage error, 3 numerical/solver failure.
"""

from __future__ import annotations

import argparse
import sys

from .harness import (
    SCENARIOS,
    ExperimentConfig,
    load_config_file,
    parse_config_value,
    run_scenario,
)
from .ratedist import SolverError

AD_HOC = ("rate", "distortion", "optimal-interval", "capacity", "lloyd-sim")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=None, help="master RNG seed")
    parser.add_argument("--trials", type=int, default=None, help="Monte Carlo trials")
    parser.add_argument("--out", default=None, help="output CSV path (default stdout)")
    parser.add_argument("--config", default=None, help="key=value config file")
    parser.add_argument("--workers", type=int, default=None, help="worker processes")
    parser.add_argument(
        "--set", action="append", default=[], metavar="KEY=VALUE",
        help="override any config key (repeatable)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="diffcsi",
        description="Differential CSI feedback analysis and simulation for "
                    "time-correlated MIMO Rayleigh block-fading channels.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in AD_HOC:
        p = sub.add_parser(name, help=f"run the '{name}' scenario")
        _add_common(p)
    rep = sub.add_parser("reproduce", help="reproduce a figure scenario")
    rep.add_argument("figure", choices=("fig2", "fig3", "fig4", "fig5"))
    _add_common(rep)
    return parser


def _resolve_config(args: argparse.Namespace, scenario: str) -> ExperimentConfig:
    values = {}
    if args.config:
        values.update(load_config_file(args.config))
    for item in args.set:
        if "=" not in item:
            raise KeyError(f"--set expects KEY=VALUE, got {item!r}")
        key, _, raw = item.partition("=")
        values[key.strip()] = parse_config_value(key.strip(), raw.strip())
    for flag in ("seed", "trials", "workers"):
        if getattr(args, flag) is not None:
            values[flag] = getattr(args, flag)
    values["scenario"] = scenario
    return ExperimentConfig(**values)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    scenario = args.figure if args.command == "reproduce" else args.command
    try:
        cfg = _resolve_config(args, scenario)
    except (KeyError, ValueError, TypeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        csv_text = run_scenario(cfg)
    except (SolverError, FloatingPointError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(csv_text)
    else:
        sys.stdout.write(csv_text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
