"""Command line entry point.

Subcommands: converge | phase | rip | tolerance | selftest.  Exit codes:
0 success, 1 runtime failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import os
import sys
import traceback

from .config import ConfigError, load_config
from .experiments import (run_convergence, run_phase_transition, run_rip_audit,
                          run_tolerance_sweep)
from .selftest import run_selftest

_RUNNERS = {
    "converge": run_convergence,
    "phase": run_phase_transition,
    "rip": run_rip_audit,
    "tolerance": run_tolerance_sweep,
}

_EXPECTED = {
    "converge": "convergence",
    "phase": "phase-transition",
    "rip": "rip-audit",
    "tolerance": "tolerance-sweep",
}


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="lowrank",
        description="Low-rank matrix recovery experiments: phase transitions, "
                    "convergence traces, regularity audits, noise sweeps.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _RUNNERS:
        p = sub.add_parser(name, help=f"run a {_EXPECTED[name]} experiment")
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config's base_seed")
        p.add_argument("--threads", type=int, default=None,
                       help="worker pool size (fallback: LOWRANK_THREADS)")
        p.add_argument("--no-timing", action="store_true",
                       help="omit wall-time columns for byte-stable output")
    sub.add_parser("selftest", help="run the built-in example checks")
    return parser


def _resolve_threads(value):
    if value is not None:
        return max(1, value)
    env = os.environ.get("LOWRANK_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"LOWRANK_THREADS={env!r} is not an integer")
    return 1


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "selftest":
        failures = run_selftest()
        if failures:
            print(f"selftest: {failures} check(s) failed")
            return 1
        print("selftest: all checks passed")
        return 0

    try:
        config = load_config(args.config)
        if config["experiment"] != _EXPECTED[args.command]:
            raise ConfigError(
                f"config.experiment is {config['experiment']!r} but the "
                f"{args.command} subcommand expects {_EXPECTED[args.command]!r}")
        if args.seed is not None:
            config["base_seed"] = args.seed
        threads = _resolve_threads(args.threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    try:
        result = _RUNNERS[args.command](config, args.out, threads=threads,
                                        no_timing=args.no_timing)
    except Exception:
        traceback.print_exc()
        return 1
    for key in ("csv", "plateau_csv", "svg"):
        if key in result:
            print(result[key])
    return 0


if __name__ == "__main__":
    sys.exit(main())
