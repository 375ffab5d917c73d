"""Command-line interface.

    mbchain <subcommand> [--config PATH] [--seed U64] [--out DIR]
                         [--threads INT] [--override KEY=VALUE ...]

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 oracle validation failure.
"""

from __future__ import annotations

import argparse
import sys

from .commands import COMMANDS, DEFAULTS
from .config import resolve_parameters
from .errors import (
    ConfigError,
    DomainError,
    InsufficientDataError,
    NoConvergenceError,
    NonFiniteError,
    TruncationLeakError,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_ORACLE = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mbchain",
        description="Monitored boson chains: deterministic trajectory dynamics, "
                    "stochastic ensembles, steady states, and entanglement scaling.",
    )
    sub = parser.add_subparsers(dest="subcommand", metavar="SUBCOMMAND")
    for name in COMMANDS:
        cmd = sub.add_parser(name, help=f"run the {name} experiment")
        cmd.add_argument("--config", metavar="PATH", default=None,
                         help="YAML/JSON parameter file (a manifest.json replays a run)")
        cmd.add_argument("--seed", metavar="U64", type=int, default=None,
                         help="override the master RNG seed")
        cmd.add_argument("--out", metavar="DIR", default=None,
                         help=f"output directory (default runs/{name})")
        cmd.add_argument("--threads", metavar="INT", type=int, default=1,
                         help="worker threads for scan grids")
        cmd.add_argument("--override", metavar="KEY=VALUE", action="append",
                         default=[], help="override one parameter (repeatable)")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.subcommand:
        parser.print_help()
        return EXIT_CONFIG

    try:
        params = resolve_parameters(
            DEFAULTS[args.subcommand], args.config, args.override
        )
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError(f"seed must be a non-negative integer, got {args.seed}")
            params["master_seed"] = args.seed
        if args.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {args.threads}")
        out_dir = args.out if args.out else f"runs/{args.subcommand}"
        result = COMMANDS[args.subcommand](params, out_dir, args.threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NonFiniteError, NoConvergenceError, DomainError, InsufficientDataError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except TruncationLeakError as exc:
        print(f"oracle failure: {exc}", file=sys.stderr)
        return EXIT_ORACLE

    if args.subcommand == "oracle":
        for check in result["checks"]:
            mark = "pass" if check["passed"] else "FAIL"
            print(f"[{mark}] {check['name']}: value={check['value']} "
                  f"threshold={check['threshold']} {check['detail']}")
        if not result["all_passed"]:
            print("oracle failure: one or more validation checks failed",
                  file=sys.stderr)
            return EXIT_ORACLE

    print(f"wrote {', '.join(result['outputs'])} to {out_dir}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
