"""Command-line interface.

Science parameters come from one structured config file per experiment;
the flags only cover operational concerns.  Exit status: 0 when every
verdict is pass or inconclusive, 1 when any verdict fails, 2 on usage or
configuration errors.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys

from .config import COMMANDS, ConfigError, parse_config
from .runner import run_experiment

log = logging.getLogger("poolsim")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="poolsim",
        description="Simulator and statistical checks for the engulfing pool model",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        p = sub.add_parser(command, help=f"run a {command} experiment")
        if command == "estimate":
            p.add_argument("name", nargs="?", default=None, help="estimator name")
        elif command == "analyze":
            p.add_argument("name", nargs="?", default=None, help="analysis name")
        p.add_argument("--config", required=True, help="YAML/JSON experiment document")
        p.add_argument(
            "--output-dir",
            default=None,
            help="artifact directory (default: $POOLSIM_OUTPUT_ROOT/<command> or ./<command>)",
        )
        p.add_argument("--workers", type=int, default=None, help="worker processes")
        p.add_argument("--log-level", default="INFO", help="logging level")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.INFO),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: cannot read config {args.config!r}: {exc}", file=sys.stderr)
        return 2
    try:
        cfg = parse_config(text, command=args.command,
                           subject=getattr(args, "name", None))
    except ConfigError as exc:
        print("configuration errors:", file=sys.stderr)
        for err in exc.errors:
            print(f"  - {err}", file=sys.stderr)
        return 2
    if args.workers is not None and args.workers < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return 2

    output_dir = args.output_dir or cfg.output_dir
    if output_dir is None:
        root = os.environ.get("POOLSIM_OUTPUT_ROOT", ".")
        output_dir = os.path.join(root, cfg.command)

    log.info("running %s -> %s", cfg.command, output_dir)
    try:
        code = run_experiment(cfg, output_dir, workers=args.workers)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    log.info("done (exit %d)", code)
    return code


if __name__ == "__main__":
    sys.exit(main())
