"""Command line front end: `ris-see run` and `ris-see summarize`.

Exit codes: 0 success, 2 configuration error, 3 I/O error. Log verbosity
comes from the RIS_SEE_LOG environment variable (DEBUG/INFO/WARNING/...).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from importlib import resources

from .experiments import (SUMMARY_FIELDS, ConfigError, load_config,
                          read_csv_rows, run_campaign, summarize, write_csv)

log = logging.getLogger("ris_see")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3


def _setup_logging():
    level = os.environ.get("RIS_SEE_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _profile_path(name: str):
    return resources.files("ris_see").joinpath(f"profiles/{name}.toml")


def _cmd_run(args) -> int:
    if (args.config is None) == (args.profile is None):
        print("run: exactly one of --config or --profile is required",
              file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.config is not None:
            config = load_config(args.config)
        else:
            with resources.as_file(_profile_path(args.profile)) as path:
                config = load_config(str(path))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO

    rows = run_campaign(config, workers=args.threads)
    out = args.output or config.output_path
    try:
        write_csv(rows, out)
    except OSError as exc:
        print(f"cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO
    log.info("wrote %d rows to %s", len(rows), out)
    return EXIT_OK


def _cmd_summarize(args) -> int:
    try:
        rows = read_csv_rows(args.input)
    except OSError as exc:
        print(f"cannot read input: {exc}", file=sys.stderr)
        return EXIT_IO
    except (KeyError, ValueError) as exc:
        print(f"malformed campaign CSV: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        summary = summarize(rows)
        write_csv(summary, args.output, fields=SUMMARY_FIELDS)
    except ValueError as exc:
        print(f"summarize failed: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ris-see",
        description="RIS-aided uplink secrecy-energy-efficiency campaigns")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a sweep campaign and write a CSV")
    run_p.add_argument("--config", help="TOML campaign config path")
    run_p.add_argument("--profile", choices=("desk", "paper"),
                       help="built-in config profile")
    run_p.add_argument("--output", help="override the config's output_path")
    run_p.add_argument("--threads", type=int, default=1,
                       help="parallel worker processes (default 1)")
    run_p.set_defaults(func=_cmd_run)

    sum_p = sub.add_parser("summarize",
                           help="aggregate a campaign CSV into means and CIs")
    sum_p.add_argument("--input", required=True, help="campaign CSV path")
    sum_p.add_argument("--output", required=True, help="summary CSV path")
    sum_p.set_defaults(func=_cmd_summarize)
    return parser


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
