"""Command line entry point: ``pddsqueeze run|validate|ledger <config>``.

Exit codes: 0 success, 2 config error, 3 numerical invariant abort.
"""
from __future__ import annotations

import argparse
import logging
import sys

from .cavity import derive, format_ledger
from .config import load_config
from .errors import ConfigError, InvariantError
from .scenarios import check_config, run_config

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INVARIANT = 3


def _run(args):
    for path in run_config(load_config(args.config)):
        print(path)


def _validate(args):
    cfg = load_config(args.config)
    check_config(cfg)
    print(f"{args.config}: ok ({cfg.scenario})")


def _ledger(args):
    cfg = load_config(args.config)
    try:
        params = derive(cfg.lab_inputs())
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"ledger needs the lab inputs: {exc}") from exc
    print(format_ledger(params.ledger))


def build_parser():
    ap = argparse.ArgumentParser(prog="pddsqueeze", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, fn, text in (
        ("run", _run, "run a scenario and write its CSV files"),
        ("validate", _validate, "parse and check a config without running it"),
        ("ledger", _ledger, "print the approximation ledger for the lab inputs"),
    ):
        p = sub.add_parser(name, help=text)
        p.add_argument("config")
        p.set_defaults(func=fn)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantError as exc:
        print(f"numerical invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
