"""Command-line entry point: ``circuitdesign <kind> --config cfg.json``.

Flags given on the command line override the corresponding config keys.
Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import DomainError
from .experiments import KINDS, ConfigError, ExperimentConfig, ExperimentFailed, run_experiment

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="circuitdesign",
                                     description="Design transcriptional circuits by simulation-based search.")
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind in KINDS:
        sp = sub.add_parser(kind)
        sp.add_argument("--config", help="JSON experiment configuration")
        sp.add_argument("--out", help="output directory (overrides 'output')")
        sp.add_argument("--seed", type=int, help="single seed (overrides 'seeds')")
        sp.add_argument("--workers", type=int, help="worker threads (overrides 'workers')")
        sp.add_argument("--quiet", action="store_true", help="suppress progress lines")
    return parser


def load_config(args) -> ExperimentConfig:
    if args.config:
        cfg = ExperimentConfig.load(args.config, kind=args.kind)
    else:
        cfg = ExperimentConfig.from_dict({}, kind=args.kind) if args.seed is None \
            else ExperimentConfig.from_dict({"seeds": [args.seed]}, kind=args.kind)
    data = cfg.to_dict()
    if args.out is not None:
        data["output"] = args.out
    if args.seed is not None:
        data["seeds"] = [args.seed]
    if args.workers is not None:
        data["workers"] = args.workers
    return ExperimentConfig.from_dict(data, source="command line", kind=args.kind)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    log = (lambda *_: None) if args.quiet else (lambda msg: print(msg, file=sys.stderr))
    try:
        cfg = load_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        files = run_experiment(cfg, log)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ExperimentFailed as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        print(json.dumps(exc.partial, sort_keys=True, default=str), file=sys.stderr)
        return EXIT_NUMERIC
    except DomainError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for f in files:
        print(f)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
