"""``bandspec <kind> --config FILE`` command line entry point.

Exit codes: 0 success, 2 configuration error, 3 numerical non-convergence
(or an invariant violation), 4 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import ConfigError, ConvergenceError, InvariantError
from .harness import KINDS, ExperimentConfig, emit, run

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bandspec", description="Spectra of random band matrices against their limiting laws.")
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind in KINDS:
        p = sub.add_parser(kind, help=f"run a {kind} experiment")
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--out", help="output path (default: config 'output' or stdout)")
        p.add_argument("--format", choices=("csv", "json"), help="output format (default: config 'format' or csv)")
        p.add_argument("--workers", type=int, help="worker processes (default: $BANDSPEC_WORKERS or 1)")
        p.add_argument("--seed", type=int, help="override the master seed")
        p.add_argument("--allow-large", action="store_true", help="lift the n and replica caps")
    return parser


def _load(args) -> ExperimentConfig:
    try:
        with open(args.config, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{args.config}: not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{args.config}: config must be a JSON object")
    if data.setdefault("kind", args.kind) != args.kind:
        raise ConfigError(f"config kind {data['kind']!r} does not match subcommand {args.kind!r}")
    if args.seed is not None:
        data["seed"] = args.seed
    if args.allow_large:
        data["allow_large"] = True
    return ExperimentConfig.from_dict(data)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _load(args)
        result = run(config, workers=args.workers)
        emit(result, args.out or config.output, args.format or config.format)
    except ConfigError as exc:
        print(f"bandspec: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConvergenceError, InvariantError) as exc:
        print(f"bandspec: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"bandspec: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
