"""Command line entry point: ``envecho run`` and ``envecho sweep``.

Exit codes: 0 success, 1 config error, 2 numerical-invariant violation,
3 I/O error.
"""
from __future__ import annotations

import argparse
import dataclasses
import sys

from .config import load_config
from .errors import (
    ConfigError,
    DimensionError,
    IntegratorAccuracyError,
    InvariantViolation,
    NotHermitianError,
    TruncationError,
)
from .harness import run_experiment, run_sweep, write_records

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT, EXIT_IO = 0, 1, 2, 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="envecho", description="Decoherence as environmental Loschmidt echo.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (("run", "run one experiment and write a CSV"),
                        ("sweep", "repeat an experiment over values of one parameter")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, help="experiment config file")
        p.add_argument("--out", help="output CSV (run) or directory (sweep); overrides output_path")
        p.add_argument("--seed", type=int, help="RNG seed, overrides the config")
        p.add_argument("--quiet", action="store_true", help="suppress the summary line")
        if name == "sweep":
            p.add_argument("--axis", required=True, help="parameter name, or name[i] for a list entry")
            p.add_argument("--values", required=True, help="comma-separated values")
    return parser


def _err(msg: str) -> None:
    print(f"envecho: {msg}", file=sys.stderr)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            if args.seed < 0 or args.seed >= 2 ** 64:
                raise ConfigError("--seed must be an unsigned 64-bit integer")
            cfg = dataclasses.replace(cfg, seed=args.seed)
        out = args.out or cfg.output_path
        if out is None:
            raise ConfigError(f"{cfg.source}: no output path (set output_path or pass --out)")
        if args.command == "run":
            return _run(cfg, out, args.quiet)
        values = [v for v in args.values.split(",") if v.strip()]
        return _sweep(cfg, args.axis, values, out, args.quiet)
    except (ConfigError, DimensionError) as exc:
        _err(str(exc))
        return EXIT_CONFIG
    except (InvariantViolation, IntegratorAccuracyError, TruncationError, NotHermitianError) as exc:
        _err(f"numerical invariant violated: {exc}")
        return EXIT_INVARIANT
    except OSError as exc:
        _err(f"I/O error: {exc}")
        return EXIT_IO


def _report(result, quiet, prefix=""):
    if not quiet:
        print(prefix + result.summary())
    problems = result.violations()
    for p in problems:
        _err(prefix + p)
    return problems


def _run(cfg, out, quiet) -> int:
    result = run_experiment(cfg)
    write_records(out, result)
    return EXIT_INVARIANT if _report(result, quiet) else EXIT_OK


def _sweep(cfg, axis, values, out, quiet) -> int:
    failed = False
    for raw, result, _ in run_sweep(cfg, axis, values, out):
        failed |= bool(_report(result, quiet, prefix=f"{axis}={raw.strip()} "))
    return EXIT_INVARIANT if failed else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
