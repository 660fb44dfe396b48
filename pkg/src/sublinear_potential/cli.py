"""Command-line entry point.

Exit status: 0 when every enabled check passes, 1 on a failed check, 2 for
an invalid config, 3 for a numerical failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .experiments import (
    EXIT_CONFIG,
    EXIT_NUMERICAL,
    ConfigError,
    NumericalFailure,
    load_config,
    run_experiment,
)

OUT_ENV = "SUBLINEAR_POTENTIAL_OUT"
KINDS = ("solve", "kato", "threshold", "verify", "green-test")


def _seed(text):
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="sublinear-potential",
        description="Discrete Green potentials and sublinear elliptic experiments.",
    )
    sub = p.add_subparsers(dest="kind", required=True)
    for kind in KINDS:
        s = sub.add_parser(kind, help=f"run a {kind} experiment")
        s.add_argument("--config", required=True, help="JSON experiment config")
        s.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./out)")
        s.add_argument("--seed", type=_seed, help="random seed (overrides the config)")
        s.add_argument("--levels", type=_positive, help="refinement levels (overrides the config)")
        s.add_argument("--jobs", type=_positive, help="worker threads (overrides the config)")
        if kind == "verify":
            s.add_argument("--manifest", help="re-check the hashes listed in this manifest")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, kind=args.kind, seed=args.seed, levels=args.levels, jobs=args.jobs)
        out = args.out or cfg.out_dir or os.environ.get(OUT_ENV) or "out"
        result = run_experiment(
            cfg,
            out_dir=out,
            base_dir=Path(args.config).resolve().parent,
            manifest=getattr(args, "manifest", None),
        )
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    for msg in result.failures:
        print(f"FAILED {msg}", file=sys.stderr)
    print(f"{result.kind}: {result.report['status']} ({len(result.files)} files in {out})")
    return result.status


if __name__ == "__main__":
    sys.exit(main())
