"""Command-line entry point: ``ris-rcc --experiment KIND [...]``.

Exit codes: 0 success, 1 solver or config error, 2 usage error.
"""
from __future__ import annotations

import argparse
import logging
import sys

from .bench import KINDS, ExperimentSpec, emit_results, run_experiment, summarize
from .config import SceneConfig, SolverOptions, load_config
from .errors import DomainError, UsageError
from .scenarios import SCHEMES, SchemeSpec

log = logging.getLogger("ris_rcc")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ris-rcc", description="Rate sweeps for RIS-assisted radar-communication coexistence.")
    p.add_argument("--config", help="JSON file with channel/solver/scenario sections")
    p.add_argument("--experiment", required=True, help=f"one of {', '.join(KINDS)}")
    p.add_argument("--schemes", help=f"comma-separated subset of {', '.join(SCHEMES)}")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--seeds", type=int, help="use seeds 0..N-1 (default 20)")
    g.add_argument("--seed-list", help="comma-separated seeds")
    p.add_argument("--values", help="comma-separated sweep values (kind-dependent units)")
    p.add_argument("--out", default="-", help="output path, '-' for stdout")
    p.add_argument("--format", default="csv", choices=("csv", "json"))
    p.add_argument("--workers", type=int, default=1, help="worker processes")
    p.add_argument("--no-timing", action="store_true", help="write ms=0 so reruns are byte-identical")
    p.add_argument("--summary", action="store_true", help="print per-point mean/stderr/success to stderr")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _csv_list(text, conv, what):
    try:
        return [conv(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise UsageError(f"bad {what} list {text!r}") from exc


def spec_from_args(args) -> ExperimentSpec:
    base, opts, scen = SceneConfig(), SolverOptions(), SchemeSpec()
    if args.config:
        cfg = load_config(args.config)
        base, opts, scen = cfg["channel"], cfg["solver"], cfg["scenario"]
    if args.experiment not in KINDS:
        raise UsageError(f"unknown experiment kind {args.experiment!r}; expected one of {', '.join(KINDS)}")
    schemes = _csv_list(args.schemes, str, "scheme") if args.schemes else list(SCHEMES)
    if args.seed_list:
        seeds = _csv_list(args.seed_list, int, "seed")
    else:
        n = 20 if args.seeds is None else args.seeds
        if n < 1:
            raise UsageError("--seeds must be >= 1")
        seeds = list(range(n))
    values = _csv_list(args.values, float, "sweep value") if args.values else []
    if args.workers < 1:
        raise UsageError("--workers must be >= 1")
    return ExperimentSpec(
        kind=args.experiment, values=values, schemes=schemes, seeds=seeds, base=base, scenario=scen,
        opts=opts, out=args.out, workers=args.workers, timing=not args.no_timing,
    )


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.WARNING, format="%(message)s")
    try:
        args = build_parser().parse_args(argv)
        if args.verbose:
            log.setLevel(logging.INFO)
        spec = spec_from_args(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (DomainError, OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    def progress(i, n, item):
        _, scheme, value, seed, _ = item
        print(f"[{i}/{n}] {scheme} {spec.kind}={value} seed={seed}", file=sys.stderr)

    try:
        rows = run_experiment(spec, progress=progress)
        emit_results(rows, args.format, spec.out)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - surfaced as exit code 1
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.summary:
        for (scheme, value), s in summarize(rows).items():
            print(f"{scheme:16s} {value:>8g} mean={s['mean']:.4f} se={s['stderr']:.4f} "
                  f"success={s['success']:.2f} n={s['n']}", file=sys.stderr)
    return 0
