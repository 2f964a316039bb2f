"""Seeded Monte-Carlo sweeps over the benchmark schemes.

Each (scheme, sweep value, seed) triple is an independent work item:
regenerate channels, allocate power, solve, record one ResultRow. Items
can run on a process pool; rows always come back in spec order.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .channel import generate_channels
from .config import SceneConfig, SolverOptions, db_to_linear
from .errors import DomainError, InfeasibleBudgetError, InfeasibleScenarioError, NumericalError, UsageError
from .scenarios import SCHEMES, SchemeSpec, scheme_config, solve_scheme

log = logging.getLogger(__name__)

KINDS = ("convergence", "elements", "location", "power", "eta", "gamma")

DEFAULT_VALUES = {
    "convergence": [80],
    "elements": [40, 60, 80, 100, 120],
    "location": [10, 15, 20, 25, 30, 35, 40, 45],
    "power": [9, 10, 11, 12, 13],
    "eta": [20, 21, 22, 23, 24, 25, 26, 27, 28, 29, 30],
    "gamma": [0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9],
}

COLUMNS = ("scheme", "sweep", "seed", "rate", "feasible", "iters", "violation", "ms")

# marker written for points where the solver or the budget split failed
FAILED_VIOLATION = 1.0


@dataclass
class ExperimentSpec:
    """One sweep.

    Units of ``values`` depend on ``kind``: total elements N (convergence,
    elements), RIS-1 abscissa x in m (location), Q_total in W (power),
    eta in dB (eta), power allocation factor (gamma).
    """

    kind: str
    values: list = field(default_factory=list)
    schemes: list = field(default_factory=lambda: list(SCHEMES))
    seeds: list = field(default_factory=lambda: list(range(20)))
    base: SceneConfig = field(default_factory=SceneConfig)
    scenario: SchemeSpec = field(default_factory=SchemeSpec)
    opts: SolverOptions = field(default_factory=SolverOptions)
    out: str | None = None
    workers: int = 1
    timing: bool = True

    def __post_init__(self):
        if self.kind not in KINDS:
            raise UsageError(f"unknown experiment kind {self.kind!r}; expected one of {KINDS}")
        if not self.values:
            self.values = list(DEFAULT_VALUES[self.kind])
        bad = [s for s in self.schemes if s not in SCHEMES]
        if bad:
            raise UsageError(f"unknown schemes {bad}")
        if not self.schemes or not self.seeds:
            raise UsageError("need at least one scheme and one seed")


@dataclass
class ResultRow:
    scheme: str
    sweep: float
    seed: int
    rate: float
    feasible: bool
    iters: int
    violation: float
    ms: float

    def values(self) -> list:
        return [getattr(self, c) for c in COLUMNS]


def point_config(kind: str, value, scheme: str, spec: ExperimentSpec) -> SceneConfig:
    """Scene config for one sweep point; budgets from the unified model except for convergence runs."""
    base = spec.base
    scen = SchemeSpec(scheme, spec.scenario.Q_total, spec.scenario.gamma, spec.scenario.P_SW, spec.scenario.P_DC)
    if kind in ("convergence", "elements"):
        n = int(value)
        if n < 2:
            raise UsageError("total element count must be >= 2")
        if scheme == "single_active_1":
            base = base.with_(N1=n)
        elif scheme == "single_active_2":
            base = base.with_(N2=n)
        else:
            base = base.with_(N1=n // 2, N2=n - n // 2)
        if kind == "convergence":
            return base
    elif kind == "location":
        x = float(value)
        base = base.with_(ris1_pos=(x, 0.0), ris2_pos=(100.0 - x, 0.0))
    elif kind == "power":
        scen = SchemeSpec(scheme, float(value), scen.gamma, scen.P_SW, scen.P_DC)
    elif kind == "eta":
        base = base.with_(eta=db_to_linear(float(value)))
    elif kind == "gamma":
        scen = SchemeSpec(scheme, scen.Q_total, float(value), scen.P_SW, scen.P_DC)
    return scheme_config(scen, base)


def _failed(scheme, value, seed, ms) -> ResultRow:
    return ResultRow(scheme, float(value), int(seed), 0.0, False, 0, FAILED_VIOLATION, ms)


def run_point(kind: str, scheme: str, value, seed: int, spec: ExperimentSpec) -> list:
    """Solve one work item; convergence runs return one row per outer iteration."""
    t0 = time.perf_counter()
    try:
        cfg = point_config(kind, value, scheme, spec)
        ch = generate_channels(cfg, seed)
        _, report, trace = solve_scheme(scheme, ch, cfg, replace(spec.opts, seed=int(seed)))
    except (InfeasibleBudgetError, InfeasibleScenarioError, NumericalError, DomainError, np.linalg.LinAlgError) as exc:
        log.info("%s %s=%s seed %d failed: %s", scheme, kind, value, seed, exc)
        ms = 1e3 * (time.perf_counter() - t0) if spec.timing else 0.0
        return [_failed(scheme, value, seed, ms)]
    ms = 1e3 * (time.perf_counter() - t0) if spec.timing else 0.0
    if kind == "convergence":
        return [
            ResultRow(scheme, float(value), int(seed), r.rate, report.feasible, r.iter, r.violation,
                      r.ms if spec.timing else 0.0)
            for r in trace.rows
        ]
    return [ResultRow(scheme, float(value), int(seed), report.rate, report.feasible, len(trace.rows),
                      report.worst_violation, ms)]


def _work(args):
    return run_point(*args)


def run_experiment(spec: ExperimentSpec, progress=None) -> list:
    """Run the sweep; rows ordered by scheme, then sweep value, then seed."""
    items = [(spec.kind, sc, v, s, spec) for sc in spec.schemes for v in spec.values for s in spec.seeds]
    rows: list = []
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            results = list(pool.map(_work, items))
    else:
        results = []
        for i, it in enumerate(items):
            results.append(_work(it))
            if progress is not None:
                progress(i + 1, len(items), it)
    for r in results:
        rows.extend(r)
    return rows


def summarize(rows: list) -> dict:
    """Per (scheme, sweep): mean rate, standard error, success fraction, count."""
    groups: dict = {}
    for r in rows:
        groups.setdefault((r.scheme, r.sweep), []).append(r)
    out = {}
    for key, rs in groups.items():
        rates = np.array([r.rate for r in rs], float)
        n = len(rates)
        se = float(rates.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        out[key] = {
            "mean": float(rates.mean()),
            "stderr": se,
            "success": float(np.mean([r.feasible for r in rs])),
            "n": n,
        }
    return out


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.12g}"
    return str(v)


def _json_value(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(f"{float(v):.12g}")
    return v


def render_results(rows: list, fmt: str = "csv") -> str:
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in rows:
            w.writerow([_fmt(v) for v in r.values()])
        return buf.getvalue()
    if fmt == "json":
        data = [{c: _json_value(v) for c, v in zip(COLUMNS, r.values())} for r in rows]
        return json.dumps(data, indent=1) + "\n"
    raise UsageError(f"unknown format {fmt!r}")


def emit_results(rows: list, fmt: str, path) -> None:
    """Write rows as CSV or JSON; ``path`` of None or '-' means stdout."""
    text = render_results(rows, fmt)
    if path is None or str(path) == "-":
        import sys

        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc
