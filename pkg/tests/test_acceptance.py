"""End-to-end acceptance checks; each test prints one PASS/FAIL line.

Sweeps go through the same harness the CLI uses. Runtime is dominated by
the feasibility sweep (50 seeds x 11 eta values x 5 schemes, ~8 min on
one core).
"""
import math
import subprocess
import sys
from pathlib import Path

import pytest

from ris_rcc.bench import ExperimentSpec, run_experiment, summarize
from ris_rcc.channel import generate_channels
from ris_rcc.config import SceneConfig, SolverOptions
from ris_rcc.pdd import pdd_solve

pytestmark = pytest.mark.acceptance

TESTS = Path(__file__).parent
SEEDS20 = list(range(20))


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {n}: {detail}")
        assert ok, detail

    return emit


def means(rows):
    return {k: (v["mean"], v["stderr"]) for k, v in summarize(rows).items()}


def gap_se(a, b):
    return math.sqrt(a[1] ** 2 + b[1] ** 2)


# -------------------------------------------------- 1 and 2: convergence runs


@pytest.fixture(scope="module")
def convergence_runs():
    cfg = SceneConfig()  # M=12, N1=N2=40, K=7, eta=20 dB, P_r=10 W, P_t=P_1=P_2=0.4 W
    runs = []
    for seed in SEEDS20:
        ch = generate_channels(cfg, seed)
        # keep iterating past the stopping rule so the tail after iteration 15 is observed
        _, rep, trace = pdd_solve(ch, cfg, SolverOptions(min_outer=30, seed=seed))
        runs.append((rep, trace))
    return runs


def test_c1_convergence_speed(convergence_runs, report):
    settled = 0
    worst = []
    for _, trace in convergence_runs:
        r = trace.rates
        if len(r) <= 15:
            change = 0.0
        else:
            change = max(abs(x - r[14]) / abs(r[14]) for x in r[14:])
        worst.append(change)
        settled += change < 0.01
    frac = settled / len(convergence_runs)
    report(1, frac >= 0.8, f"{settled}/{len(convergence_runs)} seeds change < 1% after iteration 15 "
                           f"(max change {max(worst):.2e})")


def test_c2_violation_floor(convergence_runs, report):
    conv = [(rep, t) for rep, t in convergence_runs if t.converged]
    worst = max(t.rows[-1].violation for _, t in conv) if conv else math.inf
    ok = bool(conv) and worst <= 1e-5
    report(2, ok, f"{len(conv)} converged seeds, worst final violation {worst:.2e}")


# ---------------------------------------------------------- 3: scheme ordering


def test_c3_scheme_ordering(report):
    order = ["double_active", "single_active_1", "double_passive", "no_ris"]
    rows = run_experiment(ExperimentSpec(kind="elements", values=[80], schemes=order, seeds=SEEDS20))
    m = means(rows)
    stats = [m[(s, 80.0)] for s in order]
    gaps = [(a[0] - b[0]) / gap_se(a, b) for a, b in zip(stats, stats[1:])]
    ok = all(g >= 3 for g in gaps)
    text = " > ".join(f"{s}={v[0]:.3f}" for s, v in zip(order, stats))
    report(3, ok, f"{text}; gaps in SE {', '.join(f'{g:.1f}' for g in gaps)}")


# ---------------------------------------------------------- 4: location trend


def test_c4_location(report):
    schemes = ["double_active", "single_active_1", "single_active_2"]
    rows = run_experiment(ExperimentSpec(kind="location", values=[10, 45], schemes=schemes, seeds=SEEDS20))
    m = means(rows)
    da10, da45 = m[("double_active", 10.0)][0], m[("double_active", 45.0)][0]
    rel = {s: abs(da45 - m[(s, 45.0)][0]) / da45 for s in schemes[1:]}
    ok = da10 > da45 and all(v <= 0.15 for v in rel.values())
    report(4, ok, f"DA(10)={da10:.3f} DA(45)={da45:.3f}; gap at 45 m: "
                  + ", ".join(f"{s} {100 * v:.1f}%" for s, v in rel.items()))


# -------------------------------------------------------- 5: budget monotone


def test_c5_budget_monotone(report):
    qs = [9, 10, 11, 12, 13]
    rows = run_experiment(ExperimentSpec(kind="power", values=qs, schemes=["double_active"], seeds=SEEDS20))
    m = means(rows)
    stats = [m[("double_active", float(q))] for q in qs]
    inversions = [(a[0] - b[0]) / gap_se(a, b) for a, b in zip(stats, stats[1:]) if b[0] < a[0]]
    ok = len(inversions) == 0 or (len(inversions) == 1 and inversions[0] <= 1.0)
    report(5, ok, "means " + ", ".join(f"{q}W={s[0]:.3f}" for q, s in zip(qs, stats))
                  + f"; inversions (in SE) {[round(x, 2) for x in inversions]}")


# ------------------------------------------------------ 6: feasibility decay


def test_c6_feasibility_decay(report):
    etas = list(range(20, 31))
    schemes = ["double_active", "double_passive", "single_active_1", "single_active_2", "no_ris"]
    rows = run_experiment(ExperimentSpec(kind="eta", values=etas, schemes=schemes, seeds=list(range(50))))
    succ = {k: v["success"] for k, v in summarize(rows).items()}
    mono = all(succ[(s, float(b))] <= succ[(s, float(a))] for s in schemes for a, b in zip(etas, etas[1:]))
    dom = all(succ[("double_active", float(e))] >= succ[("double_passive", float(e))] for e in etas)
    curves = "; ".join(f"{s} " + "/".join(f"{succ[(s, float(e))]:.2f}" for e in (20, 25, 30)) for s in schemes)
    report(6, mono and dom, f"success at 20/25/30 dB: {curves}")


# -------------------------------------------------------- 7 and 8: suites


def _pytest(*args):
    proc = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider", *args],
                          cwd=TESTS.parent, capture_output=True, text=True)
    tail = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr.strip()[-200:]
    return proc.returncode == 0, tail


def test_c7_oracle_equivalence(report):
    ok, tail = _pytest(str(TESTS / "test_block_oracles.py"))
    report(7, ok, f"six block updates vs convex oracle on 20 instances: {tail}")


PROPERTY_TESTS = [
    "test_pdd.py::test_fp_identity",
    "test_pdd.py::test_ccp_minorant_samples",
    "test_passive.py::test_mm_ascent",
    "test_passive.py::test_minorant_validity",
    "test_pdd.py::test_block_monotonicity",
    "test_model.py::test_radar_sinr_scale_invariant",
    "test_channel.py::test_rician_power_normalization",
    "test_pdd.py::test_w_slackness",
    "test_pdd.py::test_d_slackness",
    "test_pdd.py::test_u_inactive_closed_form_and_slackness",
    "test_pdd.py::test_rest_closed_forms_and_slackness",
    "test_pdd.py::test_theta2_slackness",
    "test_linalg.py::test_budget_slackness_and_oracle",
    "test_scenarios.py::test_budget_conservation",
    "test_channel.py::test_generate_channels_reproducible",
    "test_pdd.py::test_solver_deterministic",
    "test_bench.py::test_rows_ordered_and_deterministic",
    "test_bench.py::test_cli_csv_byte_identical",
]


def test_c8_property_suites(report):
    ok, tail = _pytest(*[str(TESTS / t) for t in PROPERTY_TESTS])
    report(8, ok, f"property suites: {tail}")
