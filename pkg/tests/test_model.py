import math

import numpy as np
import pytest

from conftest import cn, random_channels, small_cfg
from ris_rcc.channel import array_response, generate_channels, target_response
from ris_rcc.config import SceneConfig
from ris_rcc.errors import DomainError
from ris_rcc.model import (
    BeamformerSolution,
    MetricsReport,
    achievable_rate,
    active_ris_power,
    check_feasibility,
    comm_snr,
    equivalent_matrices,
    radar_sinr,
)
from ris_rcc.pdd import pdd_solve


def rand_sol(rng, ch):
    return BeamformerSolution(cn(rng, ch.K, ch.M), cn(rng, ch.K, ch.M), cn(rng, ch.N1), cn(rng, ch.N2))


# dense reference evaluations written straight from the matrix definitions

def dense_mats(ch, phi1, phi2):
    T1, T2 = np.diag(phi1), np.diag(phi2)
    B = ch.H_2r @ T2 @ ch.H_12 @ T1 + ch.H_1r @ T1
    C = ch.H_2r @ T2
    return B, C, ch.h_br + B @ ch.h_b1 + C @ ch.h_b2


def dense_snr(ch, sol, cfg):
    T1, T2 = np.diag(sol.phi1), np.diag(sol.phi2)
    h1, h2 = ch.h_1u.conj()[None, :], ch.h_2u.conj()[None, :]
    g = ch.h_bu + (h2 @ T2 @ ch.H_12 @ T1 @ ch.h_b1)[0] + (h1 @ T1 @ ch.h_b1)[0] + (h2 @ T2 @ ch.h_b2)[0]
    n1 = np.linalg.norm(h2 @ T2 @ ch.H_12 @ T1 + h1 @ T1) ** 2
    n2 = np.linalg.norm(h2 @ T2) ** 2
    return cfg.P_t * abs(g) ** 2 / (cfg.sigma1_2 * n1 + cfg.sigma2_2 * n2 + cfg.sigma0_2)


def dense_p2(ch, phi1, phi2, cfg):
    T1, T2 = np.diag(phi1), np.diag(phi2)
    M = T2 @ ch.H_12 @ T1
    return (np.linalg.norm(M @ ch.h_b1) ** 2 + np.linalg.norm(T2 @ ch.h_b2) ** 2
            + cfg.sigma1_2 * np.linalg.norm(M, "fro") ** 2 + cfg.sigma2_2 * np.linalg.norm(T2, "fro") ** 2)


def test_equivalent_matrices_special_cases(rng):
    cfg = small_cfg()
    ch = random_channels(rng, cfg)
    B, C, q = equivalent_matrices(ch, np.zeros(3, complex), np.zeros(3, complex))
    assert not B.any() and not C.any()
    np.testing.assert_array_equal(q, ch.h_br)
    phi1 = cn(rng, 3)
    B, C, _ = equivalent_matrices(ch, phi1, np.zeros(3, complex))
    np.testing.assert_allclose(B, ch.H_1r @ np.diag(phi1))
    assert not C.any()


def test_equivalent_matrices_dense(rng):
    cfg = small_cfg(N1=4, N2=5)
    for _ in range(5):
        ch = random_channels(rng, cfg)
        phi1, phi2 = cn(rng, 4), cn(rng, 5)
        for a, b in zip(equivalent_matrices(ch, phi1, phi2), dense_mats(ch, phi1, phi2)):
            np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12)


def test_radar_sinr_zero_w(rng):
    cfg = small_cfg()
    ch = random_channels(rng, cfg)
    sol = rand_sol(rng, ch)
    sol.w[0] = 0
    assert radar_sinr(ch, sol, cfg, 0) == 0.0


def test_radar_sinr_zero_d_raises(rng):
    cfg = small_cfg()
    ch = random_channels(rng, cfg)
    sol = rand_sol(rng, ch)
    sol.d[1] = 0
    with pytest.raises(DomainError):
        radar_sinr(ch, sol, cfg, 1)


def test_radar_sinr_scale_invariant(rng):
    cfg = small_cfg()
    ch = random_channels(rng, cfg)
    sol = rand_sol(rng, ch)
    for mode in ("per_target", "coherent"):
        ref = radar_sinr(ch, sol, cfg, 0, mode)
        for c in (3.0, -0.01j, 2 - 7j):
            s2 = sol.copy()
            s2.d[0] *= c
            assert radar_sinr(ch, s2, cfg, 0, mode) == pytest.approx(ref, rel=1e-10)


def test_radar_sinr_rank_one_identity():
    M, alpha, sigma2, th = 5, 0.3, 0.02, 0.4
    cfg = small_cfg(M=M, K=1, theta_k=(th,), alpha_k=(alpha,), sigma2=sigma2, P_t=0.0)
    ch = random_channels(np.random.default_rng(0), cfg)
    ch.A_k = [target_response(th, alpha, M)]
    a = array_response(th, M)
    sol = BeamformerSolution(a[None, :], a[None, :], np.zeros(cfg.N1, complex), np.zeros(cfg.N2, complex))
    assert radar_sinr(ch, sol, cfg, 0) == pytest.approx(alpha**2 * M**3 / sigma2, rel=1e-12)


def test_radar_sinr_dense(rng):
    cfg = small_cfg(K=3, theta_k=(-0.4, 0.1, 0.9), alpha_k=(1.0, 0.5, 2.0))
    ch = random_channels(rng, cfg)
    sol = rand_sol(rng, ch)
    B, C, q = dense_mats(ch, sol.phi1, sol.phi2)
    for k in range(3):
        d, w = sol.d[k], sol.w[k]
        dh = d.conj()
        num = abs(dh @ ch.A_k[k] @ w) ** 2
        per = sum(abs(dh @ ch.A_k[m] @ w) ** 2 for m in range(3) if m != k)
        coh = abs(sum(dh @ ch.A_k[m] @ w for m in range(3) if m != k)) ** 2
        rest = (cfg.P_t * abs(dh @ q) ** 2 + cfg.sigma1_2 * np.linalg.norm(dh @ B) ** 2
                + cfg.sigma2_2 * np.linalg.norm(dh @ C) ** 2 + cfg.sigma2 * np.linalg.norm(d) ** 2)
        assert radar_sinr(ch, sol, cfg, k) == pytest.approx(num / (per + rest), rel=1e-12)
        assert radar_sinr(ch, sol, cfg, k, "coherent") == pytest.approx(num / (coh + rest), rel=1e-12)


def test_comm_snr_direct_only(rng):
    cfg = small_cfg()
    ch = random_channels(rng, cfg)
    sol = rand_sol(rng, ch)
    sol.phi1[:] = 0
    sol.phi2[:] = 0
    assert comm_snr(ch, sol, cfg) == pytest.approx(cfg.P_t * abs(ch.h_bu) ** 2 / cfg.sigma0_2, rel=1e-14)
    ch.h_bu = 0j
    assert comm_snr(ch, sol, cfg) == 0.0


def test_comm_snr_dense(rng):
    cfg = small_cfg(N1=4, N2=2)
    for _ in range(5):
        ch = random_channels(rng, cfg)
        sol = rand_sol(rng, ch)
        assert comm_snr(ch, sol, cfg) == pytest.approx(dense_snr(ch, sol, cfg), rel=1e-10)


@pytest.mark.parametrize("snr,rate", [(0.0, 0.0), (1.0, 1.0), (1023.0, 10.0)])
def test_rate_examples(snr, rate):
    assert achievable_rate(snr) == pytest.approx(rate, abs=1e-14)


def test_rate_monotone_and_domain():
    xs = np.sort(np.random.default_rng(0).exponential(5.0, 200))
    rs = [achievable_rate(x) for x in xs]
    assert all(b > a for a, b in zip(rs, rs[1:]))
    with pytest.raises(DomainError):
        achievable_rate(-1e-9)


def test_ris_power_examples(rng):
    cfg = small_cfg(sigma1_2=1e-30)
    ch = random_channels(rng, cfg)
    z = np.zeros(3, complex)
    assert active_ris_power(ch, z, cn(rng, 3), cfg, 1) == 0.0
    assert active_ris_power(ch, z, z, cfg, 2) == 0.0
    ch.h_b1 = np.array([1, 0, 0], complex)
    assert active_ris_power(ch, np.ones(3, complex), z, cfg, 1) == pytest.approx(1.0, rel=1e-12)


def test_ris_power_dense(rng):
    cfg = small_cfg(N1=4, N2=5)
    for _ in range(5):
        ch = random_channels(rng, cfg)
        phi1, phi2 = cn(rng, 4), cn(rng, 5)
        ref1 = np.linalg.norm(phi1 * ch.h_b1) ** 2 + cfg.sigma1_2 * np.sum(np.abs(phi1) ** 2)
        assert active_ris_power(ch, phi1, phi2, cfg, 1) == pytest.approx(ref1, rel=1e-12)
        assert active_ris_power(ch, phi1, phi2, cfg, 2) == pytest.approx(dense_p2(ch, phi1, phi2, cfg), rel=1e-12)
    with pytest.raises(DomainError):
        active_ris_power(ch, phi1, phi2, cfg, 3)


def test_all_zero_solution_infeasible(rng):
    cfg = small_cfg()
    ch = random_channels(rng, cfg)
    rep = check_feasibility(ch, BeamformerSolution.zeros(2, 3, 3, 3), cfg)
    assert not rep.feasible
    assert rep.sinr_r == [0.0, 0.0]
    assert rep.worst_violation == pytest.approx(1.0)


@pytest.fixture(scope="module")
def solved():
    cfg = SceneConfig(M=6, N1=8, N2=8, K=3, theta_k=(-0.6, 0.0, 0.7), alpha_k=(0.1,) * 3, eta=10.0)
    ch = generate_channels(cfg, 2)
    sol, rep, _ = pdd_solve(ch, cfg)
    return cfg, ch, sol, rep


def test_converged_solution_feasible(solved):
    cfg, ch, sol, rep = solved
    assert rep.feasible
    assert check_feasibility(ch, sol, cfg).feasible


def test_overbudget_w_violation(solved):
    cfg, ch, sol, _ = solved
    s = sol.copy()
    s.w *= math.sqrt(2 * cfg.P_r / np.sum(np.abs(s.w) ** 2))
    rep = check_feasibility(ch, s, cfg)
    assert not rep.feasible
    assert rep.worst_violation == pytest.approx(1.0, rel=1e-9)


def test_metrics_report_row():
    rep = MetricsReport(rate=1.0, snr_c=1.0, sinr_r=[2.0, 3.0], p_radar=1.0, p_ris1=0.1, p_ris2=0.2,
                        feasible=True, worst_violation=0.0)
    assert rep.columns() == ["rate", "snr_c", "sinr_r_1", "sinr_r_2", "p_radar", "p_ris1", "p_ris2",
                             "feasible", "worst_violation"]
    assert rep.to_csv_row() == "1,1,2,3,1,0.1,0.2,true,0"
    assert rep.rate == pytest.approx(math.log2(1 + rep.snr_c), abs=1e-12)
