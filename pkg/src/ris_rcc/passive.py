"""Double passive-RIS benchmark: PDD skeleton with MM phase updates.

Passive surfaces add no thermal noise and have no power budget; their
coefficients are pure phases. With the user SNR folded in (x eliminated),
each phase block maximizes

    phi^H Xi phi - 2 Re(phi^H s)   s.t. |phi_n| = 1,

which MM handles through the minorant built from lambda_min(Xi):
phi <- exp(j angle((Xi - lambda_min I) phi - s)).
"""
from __future__ import annotations

import math

import numpy as np

from .channel import ChannelSet
from .config import SceneConfig, SolverOptions
from .linalg import QuadraticSubproblem
from .pdd import PddState, fp_optimal_x, run_pdd, theta1_subproblem, theta2_subproblem

PassiveState = PddState


def mm_objective(Xi: np.ndarray, s: np.ndarray, phi: np.ndarray) -> float:
    return float(np.vdot(phi, Xi @ phi).real - 2.0 * np.vdot(phi, s).real)


def mm_minorant(Xi: np.ndarray, phi: np.ndarray, phi_t: np.ndarray, lam_min: float | None = None) -> float:
    """Lower bound of phi^H Xi phi tight at phi_t (unit-modulus phi)."""
    if lam_min is None:
        lam_min = float(np.linalg.eigvalsh(0.5 * (Xi + Xi.conj().T))[0])
    n = phi.shape[0]
    shifted = Xi - lam_min * np.eye(n)
    return float(2.0 * np.vdot(phi, shifted @ phi_t).real - np.vdot(phi_t, shifted @ phi_t).real + lam_min * n)


def mm_unit_modulus(Xi, s, phi0, max_iter: int = 200, tol: float = 1e-6):
    """Run MM from phi0; returns (phi, objective history)."""
    Xi = 0.5 * (np.asarray(Xi, complex) + np.asarray(Xi, complex).conj().T)
    s = np.asarray(s, complex)
    lam_min = float(np.linalg.eigvalsh(Xi)[0])
    shifted = Xi - lam_min * np.eye(Xi.shape[0])
    phi = np.exp(1j * np.angle(phi0))
    hist = [mm_objective(Xi, s, phi)]
    for _ in range(max_iter):
        v = shifted @ phi - s
        # a zero entry leaves the surrogate flat in that coordinate; keep its phase
        nz = np.abs(v) > 0
        phi = phi.copy()
        phi[nz] = np.exp(1j * np.angle(v[nz]))
        hist.append(mm_objective(Xi, s, phi))
        if abs(hist[-1] - hist[-2]) <= tol * max(abs(hist[-2]), 1e-300):
            break
    return phi, hist


def _fp_row(ch: ChannelSet, state: PddState, which: int):
    """Composite user gain as a * phi + c in the chosen phase vector."""
    phi1, phi2 = state.sol.phi1, state.sol.phi2
    r2 = ch.h_2u.conj() * phi2
    if which == 1:
        a = (r2 @ ch.H_12 + ch.h_1u.conj()) * ch.h_b1
        c = ch.h_bu + r2 @ ch.h_b2
    else:
        relay = (ch.H_12 * phi1[None, :]) @ ch.h_b1 + ch.h_b2
        a = ch.h_2u.conj() * relay
        c = ch.h_bu + ch.h_1u.conj() @ (phi1 * ch.h_b1)
    return a, c


def passive_phase_problem(state: PddState, ch: ChannelSet, cfg: SceneConfig, which: int):
    """(Xi, s) of the MM maximization for phase vector ``which`` (1 or 2).

    The objective is minus the x-minimized augmented Lagrangian, up to a
    constant: (P_t/s0) |a phi + c|^2 minus the leakage penalties.
    """
    x_saved = state.x
    state.x = 0.0
    try:
        sub = theta1_subproblem(state, ch, cfg) if which == 1 else theta2_subproblem(state, ch, cfg)
    finally:
        state.x = x_saved
    a, c = _fp_row(ch, state, which)
    fp = QuadraticSubproblem.empty(a.shape[0])
    fp.add_norm(a[None, :], c, cfg.P_t / cfg.sigma0_2)
    Xi = fp.H - sub.H
    s = fp.b - sub.b
    return 0.5 * (Xi + Xi.conj().T), s


def _mm_update(state, ch, cfg, which, opts):
    opts = opts or SolverOptions()
    Xi, s = passive_phase_problem(state, ch, cfg, which)
    phi0 = state.sol.phi1 if which == 1 else state.sol.phi2
    phi, _ = mm_unit_modulus(Xi, s, phi0, opts.mm_iters, opts.mm_tol)
    return phi


def mm_update_phi1(state: PddState, ch: ChannelSet, cfg: SceneConfig, opts: SolverOptions | None = None):
    return _mm_update(state, ch, cfg, 1, opts)


def mm_update_phi2(state: PddState, ch: ChannelSet, cfg: SceneConfig, opts: SolverOptions | None = None):
    return _mm_update(state, ch, cfg, 2, opts)


def _phase_updates(ch, cfg, opts):
    def run(state, use1, use2, report):
        for which, used in ((1, use1), (2, use2)):
            if not used:
                continue
            phi = _mm_update(state, ch, cfg, which, opts)
            if which == 1:
                state.sol.phi1 = phi
            else:
                state.sol.phi2 = phi
            state.x = fp_optimal_x(ch, state.sol.phi1, state.sol.phi2, cfg, amplified_noise=False)
            report(f"phi{which}")

    return run


def passive_solve(ch: ChannelSet, cfg: SceneConfig, opts: SolverOptions | None = None, on_block=None):
    """Solve the double passive-RIS problem; returns (solution, metrics, trace)."""
    opts = opts or SolverOptions()
    state, report, trace = run_pdd(
        ch, cfg, opts, passive=True, phase_updates=_phase_updates(ch, cfg, opts), on_block=on_block
    )
    return state.sol, report, trace


def passive_rate_bound(ch: ChannelSet, cfg: SceneConfig) -> float:
    """Rate with every path co-phased ignoring the radar (triangle-inequality bound)."""
    gain = abs(ch.h_bu) + np.sum(np.abs(ch.h_1u * ch.h_b1)) + np.sum(np.abs(ch.h_2u * ch.h_b2)) + float(
        np.abs(ch.h_2u) @ np.abs(ch.H_12) @ np.abs(ch.h_b1)
    )
    return math.log2(1.0 + cfg.P_t * gain ** 2 / cfg.sigma0_2)
