"""Penalty dual decomposition solver for the double active-RIS problem.

Variables per direction k: transmit/receive beamformers w_k, d_k, and the
auxiliaries u_k (echo), v_k (BS leakage), y_k (cross-direction leakage),
e_k, t_k (RIS-noise leakage). The equalities

    u_k = d_k^H A_k w_k          v_k = d_k^H q
    y_k = d_k^H S_k w_k          e_k^H = d_k^H B       t_k^H = d_k^H C

(S_k = sum_{m != k} A_m) are moved into an augmented Lagrangian with
penalty 1/(2 rho) and scaled duals. The radar requirement becomes

    eta (|y|^2 + P_t |v|^2 + s1 ||e||^2 + s2 ||t||^2 + s ||d||^2) <= |u|^2,

whose right side is linearized at an anchor (CCP). The inner loop runs
exact block coordinate descent; the outer loop updates the duals when the
equality violation is small and shrinks rho otherwise.
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .channel import ChannelSet, array_response
from .config import SceneConfig, SolverOptions
from .errors import DomainError, InfeasibleBlockError, InfeasibleScenarioError, NumericalError
from .linalg import QuadraticSubproblem, minimize_with_budget, minimize_with_two_budgets
from .model import (
    BeamformerSolution,
    MetricsReport,
    achievable_rate,
    active_ris_power,
    check_feasibility,
    comm_noise,
    comm_snr,
    composite_gain,
    equivalent_matrices,
    interference_matrix,
)

log = logging.getLogger(__name__)


@dataclass
class PddState:
    sol: BeamformerSolution
    x: complex
    u: np.ndarray
    v: np.ndarray
    y: np.ndarray
    e: np.ndarray
    t: np.ndarray
    lam1: np.ndarray
    lam2: np.ndarray
    lam3: np.ndarray
    lamE: np.ndarray
    lamT: np.ndarray
    rho: float
    u_anchor: np.ndarray
    passive: bool = False

    def copy(self) -> "PddState":
        return PddState(
            self.sol.copy(), self.x, self.u.copy(), self.v.copy(), self.y.copy(), self.e.copy(),
            self.t.copy(), self.lam1.copy(), self.lam2.copy(), self.lam3.copy(), self.lamE.copy(),
            self.lamT.copy(), self.rho, self.u_anchor.copy(), self.passive,
        )


@dataclass
class TraceRow:
    iter: int
    al_obj: float
    rate: float
    violation: float
    rho: float
    ms: float


@dataclass
class SolveTrace:
    rows: list = field(default_factory=list)
    converged: bool = False
    inner_passes: int = 0
    repaired: int = 0
    skipped_blocks: int = 0

    HEADER = "iter,al_obj,rate,violation,rho,ms"

    def to_csv(self) -> str:
        lines = [self.HEADER]
        for r in self.rows:
            lines.append(f"{r.iter},{r.al_obj:.12g},{r.rate:.12g},{r.violation:.12g},{r.rho:.12g},{r.ms:.12g}")
        return "\n".join(lines) + "\n"

    @property
    def rates(self) -> list:
        return [r.rate for r in self.rows]

    @property
    def violations(self) -> list:
        return [r.violation for r in self.rows]


# ---------------------------------------------------------------- FP surrogate

def fp_surrogate(ch: ChannelSet, phi1, phi2, x: complex, cfg: SceneConfig, amplified_noise: bool = True) -> float:
    """|x|^2 * noise - 2 Re(x^* sqrt(P_t) g); its minimum over x is -SNR."""
    noise = comm_noise(ch, phi1, phi2, cfg, amplified_noise)
    g = composite_gain(ch, phi1, phi2)
    return float(abs(x) ** 2 * noise - 2.0 * (np.conj(x) * math.sqrt(cfg.P_t) * g).real)


def fp_optimal_x(ch: ChannelSet, phi1, phi2, cfg: SceneConfig, amplified_noise: bool = True) -> complex:
    return complex(math.sqrt(cfg.P_t) * composite_gain(ch, phi1, phi2) / comm_noise(ch, phi1, phi2, cfg, amplified_noise))


def ccp_linearize(u, u_anchor):
    """First-order minorant of |u|^2 at the anchor: 2 Re(conj(anchor) u) - |anchor|^2."""
    return 2.0 * np.real(np.conj(u_anchor) * u) - np.abs(u_anchor) ** 2


# ------------------------------------------------------------------ residuals

def residuals(state: PddState, ch: ChannelSet):
    """Equality residuals (r1, r2, r3, rE, rT) of the five auxiliary families."""
    sol = state.sol
    B, C, q = equivalent_matrices(ch, sol.phi1, sol.phi2)
    K = ch.K
    dh = sol.d.conj()
    r1 = np.empty(K, complex)
    r3 = np.empty(K, complex)
    for k in range(K):
        r1[k] = state.u[k] - dh[k] @ ch.A_k[k] @ sol.w[k]
        r3[k] = state.y[k] - dh[k] @ interference_matrix(ch, k) @ sol.w[k]
    r2 = state.v - dh @ q
    if state.passive:
        rE = np.zeros((K, 0), complex)
        rT = np.zeros((K, 0), complex)
    else:
        rE = state.e.conj() - dh @ B
        rT = state.t.conj() - dh @ C
    return r1, r2, r3, rE, rT


def constraint_violation(state: PddState, ch: ChannelSet) -> float:
    r1, r2, r3, rE, rT = residuals(state, ch)
    parts = [np.abs(r1), np.abs(r2), np.abs(r3)]
    if rE.shape[1]:
        parts.append(np.linalg.norm(rE, axis=1))
    if rT.shape[1]:
        parts.append(np.linalg.norm(rT, axis=1))
    return float(max(p.max(initial=0.0) for p in parts))


def penalty_terms(state: PddState, ch: ChannelSet) -> np.ndarray:
    """Per-family sums of |residual + rho*lambda|^2 (before the 1/(2 rho) weight)."""
    r1, r2, r3, rE, rT = residuals(state, ch)
    rho = state.rho
    out = [
        np.sum(np.abs(r1 + rho * state.lam1) ** 2),
        np.sum(np.abs(r2 + rho * state.lam2) ** 2),
        np.sum(np.abs(r3 + rho * state.lam3) ** 2),
        0.0,
        0.0,
    ]
    if not state.passive:
        out[3] = np.sum(np.abs(rE + rho * state.lamE) ** 2)
        out[4] = np.sum(np.abs(rT + rho * state.lamT) ** 2)
    return np.array(out, float)


def al_objective(state: PddState, ch: ChannelSet, cfg: SceneConfig) -> float:
    """FP surrogate plus the five scaled-residual penalties."""
    if state.rho <= 0:
        raise DomainError("penalty parameter must be positive")
    sol = state.sol
    f = fp_surrogate(ch, sol.phi1, sol.phi2, state.x, cfg, amplified_noise=not state.passive)
    return float(f + penalty_terms(state, ch).sum() / (2.0 * state.rho))


def radar_load(state: PddState, cfg: SceneConfig, k: int, skip: str = "") -> float:
    """eta-weighted interference+noise of constraint (CCP form), optionally omitting one term."""
    terms = {
        "y": abs(state.y[k]) ** 2,
        "v": cfg.P_t * abs(state.v[k]) ** 2,
        "d": cfg.sigma2 * float(np.vdot(state.sol.d[k], state.sol.d[k]).real),
    }
    if not state.passive:
        terms["e"] = cfg.sigma1_2 * float(np.vdot(state.e[k], state.e[k]).real)
        terms["t"] = cfg.sigma2_2 * float(np.vdot(state.t[k], state.t[k]).real)
    return cfg.eta * sum(v for name, v in terms.items() if name != skip)


def ccp_constraint_value(state: PddState, cfg: SceneConfig, k: int) -> float:
    """eta*F_k - g_hat(anchor, u_k); feasible when <= 0."""
    return radar_load(state, cfg, k) - float(ccp_linearize(state.u[k], state.u_anchor[k]))


# --------------------------------------------------------------- block updates

def w_subproblem(state: PddState, ch: ChannelSet) -> QuadraticSubproblem:
    K, M = state.sol.w.shape
    sub = QuadraticSubproblem.empty(K * M)
    wt = 1.0 / (2.0 * state.rho)
    for k in range(K):
        blk = QuadraticSubproblem.empty(M)
        dh = state.sol.d[k].conj()
        blk.add_norm(-(dh @ ch.A_k[k]), state.u[k] + state.rho * state.lam1[k], wt)
        blk.add_norm(-(dh @ interference_matrix(ch, k)), state.y[k] + state.rho * state.lam3[k], wt)
        sl = slice(k * M, (k + 1) * M)
        sub.H[sl, sl] = blk.H
        sub.b[sl] = blk.b
        sub.const += blk.const
    return sub


def update_w(state: PddState, ch: ChannelSet, cfg: SceneConfig, max_iter: int = 200):
    """Transmit beamformers under the radar budget; returns (w as K x M, mu)."""
    sub = w_subproblem(state, ch)
    K, M = state.sol.w.shape
    w, mu = minimize_with_budget(sub.H, sub.b, None, cfg.P_r, max_iter)
    return w.reshape(K, M), mu


def d_budget(state: PddState, cfg: SceneConfig, k: int) -> float:
    """Largest ||d_k||^2 allowed by the linearized radar constraint."""
    g = float(ccp_linearize(state.u[k], state.u_anchor[k]))
    return (g - radar_load(state, cfg, k, skip="d")) / (cfg.eta * cfg.sigma2)


def d_subproblem(state: PddState, ch: ChannelSet, k: int, mats=None) -> QuadraticSubproblem:
    sol, rho = state.sol, state.rho
    B, C, q = mats if mats is not None else equivalent_matrices(ch, sol.phi1, sol.phi2)
    M = ch.M
    wt = 1.0 / (2.0 * rho)
    sub = QuadraticSubproblem.empty(M)
    # |c - d^H a|^2 = |conj(c) - a^H d|^2
    Aw = ch.A_k[k] @ sol.w[k]
    Sw = interference_matrix(ch, k) @ sol.w[k]
    sub.add_norm(-Aw.conj(), np.conj(state.u[k] + rho * state.lam1[k]), wt)
    sub.add_norm(-q.conj(), np.conj(state.v[k] + rho * state.lam2[k]), wt)
    sub.add_norm(-Sw.conj(), np.conj(state.y[k] + rho * state.lam3[k]), wt)
    if not state.passive:
        sub.add_norm(-B.conj().T, (state.e[k].conj() + rho * state.lamE[k]).conj(), wt)
        sub.add_norm(-C.conj().T, (state.t[k].conj() + rho * state.lamT[k]).conj(), wt)
    return sub


def update_d(state: PddState, ch: ChannelSet, cfg: SceneConfig, k: int, mats=None, max_iter: int = 200):
    """Receive beamformer of direction k; returns (d_k, delta_k)."""
    m = d_budget(state, cfg, k)
    if m < 0:
        raise InfeasibleBlockError(f"d_{k}: radar constraint leaves no room (m={m:.3e})")
    sub = d_subproblem(state, ch, k, mats)
    return minimize_with_budget(sub.H, sub.b, None, m, max_iter)


def update_aux_u(state: PddState, ch: ChannelSet, cfg: SceneConfig, k: int):
    """Echo auxiliary u_k; returns (u_k, mu_k).

    The linearized constraint is a half-plane in u_k, so the optimal
    multiplier has the closed form of a projection.
    """
    sol = state.sol
    a = sol.d[k].conj() @ ch.A_k[k] @ sol.w[k] - state.rho * state.lam1[k]
    u0 = state.u_anchor[k]
    need = 0.5 * (radar_load(state, cfg, k) + abs(u0) ** 2)
    if abs(u0) == 0.0:
        if need > 0.0:
            raise InfeasibleBlockError(f"u_{k}: zero anchor cannot satisfy the radar constraint")
        return complex(a), 0.0
    mu = max(0.0, (need - float((np.conj(u0) * a).real)) / abs(u0) ** 2)
    return complex(a + mu * u0), mu


def _ball(a, room: float, weight: float, name: str):
    """Project a onto {weight*||x||^2 <= room}; returns (x, multiplier)."""
    if weight <= 0.0:
        return a, 0.0
    if room < 0.0:
        raise InfeasibleBlockError(f"{name}: radar constraint leaves no room")
    n2 = float(np.vdot(a, a).real) if np.ndim(a) else abs(a) ** 2
    cap = room / weight
    if n2 <= cap:
        return a, 0.0
    r = math.sqrt(cap)
    scale = r / math.sqrt(n2)
    return a * scale, (1.0 / scale - 1.0) / weight


def update_aux_rest(state: PddState, ch: ChannelSet, cfg: SceneConfig, k: int, mats=None):
    """Sequentially update v_k, y_k, e_k, t_k in place; returns their multipliers.

    Each is the unconstrained residual fit shrunk radially onto the room the
    linearized radar constraint leaves for it.
    """
    sol, rho = state.sol, state.rho
    B, C, q = mats if mats is not None else equivalent_matrices(ch, sol.phi1, sol.phi2)
    dh = sol.d[k].conj()
    g = float(ccp_linearize(state.u[k], state.u_anchor[k]))
    mults = {}

    a = dh @ q - rho * state.lam2[k]
    state.v[k], mults["v"] = _ball(a, g - radar_load(state, cfg, k, "v"), cfg.eta * cfg.P_t, f"v_{k}")
    a = dh @ interference_matrix(ch, k) @ sol.w[k] - rho * state.lam3[k]
    state.y[k], mults["y"] = _ball(a, g - radar_load(state, cfg, k, "y"), cfg.eta, f"y_{k}")
    if not state.passive:
        a = (dh @ B - rho * state.lamE[k]).conj()
        state.e[k], mults["e"] = _ball(a, g - radar_load(state, cfg, k, "e"), cfg.eta * cfg.sigma1_2, f"e_{k}")
        a = (dh @ C - rho * state.lamT[k]).conj()
        state.t[k], mults["t"] = _ball(a, g - radar_load(state, cfg, k, "t"), cfg.eta * cfg.sigma2_2, f"t_{k}")
    return mults


def _radar_penalty_const(state: PddState, ch: ChannelSet, families) -> float:
    terms = penalty_terms(state, ch)
    idx = {"u": 0, "v": 1, "y": 2, "e": 3, "t": 4}
    return float(sum(terms[idx[f]] for f in families) / (2.0 * state.rho))


def theta1_subproblem(state: PddState, ch: ChannelSet, cfg: SceneConfig) -> QuadraticSubproblem:
    """AL objective as a quadratic in phi1 (exact, constants included)."""
    sol, rho, x = state.sol, state.rho, state.x
    phi2 = sol.phi2
    N1 = ch.N1
    wt = 1.0 / (2.0 * rho)
    sub = QuadraticSubproblem.empty(N1)
    r2 = ch.h_2u.conj() * phi2
    g1 = r2 @ ch.H_12 + ch.h_1u.conj()
    if not state.passive:
        sub.add_diag_norm(g1, 0.0, abs(x) ** 2 * cfg.sigma1_2)
        sub.const += abs(x) ** 2 * (cfg.sigma2_2 * float(np.vdot(r2, r2).real) + cfg.sigma0_2)
    else:
        sub.const += abs(x) ** 2 * cfg.sigma0_2
    xs = np.conj(x) * math.sqrt(cfg.P_t)
    sub.add_linear(xs * g1 * ch.h_b1, xs * (ch.h_bu + r2 @ ch.h_b2))
    G = ch.H_2r * phi2[None, :] @ ch.H_12 + ch.H_1r
    C = ch.H_2r * phi2[None, :]
    fixed_q = ch.h_br + C @ ch.h_b2
    for k in range(ch.K):
        dh = sol.d[k].conj()
        dG = dh @ G
        sub.add_norm(-(dG * ch.h_b1)[None, :], state.v[k] + rho * state.lam2[k] - dh @ fixed_q, wt)
        if not state.passive:
            sub.add_diag_norm(-dG, state.e[k].conj() + rho * state.lamE[k], wt)
    sub.const += _radar_penalty_const(state, ch, ("u", "y") if state.passive else ("u", "y", "t"))
    return sub.hermitize()


def theta1_constraints(ch: ChannelSet, phi2, cfg: SceneConfig):
    """(P diag, P_1) and (V, remaining RIS-2 budget) as quadratic caps on phi1."""
    Pdiag = np.abs(ch.h_b1) ** 2 + cfg.sigma1_2
    T = phi2[:, None] * ch.H_12
    D = T * ch.h_b1[None, :]
    V = D.conj().T @ D + cfg.sigma1_2 * np.diag(np.sum(np.abs(T) ** 2, axis=0))
    budget2 = cfg.P_2 - float(np.sum(np.abs(phi2 * ch.h_b2) ** 2)) - cfg.sigma2_2 * float(np.sum(np.abs(phi2) ** 2))
    return (Pdiag, cfg.P_1), (0.5 * (V + V.conj().T), budget2)


def update_theta1(state: PddState, ch: ChannelSet, cfg: SceneConfig, opts: SolverOptions | None = None):
    """Active RIS-1 coefficients; returns (phi1, (kappa1, kappa2))."""
    opts = opts or SolverOptions()
    sub = theta1_subproblem(state, ch, cfg)
    (Pd, cap1), (V, cap2) = theta1_constraints(ch, state.sol.phi2, cfg)
    unused2 = not np.any(V)
    if cap2 < 0 or (cap2 == 0 and not unused2):
        raise InfeasibleBlockError(f"theta1: RIS-2 budget exhausted by phi2 alone ({cap2:.3e})")
    if unused2:
        phi, k1 = minimize_with_budget(sub.H, sub.b, Pd, cap1, opts.max_bisect)
        kappa = (k1, 0.0)
    else:
        phi, kappa = minimize_with_two_budgets(sub.H, sub.b, Pd, cap1, V, cap2, opts.max_ellipsoid, opts.max_bisect)
    old = state.sol.phi1
    if sub.objective(phi) > sub.objective(old) and _fits(old, Pd, cap1) and _fits_dense(old, V, cap2):
        return old.copy(), kappa
    return phi, kappa


def _fits(x, qdiag, cap):
    return float(np.sum(qdiag * np.abs(x) ** 2)) <= cap * (1 + 1e-9)


def _fits_dense(x, Q, cap):
    return float(np.vdot(x, Q @ x).real) <= cap * (1 + 1e-9)


def theta2_subproblem(state: PddState, ch: ChannelSet, cfg: SceneConfig) -> QuadraticSubproblem:
    """AL objective as a quadratic in phi2 (exact, constants included)."""
    sol, rho, x = state.sol, state.rho, state.x
    phi1 = sol.phi1
    N2 = ch.N2
    wt = 1.0 / (2.0 * rho)
    sub = QuadraticSubproblem.empty(N2)
    K1 = ch.H_12 * phi1[None, :]  # H12 Th1
    h2c = ch.h_2u.conj()
    if not state.passive:
        sub.add_norm(K1.T * h2c[None, :], ch.h_1u.conj() * phi1, abs(x) ** 2 * cfg.sigma1_2)
        sub.add_diag_norm(h2c, 0.0, abs(x) ** 2 * cfg.sigma2_2)
    sub.const += abs(x) ** 2 * cfg.sigma0_2
    relay = K1 @ ch.h_b1 + ch.h_b2
    xs = np.conj(x) * math.sqrt(cfg.P_t)
    sub.add_linear(xs * h2c * relay, xs * (ch.h_bu + ch.h_1u.conj() @ (phi1 * ch.h_b1)))
    fixed_q = ch.h_br + ch.H_1r @ (phi1 * ch.h_b1)
    for k in range(ch.K):
        dh = sol.d[k].conj()
        dH2 = dh @ ch.H_2r
        sub.add_norm(-(dH2 * relay)[None, :], state.v[k] + rho * state.lam2[k] - dh @ fixed_q, wt)
        if not state.passive:
            sub.add_norm(-(K1.T * dH2[None, :]), state.e[k].conj() + rho * state.lamE[k] - (dh @ ch.H_1r) * phi1, wt)
            sub.add_diag_norm(-dH2, state.t[k].conj() + rho * state.lamT[k], wt)
    sub.const += _radar_penalty_const(state, ch, ("u", "y"))
    return sub.hermitize()


def theta2_constraint(ch: ChannelSet, phi1, cfg: SceneConfig) -> np.ndarray:
    """Diagonal of Z: RIS-2 output power per unit |phi2_n|^2."""
    K1 = ch.H_12 * phi1[None, :]
    return (
        np.abs(K1 @ ch.h_b1) ** 2
        + np.abs(ch.h_b2) ** 2
        + cfg.sigma1_2 * np.sum(np.abs(K1) ** 2, axis=1)
        + cfg.sigma2_2
    )


def update_theta2(state: PddState, ch: ChannelSet, cfg: SceneConfig, opts: SolverOptions | None = None):
    """Active RIS-2 coefficients; returns (phi2, xi)."""
    opts = opts or SolverOptions()
    sub = theta2_subproblem(state, ch, cfg)
    Z = theta2_constraint(ch, state.sol.phi1, cfg)
    phi, xi = minimize_with_budget(sub.H, sub.b, Z, cfg.P_2, opts.max_bisect)
    old = state.sol.phi2
    if sub.objective(phi) > sub.objective(old) and _fits(old, Z, cfg.P_2):
        return old.copy(), xi
    return phi, xi


# -------------------------------------------------------------- initialization

def max_sinr_receiver(ch: ChannelSet, sol: BeamformerSolution, cfg: SceneConfig, k: int,
                      amplified_noise: bool = True) -> np.ndarray:
    """Unit-norm receiver maximizing the (coherent-interference) radar SINR."""
    B, C, q = equivalent_matrices(ch, sol.phi1, sol.phi2)
    Sw = interference_matrix(ch, k) @ sol.w[k]
    R = np.outer(Sw, Sw.conj()) + cfg.P_t * np.outer(q, q.conj()) + cfg.sigma2 * np.eye(ch.M)
    if amplified_noise:
        R += cfg.sigma1_2 * B @ B.conj().T + cfg.sigma2_2 * C @ C.conj().T
    d = np.linalg.solve(R, ch.A_k[k] @ sol.w[k])
    n = np.linalg.norm(d)
    if n == 0 or not np.isfinite(n):
        d = array_response(0.0, ch.M, 0.5) / math.sqrt(ch.M)
        return d
    return d / n


def _initial_phases(ch: ChannelSet, cfg: SceneConfig, rng: np.random.Generator, passive: bool):
    phi1 = np.exp(1j * rng.uniform(0.0, 2.0 * math.pi, ch.N1))
    phi2 = np.exp(1j * rng.uniform(0.0, 2.0 * math.pi, ch.N2))
    if passive:
        return phi1, phi2
    if not ch.ris1_in_use() or cfg.P_1 <= 0:
        phi1 = np.zeros(ch.N1, complex)
    else:
        phi1 *= math.sqrt(cfg.P_1 / active_ris_power(ch, phi1, np.zeros(ch.N2), cfg, 1))
    if not ch.ris2_in_use() or cfg.P_2 <= 0:
        phi2 = np.zeros(ch.N2, complex)
    else:
        phi2 *= math.sqrt(cfg.P_2 / active_ris_power(ch, phi1, phi2, cfg, 2))
    return phi1, phi2


def initialize_state(ch: ChannelSet, cfg: SceneConfig, opts: SolverOptions, passive: bool = False):
    """Feasible starting point; returns (state, number of lifted echo auxiliaries).

    RIS phases are random and scaled to the power budgets, w_k is a scaled
    steering vector, d_k the max-SINR receiver. Auxiliaries start at their
    defining values; where the radar constraint fails there, u_k is scaled
    up so the linearized constraint is satisfiable and the penalty closes
    the gap.
    """
    rng = np.random.default_rng(opts.seed)
    K, M = ch.K, ch.M
    phi1, phi2 = _initial_phases(ch, cfg, rng, passive)
    w = np.array([math.sqrt(cfg.P_r / K) * array_response(th, M, cfg.spacing_ratio) / math.sqrt(M)
                  for th in cfg.theta_k])
    sol = BeamformerSolution(w, np.zeros((K, M), complex), phi1, phi2)
    for k in range(K):
        sol.d[k] = max_sinr_receiver(ch, sol, cfg, k, amplified_noise=not passive)
    amplified = not passive
    x = fp_optimal_x(ch, phi1, phi2, cfg, amplified)
    B, C, q = equivalent_matrices(ch, phi1, phi2)
    dh = sol.d.conj()
    u = np.array([dh[k] @ ch.A_k[k] @ w[k] for k in range(K)])
    y = np.array([dh[k] @ interference_matrix(ch, k) @ w[k] for k in range(K)])
    v = dh @ q
    e = (dh @ B).conj() if amplified else np.zeros((K, 0), complex)
    t = (dh @ C).conj() if amplified else np.zeros((K, 0), complex)
    zeros = np.zeros(K, complex)
    state = PddState(
        sol, x, u, v, y, e, t, zeros.copy(), zeros.copy(), zeros.copy(),
        np.zeros_like(e), np.zeros_like(t), opts.rho0, u.copy(), passive,
    )
    lifted = 0
    for k in range(K):
        need = radar_load(state, cfg, k)
        if not np.isfinite(need):
            raise InfeasibleScenarioError("non-finite radar load at initialization")
        if abs(state.u[k]) ** 2 < need:
            lifted += 1
            base = state.u[k] / abs(state.u[k]) if abs(state.u[k]) > 0 else 1.0
            state.u[k] = base * math.sqrt(need) * (1.0 + 1e-9)
    state.u_anchor = state.u.copy()
    return state, lifted


# ---------------------------------------------------------------- main solver

def bcd_pass(state: PddState, ch: ChannelSet, cfg: SceneConfig, opts: SolverOptions, use1: bool, use2: bool,
             phase_updates=None, on_block=None) -> int:
    """One cyclic sweep over all blocks, in place; returns number of skipped blocks."""
    skipped = 0
    amplified = not state.passive
    state.u_anchor = state.u.copy()

    def report(name):
        if on_block is not None:
            on_block(name, state)

    def aux_blocks():
        nonlocal skipped
        mats = equivalent_matrices(ch, state.sol.phi1, state.sol.phi2)
        for k in range(ch.K):
            try:
                state.u[k], _ = update_aux_u(state, ch, cfg, k)
            except InfeasibleBlockError as exc:
                log.debug("keeping u_%d: %s", k, exc)
                skipped += 1
        report("u")
        for k in range(ch.K):
            try:
                update_aux_rest(state, ch, cfg, k, mats)
            except InfeasibleBlockError as exc:
                log.debug("keeping aux of %d: %s", k, exc)
                skipped += 1
        report("aux")

    def phase_blocks():
        nonlocal skipped
        if phase_updates is not None:
            phase_updates(state, use1, use2, report)
            return
        if use1:
            try:
                state.sol.phi1, _ = update_theta1(state, ch, cfg, opts)
            except (InfeasibleBlockError, NumericalError) as exc:
                log.debug("keeping phi1: %s", exc)
                skipped += 1
            report("phi1")
            if opts.aux_last:
                state.x = fp_optimal_x(ch, state.sol.phi1, state.sol.phi2, cfg, amplified)
        if use2:
            try:
                state.sol.phi2, _ = update_theta2(state, ch, cfg, opts)
            except (InfeasibleBlockError, NumericalError) as exc:
                log.debug("keeping phi2: %s", exc)
                skipped += 1
            report("phi2")
            if opts.aux_last:
                state.x = fp_optimal_x(ch, state.sol.phi1, state.sol.phi2, cfg, amplified)

    state.sol.w, _ = update_w(state, ch, cfg, opts.max_bisect)
    report("w")
    mats = equivalent_matrices(ch, state.sol.phi1, state.sol.phi2)
    for k in range(ch.K):
        try:
            state.sol.d[k], _ = update_d(state, ch, cfg, k, mats, opts.max_bisect)
        except (InfeasibleBlockError, NumericalError) as exc:
            log.debug("keeping d_%d: %s", k, exc)
            skipped += 1
    report("d")
    state.x = fp_optimal_x(ch, state.sol.phi1, state.sol.phi2, cfg, amplified)
    report("x")
    if opts.aux_last:
        phase_blocks()
        aux_blocks()
    else:
        aux_blocks()
        phase_blocks()
    return skipped


def dual_update(state: PddState, ch: ChannelSet) -> None:
    r1, r2, r3, rE, rT = residuals(state, ch)
    state.lam1 = state.lam1 + r1 / state.rho
    state.lam2 = state.lam2 + r2 / state.rho
    state.lam3 = state.lam3 + r3 / state.rho
    if not state.passive:
        state.lamE = state.lamE + rE / state.rho
        state.lamT = state.lamT + rT / state.rho


def current_rate(state: PddState, ch: ChannelSet, cfg: SceneConfig) -> float:
    return achievable_rate(comm_snr(ch, state.sol, cfg, amplified_noise=not state.passive))


def run_pdd(ch: ChannelSet, cfg: SceneConfig, opts: SolverOptions | None = None, passive: bool = False,
            phase_updates=None, on_block=None, on_outer=None):
    """Two-loop PDD driver shared by the active and passive variants."""
    opts = opts or SolverOptions()
    t0 = time.perf_counter()
    state, lifted = initialize_state(ch, cfg, opts, passive)
    use1 = ch.ris1_in_use() and (passive or cfg.P_1 > 0)
    use2 = ch.ris2_in_use() and (passive or cfg.P_2 > 0)
    trace = SolveTrace(repaired=lifted)
    sigma = opts.sigma0
    rate_prev = current_rate(state, ch, cfg)
    al = al_objective(state, ch, cfg)
    for outer in range(1, opts.max_outer + 1):
        for _ in range(opts.max_inner):
            al_before = al
            trace.skipped_blocks += bcd_pass(state, ch, cfg, opts, use1, use2, phase_updates, on_block)
            trace.inner_passes += 1
            al = al_objective(state, ch, cfg)
            if abs(al - al_before) <= opts.inner_eps * max(abs(al_before), 1e-300):
                break
        h = constraint_violation(state, ch)
        rate = current_rate(state, ch, cfg)
        rho_used = state.rho
        if h <= sigma:
            dual_update(state, ch)
            sigma *= opts.sigma_decay
        else:
            state.rho *= opts.c
        al = al_objective(state, ch, cfg)
        trace.rows.append(TraceRow(outer, al, rate, h, rho_used, 1e3 * (time.perf_counter() - t0)))
        if on_outer is not None:
            on_outer(outer, state)
        change = abs(rate - rate_prev) / max(abs(rate_prev), 1e-12)
        rate_prev = rate
        if outer >= opts.min_outer and change <= opts.eps and h <= opts.violation_tol:
            trace.converged = True
            break
    report = check_feasibility(ch, state.sol, cfg, passive=passive)
    return state, report, trace


def pdd_solve(ch: ChannelSet, cfg: SceneConfig, opts: SolverOptions | None = None, on_block=None):
    """Solve the double active-RIS problem; returns (solution, metrics, trace)."""
    state, report, trace = run_pdd(ch, cfg, opts, passive=False, on_block=on_block)
    return state.sol, report, trace
