"""System metrics: equivalent channels, radar SINR, user SNR, RIS powers.

Radar interference between detection directions comes in two flavours.
``per_target`` sums the per-direction powers ``sum_m |d_k^H A_m w_k|^2``.
``coherent`` squares the summed leakage ``|sum_m d_k^H A_m w_k|^2``; this is
the quantity carried by the interference auxiliary in the PDD reformulation
and is what the solvers constrain, so feasibility is judged on it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelSet
from .config import SceneConfig
from .errors import DomainError

FEAS_SLACK = 1e-6


@dataclass
class BeamformerSolution:
    """Radar beamformers (rows of ``w``/``d``, one per direction) and RIS coefficients."""

    w: np.ndarray
    d: np.ndarray
    phi1: np.ndarray
    phi2: np.ndarray

    def copy(self) -> "BeamformerSolution":
        return BeamformerSolution(self.w.copy(), self.d.copy(), self.phi1.copy(), self.phi2.copy())

    @classmethod
    def zeros(cls, K: int, M: int, N1: int, N2: int) -> "BeamformerSolution":
        return cls(
            np.zeros((K, M), complex), np.zeros((K, M), complex), np.zeros(N1, complex), np.zeros(N2, complex)
        )


@dataclass
class MetricsReport:
    rate: float
    snr_c: float
    sinr_r: list = field(default_factory=list)
    p_radar: float = 0.0
    p_ris1: float = 0.0
    p_ris2: float = 0.0
    feasible: bool = False
    worst_violation: float = 0.0

    def columns(self) -> list[str]:
        sinr_cols = [f"sinr_r_{i + 1}" for i in range(len(self.sinr_r))]
        return ["rate", "snr_c", *sinr_cols, "p_radar", "p_ris1", "p_ris2", "feasible", "worst_violation"]

    def values(self) -> list:
        return [
            self.rate, self.snr_c, *self.sinr_r, self.p_radar, self.p_ris1, self.p_ris2,
            self.feasible, self.worst_violation,
        ]

    def to_dict(self) -> dict:
        return dict(zip(self.columns(), self.values()))

    def to_csv_row(self) -> str:
        def fmt(v):
            if isinstance(v, (bool, np.bool_)):
                return "true" if v else "false"
            return f"{float(v):.12g}"

        return ",".join(fmt(v) for v in self.values())


def equivalent_matrices(ch: ChannelSet, phi1: np.ndarray, phi2: np.ndarray):
    """B = H2r Th2 H12 Th1 + H1r Th1, C = H2r Th2, q = h_br + B h_b1 + C h_b2."""
    C = ch.H_2r * phi2[None, :]
    B = (C @ ch.H_12 + ch.H_1r) * phi1[None, :]
    q = ch.h_br + B @ ch.h_b1 + C @ ch.h_b2
    return B, C, q


def interference_matrix(ch: ChannelSet, k: int) -> np.ndarray:
    """Sum of target responses of every direction other than k."""
    S = np.zeros_like(ch.A_k[0])
    for m, A in enumerate(ch.A_k):
        if m != k:
            S = S + A
    return S


def _radar_terms(ch, sol, cfg, k, mats, interference, amplified_noise):
    B, C, q = mats
    d, w = sol.d[k], sol.w[k]
    dh = d.conj()
    signal = abs(dh @ ch.A_k[k] @ w) ** 2
    if interference == "coherent":
        interf = abs(dh @ interference_matrix(ch, k) @ w) ** 2
    elif interference == "per_target":
        interf = sum(abs(dh @ A @ w) ** 2 for m, A in enumerate(ch.A_k) if m != k)
    else:
        raise DomainError(f"unknown interference model {interference!r}")
    denom = interf + cfg.P_t * abs(dh @ q) ** 2 + cfg.sigma2 * np.vdot(d, d).real
    if amplified_noise:
        denom += cfg.sigma1_2 * np.linalg.norm(dh @ B) ** 2 + cfg.sigma2_2 * np.linalg.norm(dh @ C) ** 2
    return signal, denom


def radar_sinr(
    ch: ChannelSet,
    sol: BeamformerSolution,
    cfg: SceneConfig,
    k: int,
    interference: str = "per_target",
    amplified_noise: bool = True,
) -> float:
    """Radar SINR of direction k.

    ``amplified_noise=False`` drops the RIS thermal-noise terms (passive RIS).
    """
    if not np.any(sol.d[k]):
        raise DomainError(f"receive beamformer d_{k} is zero; SINR undefined")
    mats = equivalent_matrices(ch, sol.phi1, sol.phi2)
    signal, denom = _radar_terms(ch, sol, cfg, k, mats, interference, amplified_noise)
    return float(signal / denom)


def composite_gain(ch: ChannelSet, phi1: np.ndarray, phi2: np.ndarray) -> complex:
    """h_bu + h2u^H Th2 H12 Th1 h_b1 + h1u^H Th1 h_b1 + h2u^H Th2 h_b2."""
    r2 = ch.h_2u.conj() * phi2
    return complex(ch.h_bu + r2 @ (ch.H_12 @ (phi1 * ch.h_b1)) + ch.h_1u.conj() @ (phi1 * ch.h_b1) + r2 @ ch.h_b2)


def comm_noise(ch: ChannelSet, phi1, phi2, cfg: SceneConfig, amplified_noise: bool = True) -> float:
    """Noise power at the user: amplified RIS noise plus receiver noise."""
    if not amplified_noise:
        return cfg.sigma0_2
    r2 = ch.h_2u.conj() * phi2
    row1 = (r2 @ ch.H_12 + ch.h_1u.conj()) * phi1
    return float(cfg.sigma1_2 * np.vdot(row1, row1).real + cfg.sigma2_2 * np.vdot(r2, r2).real + cfg.sigma0_2)


def comm_snr(ch: ChannelSet, sol: BeamformerSolution, cfg: SceneConfig, amplified_noise: bool = True) -> float:
    g = composite_gain(ch, sol.phi1, sol.phi2)
    return float(cfg.P_t * abs(g) ** 2 / comm_noise(ch, sol.phi1, sol.phi2, cfg, amplified_noise))


def achievable_rate(snr: float) -> float:
    if snr < 0:
        raise DomainError(f"SNR must be nonnegative, got {snr}")
    return math.log2(1.0 + snr)


def active_ris_power(ch: ChannelSet, phi1, phi2, cfg: SceneConfig, which: int) -> float:
    """Output power of active RIS ``which`` (signal plus amplified noise)."""
    if which == 1:
        return float(np.sum(np.abs(phi1 * ch.h_b1) ** 2) + cfg.sigma1_2 * np.sum(np.abs(phi1) ** 2))
    if which == 2:
        T = phi2[:, None] * ch.H_12 * phi1[None, :]
        return float(
            np.sum(np.abs(T @ ch.h_b1) ** 2)
            + np.sum(np.abs(phi2 * ch.h_b2) ** 2)
            + cfg.sigma1_2 * np.sum(np.abs(T) ** 2)
            + cfg.sigma2_2 * np.sum(np.abs(phi2) ** 2)
        )
    raise DomainError("which must be 1 or 2")


def _excess(value: float, budget: float) -> float:
    if budget > 0:
        return max(0.0, (value - budget) / budget)
    return 0.0 if value <= 1e-300 else 1.0


def check_feasibility(
    ch: ChannelSet, sol: BeamformerSolution, cfg: SceneConfig, passive: bool = False
) -> MetricsReport:
    """Evaluate all metrics and the constraints of the rate maximization.

    Active RIS: SINR >= eta per direction, radar and both RIS budgets.
    Passive RIS: SINR without amplified noise, radar budget, unit modulus.
    Violations are relative excesses; feasible iff all are <= 1e-6.
    """
    amplified = not passive
    mats = equivalent_matrices(ch, sol.phi1, sol.phi2)
    sinrs = []
    for k in range(ch.K):
        if not np.any(sol.d[k]):
            sinrs.append(0.0)
            continue
        s, den = _radar_terms(ch, sol, cfg, k, mats, "coherent", amplified)
        sinrs.append(float(s / den) if den > 0 else math.inf)
    snr = comm_snr(ch, sol, cfg, amplified)
    p_radar = float(np.sum(np.abs(sol.w) ** 2))
    excess = [max(0.0, (cfg.eta - s) / cfg.eta) for s in sinrs]
    excess.append(_excess(p_radar, cfg.P_r))
    if passive:
        p1 = p2 = 0.0
        mods = np.concatenate([np.abs(sol.phi1), np.abs(sol.phi2)])
        excess.append(float(np.max(np.abs(mods - 1.0))) if mods.size else 0.0)
    else:
        p1 = active_ris_power(ch, sol.phi1, sol.phi2, cfg, 1)
        p2 = active_ris_power(ch, sol.phi1, sol.phi2, cfg, 2)
        excess += [_excess(p1, cfg.P_1), _excess(p2, cfg.P_2)]
    worst = max(excess)
    feasible = worst <= FEAS_SLACK
    return MetricsReport(
        rate=achievable_rate(snr),
        snr_c=snr,
        sinr_r=sinrs,
        p_radar=p_radar,
        p_ris1=p1,
        p_ris2=p2,
        feasible=bool(feasible),
        worst_violation=0.0 if feasible else float(worst),
    )
