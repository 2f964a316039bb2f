"""Benchmark schemes: channel masking and the unified power budget."""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields

import numpy as np

from .channel import ChannelSet
from .config import SceneConfig, dbm_to_watt
from .errors import DomainError, InfeasibleBudgetError

SCHEMES = ("double_active", "double_passive", "single_active_1", "single_active_2", "no_ris")


@dataclass(frozen=True)
class SchemeSpec:
    scheme: str = "double_active"
    Q_total: float = 11.0
    gamma: float = 0.9
    P_SW: float = dbm_to_watt(-10.0)
    P_DC: float = dbm_to_watt(-5.0)

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise DomainError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if not 0.0 <= self.gamma <= 1.0:
            raise DomainError("gamma must lie in [0, 1]")
        if self.Q_total <= 0 or self.P_SW < 0 or self.P_DC < 0:
            raise DomainError("need Q_total > 0 and nonnegative element overheads")

    @classmethod
    def from_dict(cls, data: dict) -> "SchemeSpec":
        """Overheads may be given in watts (P_SW, P_DC) or dBm (P_SW_dbm, P_DC_dbm)."""
        data = dict(data)
        for key in ("P_SW", "P_DC"):
            if f"{key}_dbm" in data:
                data[key] = dbm_to_watt(float(data.pop(f"{key}_dbm")))
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise DomainError(f"unknown scenario fields: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return asdict(self)


def power_allocation(spec: SchemeSpec, N1: int, N2: int):
    """Split Q_total into (P_r, P_t, P_1, P_2) for the scheme."""
    P_r = spec.gamma * spec.Q_total
    left = spec.Q_total - P_r
    act = spec.P_SW + spec.P_DC
    if spec.scheme == "double_active":
        share = (left - (N1 + N2) * act) / 3.0
        out = (P_r, share, share, share)
    elif spec.scheme == "double_passive":
        out = (P_r, left - (N1 + N2) * spec.P_SW, 0.0, 0.0)
    elif spec.scheme == "single_active_1":
        share = (left - N1 * act) / 2.0
        out = (P_r, share, share, 0.0)
    elif spec.scheme == "single_active_2":
        share = (left - N2 * act) / 2.0
        out = (P_r, share, 0.0, share)
    else:
        out = (P_r, left, 0.0, 0.0)
    if out[1] < 0:
        raise InfeasibleBudgetError(
            f"{spec.scheme}: element overheads exceed the residual budget ({out[1]:.4g} W left per share)"
        )
    return out


def overhead_power(spec: SchemeSpec, N1: int, N2: int) -> float:
    """Fixed per-element consumption of the scheme's surfaces."""
    act = spec.P_SW + spec.P_DC
    return {
        "double_active": (N1 + N2) * act,
        "double_passive": (N1 + N2) * spec.P_SW,
        "single_active_1": N1 * act,
        "single_active_2": N2 * act,
        "no_ris": 0.0,
    }[spec.scheme]


def build_scenario(scheme: str, ch: ChannelSet) -> ChannelSet:
    """Zero the links of surfaces the scheme does not deploy."""
    if scheme not in SCHEMES:
        raise DomainError(f"unknown scheme {scheme!r}")
    out = ch.copy()
    drop = {
        "single_active_1": ("H_12", "H_2r", "h_b2", "h_2u"),
        "single_active_2": ("H_12", "H_1r", "h_b1", "h_1u"),
        "no_ris": ("H_12", "H_1r", "H_2r", "h_b1", "h_b2", "h_1u", "h_2u"),
    }.get(scheme, ())
    for name in drop:
        setattr(out, name, np.zeros_like(getattr(out, name)))
    return out


def scheme_config(spec: SchemeSpec, cfg: SceneConfig) -> SceneConfig:
    """Scene config with the scheme's budgets filled in."""
    P_r, P_t, P_1, P_2 = power_allocation(spec, cfg.N1, cfg.N2)
    return cfg.with_(P_r=P_r, P_t=P_t, P_1=P_1, P_2=P_2)


def solve_scheme(scheme: str, ch: ChannelSet, cfg: SceneConfig, opts=None):
    """Mask channels and dispatch to the matching solver."""
    from .passive import passive_solve
    from .pdd import pdd_solve

    masked = build_scenario(scheme, ch)
    if scheme == "double_passive":
        return passive_solve(masked, cfg, opts)
    return pdd_solve(masked, cfg, opts)
