"""Scene and solver configuration, plus the shared JSON config loader.

The JSON document has up to three sections::

    {"channel": {...SceneConfig fields...},
     "solver": {...SolverOptions fields...},
     "scenario": {...SchemeSpec fields...}}

Angles are radians, powers watts, path losses dB.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any

from .errors import DomainError

LINKS = ("bu", "b1", "b2", "12", "1u", "2u", "br", "1r", "2r")


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def _default_exponents() -> dict[str, float]:
    return {
        "bu": 3.75,
        "b1": 2.5,
        "2u": 2.5,
        "b2": 3.0,
        "1u": 3.0,
        "br": 2.2,
        "1r": 2.2,
        "2r": 2.2,
        "12": 2.2,
    }


def _default_thetas() -> list[float]:
    return [-math.pi / 2, -math.pi / 3, -math.pi / 6, 0.0, math.pi / 6, math.pi / 3, math.pi / 2]


@dataclass(frozen=True)
class SceneConfig:
    """Geometry, array sizes, budgets and noise levels of one deployment."""

    bs_pos: tuple[float, float] = (0.0, 0.0)
    ue_pos: tuple[float, float] = (100.0, 0.0)
    ris1_pos: tuple[float, float] = (0.0, 5.0)
    ris2_pos: tuple[float, float] = (100.0, 5.0)
    radar_pos: tuple[float, float] = (50.0, 25.0)
    M: int = 12
    N1: int = 40
    N2: int = 40
    K: int = 7
    theta_k: tuple[float, ...] = field(default_factory=lambda: tuple(_default_thetas()))
    alpha_k: tuple[float, ...] = (0.1,) * 7
    beta: float = 3.0
    pl0_db: float = -30.0
    d0: float = 1.0
    exponents: dict[str, float] = field(default_factory=_default_exponents)
    spacing_ratio: float = 0.5
    sigma2: float = 1e-11
    sigma0_2: float = 1e-11
    sigma1_2: float = 1e-11
    sigma2_2: float = 1e-11
    eta: float = 100.0
    P_r: float = 10.0
    P_t: float = 0.4
    P_1: float = 0.4
    P_2: float = 0.4
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "theta_k", tuple(float(t) for t in self.theta_k))
        alpha = tuple(float(a) for a in self.alpha_k)
        if len(alpha) != self.K and len(set(alpha)) == 1:
            alpha = alpha[:1] * self.K
        object.__setattr__(self, "alpha_k", alpha)
        for name in ("bs_pos", "ue_pos", "ris1_pos", "ris2_pos", "radar_pos"):
            object.__setattr__(self, name, tuple(float(c) for c in getattr(self, name)))
        self.validate()

    def validate(self) -> None:
        if min(self.M, self.N1, self.N2, self.K) < 1:
            raise DomainError("M, N1, N2 and K must all be >= 1")
        if len(self.theta_k) != self.K or len(self.alpha_k) != self.K:
            raise DomainError(f"theta_k and alpha_k need K={self.K} entries")
        if any(abs(t) > math.pi / 2 + 1e-12 for t in self.theta_k):
            raise DomainError("theta_k must lie in [-pi/2, pi/2]")
        budgets = (self.P_r, self.P_t, self.P_1, self.P_2)
        noises = (self.sigma2, self.sigma0_2, self.sigma1_2, self.sigma2_2)
        # single-RIS schemes legitimately carry a zero budget for the unused surface
        if any(p < 0 for p in budgets) or any(s <= 0 for s in noises):
            raise DomainError("power budgets must be >= 0 and noise powers > 0")
        if self.beta < 0 or self.eta <= 0 or self.spacing_ratio <= 0 or self.d0 <= 0:
            raise DomainError("need beta >= 0, eta > 0, spacing_ratio > 0, d0 > 0")
        missing = set(LINKS) - set(self.exponents)
        if missing:
            raise DomainError(f"missing path-loss exponents for links {sorted(missing)}")

    def with_(self, **changes: Any) -> "SceneConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = list(v)
        return d

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SceneConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise DomainError(f"unknown SceneConfig fields: {sorted(unknown)}")
        data = dict(data)
        if "exponents" in data:
            exps = _default_exponents()
            exps.update({str(k): float(v) for k, v in data["exponents"].items()})
            data["exponents"] = exps
        if "theta_k" in data and "K" not in data:
            data["K"] = len(data["theta_k"])
        return cls(**data)


@dataclass(frozen=True)
class SolverOptions:
    """Tolerances, penalty schedule and iteration caps for the PDD solvers."""

    eps: float = 1e-3
    inner_eps: float = 1e-3
    violation_tol: float = 1e-6
    rho0: float = 1.0
    c: float = 0.8
    sigma0: float = 0.1
    sigma_decay: float = 0.9
    max_inner: int = 100
    max_outer: int = 50
    min_outer: int = 1
    max_bisect: int = 200
    max_ellipsoid: int = 500
    mm_iters: int = 200
    mm_tol: float = 1e-6
    aux_last: bool = True
    seed: int = 0

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SolverOptions":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise DomainError(f"unknown solver options: {sorted(unknown)}")
        return cls(**data)


def load_config(path: str | Path) -> dict[str, Any]:
    """Read a JSON config; returns dict with 'channel', 'solver', 'scenario' objects."""
    raw = json.loads(Path(path).read_text())
    from .scenarios import SchemeSpec

    scene = SceneConfig.from_dict(raw.get("channel", {}))
    opts = SolverOptions.from_dict(raw.get("solver", {}))
    scen_raw = dict(raw.get("scenario", {}))
    scheme = SchemeSpec.from_dict(scen_raw) if scen_raw else SchemeSpec()
    return {"channel": scene, "solver": opts, "scenario": scheme, "raw": raw}
