"""Large-scale path loss, Rician fading, steering vectors and channel sets."""
from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from .config import SceneConfig
from .errors import DomainError

# Fixed stream ids: adding a link never perturbs the draws of existing ones.
_LINK_STREAM = {"bu": 1, "b1": 2, "b2": 3, "12": 4, "1u": 5, "2u": 6, "br": 7, "1r": 8, "2r": 9}

BETA_LOS_ONLY = 1e12


def pathloss_db(d: float, alpha: float, pl0_db: float = -30.0, d0: float = 1.0) -> float:
    """PL(d) = PL0 - 10*alpha*log10(d/d0) in dB."""
    if d <= 0 or d0 <= 0:
        raise DomainError(f"path loss needs positive distances, got d={d}, d0={d0}")
    return pl0_db - 10.0 * alpha * math.log10(d / d0)


def array_response(theta: float, n: int, spacing_ratio: float = 0.5) -> np.ndarray:
    """Uniform linear array response; entry m is exp(j*2*pi*ratio*m*sin(theta))."""
    if n < 1:
        raise DomainError("array needs at least one element")
    m = np.arange(n)
    return np.exp(1j * 2.0 * np.pi * spacing_ratio * m * math.sin(theta))


def target_response(theta: float, alpha_k: float, M: int, spacing_ratio: float = 0.5) -> np.ndarray:
    a = array_response(theta, M, spacing_ratio)
    return alpha_k * np.outer(a, a.conj())


def rician_channel(rows, cols, beta, aoa, aod, spacing_ratio, rng: np.random.Generator) -> np.ndarray:
    """Rician matrix with unit average power per entry.

    The LoS part is a_r(aoa) a_t(aod)^H; the NLoS part has i.i.d. CN(0, 1)
    entries. Both parts are always drawn so that the rng state advances the
    same way for every beta.
    """
    if beta < 0:
        raise DomainError("Rician factor must be >= 0")
    nlos = (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / math.sqrt(2.0)
    los = np.outer(array_response(aoa, rows, spacing_ratio), array_response(aod, cols, spacing_ratio).conj())
    if beta >= BETA_LOS_ONLY:
        return los
    return math.sqrt(beta / (beta + 1.0)) * los + math.sqrt(1.0 / (beta + 1.0)) * nlos


@dataclass
class ChannelSet:
    """All links of one realization.

    ``h_1u`` and ``h_2u`` are stored as column vectors; the row channel that
    multiplies the RIS output is their conjugate transpose.
    """

    h_bu: complex
    h_b1: np.ndarray
    h_b2: np.ndarray
    H_12: np.ndarray
    h_1u: np.ndarray
    h_2u: np.ndarray
    h_br: np.ndarray
    H_1r: np.ndarray
    H_2r: np.ndarray
    A_k: list

    @property
    def M(self) -> int:
        return self.h_br.shape[0]

    @property
    def N1(self) -> int:
        return self.h_b1.shape[0]

    @property
    def N2(self) -> int:
        return self.h_b2.shape[0]

    @property
    def K(self) -> int:
        return len(self.A_k)

    def copy(self) -> "ChannelSet":
        kw = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, np.ndarray):
                v = v.copy()
            elif isinstance(v, list):
                v = [a.copy() for a in v]
            kw[f.name] = v
        return ChannelSet(**kw)

    def equals(self, other: "ChannelSet") -> bool:
        for f in fields(self):
            a, b = getattr(self, f.name), getattr(other, f.name)
            if isinstance(a, list):
                if len(a) != len(b) or not all(np.array_equal(x, y) for x, y in zip(a, b)):
                    return False
            elif not np.array_equal(a, b):
                return False
        return True

    def ris1_in_use(self) -> bool:
        """RIS 1 matters iff it receives signal and forwards it somewhere."""
        incoming = np.any(self.h_b1 != 0)
        outgoing = np.any(self.h_1u != 0) or np.any(self.H_1r != 0) or np.any(self.H_12 != 0)
        return bool(incoming and outgoing)

    def ris2_in_use(self) -> bool:
        incoming = np.any(self.h_b2 != 0) or (np.any(self.H_12 != 0) and np.any(self.h_b1 != 0))
        outgoing = np.any(self.h_2u != 0) or np.any(self.H_2r != 0)
        return bool(incoming and outgoing)


def link_rng(seed: int, link: str) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), _LINK_STREAM[link]])))


def _distance(p, q) -> float:
    return math.hypot(p[0] - q[0], p[1] - q[1])


def generate_channels(cfg: SceneConfig, seed: int | None = None) -> ChannelSet:
    """Draw one channel realization for ``cfg`` (seed defaults to ``cfg.seed``)."""
    seed = cfg.seed if seed is None else seed
    nodes = {"b": cfg.bs_pos, "u": cfg.ue_pos, "1": cfg.ris1_pos, "2": cfg.ris2_pos, "r": cfg.radar_pos}
    sizes = {"b": 1, "u": 1, "1": cfg.N1, "2": cfg.N2, "r": cfg.M}

    def draw(link: str) -> np.ndarray:
        tx, rx = link[0], link[1]
        d = _distance(nodes[tx], nodes[rx])
        if d <= 0:
            raise DomainError(f"link {link}: transmitter and receiver coincide")
        amp = math.sqrt(10.0 ** (pathloss_db(d, cfg.exponents[link], cfg.pl0_db, cfg.d0) / 10.0))
        rng = link_rng(seed, link)
        aoa, aod = rng.uniform(0.0, 2.0 * math.pi, size=2)
        return amp * rician_channel(sizes[rx], sizes[tx], cfg.beta, aoa, aod, cfg.spacing_ratio, rng)

    h_bu = complex(draw("bu")[0, 0])
    h_b1 = draw("b1")[:, 0]
    h_b2 = draw("b2")[:, 0]
    H_12 = draw("12")
    # RIS -> UE links are drawn as 1 x N rows (h^H) and stored as columns
    h_1u = draw("1u")[0].conj()
    h_2u = draw("2u")[0].conj()
    h_br = draw("br")[:, 0]
    H_1r = draw("1r")
    H_2r = draw("2r")
    A_k = [target_response(t, a, cfg.M, cfg.spacing_ratio) for t, a in zip(cfg.theta_k, cfg.alpha_k)]
    return ChannelSet(h_bu, h_b1, h_b2, H_12, h_1u, h_2u, h_br, H_1r, H_2r, A_k)
