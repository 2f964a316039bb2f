import math

import numpy as np
import pytest

from ris_rcc.channel import ChannelSet, target_response
from ris_rcc.config import SceneConfig
from ris_rcc.model import BeamformerSolution, active_ris_power
from ris_rcc.pdd import PddState, radar_load


def small_cfg(**kw):
    base = dict(
        M=3, N1=3, N2=3, K=2, theta_k=(-0.4, 0.5), alpha_k=(1.0, 1.0),
        sigma2=0.05, sigma0_2=0.1, sigma1_2=0.05, sigma2_2=0.05,
        eta=0.5, P_r=2.0, P_t=1.0, P_1=3.0, P_2=3.0,
    )
    base.update(kw)
    return SceneConfig(**base)


def cn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)


def random_channels(rng, cfg, scale=1.0):
    M, N1, N2 = cfg.M, cfg.N1, cfg.N2
    return ChannelSet(
        h_bu=complex(scale * cn(rng, 1)[0]),
        h_b1=scale * cn(rng, N1),
        h_b2=scale * cn(rng, N2),
        H_12=scale * cn(rng, N2, N1),
        h_1u=scale * cn(rng, N1),
        h_2u=scale * cn(rng, N2),
        h_br=scale * cn(rng, M),
        H_1r=scale * cn(rng, M, N1),
        H_2r=scale * cn(rng, M, N2),
        A_k=[target_response(t, a, M, cfg.spacing_ratio) for t, a in zip(cfg.theta_k, cfg.alpha_k)],
    )


def random_state(rng, ch, cfg, passive=False):
    """Feasible random PDD state with nonzero duals and a slack CCP anchor."""
    K, M = ch.K, ch.M
    w = cn(rng, K, M)
    w *= math.sqrt(rng.uniform(0.3, 1.5) * cfg.P_r / np.sum(np.abs(w) ** 2))
    d = cn(rng, K, M)
    if passive:
        phi1 = np.exp(2j * np.pi * rng.uniform(size=ch.N1))
        phi2 = np.exp(2j * np.pi * rng.uniform(size=ch.N2))
    else:
        phi1 = cn(rng, ch.N1)
        phi1 *= math.sqrt(0.7 * cfg.P_1 / active_ris_power(ch, phi1, phi2 := cn(rng, ch.N2), cfg, 1))
        phi2 *= math.sqrt(0.5 * cfg.P_2 / active_ris_power(ch, phi1, phi2, cfg, 2))
    sol = BeamformerSolution(w, d, phi1, phi2)
    e = np.zeros((K, 0), complex) if passive else cn(rng, K, ch.N1)
    t = np.zeros((K, 0), complex) if passive else cn(rng, K, ch.N2)
    st = PddState(
        sol, complex(cn(rng, 1)[0]), cn(rng, K), cn(rng, K), cn(rng, K), e, t,
        0.2 * cn(rng, K), 0.2 * cn(rng, K), 0.2 * cn(rng, K), 0.2 * cn(rng, *e.shape), 0.2 * cn(rng, *t.shape),
        float(rng.uniform(0.5, 2.0)), np.zeros(K, complex), passive,
    )
    # make the linearized radar constraint strictly satisfiable with room to spare
    for k in range(K):
        need = radar_load(st, cfg, k)
        st.u[k] *= math.sqrt(rng.uniform(1.2, 3.0) * need) / abs(st.u[k])
    st.u_anchor = st.u.copy()
    return st


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
