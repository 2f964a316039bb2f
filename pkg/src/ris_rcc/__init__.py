"""Joint beamforming for radar-communication coexistence with double active RIS."""
from .channel import ChannelSet, generate_channels
from .config import SceneConfig, SolverOptions, load_config
from .model import BeamformerSolution, MetricsReport, check_feasibility
from .passive import passive_solve
from .pdd import pdd_solve
from .scenarios import SchemeSpec, build_scenario, power_allocation

__all__ = [
    "BeamformerSolution",
    "ChannelSet",
    "MetricsReport",
    "SceneConfig",
    "SchemeSpec",
    "SolverOptions",
    "build_scenario",
    "check_feasibility",
    "generate_channels",
    "load_config",
    "passive_solve",
    "pdd_solve",
    "power_allocation",
]
