"""Lattice birth process, its tip view, the dominating process and the comparison process."""

from .coupling import (
    DominationReport,
    GammaCouplingReport,
    simulate_coupled_gamma_eta,
    simulate_coupled_xi_zeta,
)
from .gamma import GammaRun, rectangle_holds, simulate_gamma
from .process import (
    BirthEvent,
    LatticeBirthProcess,
    LatticeConfig,
    WindowLimitError,
    q_integrand,
    q_m_decomposition,
    q_m_from_trajectory,
    simulate,
    tip,
)

__all__ = [
    "BirthEvent",
    "DominationReport",
    "GammaCouplingReport",
    "GammaRun",
    "LatticeBirthProcess",
    "LatticeConfig",
    "WindowLimitError",
    "q_integrand",
    "q_m_decomposition",
    "q_m_from_trajectory",
    "rectangle_holds",
    "simulate",
    "simulate_coupled_gamma_eta",
    "simulate_coupled_xi_zeta",
    "simulate_gamma",
    "tip",
]
