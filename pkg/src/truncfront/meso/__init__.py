"""Solver and property checks for ``du/dt = min(a * u, 1)``."""

from .checks import (
    CheckResult,
    LambdaResult,
    SubsolutionReport,
    capped_weight,
    check_kernel_ratio,
    check_subsolution,
    comparison_check,
    find_lambda,
    growth_bound_check,
    hair_trigger_check,
    kernel_convolution,
    subsolution_profile,
    subsolution_violation,
    weight_ratio,
    weighted_norm,
)
from .solver import (
    Convolver,
    FrontTrace,
    GridSpec,
    MesoAbort,
    MesoField,
    SolveResult,
    cell_weights,
    convolve,
    domain_for_front,
    front_position,
    picard_solve,
    solve,
    step_meso,
)

__all__ = [
    "CheckResult",
    "Convolver",
    "FrontTrace",
    "GridSpec",
    "LambdaResult",
    "MesoAbort",
    "MesoField",
    "SolveResult",
    "SubsolutionReport",
    "capped_weight",
    "cell_weights",
    "check_kernel_ratio",
    "check_subsolution",
    "comparison_check",
    "convolve",
    "domain_for_front",
    "find_lambda",
    "front_position",
    "growth_bound_check",
    "hair_trigger_check",
    "kernel_convolution",
    "picard_solve",
    "solve",
    "step_meso",
    "subsolution_profile",
    "subsolution_violation",
    "weight_ratio",
    "weighted_norm",
]
