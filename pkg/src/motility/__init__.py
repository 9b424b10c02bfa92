"""Solvers for a 2D free-boundary model of cell motility.

Radial stationary states of an active-gel droplet, their linear stability
spectrum, the critical radius where traveling waves bifurcate, the
small-velocity traveling-wave branch, and the stability eigenvalue of the
linearization around traveling waves.
"""

from .numerics import (
    CollocationGrid,
    NumericsError,
    QuadratureRule,
    bessel_i,
    dense_eig,
    gauss_legendre,
    neumann_laplacian_eigs,
)
from .model import ModelParams, RadialState, radial_state, p_star, check_hypotheses
from .stationary_spectrum import (
    EigReport,
    ModeOperator,
    StabilityReport,
    assemble_mode,
    mode_spectrum,
    movability_E_operator,
    movability_E_rayleigh,
    sweep_E,
    verify_disk_stability,
)
from .bifurcation import (
    BifurcationReport,
    F_of_R,
    bifurcation_report,
    dE_dM_at_R0,
    find_R0,
    transversality,
)
from .traveling_wave import (
    Branch,
    TravelingWave,
    continue_branch,
    extract_expansion,
    mass_derivatives,
    myosin_field,
    myosin_mass,
    solve_tw,
)
from .tw_spectrum import (
    LinearizedOperator,
    SpectrumReport,
    adjoint_constants,
    adjoint_scaling_check,
    alpha_of_lambda_hat,
    assemble_A,
    asymptotic_lambda,
    kernel_residuals,
    lambda_of_V,
)

__all__ = [
    "CollocationGrid",
    "NumericsError",
    "QuadratureRule",
    "bessel_i",
    "dense_eig",
    "gauss_legendre",
    "neumann_laplacian_eigs",
    "ModelParams",
    "RadialState",
    "radial_state",
    "p_star",
    "check_hypotheses",
    "EigReport",
    "ModeOperator",
    "StabilityReport",
    "assemble_mode",
    "mode_spectrum",
    "movability_E_operator",
    "movability_E_rayleigh",
    "sweep_E",
    "verify_disk_stability",
    "BifurcationReport",
    "F_of_R",
    "bifurcation_report",
    "dE_dM_at_R0",
    "find_R0",
    "transversality",
    "Branch",
    "TravelingWave",
    "continue_branch",
    "extract_expansion",
    "mass_derivatives",
    "myosin_field",
    "myosin_mass",
    "solve_tw",
    "LinearizedOperator",
    "SpectrumReport",
    "adjoint_constants",
    "adjoint_scaling_check",
    "alpha_of_lambda_hat",
    "assemble_A",
    "asymptotic_lambda",
    "kernel_residuals",
    "lambda_of_V",
]
