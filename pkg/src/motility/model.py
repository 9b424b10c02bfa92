"""Physical parameters, the pressure law, and radial stationary states.

The droplet is governed by a Darcy flow with potential Phi, a myosin density
m, surface tension gamma and an area-penalizing outer pressure

    p_star(area) = p_h - k_e * (area - area_ref) / area_ref.

A radial stationary state on the disk of radius R has uniform myosin density
m0 = p_star(pi R^2) - gamma/R, potential value phi0 = m0/zeta, and total mass
M = pi R^2 m0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .numerics import neumann_laplacian_eigs


@dataclass(frozen=True)
class ModelParams:
    """Physical constants of the model.

    zeta: adhesion drag (> 0); gamma: surface tension (> 0);
    k_e: inverse compressibility (>= 0); p_h: hydrostatic pressure;
    area_ref: reference (relaxed) area (> 0).
    """

    zeta: float
    gamma: float
    k_e: float
    p_h: float
    area_ref: float

    def __post_init__(self):
        if self.zeta <= 0:
            raise ValueError("ModelParams: zeta must be positive")
        if self.gamma <= 0:
            raise ValueError("ModelParams: gamma must be positive")
        if self.k_e < 0:
            raise ValueError("ModelParams: k_e must be nonnegative")
        if self.area_ref <= 0:
            raise ValueError("ModelParams: area_ref must be positive")

    @staticmethod
    def calibrated(zeta: float, gamma: float, k_e: float, target_m0: float, R: float) -> "ModelParams":
        """Parameters with area_ref = pi R^2 and p_h solved so that the radial
        state at radius R has myosin density target_m0."""
        if R <= 0:
            raise ValueError("calibrated: R must be positive")
        area_ref = math.pi * R * R
        p_h = target_m0 + gamma / R  # p_star(area_ref) = p_h
        return ModelParams(zeta=zeta, gamma=gamma, k_e=k_e, p_h=p_h, area_ref=area_ref)


def p_star(params: ModelParams, area: float) -> float:
    """Outer pressure law: hydrostatic part minus the elastic area penalty."""
    if area <= 0:
        raise ValueError("p_star: area must be positive")
    return params.p_h - params.k_e * (area - params.area_ref) / params.area_ref


def p_star_prime(params: ModelParams) -> float:
    """d p_star / d area (constant for the linear law)."""
    return -params.k_e / params.area_ref


@dataclass(frozen=True)
class RadialState:
    R: float
    m0: float
    phi0: float
    M: float
    p_star_val: float


def radial_state(params: ModelParams, R: float) -> RadialState:
    """The unique radial stationary state on the disk of radius R."""
    if R <= 0:
        raise ValueError("radial_state: R must be positive")
    ps = p_star(params, math.pi * R * R)
    m0 = ps - params.gamma / R
    if m0 <= 0:
        raise ValueError(
            f"radial_state: nonpositive myosin density m0={m0:.6g} at R={R} "
            f"(p_star={ps:.6g}, gamma/R={params.gamma / R:.6g})"
        )
    return RadialState(R=R, m0=m0, phi0=m0 / params.zeta, M=math.pi * R * R * m0, p_star_val=ps)


def M_of_R(params: ModelParams, R: float) -> float:
    """Total myosin mass of the radial state family, M(R) = pi R^2 p_star - pi gamma R."""
    return math.pi * R * R * p_star(params, math.pi * R * R) - math.pi * params.gamma * R


def dM_dR(params: ModelParams, R: float) -> float:
    """Analytic derivative of M_of_R."""
    area = math.pi * R * R
    return (
        2.0 * math.pi * R * p_star(params, area)
        + 2.0 * math.pi**2 * R**3 * p_star_prime(params)
        - math.pi * params.gamma
    )


@dataclass(frozen=True)
class HypothesisReport:
    """Stability-theorem hypothesis flags for a radial state.

    (a) m0 <= zeta; (b) m0 below the fourth Neumann eigenvalue of -Laplace
    on the disk (both counting conventions are exposed); (c) the area
    condition p_star' < -(gamma/R + 2 m0)/(2 pi R^2), equivalent to M'(R) < 0.
    """

    holds_a: bool
    margin_a: float
    holds_b_multiplicity: bool
    margin_b_multiplicity: float
    holds_b_distinct: bool
    margin_b_distinct: float
    holds_c: bool
    margin_c: float
    dM_dR: float

    @property
    def all_hold(self) -> bool:
        # the multiplicity-counted convention is the operative one
        return self.holds_a and self.holds_b_multiplicity and self.holds_c


def check_hypotheses(params: ModelParams, R: float) -> HypothesisReport:
    state = radial_state(params, R)
    m0 = state.m0
    margin_a = params.zeta - m0

    eigs = neumann_laplacian_eigs(R, 8)
    fourth_mult = eigs[3]
    distinct = sorted(set(round(v, 12) for v in eigs))
    fourth_distinct = distinct[3] if len(distinct) >= 4 else eigs[-1]

    psp = p_star_prime(params)
    bound_c = -(params.gamma / R + 2.0 * m0) / (2.0 * math.pi * R * R)
    margin_c = bound_c - psp  # positive when (c) holds

    return HypothesisReport(
        holds_a=m0 <= params.zeta,
        margin_a=margin_a,
        holds_b_multiplicity=m0 < fourth_mult,
        margin_b_multiplicity=fourth_mult - m0,
        holds_b_distinct=m0 < fourth_distinct,
        margin_b_distinct=fourth_distinct - m0,
        holds_c=psp < bound_c,
        margin_c=margin_c,
        dM_dR=dM_dR(params, R),
    )
