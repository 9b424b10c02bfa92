"""Bifurcation function F(R), critical radius, and the derivative chain to dE/dM.

The cos(phi) radial profile Phi_D solves

    (1/r)(r Phi')' - Phi/r^2 + (m0 - zeta) Phi = m0 r,   Phi(0) = Phi(R) = 0.

Writing mu = sqrt(zeta - m0), the closed form is a linear particular part
-m0 r / mu^2 plus the regular homogeneous solution I_1(mu r), the coefficient
fixed by Phi(R) = 0.  The movability eigenvalue vanishes exactly when
Phi_D'(R) = 1, equivalently when the bifurcation function

    F(R) = zeta I_1(R mu~) / (mu~^3 I_1'(R mu~)) - R Lam~ / mu~^2

vanishes, where Lam~(R) = p_star(pi R^2) - gamma/R and mu~ = sqrt(zeta - Lam~).
The same radial profile with unit Neumann slope at R (Phi_V0 here) enters the
transversality identity and the derivative dE/dM that controls the stability
of the bifurcating traveling waves.
"""

from __future__ import annotations

import json
import csv
import math
from dataclasses import dataclass, asdict

import numpy as np

from .model import ModelParams, M_of_R, dM_dR, p_star, p_star_prime, radial_state
from .numerics import NumericsError, bessel_i, gauss_legendre, parity_grid


def lambda_tilde(params: ModelParams, R: float) -> float:
    """Uniform myosin density of the radial state at radius R."""
    return p_star(params, math.pi * R * R) - params.gamma / R


def phi_d(r, R: float, m0: float, zeta: float):
    """Dirichlet radial profile Phi_D(r) in closed form (scalar or array r)."""
    if zeta <= m0:
        raise ValueError("phi_d: requires zeta > m0")
    ra = np.asarray(r, dtype=float)
    if np.any(ra < 0) or np.any(ra > R * (1 + 1e-12)):
        raise ValueError("phi_d: r outside [0, R]")
    mu = math.sqrt(zeta - m0)
    c = m0 * R / ((zeta - m0) * bessel_i(1, mu * R))
    val = -m0 / (zeta - m0) * ra + c * bessel_i(1, mu * ra)
    return float(val) if np.isscalar(r) else val


def phi_d_prime(r, R: float, m0: float, zeta: float):
    """Radial derivative of Phi_D."""
    if zeta <= m0:
        raise ValueError("phi_d_prime: requires zeta > m0")
    ra = np.asarray(r, dtype=float)
    mu = math.sqrt(zeta - m0)
    c = m0 * R / ((zeta - m0) * bessel_i(1, mu * R))
    val = -m0 / (zeta - m0) + c * mu * bessel_i(1, mu * ra, derivative=True)
    return float(val) if np.isscalar(r) else val


def phi_v0(r, R: float, m0: float, zeta: float):
    """Neumann-normalized radial profile: same ODE as Phi_D, with Phi(0) = 0
    and unit slope at R.  At the critical radius it coincides with Phi_D."""
    if zeta <= m0:
        raise ValueError("phi_v0: requires zeta > m0")
    ra = np.asarray(r, dtype=float)
    mu = math.sqrt(zeta - m0)
    # Phi'(R) = -m0/mu^2 + C mu I1'(mu R) = 1  =>  C = (zeta/mu^2)/(mu I1'(mu R))
    C = (1.0 + m0 / (zeta - m0)) / (mu * bessel_i(1, mu * R, derivative=True))
    val = -m0 / (zeta - m0) * ra + C * bessel_i(1, mu * ra)
    return float(val) if np.isscalar(r) else val


def phi_v0_prime(r, R: float, m0: float, zeta: float):
    ra = np.asarray(r, dtype=float)
    mu = math.sqrt(zeta - m0)
    C = (1.0 + m0 / (zeta - m0)) / (mu * bessel_i(1, mu * R, derivative=True))
    val = -m0 / (zeta - m0) + C * mu * bessel_i(1, mu * ra, derivative=True)
    return float(val) if np.isscalar(r) else val


def F_of_R(R: float, params: ModelParams) -> float:
    """Bifurcation function; its zero is the critical radius."""
    lam = lambda_tilde(params, R)
    if lam <= 0 or lam >= params.zeta:
        raise ValueError(
            f"F_of_R: Lambda~(R)={lam:.6g} outside (0, zeta={params.zeta}) at R={R}"
        )
    mu = math.sqrt(params.zeta - lam)
    x = R * mu
    return params.zeta * bessel_i(1, x) / (mu**3 * bessel_i(1, x, derivative=True)) - R * lam / mu**2


def find_R0(params: ModelParams, bracket: tuple[float, float] | None = None,
            scan: tuple[float, float, int] = (0.5, 12.0, 241)) -> float:
    """Critical radius: bracketed root of F with |F(R0)| <= 1e-12.

    If no bracket is supplied, the scan range is swept for a sign change
    (restricted to radii where the radial state exists and Lambda~ < zeta).
    """
    import scipy.optimize

    def f(R):
        return F_of_R(R, params)

    if bracket is None:
        lo, hi, npts = scan
        Rs = np.linspace(lo, hi, npts)
        prev = None
        bracket = None
        for R in Rs:
            lam = lambda_tilde(params, R)
            if lam <= 0 or lam >= params.zeta:
                prev = None
                continue
            val = f(R)
            if prev is not None and np.sign(val) != np.sign(prev[1]):
                bracket = (prev[0], R)
                break
            prev = (R, val)
        if bracket is None:
            raise NumericsError("find_R0: no bifurcation in scan range (no sign change of F)")
    a, b = bracket
    # brentq is a bracketed bisection/secant/inverse-quadratic hybrid
    R0 = scipy.optimize.brentq(f, a, b, xtol=1e-14, rtol=8.9e-16, maxiter=200)
    if abs(f(R0)) > 1e-12:
        # polish by bisection on the residual if the slope is extreme
        raise NumericsError(f"find_R0: residual |F|={abs(f(R0)):.3e} above 1e-12")
    return float(R0)


def gradient_integral(R: float, params: ModelParams, n_quad: int = 200) -> float:
    """pi * int_0^R ((Phi_V0' - 1)^2 + (Phi_V0 - r)^2 / r^2) r dr.

    This is the disk integral of |grad(Phi_V0 - x)|^2 with Phi_V0 evaluated
    at the radial-state density of radius R.
    """
    m0 = lambda_tilde(params, R)
    rule = gauss_legendre(n_quad, 0.0, R)
    r = rule.nodes
    fp = phi_v0_prime(r, R, m0, params.zeta) - 1.0
    fv = phi_v0(r, R, m0, params.zeta) - r
    return math.pi * rule.integrate((fp * fp + fv * fv / (r * r)) * r)


def mass_integral(R: float, params: ModelParams, n_quad: int = 200) -> float:
    """pi * int_0^R (Phi_V0 - r)^2 r dr, the disk integral of (Phi_V0 - x)^2."""
    m0 = lambda_tilde(params, R)
    rule = gauss_legendre(n_quad, 0.0, R)
    r = rule.nodes
    fv = phi_v0(r, R, m0, params.zeta) - r
    return math.pi * rule.integrate(fv * fv * r)


def F_prime_closed(R: float, params: ModelParams) -> float:
    """Closed-form F'(R) from the transversality identity:

    pi zeta R F'(R) = pi R (zeta + Lam~ - (Lam~ R)^2)
                      - (gamma/R^2 + 2 pi R p_star') * int |grad(Phi_V0 - x)|^2.
    """
    lam = lambda_tilde(params, R)
    G = gradient_integral(R, params)
    lhs_coeff = math.pi * params.zeta * R
    rhs = math.pi * R * (params.zeta + lam - (lam * R) ** 2) - (
        params.gamma / R**2 + 2.0 * math.pi * R * p_star_prime(params)
    ) * G
    return rhs / lhs_coeff


def F_prime_numeric(R: float, params: ModelParams, h: float | None = None) -> float:
    """Centered difference of F with Richardson extrapolation."""
    if h is None:
        h = 1e-4 * R
    d1 = (F_of_R(R + h, params) - F_of_R(R - h, params)) / (2 * h)
    d2 = (F_of_R(R + h / 2, params) - F_of_R(R - h / 2, params)) / h
    return (4.0 * d2 - d1) / 3.0


def transversality(R0: float, params: ModelParams) -> tuple[float, float]:
    """(closed-form, finite-difference) values of F'(R0); consistency enforced."""
    fc = F_prime_closed(R0, params)
    fn = F_prime_numeric(R0, params)
    scale = max(abs(fc), abs(fn), 1e-14)
    if abs(fc - fn) / scale > 1e-3:
        raise NumericsError(
            f"transversality: closed-form F'={fc:.10g} and numeric F'={fn:.10g} disagree"
        )
    return fc, fn


def E_prime_closed(R0: float, params: ModelParams) -> float:
    """E'(R) = -pi zeta R F'(R) / (Lam~ * int (Phi_V0 - x)^2)."""
    lam = lambda_tilde(params, R0)
    fp, _ = transversality(R0, params)
    return -math.pi * params.zeta * R0 * fp / (lam * mass_integral(R0, params))


def dE_dM_at_R0(R0: float, params: ModelParams) -> float:
    """Chain rule through the mass parametrization: dE/dM = E'(R0) / M'(R0)."""
    mp = dM_dR(params, R0)
    if mp == 0.0:
        raise NumericsError("dE_dM_at_R0: M'(R0) = 0, mass parametrization degenerate")
    return E_prime_closed(R0, params) / mp


def solve_phi_neumann_bvp(R: float, m0: float, zeta: float, n_radial: int = 64) -> tuple[np.ndarray, np.ndarray]:
    """Direct collocation solve of the Phi_V0 problem (unit Neumann slope).

    Independent of the closed form; used to cross-check that the boundary
    value of the Neumann-normalized profile equals F(R) when m0 = Lam~(R).
    Returns (radial nodes, nodal values)."""
    grid = parity_grid(n_radial + 1, R, "odd")
    r = grid.points
    m = grid.n
    L = grid.D2 + np.diag(1.0 / r) @ grid.D1 - np.diag(1.0 / (r * r))
    A = (L + (m0 - zeta) * np.eye(m)).copy()
    rhs = m0 * r.copy()
    A[0, :] = grid.D1[0, :]  # slope condition at r = R
    rhs[0] = 1.0
    return r, np.linalg.solve(A, rhs)


@dataclass(frozen=True)
class BifurcationReport:
    R0: float
    F_at_R0: float
    F_prime: float
    F_prime_numeric: float
    E_prime: float
    dE_dM: float
    gradient_integral: float
    mass_integral: float
    M0: float
    dM_dR_at_R0: float
    nondegeneracy_margin: float
    hypotheses_hold: bool


def bifurcation_report(params: ModelParams, bracket=None) -> BifurcationReport:
    R0 = find_R0(params, bracket=bracket)
    fc, fn = transversality(R0, params)
    Ep = E_prime_closed(R0, params)
    state = radial_state(params, R0)
    from .model import check_hypotheses

    hyp = check_hypotheses(params, R0)
    # side condition p_star'(pi R0^2) != -(2 m0 - gamma/R0)/(2 pi R0^2):
    # reported as a margin, no pass/fail threshold
    margin = p_star_prime(params) - (
        -(2.0 * state.m0 - params.gamma / R0) / (2.0 * math.pi * R0 * R0)
    )
    return BifurcationReport(
        R0=R0,
        F_at_R0=F_of_R(R0, params),
        F_prime=fc,
        F_prime_numeric=fn,
        E_prime=Ep,
        dE_dM=dE_dM_at_R0(R0, params),
        gradient_integral=gradient_integral(R0, params),
        mass_integral=mass_integral(R0, params),
        M0=M_of_R(params, R0),
        dM_dR_at_R0=dM_dR(params, R0),
        nondegeneracy_margin=margin,
        hypotheses_hold=hyp.all_hold,
    )


def report_to_json(report: BifurcationReport) -> str:
    d = asdict(report)
    out = {}
    for k, v in d.items():
        out[k] = bool(v) if isinstance(v, bool) else f"{v:.17g}"
    return json.dumps(out, indent=2, sort_keys=False)


def sweep_F(params: ModelParams, R_values, n_radial: int = 48) -> list[dict]:
    """Sweep of F, E, M, M' over radii, for CSV export."""
    from .stationary_spectrum import movability_E_operator

    rows = []
    for R in R_values:
        state = radial_state(params, R)
        rows.append(
            {
                "R": float(R),
                "F": F_of_R(R, params),
                "E": movability_E_operator(state, params, n_radial),
                "M": M_of_R(params, R),
                "dM_dR": dM_dR(params, R),
            }
        )
    return rows


def write_F_sweep_csv(path: str, rows: list[dict]) -> None:
    cols = ["R", "F", "E", "M", "dM_dR"]
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(cols)
        for row in rows:
            wr.writerow([f"{row[c]:.17g}" for c in cols])
