"""Linear stability of the radial stationary state, one Fourier mode at a time.

Perturbations (m, rho) = (m_hat(r) cos(n phi), rho_hat cos(n phi)) evolve
under the block operator

    (A U)_m   = Lap m - m0 Lap phi        in the disk,
    (A U)_rho = d_r phi |_{r=R},

where phi solves Lap phi + m = zeta phi with the pressure-balance boundary
value; the nonlocal p_star' term enters only the n = 0 block.  The myosin
no-flux closure d_r m_hat(R) = 0 is eliminated into the matrix, as is phi.

The movability eigenvalue E(R) (largest nontrivial eigenvalue of the n = 1
block) is computed both from that operator matrix and, independently, as the
negative minimum of the Rayleigh quotient of the associated quadratic form
with a homogeneous-Dirichlet potential solve.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .model import ModelParams, RadialState, check_hypotheses, p_star_prime
from .numerics import (
    CollocationGrid,
    NumericsError,
    dense_eig,
    gauss_legendre,
    parity_grid,
    parity_interp,
)


@dataclass(frozen=True)
class ModeOperator:
    """Dense discretization of one Fourier block, size n_radial + 1.

    Unknowns: m_hat at the interior radial nodes (grid.points[1:]) followed
    by the boundary scalar rho_hat; the boundary value of m_hat is
    eliminated through the no-flux condition.
    """

    n: int
    R: float
    grid: CollocationGrid
    matrix: np.ndarray
    extend: np.ndarray  # interior m values -> all-node values (no-flux closure)


def _mode_parity(n: int) -> str:
    return "even" if n % 2 == 0 else "odd"


def _radial_laplacian(grid: CollocationGrid, n: int) -> np.ndarray:
    r = grid.points
    return grid.D2 + np.diag(1.0 / r) @ grid.D1 - n * n * np.diag(1.0 / (r * r))


def _phi_boundary_coeff(params: ModelParams, R: float, n: int) -> float:
    """Coefficient c_n with phi_hat(R) = c_n rho_hat."""
    if n == 0:
        return (2.0 * math.pi * R * p_star_prime(params) + params.gamma / R**2) / params.zeta
    return params.gamma * (1 - n * n) / (R * R * params.zeta)


def assemble_mode(state: RadialState, params: ModelParams, n: int, n_radial: int) -> ModeOperator:
    """Assemble the dense matrix of Fourier block n on n_radial + 1 unknowns."""
    if n_radial < 16:
        raise ValueError("assemble_mode: n_radial >= 16 required")
    R, m0 = state.R, state.m0
    grid = parity_grid(n_radial + 1, R, _mode_parity(n))
    m = grid.n
    L = _radial_laplacian(grid, n)

    # no-flux closure: boundary value of m_hat from d_r m_hat(R) = 0
    d0 = grid.D1[0, :]
    if abs(d0[0]) < 1e-14:
        raise NumericsError("assemble_mode: degenerate boundary derivative row")
    extend = np.zeros((m, m - 1))
    extend[0, :] = -d0[1:] / d0[0]
    extend[1:, :] = np.eye(m - 1)

    # Helmholtz elimination of phi: rows 1.. collocate (L - zeta) phi = -m,
    # row 0 pins the boundary value phi(R) = c_n rho
    H = np.empty((m, m))
    H[0, :] = 0.0
    H[0, 0] = 1.0
    H[1:, :] = (L - params.zeta * np.eye(m))[1:, :]
    Hinv = np.linalg.inv(H)
    Z = np.eye(m)
    Z[0, 0] = 0.0
    S_m = -Hinv @ Z  # phi nodal values from m nodal values
    c_n = _phi_boundary_coeff(params, R, n)
    s_rho = Hinv[:, 0] * c_n  # phi nodal values from rho

    A = np.zeros((m, m))  # rows: interior m nodes then rho; cols: same
    LmE = L @ extend
    LS = L @ S_m @ extend
    A[: m - 1, : m - 1] = (LmE - m0 * LS)[1:, :]
    A[: m - 1, m - 1] = (-m0 * (L @ s_rho))[1:]
    A[m - 1, : m - 1] = d0 @ (S_m @ extend)
    A[m - 1, m - 1] = d0 @ s_rho
    return ModeOperator(n=n, R=R, grid=grid, matrix=A, extend=extend)


@dataclass(frozen=True)
class EigReport:
    n: int
    eigenvalues: np.ndarray
    structural_zero_residuals: tuple
    E_value: float | None


def _structural_vectors(op: ModeOperator, params: ModelParams) -> list[np.ndarray]:
    """Exact zero eigenvectors known analytically for modes 0 and 1."""
    m = op.matrix.shape[0]
    vecs = []
    if op.n == 0:
        v = np.empty(m)
        v[:-1] = 2.0 * math.pi * op.R * p_star_prime(params) + params.gamma / op.R**2
        v[-1] = 1.0
        vecs.append(v)
    elif op.n == 1:
        v = np.zeros(m)
        v[-1] = 1.0
        vecs.append(v)
    return vecs


def mode_spectrum(op: ModeOperator, params: ModelParams) -> EigReport:
    pairs = dense_eig(op.matrix)
    w = np.array([p[0] for p in pairs])
    # conjugation closure
    for lam in w:
        if abs(lam.imag) > 1e-8 * max(1.0, abs(lam)):
            d = np.min(np.abs(w - np.conj(lam)))
            if d > 1e-8 * max(1.0, abs(lam)):
                raise NumericsError(f"mode_spectrum: eigenvalue {lam} lacks conjugate partner")
    residuals = []
    normA = np.linalg.norm(op.matrix)
    for v in _structural_vectors(op, params):
        residuals.append(float(np.linalg.norm(op.matrix @ v) / (normA * np.linalg.norm(v))))
    E = movability_E_from_operator(op) if op.n == 1 else None
    return EigReport(n=op.n, eigenvalues=w, structural_zero_residuals=tuple(residuals), E_value=E)


def movability_E_from_operator(op: ModeOperator) -> float:
    """E(R) from an assembled n = 1 block.

    For n = 1 the potential's boundary value is independent of rho (the
    gamma (1 - n^2) factor vanishes), so the rho column of the matrix is
    exactly zero: the block is lower triangular with the structural zero
    carried by (m_hat = 0, rho_hat = 1).  Removing that structural zero is
    therefore exact -- take the spectrum of the m-m subblock.  This is the
    eigenvector-projection rule evaluated in closed form; near R0, where a
    second eigenvalue approaches 0 and projections of nearly-degenerate
    eigenvectors mix, it stays well defined.
    """
    if op.n != 1:
        raise ValueError("movability E is defined on the n = 1 block")
    sub = op.matrix[:-1, :-1]
    pairs = dense_eig(sub)
    w = np.array([p[0] for p in pairs])
    i = int(np.argmax(w.real))
    lam = w[i]
    if abs(lam.imag) > 1e-7 * max(1.0, abs(lam.real)):
        raise NumericsError(f"movability E came out complex: {lam}")
    return float(lam.real)


def movability_E_operator(state: RadialState, params: ModelParams, n_radial: int) -> float:
    """Largest nontrivial eigenvalue of the n = 1 block (operator route)."""
    op = assemble_mode(state, params, 1, n_radial)
    return movability_E_from_operator(op)


def movability_E_rayleigh(state: RadialState, params: ModelParams, n_radial: int) -> float:
    """E(R) as minus the minimum of the quadratic-form Rayleigh quotient.

    Over trial densities m = m_hat(r) cos(phi), with the potential solved
    under homogeneous Dirichlet data, realized as the extreme eigenvalue of
    a symmetric generalized eigenproblem (stiffness vs mass).
    """
    R, m0, zeta = state.R, state.m0, params.zeta
    grid = parity_grid(n_radial + 1, R, "odd")
    m = grid.n
    r = grid.points
    L = _radial_laplacian(grid, 1)

    # Dirichlet potential solve: phi nodal values = Sd @ m nodal values
    H = np.empty((m, m))
    H[0, :] = 0.0
    H[0, 0] = 1.0
    H[1:, :] = (L - zeta * np.eye(m))[1:, :]
    Z = np.eye(m)
    Z[0, 0] = 0.0
    Sd = -np.linalg.inv(H) @ Z

    rule = gauss_legendre(2 * m, 0.0, R)
    P_odd = parity_interp(r, "odd", rule.nodes)   # the fields themselves
    P_even = parity_interp(r, "even", rule.nodes)  # their radial derivatives
    Wr = np.diag(rule.weights * rule.nodes)
    W_over_r = np.diag(rule.weights / rule.nodes)

    PD = P_even @ grid.D1
    Kgrad = PD.T @ Wr @ PD + P_odd.T @ W_over_r @ P_odd  # int (f'^2 + f^2/r^2) r dr
    Mass = P_odd.T @ Wr @ P_odd

    K = Kgrad - m0 * Mass + m0 * zeta * (Sd.T @ Kgrad @ Sd) + m0 * zeta**2 * (Sd.T @ Mass @ Sd)
    K = 0.5 * (K + K.T)
    Mass = 0.5 * (Mass + Mass.T)
    try:
        vals = scipy.linalg.eigh(K, Mass, eigvals_only=True)
    except scipy.linalg.LinAlgError as exc:
        raise NumericsError(f"movability_E_rayleigh: generalized eigensolve failed: {exc}")
    return float(-vals[0])


@dataclass(frozen=True)
class StabilityReport:
    applicable: bool
    zero_multiplicity: int
    E_value: float
    max_re_nonzero: float
    spectral_gap: float
    mode_max_re: tuple
    reports: tuple = field(repr=False, default=())


def verify_disk_stability(
    state: RadialState,
    params: ModelParams,
    n_modes: int = 16,
    n_radial: int = 64,
    zero_tol: float = 1e-6,
    E_tol: float = 1e-5,
) -> StabilityReport:
    """Aggregate the spectra of modes 0..n_modes around one radial state.

    cos modes only: the sin-mode blocks coincide with the cos blocks for
    n >= 1 (nonradial multiplicities double), so they are not re-derived.
    """
    hyp = check_hypotheses(params, state.R)
    reports = []
    zero_count = 0
    max_re_nonzero = -np.inf
    mode_max_re = []
    E_value = None
    scale = max(1.0, abs(state.m0), params.zeta)
    for n in range(n_modes + 1):
        rep = mode_spectrum(assemble_mode(state, params, n, n_radial), params)
        reports.append(rep)
        if rep.E_value is not None:
            E_value = rep.E_value
        w = rep.eigenvalues
        near_zero = np.abs(w) <= zero_tol * scale
        zero_count += int(np.sum(near_zero))
        rest = w[~near_zero]
        if rest.size:
            mode_max_re.append(float(np.max(rest.real)))
            max_re_nonzero = max(max_re_nonzero, mode_max_re[-1])
        else:
            mode_max_re.append(-np.inf)
    # E counts toward the zero multiplicity when it vanishes to tolerance but
    # was not already captured by the tighter |lambda| <= zero_tol test
    if zero_tol * scale < abs(E_value) <= E_tol:
        zero_count += 1
    nonzero = []
    for rep in reports:
        excluded_E = False
        for lam in rep.eigenvalues:
            if abs(lam) <= zero_tol * scale:
                continue
            if (
                rep.n == 1
                and not excluded_E
                and abs(lam - E_value) <= 1e-8 * max(1.0, abs(E_value))
            ):
                excluded_E = True  # E(R) itself is not one of the "other" eigenvalues
                continue
            nonzero.append(lam)
    nonzero = np.array(nonzero)
    gap = float(-np.max(nonzero.real)) if nonzero.size else np.inf
    return StabilityReport(
        applicable=hyp.all_hold,
        zero_multiplicity=zero_count,
        E_value=float(E_value),
        max_re_nonzero=float(np.max(nonzero.real)) if nonzero.size else -np.inf,
        spectral_gap=gap,
        mode_max_re=tuple(mode_max_re),
        reports=tuple(reports),
    )


def sweep_E(
    params: ModelParams,
    R_values,
    n_radial: int = 64,
    n_modes: int = 8,
) -> list[dict]:
    """R-sweep of the movability eigenvalue by both routes, for CSV export."""
    from .model import radial_state

    rows = []
    for R in R_values:
        state = radial_state(params, R)
        rep = verify_disk_stability(state, params, n_modes=n_modes, n_radial=n_radial)
        rows.append(
            {
                "R": float(R),
                "E_operator": movability_E_operator(state, params, n_radial),
                "E_rayleigh": movability_E_rayleigh(state, params, n_radial),
                "max_re_nonzero": rep.max_re_nonzero,
                "zero_multiplicity": rep.zero_multiplicity,
            }
        )
    return rows


def write_sweep_csv(path: str, rows: list[dict]) -> None:
    cols = ["R", "E_operator", "E_rayleigh", "max_re_nonzero", "zero_multiplicity"]
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(cols)
        for row in rows:
            out = []
            for c in cols:
                v = row[c]
                out.append(str(v) if isinstance(v, int) else f"{v:.17g}")
            wr.writerow(out)
