"""Spectrum of the linearization around a traveling wave.

Discretizes the linear evolution operator A(V) acting on perturbation pairs
(m, rho) — myosin perturbation in the domain, signed-normal boundary
perturbation — around a converged traveling wave.  The potential
perturbation phi is eliminated through a dense solve of

    Lap phi + m = zeta phi        in Omega,
    zeta (phi + V nu_x rho) = p_star'(|Omega|) Int rho ds
                              + gamma (rho'' + kappa^2 rho)  on the boundary,

and the boundary myosin values are eliminated through the flux closure

    d_nu m = -Lambda e^{Phi - Vx} (d2_nunu Phi rho
                                   - (d_tau Phi + V nu_y) rho'),

so the final matrix acts on (m at interior mapped-grid nodes, rho at the
boundary angular nodes).  The remaining blocks are

    (A(m, rho))_m   = Lap m + V dx m - div(Lambda e^{Phi-Vx} grad phi)
                      - div(m grad Phi),
    (A(m, rho))_rho = d_nu phi + d2_nunu Phi rho
                      - (d_tau Phi + V nu_y) rho',

with rho-derivatives taken in arc length.  The angular direction uses a
periodic (Fourier) grid on the full circle; the reflection-symmetric (even)
subspace is obtained by restricting the full matrix to mirror-symmetric
vectors, which is exact because the traveling wave is symmetric in y.

The discrete adjoint is the transpose under the quadrature pairing
Int m mt dxdy + Int rho rhot ds, realized as W^-1 A^T W with diagonal
weights; the textbook adjoint formulas are validation targets, not the
construction.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .bifurcation import dE_dM_at_R0, gradient_integral, mass_integral, phi_v0
from .model import ModelParams, p_star_prime, radial_state
from .numerics import NumericsError, dense_eig, interp_matrix
from .traveling_wave import Branch, TravelingWave, curvature, solve_tw


def _parallel_map(fn, items):
    """Ordered parallel map; MOTILITY_THREADS caps the worker count."""
    items = list(items)
    if len(items) <= 1:
        return [fn(x) for x in items]
    env = os.environ.get("MOTILITY_THREADS")
    workers = int(env) if env else (os.cpu_count() or 1)
    workers = max(1, min(workers, len(items)))
    if workers == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def fourier_diff_matrices(n: int):
    """First and second differentiation matrices on n equispaced nodes
    over [0, 2 pi) (n even)."""
    if n % 2 or n < 4:
        raise ValueError("fourier_diff_matrices: need even n >= 4")
    h = 2.0 * math.pi / n
    j = np.arange(n)
    off = j[:, None] - j[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        D1 = 0.5 * (-1.0) ** off / np.tan(0.5 * h * off)
        D2 = -0.5 * (-1.0) ** off / np.sin(0.5 * h * off) ** 2
    np.fill_diagonal(D1, 0.0)
    np.fill_diagonal(D2, -math.pi**2 / (3 * h**2) - 1.0 / 6.0)
    return D1, D2


@dataclass(frozen=True)
class _Geometry:
    """Flattened discrete geometry of the mapped traveling-wave domain."""

    tw: TravelingWave
    phi_nodes: np.ndarray  # full-circle angular nodes
    s: np.ndarray  # radial nodes, s[0] = 1
    D1a: np.ndarray
    D2a: np.ndarray
    g: np.ndarray
    gp: np.ndarray
    gpp: np.ndarray
    a: np.ndarray
    J: np.ndarray  # arc-length density sqrt(g^2 + g'^2)
    kappa: np.ndarray
    nu_x: np.ndarray
    nu_y: np.ndarray
    Phi: np.ndarray  # (n_r, n_a) potential mirrored to the full circle
    Phi_x: np.ndarray
    Phi_y: np.ndarray
    E: np.ndarray  # e^{Phi - Vx}
    X: np.ndarray
    Y: np.ndarray
    w_area: np.ndarray  # (n_r, n_a), zero on the boundary row
    w_arc: np.ndarray


def _geometry_full(tw: TravelingWave) -> _Geometry:
    ctx = tw.ctx
    K = ctx.n_a
    n_f = 2 * (K - 1)
    phi = np.arange(n_f) * 2.0 * math.pi / n_f
    D1a, D2a = fourier_diff_matrices(n_f)
    k = np.arange(K)
    C = np.cos(np.outer(phi, k))
    c = tw.rho_modes
    g = ctx.R0 + C @ c
    gp = -(np.sin(np.outer(phi, k)) * k) @ c
    gpp = -(C * k**2) @ c
    a = gp / g
    J = np.sqrt(g * g + gp * gp)
    kap = curvature(g, gp, gpp)
    sq = np.sqrt(1.0 + a * a)
    nux = (np.cos(phi) + a * np.sin(phi)) / sq
    nuy = (np.sin(phi) - a * np.cos(phi)) / sq

    mirror = np.minimum(np.arange(n_f), n_f - np.arange(n_f))
    Phi = tw.phi[:, mirror]
    s = ctx.grid.points
    X = s[:, None] * (g * np.cos(phi))[None, :]
    Y = s[:, None] * (g * np.sin(phi))[None, :]
    E = np.exp(Phi - tw.V * X)

    # Cartesian gradient of the background potential via the mapped chain rule
    Phi_s = ctx.grid.D1 @ Phi
    Phi_p = Phi @ D1a.T
    Phi_r = Phi_s / g[None, :]
    Phi_th = (Phi_p - s[:, None] * a[None, :] * Phi_s) / (s[:, None] * g[None, :])
    Phi_x = np.cos(phi)[None, :] * Phi_r - np.sin(phi)[None, :] * Phi_th
    Phi_y = np.sin(phi)[None, :] * Phi_r + np.cos(phi)[None, :] * Phi_th

    w_ang = 2.0 * math.pi / n_f
    w_area = np.zeros((len(s), n_f))
    w_area[1:, :] = ctx.gl_weights[:, None] * s[1:, None] * (g * g)[None, :] * w_ang
    w_arc = w_ang * J
    return _Geometry(tw=tw, phi_nodes=phi, s=s, D1a=D1a, D2a=D2a, g=g, gp=gp,
                     gpp=gpp, a=a, J=J, kappa=kap, nu_x=nux, nu_y=nuy, Phi=Phi,
                     Phi_x=Phi_x, Phi_y=Phi_y, E=E, X=X, Y=Y,
                     w_area=w_area, w_arc=w_arc)


@dataclass(frozen=True)
class LinearizedOperator:
    tw: TravelingWave
    matrix: np.ndarray
    symmetry_subspace: str  # "even" | "full"
    weights: np.ndarray  # quadrature pairing weights on the unknown vector
    geom: _Geometry = field(repr=False, compare=False, default=None)

    @property
    def n_rho(self) -> int:
        n_f = len(self.geom.phi_nodes)
        return n_f if self.symmetry_subspace == "full" else n_f // 2 + 1

    def pair(self, u: np.ndarray, w: np.ndarray) -> float:
        return float(np.dot(self.weights * u, w))

    def norm(self, u: np.ndarray) -> float:
        return math.sqrt(float(np.dot(self.weights * u, u)))

    def adjoint_matrix(self) -> np.ndarray:
        w = self.weights
        return (self.matrix.T * w[None, :]) / w[:, None]


def _assemble_full(tw: TravelingWave):
    """Dense full-circle operator on (m interior, rho) with phi eliminated."""
    geo = _geometry_full(tw)
    p = tw.ctx.params
    zeta, gamma = p.zeta, p.gamma
    Lam, V = tw.Lambda, tw.V
    n_r = len(geo.s)
    n_f = len(geo.phi_nodes)
    T = n_r * n_f
    n_i = T - n_f  # interior myosin unknowns

    s = geo.s
    g, a = geo.g, geo.a
    ap = geo.gpp / g - a * a

    Ia, Ir = np.eye(n_f), np.eye(n_r)
    Ls = np.kron(tw.ctx.grid.D1, Ia)
    Lss = np.kron(tw.ctx.grid.D2, Ia)
    Lp = np.kron(Ir, geo.D1a)
    Lpp = np.kron(Ir, geo.D2a)
    Lsp = Ls @ Lp

    s_flat = np.repeat(s, n_f)
    g_flat = np.tile(g, n_r)
    a_flat = np.tile(a, n_r)
    ap_flat = np.tile(ap, n_r)
    cos_flat = np.tile(np.cos(geo.phi_nodes), n_r)
    sin_flat = np.tile(np.sin(geo.phi_nodes), n_r)

    inv_g2 = 1.0 / (g_flat * g_flat)
    LAP = (
        ((1.0 + a_flat**2) * inv_g2)[:, None] * Lss
        + ((1.0 + a_flat**2 - ap_flat) * inv_g2 / s_flat)[:, None] * Ls
        + (inv_g2 / s_flat**2)[:, None] * Lpp
        + (-2.0 * a_flat * inv_g2 / s_flat)[:, None] * Lsp
    )
    Dr = (1.0 / g_flat)[:, None] * Ls
    Dthor = (1.0 / (s_flat * g_flat))[:, None] * Lp - (a_flat / g_flat)[:, None] * Ls
    DX = cos_flat[:, None] * Dr - sin_flat[:, None] * Dthor
    DY = sin_flat[:, None] * Dr + cos_flat[:, None] * Dthor

    bnd = np.arange(n_f)  # boundary = radial row 0
    interior = np.arange(n_f, T)

    sq = np.sqrt(1.0 + a * a)
    Nmat = (((1.0 + a * a) / (g * sq))[:, None] * Ls[bnd, :]
            - (a / (g * sq))[:, None] * Lp[bnd, :])

    Dtau = (1.0 / geo.J)[:, None] * geo.D1a
    # second arc-length derivative written on single-application Fourier
    # matrices: composing two first-derivative matrices silently zeroes the
    # angular Nyquist mode and produces a spurious eigenvalue
    Jp = (geo.g * geo.gp + geo.gp * geo.gpp) / geo.J
    Ds2_arc = (1.0 / geo.J**2)[:, None] * geo.D2a - (Jp / geo.J**3)[:, None] * geo.D1a

    Phi_flat = geo.Phi.ravel()
    E_flat = geo.E.ravel()
    Phi_x = geo.Phi_x.ravel()
    Phi_y = geo.Phi_y.ravel()
    w_x = Phi_x - V
    w_y = Phi_y
    lap_Phi = zeta * Phi_flat - Lam * E_flat  # the traveling-wave equation

    Phi_b = geo.Phi[0, :]
    E_b = geo.E[0, :]
    dtau_Phi = Dtau @ Phi_b
    d2nn_Phi = zeta * Phi_b - Lam * E_b - geo.kappa * V * geo.nu_x - Ds2_arc @ Phi_b
    Q = np.diag(d2nn_Phi) - (dtau_Phi + V * geo.nu_y)[:, None] * Dtau

    # phi elimination: interior rows of (LAP - zeta) plus Dirichlet closure
    H = np.empty((T, T))
    H[interior, :] = LAP[interior, :] - zeta * np.eye(T)[interior, :]
    H[bnd, :] = 0.0
    H[bnd, bnd] = 1.0
    D_bc = (
        (p_star_prime(p) / zeta) * np.tile(geo.w_arc, (n_f, 1))
        + (gamma / zeta) * (Ds2_arc + np.diag(geo.kappa**2))
        - V * np.diag(geo.nu_x)
    )
    rhs = np.zeros((T, n_i + n_f))
    rhs[interior, :n_i] = -np.eye(n_i)
    rhs[bnd, n_i:] = D_bc
    try:
        phi_map = scipy.linalg.lu_solve(scipy.linalg.lu_factor(H), rhs)
    except scipy.linalg.LinAlgError as exc:
        raise NumericsError(f"assemble_A: singular potential elimination: {exc}")

    # boundary-myosin elimination through the flux closure
    N_b = Nmat[:, bnd]
    N_i = Nmat[:, interior]
    rhs_m = np.hstack([-N_i, -(E_b * Lam)[:, None] * Q])
    try:
        G = scipy.linalg.solve(N_b, rhs_m)
    except scipy.linalg.LinAlgError as exc:
        raise NumericsError(f"assemble_A: singular myosin flux closure: {exc}")
    m_map = np.zeros((T, n_i + n_f))
    m_map[interior, :n_i] = np.eye(n_i)
    m_map[bnd, :] = G

    op_m = (
        LAP
        + V * DX
        - Phi_x[:, None] * DX
        - Phi_y[:, None] * DY
        - np.diag(lap_Phi)
    )
    op_phi = -(Lam * E_flat)[:, None] * (LAP + w_x[:, None] * DX + w_y[:, None] * DY)

    A = np.empty((n_i + n_f, n_i + n_f))
    A[:n_i, :] = (op_m @ m_map + op_phi @ phi_map)[interior, :]
    A[n_i:, :] = Nmat @ phi_map
    A[n_i:, n_i:] += Q

    weights = np.concatenate([geo.w_area[1:, :].ravel(), geo.w_arc])
    return A, weights, geo


def _even_maps(n_r: int, n_f: int):
    """Embedding/restriction between mirror-symmetric full-circle vectors
    and their values on the closed half circle (K = n_f/2 + 1 nodes)."""
    K = n_f // 2 + 1
    mirror = np.minimum(np.arange(n_f), n_f - np.arange(n_f))
    Ea = np.zeros((n_f, K))
    Ea[np.arange(n_f), mirror] = 1.0
    Ra = np.zeros((K, n_f))
    Ra[np.arange(K), np.arange(K)] = 1.0
    n_i = (n_r - 1) * n_f
    emb = scipy.linalg.block_diag(np.kron(np.eye(n_r - 1), Ea), Ea)
    res = scipy.linalg.block_diag(np.kron(np.eye(n_r - 1), Ra), Ra)
    return emb, res


def assemble_A(tw: TravelingWave, subspace: str = "even") -> LinearizedOperator:
    """Discretize the linearized operator around a traveling wave.

    subspace "even" restricts to perturbations symmetric in y (the natural
    class for the pitchfork branch); "full" keeps the whole circle.
    """
    if subspace not in ("even", "full"):
        raise ValueError("assemble_A: subspace must be 'even' or 'full'")
    A, weights, geo = _assemble_full(tw)
    if subspace == "full":
        return LinearizedOperator(tw=tw, matrix=A, symmetry_subspace="full",
                                  weights=weights, geom=geo)
    n_r = len(geo.s)
    n_f = len(geo.phi_nodes)
    emb, res = _even_maps(n_r, n_f)
    A_even = res @ A @ emb
    w_even = emb.T @ weights
    return LinearizedOperator(tw=tw, matrix=A_even, symmetry_subspace="even",
                              weights=w_even, geom=geo)


def _reduce(op: LinearizedOperator, m_field: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """Pack an (m on the full grid, rho on the full circle) pair into the
    reduced unknown vector of the operator's subspace."""
    n_f = len(op.geom.phi_nodes)
    if op.symmetry_subspace == "full":
        return np.concatenate([m_field[1:, :].ravel(), rho])
    K = n_f // 2 + 1
    return np.concatenate([m_field[1:, :K].ravel(), rho[:K]])


def _split(op: LinearizedOperator, u: np.ndarray):
    n_rho = op.n_rho
    return u[:-n_rho], u[-n_rho:]


def kernel_vectors(op: LinearizedOperator) -> dict:
    """Symmetry kernel elements as reduced vectors.

    W1 (x-shift) lives in both subspaces; W3 (y-shift) and W4 (rotation,
    1/V-scaled generalized vector paired with W3) only in the full space.
    """
    geo = op.geom
    tw = op.tw
    Lam, V = tw.Lambda, tw.V
    m1 = -Lam * geo.E * (geo.Phi_x - V)
    out = {"W1": _reduce(op, m1, geo.nu_x)}
    if op.symmetry_subspace == "full":
        m3 = -Lam * geo.E * geo.Phi_y
        out["W3"] = _reduce(op, m3, geo.nu_y)
        if V != 0.0:
            m4 = (Lam / V) * geo.E * (geo.Y * (geo.Phi_x - V) - geo.X * geo.Phi_y)
            g = geo.g
            x_b = g * np.cos(geo.phi_nodes)
            y_b = g * np.sin(geo.phi_nodes)
            rho4 = (x_b * geo.nu_y - y_b * geo.nu_x) / V
            out["W4"] = _reduce(op, m4, rho4)
    return out


def _interp_to_radii(values: np.ndarray, nodes: np.ndarray, s_new: np.ndarray) -> np.ndarray:
    """Barycentric interpolation of a radial profile to new radii."""
    return interp_matrix(nodes, s_new) @ values


def w2_vector(op: LinearizedOperator, fd_step: float | None = None) -> np.ndarray:
    """Generalized eigenvector W2 = d/dV (traveling wave) by centered
    differences at fixed physical points, including the signed-normal
    reparametrization of the boundary."""
    tw_c = op.tw
    V = tw_c.V
    if fd_step is None:
        fd_step = 1e-3
    geo = op.geom
    ctx = tw_c.ctx
    params = ctx.params
    n_f = len(geo.phi_nodes)
    mirror = np.minimum(np.arange(n_f), n_f - np.arange(n_f))
    k = np.arange(ctx.n_a)
    cos_k = np.cos(np.outer(geo.phi_nodes, k))

    def myosin_at_fixed_points(wave: TravelingWave) -> np.ndarray:
        g_new = ctx.R0 + cos_k @ wave.rho_modes
        out = np.empty((len(geo.s), n_f))
        for j in range(n_f):
            s_new = geo.s * geo.g[j] / g_new[j]
            phi_col = _interp_to_radii(wave.phi[:, mirror[j]], geo.s, s_new)
            x_fixed = geo.s * geo.g[j] * math.cos(geo.phi_nodes[j])
            out[:, j] = wave.Lambda * np.exp(phi_col - wave.V * x_fixed)
        return out

    def normal_distance(wave: TravelingWave) -> np.ndarray:
        g_new_of = lambda th: ctx.R0 + np.cos(np.outer(np.atleast_1d(th), k)) @ wave.rho_modes
        t = np.zeros(n_f)
        for j in range(n_f):
            px = geo.g[j] * math.cos(geo.phi_nodes[j])
            py = geo.g[j] * math.sin(geo.phi_nodes[j])
            tj = 0.0
            for _ in range(30):
                qx, qy = px + tj * geo.nu_x[j], py + tj * geo.nu_y[j]
                r = math.hypot(qx, qy)
                th = math.atan2(qy, qx)
                f = r - float(g_new_of(th)[0])
                if abs(f) < 1e-13:
                    break
                tj -= f  # the normal is near-radial; unit-slope iteration
            t[j] = tj
        return t

    wp = solve_tw(params, ctx.R0, V + fd_step, initial_guess=tw_c)
    wm = solve_tw(params, ctx.R0, V - fd_step, initial_guess=tw_c)
    m2 = (myosin_at_fixed_points(wp) - myosin_at_fixed_points(wm)) / (2 * fd_step)
    rho2 = (normal_distance(wp) - normal_distance(wm)) / (2 * fd_step)
    return _reduce(op, m2, rho2)


def kernel_residuals(tw: TravelingWave, op: LinearizedOperator,
                     fd_step: float | None = None) -> dict:
    """Relative residuals of the symmetry kernel and Jordan relations."""
    vecs = kernel_vectors(op)
    A = op.matrix
    out = {}
    W1 = vecs["W1"]
    out["W1"] = op.norm(A @ W1) / op.norm(W1)
    W2 = w2_vector(op, fd_step)
    out["W2"] = op.norm(A @ W2 - W1) / op.norm(W2)
    if "W3" in vecs:
        W3 = vecs["W3"]
        out["W3"] = op.norm(A @ W3) / op.norm(W3)
        if "W4" in vecs:
            W4 = vecs["W4"]
            out["W4"] = op.norm(A @ W4 - W3) / op.norm(W4)
    return out


def _structural_span(op: LinearizedOperator, fd_step: float | None = None) -> np.ndarray:
    vecs = kernel_vectors(op)
    cols = [vecs["W1"], w2_vector(op, fd_step)]
    if op.symmetry_subspace == "full":
        cols.append(vecs["W3"])
        if "W4" in vecs:
            cols.append(vecs["W4"])
    S = np.column_stack(cols)
    sw = np.sqrt(op.weights)
    Q, _ = np.linalg.qr(sw[:, None] * S)
    return Q


def delta_at_zero(branch: Branch, subspace: str = "even", zero_tol: float = 1e-4) -> float:
    """Half the smallest non-small |eigenvalue| at V = 0, frozen for the
    whole branch (the expected small count is 3 even / 5 full at R = R0)."""
    op0 = assemble_A(branch.waves[0], subspace)
    lams = np.array([lam for lam, _ in dense_eig(op0.matrix, residual_tol=1e-5)])
    nonsmall = np.abs(lams)[np.abs(lams) > zero_tol]
    if len(nonsmall) == 0:
        raise NumericsError("delta_at_zero: no eigenvalues outside the zero cluster")
    return 0.5 * float(np.min(nonsmall))


@dataclass
class SpectrumReport:
    V: float
    subspace: str
    delta: float
    delta_count: int
    count_expected: bool
    eigenvalues_near_zero: list
    lambda_V: complex
    lambda_asymptotic: float
    lambda_hat_formula: float
    kernel_residuals: dict
    k0: float
    A_const: float
    B_const: float
    alpha: float
    adjoint_norm_scaling: float
    eigenvector: np.ndarray = field(repr=False, compare=False, default=None)


def asymptotic_lambda(V: float, dE_dM: float, M_prime_V: float) -> float:
    """Leading-order eigenvalue: -dE/dM * V * M'(V)."""
    return -dE_dM * V * M_prime_V


def adjoint_constants(R0: float, params: ModelParams) -> dict:
    """Constants of the adjoint generalized-eigenvector construction and the
    two coefficient cancellations that validate them.

    The second cancellation is the identity
    m0 + 3 gamma A/(zeta R^2) + gamma B/(zeta R^2)
       + 2 pi R p_star' B/zeta + m0 k0 = 0,
    which holds at the critical radius (verified to machine precision across
    parameter families); see the B formula's shared denominator.
    """
    st = radial_state(params, R0)
    m0, zeta, gamma = st.m0, params.zeta, params.gamma
    psp = p_star_prime(params)
    dEdM = dE_dM_at_R0(R0, params)
    mass = mass_integral(R0, params)
    k0 = m0 * dEdM * mass
    A_const = R0**2 * zeta / (6.0 * gamma) * (zeta - m0 - m0**2 * R0**2)
    denom = -gamma / R0**2 - 2.0 * math.pi * R0 * psp
    B_const = 0.5 * zeta * (2.0 * k0 * m0 + m0 - m0**2 * R0**2 + zeta) / denom
    bracket1 = (m0**2 * R0**2 - m0) + 2.0 * m0 - zeta + 6.0 * gamma * A_const / (zeta * R0**2)
    bracket2 = (
        m0
        + 3.0 * gamma * A_const / (zeta * R0**2)
        + gamma * B_const / (zeta * R0**2)
        + 2.0 * math.pi * R0 * psp * B_const / zeta
        + m0 * k0
    )
    return {
        "k0": k0,
        "A_const": A_const,
        "B_const": B_const,
        "cancellation_residuals": {"bracket1": bracket1, "bracket2": bracket2},
    }


def alpha_of_lambda_hat(lambda_hat: float, R0: float, params: ModelParams) -> float:
    """Amplitude of the generalized-eigenvector admixture in the eigenvector
    ansatz, from the linear solvability relation (quadratic in lambda_hat)."""
    st = radial_state(params, R0)
    m0, zeta, gamma = st.m0, params.zeta, params.gamma
    psp = p_star_prime(params)
    grad = gradient_integral(R0, params)
    mass = mass_integral(R0, params)
    bracket = (-gamma / R0**2 - 2.0 * math.pi * R0 * psp) * grad - math.pi * R0 * (
        (m0 * R0) ** 2 - m0 - zeta
    )
    scale = abs(gamma / R0**2 * grad) + math.pi * R0 * (1.0 + zeta)
    if abs(bracket) <= 1e-12 * scale:
        raise NumericsError("alpha_of_lambda_hat: degenerate solvability bracket")
    return -(lambda_hat**2) * m0 * mass / bracket


def adjoint_w1star(op: LinearizedOperator) -> np.ndarray:
    """The adjoint kernel element (1 in the domain, Lambda e^{Phi-Vx} on the
    boundary), tied to conservation of total myosin."""
    geo = op.geom
    ones = np.ones_like(geo.E)
    rho_part = op.tw.Lambda * geo.E[0, :]
    return _reduce(op, ones, rho_part)


def adjoint_kernel_weak_residual(op: LinearizedOperator) -> float:
    """Myosin-conservation defect of the discrete adjoint kernel.

    W1* annihilates A only through the quadrature pairing (the transpose
    adjoint applied to W1* is rough node-by-node and does not converge in the
    strong norm), so the convergent statement is |<A u, W1*>| / (|A u| |W1*|)
    for a fixed smooth test perturbation u; this decreases under refinement.
    """
    geo = op.geom
    W1s = adjoint_w1star(op)
    m = np.exp(0.2 * geo.X) * np.cos(0.3 * geo.Y)
    rho = np.cos(geo.phi_nodes) + 0.4 * np.cos(2.0 * geo.phi_nodes)
    u = _reduce(op, m, rho)
    Au = op.matrix @ u
    return abs(op.pair(Au, W1s)) / (op.norm(Au) * op.norm(W1s))


def adjoint_jordan_solve(op: LinearizedOperator, delta: float):
    """Solve A* W = W1* in the complement of the adjoint zero cluster.

    The translation (and, in the full space, rotation) symmetries give the
    discrete adjoint a numerically split Jordan cluster at zero; its members
    are the smallest-magnitude delta-disk eigenvalues, well separated from
    the slow physical eigenvalue.  An ordered Schur decomposition moves that
    cluster to the leading block and the system is solved exactly on the
    complementary invariant subspace, which stays well conditioned even
    though the cluster eigenvectors are nearly parallel.  Returns
    (W, weak residual of A* W1*, see adjoint_kernel_weak_residual).
    """
    Aast = op.adjoint_matrix()
    W1s = adjoint_w1star(op)
    res_w1s = adjoint_kernel_weak_residual(op)
    n_drop = 2 if op.symmetry_subspace == "even" else 4
    mags = np.sort(np.abs(scipy.linalg.eigvals(Aast)))
    disk = mags[mags < delta]
    if len(disk) < n_drop + 1:
        raise NumericsError("adjoint_jordan_solve: zero cluster not resolved")
    if disk[n_drop] <= 4.0 * disk[n_drop - 1]:
        raise NumericsError(
            "adjoint_jordan_solve: zero cluster not separated from the slow "
            "eigenvalue (V too small for this resolution)")
    tau = math.sqrt(disk[n_drop - 1] * disk[n_drop])
    T, Q, k = scipy.linalg.schur(Aast, output="complex",
                                 sort=lambda z: abs(z) < tau)
    if k != n_drop:
        raise NumericsError("adjoint_jordan_solve: Schur reordering failed")
    b = Q.conj().T @ W1s
    # The complement block is regular; the cluster block T11 is a perturbed
    # nilpotent of rank k/2 (size-2 Jordan blocks), inverted by a truncated
    # pseudoinverse that picks the minimal-norm generalized eigenvector.
    w_tail = scipy.linalg.solve_triangular(T[k:, k:], b[k:])
    rhs_head = b[:k] - T[:k, k:] @ w_tail
    U, sv, Vh = np.linalg.svd(T[:k, :k])
    rank = k // 2
    w_head = Vh[:rank].conj().T @ ((U[:, :rank].conj().T @ rhs_head) / sv[:rank])
    W = Q[:, :k] @ w_head + Q[:, k:] @ w_tail
    if np.max(np.abs(W.imag)) > 1e-6 * np.max(np.abs(W.real)):
        raise NumericsError("adjoint_jordan_solve: non-real Jordan solution")
    return W.real, res_w1s


def adjoint_scaling_check(branch: Branch, subspace: str = "even",
                          n_points: int = 4) -> dict:
    """Blow-up rate of the adjoint generalized eigenvector along the branch.

    Fits log ||W|| against log V over the smallest n_points positive branch
    velocities; the expected exponent is -1.  Also reports ||W|| V k0 at the
    smallest V, whose limit is the weighted norm of the leading ansatz term
    (Phi_V0 - x, 0).
    """
    waves = [w for w in branch.waves if w.V > 0][:n_points]
    if len(waves) < 3:
        raise ValueError("adjoint_scaling_check: need >= 3 positive-V branch points")
    delta = delta_at_zero(branch, subspace)
    consts = adjoint_constants(branch.R0, branch.params)

    def norm_at(wave):
        op = assemble_A(wave, subspace)
        W, res = adjoint_jordan_solve(op, delta)
        return op.norm(W), res

    results = _parallel_map(norm_at, waves)
    norms = np.array([n for n, _ in results])
    kernel_res = max(r for _, r in results)
    Vs = np.array([w.V for w in waves])
    slope = float(np.polyfit(np.log(Vs), np.log(norms), 1)[0])
    limit_norm = math.sqrt(mass_integral(branch.R0, branch.params))
    scaled = norms * Vs * consts["k0"]
    return {
        "slope": slope,
        "V": Vs,
        "norms": norms,
        "scaled_norms": scaled,
        "limit_norm": limit_norm,
        "limit_ratio": float(scaled[0] / limit_norm),
        "kernel_weak_residual": kernel_res,
    }


def _lambda_report(wave: TravelingWave, subspace: str, delta: float,
                   dE_dM: float, M_prime, lambda_hat: float, consts: dict,
                   fd_step: float | None, with_adjoint: bool) -> SpectrumReport:
    op = assemble_A(wave, subspace)
    pairs = dense_eig(op.matrix, residual_tol=1e-5)
    lams = np.array([lam for lam, _ in pairs])
    disk_idx = [i for i, (lam, _) in enumerate(pairs) if abs(lam) < delta]
    expected = 3 if subspace == "even" else 5
    count_ok = len(disk_idx) == expected

    Q = _structural_span(op, fd_step)
    sw = np.sqrt(op.weights)
    overlaps = []
    for i in disk_idx:
        v = sw * pairs[i][1]
        v = v / np.linalg.norm(v)
        overlaps.append(np.linalg.norm(Q.conj().T @ v))
    order = np.argsort(overlaps)[::-1]
    n_struct = min(expected - 1, max(len(disk_idx) - 1, 0))
    struct = set(np.array(disk_idx)[order[:n_struct]]) if disk_idx else set()
    rest = [i for i in disk_idx if i not in struct]
    if not rest:
        raise NumericsError(f"lambda_of_V: no candidate eigenvalue at V={wave.V}")
    i_lam = max(rest, key=lambda i: abs(pairs[i][0]))
    lam_V, vec = pairs[i_lam]
    vec = vec / op.norm(np.abs(vec))
    _, rho_part = _split(op, vec)
    n_rho = op.n_rho
    phis = op.geom.phi_nodes[:n_rho]
    warc = op.weights[-n_rho:]
    cos_coeff = float(np.real(np.dot(warc * np.cos(phis), rho_part)))
    if cos_coeff < 0:
        vec = -vec

    kres = kernel_residuals(wave, op, fd_step)
    lam_asym = asymptotic_lambda(wave.V, dE_dM, M_prime(wave.V))
    adj_scaling = float("nan")
    if with_adjoint:
        W, _ = adjoint_jordan_solve(op, delta)
        adj_scaling = op.norm(W) * wave.V * consts["k0"]
    return SpectrumReport(
        V=wave.V,
        subspace=subspace,
        delta=delta,
        delta_count=len(disk_idx),
        count_expected=count_ok,
        eigenvalues_near_zero=[complex(lams[i]) for i in disk_idx],
        lambda_V=complex(lam_V),
        lambda_asymptotic=lam_asym,
        lambda_hat_formula=lambda_hat,
        kernel_residuals=kres,
        k0=consts["k0"],
        A_const=consts["A_const"],
        B_const=consts["B_const"],
        alpha=alpha_of_lambda_hat(lambda_hat, op.tw.ctx.R0, op.tw.ctx.params),
        adjoint_norm_scaling=adj_scaling,
        eigenvector=vec,
    )


def lambda_of_V(branch: Branch, subspace: str = "even", delta: float | None = None,
                fd_step: float | None = None, with_adjoint: bool = False) -> list:
    """SpectrumReport for every positive-V point of the branch."""
    from .traveling_wave import mass_derivatives

    if delta is None:
        delta = delta_at_zero(branch, subspace)
    M_prime, M_dd0, _ = mass_derivatives(branch)
    dEdM = dE_dM_at_R0(branch.R0, branch.params)
    lambda_hat = -dEdM * M_dd0
    consts = adjoint_constants(branch.R0, branch.params)
    waves = [w for w in branch.waves if w.V > 0]
    reports = _parallel_map(
        lambda w: _lambda_report(w, subspace, delta, dEdM, M_prime, lambda_hat,
                                 consts, fd_step, with_adjoint),
        waves,
    )
    return sorted(reports, key=lambda r: r.V)


def report_to_json(report: SpectrumReport) -> str:
    def fmt(x):
        return float(f"{x:.17g}")

    payload = {
        "V": fmt(report.V),
        "subspace": report.subspace,
        "delta": fmt(report.delta),
        "delta_count": report.delta_count,
        "count_expected": report.count_expected,
        "eigenvalues_near_zero": [[fmt(z.real), fmt(z.imag)]
                                  for z in report.eigenvalues_near_zero],
        "re_lambda": fmt(report.lambda_V.real),
        "im_lambda": fmt(report.lambda_V.imag),
        "lambda_asymptotic": fmt(report.lambda_asymptotic),
        "lambda_hat_formula": fmt(report.lambda_hat_formula),
        "kernel_residuals": {k: fmt(v) for k, v in report.kernel_residuals.items()},
        "k0": fmt(report.k0),
        "A_const": fmt(report.A_const),
        "B_const": fmt(report.B_const),
        "alpha": fmt(report.alpha),
        "adjoint_norm_scaling": fmt(report.adjoint_norm_scaling),
    }
    return json.dumps(payload, indent=2, sort_keys=True)


def write_spectrum_csv(reports: list, path: str) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["V", "re_lambda", "im_lambda", "lambda_asymptotic", "ratio",
                     "w1_residual", "w2_residual", "w3_residual", "w4_residual",
                     "delta_count"])
        for r in sorted(reports, key=lambda r: r.V):
            ratio = r.lambda_V.real / r.lambda_asymptotic if r.lambda_asymptotic else float("nan")
            kr = r.kernel_residuals
            wr.writerow([
                f"{r.V:.17g}",
                f"{r.lambda_V.real:.17g}",
                f"{r.lambda_V.imag:.17g}",
                f"{r.lambda_asymptotic:.17g}",
                f"{ratio:.17g}",
                f"{kr.get('W1', float('nan')):.17g}",
                f"{kr.get('W2', float('nan')):.17g}",
                f"{kr.get('W3', float('nan')):.17g}",
                f"{kr.get('W4', float('nan')):.17g}",
                str(r.delta_count),
            ])
