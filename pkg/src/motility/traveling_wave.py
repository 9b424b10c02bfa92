"""Newton/continuation solver for the traveling-wave free-boundary problem.

In the frame moving with velocity V along +x the wave solves

    Lap Phi + Lambda e^{Phi - V x} = zeta Phi      in Omega,
    d_nu (Phi - V x) = 0                           on the boundary,
    zeta Phi = p_star(|Omega|) - gamma kappa       on the boundary,

with Lambda = M / int_Omega e^{Phi - V x} and the myosin field
m = Lambda e^{Phi - V x}.  The boundary is written r = R0 + rho(phi) with
rho an even cosine series, and the domain is mapped to the reference disk by
r = s (R0 + rho(phi)), s in (0, 1]; the Laplacian is transformed by the
exact chain rule, valid to all orders in rho.

Unknowns for Newton: Phi at tensor collocation nodes, the cosine modes of
rho, and the scalar mass M; equations: the PDE at interior nodes, the
Neumann condition and the Young-Laplace condition at boundary nodes, and the
centering constraint (mode-1 of rho vanishes, removing x-translations).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .model import ModelParams, M_of_R, p_star, radial_state
from .numerics import CollocationGrid, NumericsError, gauss_legendre, radial_grid


@dataclass(frozen=True)
class AngularBasis:
    """Even (cosine) collocation on phi_j = j pi / (n-1), j = 0..n-1.

    C maps cosine-mode coefficients to nodal values; D1/D2 differentiate
    even nodal data (D1 output is odd in phi, which is fine pointwise).
    weights integrate an even function over the full circle.
    """

    nodes: np.ndarray
    C: np.ndarray
    Cinv: np.ndarray
    D1: np.ndarray
    D2: np.ndarray
    weights: np.ndarray

    @property
    def n(self) -> int:
        return len(self.nodes)


def angular_basis(n: int) -> AngularBasis:
    if n < 6:
        raise ValueError("angular_basis: need n >= 6")
    phi = np.linspace(0.0, math.pi, n)
    k = np.arange(n)
    C = np.cos(np.outer(phi, k))
    Cinv = np.linalg.inv(C)
    S = np.sin(np.outer(phi, k))
    D1 = -(S * k) @ Cinv
    D2 = -(C * k**2) @ Cinv
    w = np.full(n, math.pi / (n - 1))
    w[0] *= 0.5
    w[-1] *= 0.5
    w = 2.0 * w  # full-circle integral of an even function
    return AngularBasis(nodes=phi, C=C, Cinv=Cinv, D1=D1, D2=D2, weights=w)


@dataclass(frozen=True)
class TWContext:
    """Shared discretization context for one (params, R0, resolution)."""

    params: ModelParams
    R0: float
    grid: CollocationGrid  # radial s-grid on (0, 1], boundary node first
    basis: AngularBasis
    gl_weights: np.ndarray  # GL weights matching grid.points[1:]

    @property
    def n_r(self) -> int:
        return self.grid.n

    @property
    def n_a(self) -> int:
        return self.basis.n

    def n_unknowns(self) -> int:
        return self.n_r * self.n_a + self.n_a + 1


def make_context(params: ModelParams, R0: float, n_radial: int = 28, n_modes: int = 19) -> TWContext:
    grid = radial_grid(n_radial, 1.0)
    basis = angular_basis(n_modes + 1)
    rule = gauss_legendre(n_radial, 0.0, 1.0)
    # grid.points[1:] are the GL nodes in decreasing order
    return TWContext(params=params, R0=R0, grid=grid, basis=basis, gl_weights=rule.weights[::-1].copy())


def _geometry(ctx: TWContext, c: np.ndarray):
    """Boundary radius and derived angular quantities from rho modes c."""
    b = ctx.basis
    g = ctx.R0 + b.C @ c
    if np.any(g <= 0):
        raise NumericsError("traveling_wave: boundary radius became nonpositive")
    k = np.arange(b.n)
    gp = -(np.sin(np.outer(b.nodes, k)) * k) @ c
    gpp = -(b.C * k**2) @ c
    return g, gp, gpp


def curvature(g: np.ndarray, gp: np.ndarray, gpp: np.ndarray) -> np.ndarray:
    """Curvature of the curve r = g(phi)."""
    return (g * g + 2.0 * gp * gp - g * gpp) / (g * g + gp * gp) ** 1.5


def _unpack(ctx: TWContext, u: np.ndarray):
    n_phi = ctx.n_r * ctx.n_a
    Phi = u[:n_phi].reshape(ctx.n_r, ctx.n_a)
    c = u[n_phi : n_phi + ctx.n_a]
    M = u[-1]
    return Phi, c, M


def _pack(ctx: TWContext, Phi: np.ndarray, c: np.ndarray, M: float) -> np.ndarray:
    return np.concatenate([Phi.ravel(), c, [M]])


def residual(ctx: TWContext, u: np.ndarray, V: float) -> np.ndarray:
    """Nonlinear residual of the full traveling-wave system."""
    p = ctx.params
    Phi, c, M = _unpack(ctx, u)
    b, grid = ctx.basis, ctx.grid
    s = grid.points  # (n_r,), s[0] = 1
    g, gp, gpp = _geometry(ctx, c)
    a = gp / g
    ap = gpp / g - a * a

    Phi_s = grid.D1 @ Phi
    Phi_ss = grid.D2 @ Phi
    Phi_p = Phi @ b.D1.T
    Phi_pp = Phi @ b.D2.T
    Phi_sp = Phi_s @ b.D1.T

    one_a2 = 1.0 + a * a
    inv_g2 = 1.0 / (g * g)
    s_col = s[:, None]
    lap = inv_g2[None, :] * (
        one_a2[None, :] * Phi_ss
        + (1.0 + a * a - ap)[None, :] * Phi_s / s_col
        + Phi_pp / s_col**2
        - 2.0 * a[None, :] * Phi_sp / s_col
    )

    x = s_col * (g * np.cos(b.nodes))[None, :]
    w_field = Phi - V * x
    with np.errstate(over="ignore", invalid="ignore"):
        E = np.exp(w_field)
        # mass normalization: area element s g(phi)^2 ds dphi, interior GL rows
        wq = ctx.gl_weights[:, None] * s[1:, None] * (b.weights * g * g)[None, :]
        denom = float(np.sum(wq * E[1:, :]))
        Lam = M / denom
        pde = lap[1:, :] + Lam * E[1:, :] - p.zeta * Phi[1:, :]

    sq = np.sqrt(one_a2)
    neu = (one_a2 * Phi_s[0, :] - a * Phi_p[0, :]) / (g * sq) - V * (
        (np.cos(b.nodes) + a * np.sin(b.nodes)) / sq
    )

    area = 0.5 * float(np.dot(b.weights, g * g))
    kap = curvature(g, gp, gpp)
    yl = p.zeta * Phi[0, :] - p_star(p, area) + p.gamma * kap

    return np.concatenate([pde.ravel(), neu, yl, [c[1]]])


@dataclass(frozen=True)
class TravelingWave:
    V: float
    Lambda: float
    M: float
    phi: np.ndarray  # (n_r, n_a) nodal potential on the mapped grid
    rho_modes: np.ndarray  # cosine coefficients of rho about R0
    area: float
    residual_norm: float
    newton_iters: int
    ctx: TWContext = field(repr=False, compare=False, default=None)


def _wave_from_u(ctx: TWContext, u: np.ndarray, V: float, res_norm: float, iters: int) -> TravelingWave:
    Phi, c, M = _unpack(ctx, u)
    b = ctx.basis
    g, gp, gpp = _geometry(ctx, c)
    s = ctx.grid.points
    x = s[:, None] * (g * np.cos(b.nodes))[None, :]
    E = np.exp(Phi - V * x)
    wq = ctx.gl_weights[:, None] * s[1:, None] * (b.weights * g * g)[None, :]
    Lam = M / float(np.sum(wq * E[1:, :]))
    area = 0.5 * float(np.dot(b.weights, g * g))
    return TravelingWave(
        V=V, Lambda=Lam, M=M, phi=Phi.copy(), rho_modes=c.copy(), area=area,
        residual_norm=res_norm, newton_iters=iters, ctx=ctx,
    )


def radial_wave(ctx: TWContext) -> TravelingWave:
    """The exact V = 0 solution: uniform potential m0/zeta on the disk R0."""
    st = radial_state(ctx.params, ctx.R0)
    Phi = np.full((ctx.n_r, ctx.n_a), st.phi0)
    c = np.zeros(ctx.n_a)
    u = _pack(ctx, Phi, c, st.M)
    rn = float(np.max(np.abs(residual(ctx, u, 0.0))))
    return _wave_from_u(ctx, u, 0.0, rn, 0)


def solve_tw(
    params: ModelParams,
    R0: float,
    V: float,
    initial_guess: TravelingWave | None = None,
    n_radial: int = 28,
    n_modes: int = 19,
    newton_tol: float = 1e-10,
    max_iter: int = 40,
) -> TravelingWave:
    """Newton solve at one velocity; guess from a previous wave or the disk."""
    if initial_guess is not None and initial_guess.ctx is not None:
        ctx = initial_guess.ctx
    else:
        ctx = make_context(params, R0, n_radial, n_modes)
    if initial_guess is None:
        initial_guess = radial_wave(ctx)
    u = _pack(ctx, initial_guess.phi, initial_guess.rho_modes, initial_guess.M)
    if V == 0.0:
        return radial_wave(ctx)

    n = ctx.n_unknowns()
    res = residual(ctx, u, V)
    rn = np.max(np.abs(res))
    for it in range(1, max_iter + 1):
        if rn <= newton_tol:
            return _wave_from_u(ctx, u, V, float(rn), it - 1)
        J = np.empty((n, n))
        base = res
        for j in range(n):
            eps = 1e-7 * max(1.0, abs(u[j]))
            up = u.copy()
            up[j] += eps
            J[:, j] = (residual(ctx, up, V) - base) / eps
        try:
            du = np.linalg.solve(J, -base)
        except np.linalg.LinAlgError as exc:
            raise NumericsError(f"solve_tw: singular Jacobian at V={V}: {exc}")
        # damped update
        step = 1.0
        for _ in range(8):
            u_new = u + step * du
            try:
                res_new = residual(ctx, u_new, V)
            except (NumericsError, FloatingPointError, OverflowError):
                step *= 0.5
                continue
            if not np.all(np.isfinite(res_new)):
                step *= 0.5
                continue
            rn_new = np.max(np.abs(res_new))
            if rn_new < rn or rn <= 1e3 * newton_tol:
                break
            step *= 0.5
        else:
            raise NumericsError(f"solve_tw: line search failed at V={V}, residual {rn:.3e}")
        u, res, rn = u_new, res_new, rn_new
    if rn <= newton_tol:
        return _wave_from_u(ctx, u, V, float(rn), max_iter)
    raise NumericsError(f"solve_tw: Newton did not converge at V={V}, last residual {rn:.3e}")


@dataclass(frozen=True)
class Branch:
    waves: tuple
    params: ModelParams
    R0: float

    def velocities(self) -> np.ndarray:
        return np.array([w.V for w in self.waves])

    def masses(self) -> np.ndarray:
        return np.array([w.M for w in self.waves])


def continue_branch(
    params: ModelParams,
    R0: float,
    V_max: float,
    steps: int = 16,
    n_radial: int = 28,
    n_modes: int = 19,
    newton_tol: float = 1e-10,
    targets: np.ndarray | None = None,
) -> Branch:
    """Natural-parameter continuation from V = 0 to V_max.

    Each converged wave seeds the next velocity; a failing step is bisected
    up to 4 times before aborting with the partial branch attached to the
    raised error.
    """
    ctx = make_context(params, R0, n_radial, n_modes)
    if targets is None:
        targets = np.linspace(0.0, V_max, steps + 1)[1:]
    waves = [radial_wave(ctx)]
    prev = waves[0]
    V_done = 0.0
    for V_target in targets:
        V_next = V_target
        bisections = 0
        while True:
            try:
                wave = solve_tw(params, R0, V_next, initial_guess=prev,
                                newton_tol=newton_tol, max_iter=12)
            except NumericsError:
                bisections += 1
                if bisections > 4:
                    raise NumericsError(
                        f"branch continuation failed near V={V_next:.6g} "
                        f"(last converged V={V_done:.6g})"
                    )
                V_next = 0.5 * (V_done + V_next)
                continue
            prev, V_done = wave, V_next
            if abs(V_next - V_target) <= 1e-15:
                waves.append(wave)
                break
            V_next = V_target
    return Branch(waves=tuple(waves), params=params, R0=R0)


def myosin_field(tw: TravelingWave) -> np.ndarray:
    """Myosin density Lambda e^{Phi - V x} on the mapped grid."""
    ctx = tw.ctx
    b = ctx.basis
    g = ctx.R0 + b.C @ tw.rho_modes
    x = ctx.grid.points[:, None] * (g * np.cos(b.nodes))[None, :]
    return tw.Lambda * np.exp(tw.phi - tw.V * x)


def myosin_mass(tw: TravelingWave) -> float:
    """Quadrature mass of the myosin field (equals tw.M up to quadrature)."""
    ctx = tw.ctx
    b = ctx.basis
    g = ctx.R0 + b.C @ tw.rho_modes
    s = ctx.grid.points
    m = myosin_field(tw)
    wq = ctx.gl_weights[:, None] * s[1:, None] * (b.weights * g * g)[None, :]
    return float(np.sum(wq * m[1:, :]))


def mass_derivatives(branch: Branch):
    """(M', M''(0)) along the branch.

    M'(V) by centered differences on the branch grid, mirrored through
    V = 0; M''(0) from a least-squares even fit M = M0 + a V^2 + b V^4 over
    the computed points.  Returns (M_prime: callable, M_dd0, fit_residual).
    """
    Vs = branch.velocities()
    Ms = branch.masses()
    if len(Vs) < 5:
        raise ValueError("mass_derivatives: need at least 5 branch points")
    # M(-V) = M(V) (mirror waves are reflections in x); differencing the
    # symmetrized data makes the centered stencil exact at V = 0
    V_ext = np.concatenate([-Vs[:0:-1], Vs])
    M_ext = np.concatenate([Ms[:0:-1], Ms])
    dM = np.gradient(M_ext, V_ext)

    def M_prime(V: float) -> float:
        return float(np.interp(V, V_ext, dM))

    A = np.column_stack([np.ones_like(Vs), Vs**2, Vs**4])
    coef, *_ = np.linalg.lstsq(A, Ms, rcond=None)
    fit_res = float(np.max(np.abs(A @ coef - Ms)))
    M_dd0 = 2.0 * coef[1]
    return M_prime, float(M_dd0), fit_res


def extract_expansion(branch: Branch, V_cut: float | None = None) -> dict:
    """Leading V^2 coefficients of the branch by extrapolation to V = 0.

    rho_tw = V^2 (rho_10 + rho_12 cos 2 phi + O(V)); M = M0 + M_1 V^2 + ...
    Fits f(V) = f0 + f1 V to each scaled quantity over the small-V points
    (Richardson in the O(V) error term); error estimates from the change
    under dropping the largest fitted point.
    """
    Vs = branch.velocities()
    if V_cut is None:
        V_cut = 0.1 * Vs.max()
    sel = [w for w in branch.waves if 0 < w.V <= V_cut * (1 + 1e-12)]
    if len(sel) < 4:
        raise ValueError("extract_expansion: need >= 4 branch points with V <= 0.1 V_max")
    V = np.array([w.V for w in sel])
    M0 = M_of_R(branch.params, branch.R0)

    def extrapolate(vals):
        y = vals / V**2
        A = np.column_stack([np.ones_like(V), V])
        c_all, *_ = np.linalg.lstsq(A, y, rcond=None)
        c_drop, *_ = np.linalg.lstsq(A[:-1], y[:-1], rcond=None)
        return float(c_all[0]), abs(float(c_all[0] - c_drop[0]))

    rho0 = np.array([w.rho_modes[0] for w in sel])
    rho1 = np.array([w.rho_modes[1] for w in sel])
    rho2 = np.array([w.rho_modes[2] for w in sel])
    dM = np.array([w.M - M0 for w in sel])
    r10, e10 = extrapolate(rho0)
    r11, e11 = extrapolate(rho1)
    r12, e12 = extrapolate(rho2)
    m1, em1 = extrapolate(dM)

    # measured mode-1 content of (Phi - m0/zeta - V Phi_V0(r) cos phi)/V^2;
    # reported, not asserted (interacts with the centering normalization)
    from .bifurcation import phi_v0

    st = radial_state(branch.params, branch.R0)
    phi11 = 0.0
    for w in sel:
        ctx = w.ctx
        r_nodes = ctx.grid.points * branch.R0
        prof = phi_v0(r_nodes, branch.R0, st.m0, branch.params.zeta)
        first_order = w.V * prof[:, None] * np.cos(ctx.basis.nodes)[None, :]
        Q = (w.phi - st.phi0 - first_order) / w.V**2
        modes = Q @ ctx.basis.Cinv.T
        phi11 = max(phi11, float(np.max(np.abs(modes[:, 1]))))

    return {
        "rho_10": r10,
        "rho_10_err": e10,
        "rho_12": r12,
        "rho_12_err": e12,
        "rho_mode1": r11,
        "rho_mode1_err": e11,
        "M_1": m1,
        "M_1_err": em1,
        "phi_mode1_content": phi11,
    }


def boundary_shape(tw: TravelingWave, n_angles: int = 256):
    """(phi, rho, x, y) samples of the boundary over the full circle."""
    phi = np.linspace(0.0, 2.0 * math.pi, n_angles, endpoint=False)
    k = np.arange(len(tw.rho_modes))
    rho = np.cos(np.outer(phi, k)) @ tw.rho_modes
    R0 = tw.ctx.R0
    return phi, rho, (R0 + rho) * np.cos(phi), (R0 + rho) * np.sin(phi)


def write_shape_csv(tw: TravelingWave, path: str, n_angles: int = 256) -> None:
    phi, rho, x, y = boundary_shape(tw, n_angles)
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["phi", "rho", "x", "y"])
        for row in zip(phi, rho, x, y):
            wr.writerow([f"{v:.17g}" for v in row])


def write_myosin_csv(tw: TravelingWave, path: str) -> None:
    """Myosin samples on the mapped grid, mirrored to the full circle."""
    ctx = tw.ctx
    b = ctx.basis
    g = ctx.R0 + b.C @ tw.rho_modes
    s = ctx.grid.points
    m = myosin_field(tw)
    rows = []
    for i in range(ctx.n_r):
        for j in range(ctx.n_a):
            r = s[i] * g[j]
            x, y = r * math.cos(b.nodes[j]), r * math.sin(b.nodes[j])
            rows.append((x, y, m[i, j]))
            if 0 < b.nodes[j] < math.pi:  # mirror below the x-axis
                rows.append((x, -y, m[i, j]))
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["x", "y", "m"])
        for row in rows:
            wr.writerow([f"{v:.17g}" for v in row])


def write_branch_csv(branch: Branch, path: str) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["V", "M", "Lambda", "rho0", "rho2", "area", "newton_iters", "residual"])
        for w in branch.waves:
            wr.writerow(
                [
                    f"{w.V:.17g}",
                    f"{w.M:.17g}",
                    f"{w.Lambda:.17g}",
                    f"{w.rho_modes[0]:.17g}",
                    f"{w.rho_modes[2]:.17g}",
                    f"{w.area:.17g}",
                    str(w.newton_iters),
                    f"{w.residual_norm:.17g}",
                ]
            )


def residual_fine_grid(tw: TravelingWave, factor: int = 2) -> float:
    """Max nonlinear residual re-evaluated on a finer interior grid.

    Interpolates the converged fields (radial barycentric interpolation of
    the polynomial interpolant, exact cosine series in the angle) and
    evaluates the PDE residual at off-collocation points; guards against
    collocation superconvergence illusions.
    """
    from .numerics import interp_matrix

    ctx = tw.ctx
    p = ctx.params
    b = ctx.basis
    n_fine_r = factor * (ctx.n_r - 1)
    n_fine_a = factor * b.n
    rule = gauss_legendre(n_fine_r, 0.02, 0.98)
    s_f = rule.nodes
    phi_f = np.linspace(0.0, math.pi, n_fine_a)

    k = np.arange(b.n)
    C_f = np.cos(np.outer(phi_f, k))
    c = tw.rho_modes
    g = ctx.R0 + C_f @ c
    gp = -(np.sin(np.outer(phi_f, k)) * k) @ c
    gpp = -(C_f * k**2) @ c
    a = gp / g
    ap = gpp / g - a * a

    # modal representation of Phi in the angle, polynomial in s
    from .numerics import interp_diff_matrix

    Pr = interp_matrix(ctx.grid.points, s_f)
    Dr1 = interp_diff_matrix(ctx.grid.points, s_f, order=1)
    Dr2 = interp_diff_matrix(ctx.grid.points, s_f, order=2)

    modes = tw.phi @ ctx.basis.Cinv.T  # (n_r, n_modes)
    Phi_f = (Pr @ modes) @ C_f.T
    Phi_s = (Dr1 @ modes) @ C_f.T
    Phi_ss = (Dr2 @ modes) @ C_f.T
    S_f = np.sin(np.outer(phi_f, k))
    Phi_p = (Pr @ modes) @ (-(S_f * k)).T
    Phi_pp = (Pr @ modes) @ (-(C_f * k**2)).T
    Phi_sp = (Dr1 @ modes) @ (-(S_f * k)).T

    one_a2 = 1.0 + a * a
    s_col = s_f[:, None]
    lap = (1.0 / (g * g))[None, :] * (
        one_a2[None, :] * Phi_ss
        + (one_a2 - ap)[None, :] * Phi_s / s_col
        + Phi_pp / s_col**2
        - 2.0 * a[None, :] * Phi_sp / s_col
    )
    x = s_col * (g * np.cos(phi_f))[None, :]
    res = lap + tw.Lambda * np.exp(Phi_f - tw.V * x) - p.zeta * Phi_f
    return float(np.max(np.abs(res)))


def young_laplace_off_collocation(tw: TravelingWave, n_test: int = 101) -> float:
    """Max Young-Laplace residual at off-collocation boundary angles."""
    ctx = tw.ctx
    p = ctx.params
    k = np.arange(ctx.basis.n)
    phi_t = np.linspace(0.05, math.pi - 0.05, n_test)
    C_t = np.cos(np.outer(phi_t, k))
    c = tw.rho_modes
    g = ctx.R0 + C_t @ c
    gp = -(np.sin(np.outer(phi_t, k)) * k) @ c
    gpp = -(C_t * k**2) @ c
    kap = curvature(g, gp, gpp)
    modes_bnd = ctx.basis.Cinv @ tw.phi[0, :]
    Phi_bnd = C_t @ modes_bnd
    return float(np.max(np.abs(p.zeta * Phi_bnd - p_star(p, tw.area) + p.gamma * kap)))
