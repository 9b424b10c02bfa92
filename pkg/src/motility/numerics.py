"""Special functions, quadrature, collocation grids and a dense eigensolver.

Shared numerical kernels for the motility solver: modified Bessel functions
by power series, Gauss-Legendre quadrature, Chebyshev-type radial collocation
grids that avoid r = 0, and a residual-checked dense nonsymmetric eigensolver.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.special


class NumericsError(RuntimeError):
    """Numerical failure (solver non-convergence, singular system, ...)."""


_SERIES_MAX_TERMS = 200
_SERIES_TOL = 1e-16


def bessel_i(n: int, x, derivative: bool = False):
    """Modified Bessel function I_n(x) or its derivative, by power series.

    Valid for n in {0, 1, 2} and 0 <= x <= ~30 (the working range of the
    solver; all arguments here are of the form R*sqrt(zeta - m0) at desk
    scale). Accepts scalars or arrays.
    """
    if n < 0 or n > 2:
        raise ValueError(f"bessel_i: order n={n} outside supported range {{0,1,2}}")
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0):
        raise ValueError("bessel_i: negative argument")
    half = xa / 2.0
    half2 = half * half
    if not derivative:
        # I_n(x) = sum_k (x/2)^(n+2k) / (k! (n+k)!)
        term = half**n / scipy.special.factorial(n)
        total = term.copy()
        for k in range(1, _SERIES_MAX_TERMS):
            term = term * half2 / (k * (n + k))
            total = total + term
            if np.max(np.abs(term)) <= _SERIES_TOL * max(np.max(np.abs(total)), 1e-300):
                break
        result = total
    else:
        # term-wise derivative: sum_k (n+2k)/2 * (x/2)^(n+2k-1) / (k! (n+k)!)
        if n == 0:
            # leading term is constant -> derivative starts at k = 1
            term = half  # k=1 term: (2/2)*(x/2)^1 / (1! 1!) = x/2
            total = term.copy()
            k0 = 2
        else:
            term = (n / 2.0) * half ** (n - 1) / scipy.special.factorial(n)
            total = term.copy()
            k0 = 1
        for k in range(k0, _SERIES_MAX_TERMS):
            c = (n + 2 * k) / 2.0 / (
                scipy.special.factorial(k) * scipy.special.factorial(n + k)
            )
            term = c * half ** (n + 2 * k - 1)
            total = total + term
            if np.max(np.abs(term)) <= _SERIES_TOL * max(np.max(np.abs(total)), 1e-300):
                break
        result = total
    if np.isscalar(x) or (hasattr(x, "ndim") and getattr(x, "ndim", 1) == 0):
        return float(result)
    return result


def _bessel_i_dd(n: int, x):
    """Second derivative of I_n via the derivative recurrence.

    I_n'' = (I_{n-2} + 2 I_n + I_{n+2}) / 4, with I_{-k} = I_k. Used by the
    ODE-residual self check; orders up to n+2 are evaluated by the same
    series as bessel_i (the series code accepts any n >= 0 internally).
    """

    def series(m, xv):
        xa = np.asarray(xv, dtype=float)
        half = xa / 2.0
        term = half**m / scipy.special.factorial(m)
        total = term.copy()
        for k in range(1, _SERIES_MAX_TERMS):
            term = term * (half * half) / (k * (m + k))
            total = total + term
            if np.max(np.abs(term)) <= _SERIES_TOL * max(np.max(np.abs(total)), 1e-300):
                break
        return total

    lo = abs(n - 2)
    return (series(lo, x) + 2.0 * series(n, x) + series(n + 2, x)) / 4.0


def neumann_laplacian_eigs(R: float, count: int) -> list[float]:
    """First `count` Neumann eigenvalues of -Laplace on the disk of radius R.

    Eigenvalues are 0 (constant mode) together with (j'_{n,m}/R)^2 for the
    positive zeros j'_{n,m} of J_n'; each n >= 1 value carries multiplicity
    two (cos and sin modes).
    """
    if R <= 0:
        raise ValueError("neumann_laplacian_eigs: R must be positive")
    if count < 1:
        raise ValueError("neumann_laplacian_eigs: count must be >= 1")
    vals = [0.0]
    # enough zeros of each order to cover `count` entries
    nt = count
    n = 0
    while True:
        zeros = scipy.special.jnp_zeros(n, nt)
        zeros = zeros[zeros > 0]
        mult = 1 if n == 0 else 2
        lam = (zeros / R) ** 2
        for v in lam:
            vals.extend([float(v)] * mult)
        # smallest eigenvalue of order n grows with n; stop once the first
        # zero of the current order alone exceeds everything we might need
        vals.sort()
        if len(vals) >= count and (zeros[0] / R) ** 2 > vals[count - 1]:
            break
        n += 1
    return vals[:count]


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and positive weights for integration over [a, b]."""

    nodes: np.ndarray
    weights: np.ndarray

    def integrate(self, values: np.ndarray) -> float:
        return float(np.dot(self.weights, values))


def gauss_legendre(n: int, a: float, b: float) -> QuadratureRule:
    """Gauss-Legendre rule with n points mapped to [a, b]."""
    if n < 1:
        raise ValueError("gauss_legendre: n must be >= 1")
    if not a < b:
        raise ValueError("gauss_legendre: need a < b")
    x, w = np.polynomial.legendre.leggauss(n)
    nodes = 0.5 * (b - a) * x + 0.5 * (b + a)
    weights = 0.5 * (b - a) * w
    return QuadratureRule(nodes=nodes, weights=weights)


def _cheb_full(N: int) -> tuple[np.ndarray, np.ndarray]:
    """Chebyshev points x_j = cos(j pi / N), j=0..N, and differentiation matrix."""
    if N == 0:
        return np.array([1.0]), np.zeros((1, 1))
    j = np.arange(N + 1)
    x = np.cos(np.pi * j / N)
    c = np.hstack([2.0, np.ones(N - 1), 2.0]) * (-1.0) ** j
    X = np.tile(x, (N + 1, 1)).T
    dX = X - X.T
    D = np.outer(c, 1.0 / c) / (dX + np.eye(N + 1))
    D = D - np.diag(D.sum(axis=1))
    return x, D


@dataclass(frozen=True)
class CollocationGrid:
    """Radial collocation nodes on (0, R] with dense differentiation matrices.

    points[0] == R (boundary first), points strictly decreasing, r = 0 is
    never a node.  For parity grids ('even'/'odd') the matrices act on the
    radial factor of a Fourier mode, using the reflection f(-r) = +/- f(r)
    to handle the origin; parity=None is a plain grid on a subinterval.
    """

    points: np.ndarray
    D1: np.ndarray
    D2: np.ndarray
    parity: str | None
    R: float

    @property
    def n(self) -> int:
        return len(self.points)


def parity_grid(m: int, R: float, parity: str) -> CollocationGrid:
    """Half of a 2m-point Chebyshev grid on [-R, R], restricted by parity.

    parity 'even' is for Fourier modes with f(-r) = f(r) (even n), 'odd' for
    f(-r) = -f(r) (odd n).  The full symmetric grid has an even number of
    points, so r = 0 is excluded automatically.
    """
    if parity not in ("even", "odd"):
        raise ValueError("parity must be 'even' or 'odd'")
    if m < 4:
        raise ValueError("parity_grid: need m >= 4")
    s = 1.0 if parity == "even" else -1.0
    N = 2 * m - 1  # N+1 = 2m nodes on [-1, 1], none at 0
    x, D = _cheb_full(N)
    x = x * R
    D = D / R
    D2 = D @ D
    D1p = D[:m, :m] + s * np.fliplr(D[:m, m:])
    D2p = D2[:m, :m] + s * np.fliplr(D2[:m, m:])
    return CollocationGrid(points=x[:m], D1=D1p, D2=D2p, parity=parity, R=R)


def radial_grid(n_interior: int, R: float = 1.0) -> CollocationGrid:
    """Gauss-Legendre interior nodes on (0, R) plus the boundary node R.

    Used for fields that are smooth on [0, R] jointly with the angle (the
    mapped-disk traveling-wave solver); quadrature over the interior nodes
    is the matching GL rule.
    """
    if n_interior < 4:
        raise ValueError("radial_grid: need n_interior >= 4")
    rule = gauss_legendre(n_interior, 0.0, R)
    pts = np.concatenate([[R], rule.nodes[::-1]])  # decreasing, boundary first
    D1 = interp_diff_matrix(pts, pts, order=1)
    D2 = interp_diff_matrix(pts, pts, order=2)
    return CollocationGrid(points=pts, D1=D1, D2=D2, parity=None, R=R)


def _bary_weights(nodes: np.ndarray) -> np.ndarray:
    n = len(nodes)
    w = np.ones(n)
    for j in range(n):
        diff = nodes[j] - np.delete(nodes, j)
        # scale to avoid under/overflow for moderate n
        w[j] = 1.0 / np.prod(diff * 2.0 / (nodes.max() - nodes.min()))
    return w / np.max(np.abs(w))


def interp_matrix(nodes: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Barycentric Lagrange interpolation matrix from `nodes` to `targets`."""
    nodes = np.asarray(nodes, dtype=float)
    targets = np.asarray(targets, dtype=float)
    w = _bary_weights(nodes)
    P = np.zeros((len(targets), len(nodes)))
    for i, t in enumerate(targets):
        d = t - nodes
        hit = np.where(np.abs(d) < 1e-14)[0]
        if hit.size:
            P[i, hit[0]] = 1.0
        else:
            q = w / d
            P[i, :] = q / q.sum()
    return P


def interp_diff_matrix(nodes: np.ndarray, targets: np.ndarray, order: int = 1) -> np.ndarray:
    """Matrix mapping nodal values to the interpolant's derivative at targets."""
    nodes = np.asarray(nodes, dtype=float)
    n = len(nodes)
    # differentiation via the square barycentric differentiation matrix,
    # then interpolation of the derivative values (exact on polynomials)
    w = _bary_weights(nodes)
    X = np.tile(nodes, (n, 1)).T
    dX = X - X.T + np.eye(n)
    # standard barycentric differentiation: D[i,j] = (w_j/w_i)/(x_i-x_j), i != j
    Dsq = np.outer(1.0 / w, w) / dX
    np.fill_diagonal(Dsq, 0.0)
    np.fill_diagonal(Dsq, -Dsq.sum(axis=1))
    D = Dsq
    for _ in range(order - 1):
        D = Dsq @ D
    P = interp_matrix(nodes, targets)
    return P @ D


def parity_interp(points: np.ndarray, parity: str, targets: np.ndarray) -> np.ndarray:
    """Interpolation matrix from parity-grid nodal values to arbitrary radii.

    Uses the full reflected node set so the interpolant has the prescribed
    parity and full polynomial accuracy through the origin.  `parity` refers
    to the function being interpolated (note: the derivative of an odd
    function is even, so derivative values need the opposite parity).
    """
    if parity not in ("even", "odd"):
        raise ValueError("parity must be 'even' or 'odd'")
    s = 1.0 if parity == "even" else -1.0
    points = np.asarray(points, dtype=float)
    full_nodes = np.concatenate([points, -points[::-1]])
    P_full = interp_matrix(full_nodes, targets)
    m = len(points)
    return P_full[:, :m] + s * np.fliplr(P_full[:, m:])


def parity_interp_matrix(grid: CollocationGrid, targets: np.ndarray) -> np.ndarray:
    """Interpolation from a parity grid's own parity to arbitrary radii."""
    if grid.parity is None:
        return interp_matrix(grid.points, targets)
    return parity_interp(grid.points, grid.parity, targets)


def dense_eig(A: np.ndarray, residual_tol: float = 1e-8):
    """All eigenpairs of a dense real matrix, with a residual contract.

    Returns a list of (eigenvalue, eigenvector) pairs.  Every pair satisfies
    ||A v - lam v|| <= residual_tol * ||A|| * ||v||; a violation (or any
    non-finite entry) raises NumericsError with diagnostics.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("dense_eig: square matrix required")
    if not np.all(np.isfinite(A)):
        raise NumericsError("dense_eig: matrix contains non-finite entries")
    w, V = scipy.linalg.eig(A)
    normA = np.linalg.norm(A, 2) if A.shape[0] <= 600 else np.linalg.norm(A, "fro")
    if normA == 0.0:
        normA = 1.0
    res = np.linalg.norm(A @ V - V * w[None, :], axis=0)
    bad = res > residual_tol * normA * np.linalg.norm(V, axis=0)
    if np.any(bad):
        idx = np.argmax(res)
        raise NumericsError(
            f"dense_eig: residual {res[idx]:.3e} exceeds tolerance for "
            f"eigenvalue {w[idx]} (||A||={normA:.3e}, size={A.shape[0]})"
        )
    order = np.lexsort((w.imag, w.real))
    return [(w[i], V[:, i]) for i in order]
