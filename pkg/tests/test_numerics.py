"""Tests for special functions, quadrature, grids, and the dense eigensolver."""

import math

import numpy as np
import pytest

from motility import numerics as nx


class TestBesselI:
    def test_values_at_zero(self):
        assert nx.bessel_i(1, 0.0) == 0.0
        assert nx.bessel_i(0, 0.0) == 1.0
        assert nx.bessel_i(2, 0.0) == 0.0

    def test_derivative_recurrence(self):
        # I1'(x) = I0(x) - I1(x)/x, both sides from independent series sums
        x = 2.0
        lhs = nx.bessel_i(1, x, derivative=True)
        rhs = nx.bessel_i(0, x) - nx.bessel_i(1, x) / x
        assert abs(lhs - rhs) <= 1e-12 * abs(rhs)

    def test_against_reference_series(self):
        # brute-force series with explicit factorials as the oracle
        def oracle(n, x, terms=120):
            tot = 0.0
            for k in range(terms):
                fk, fnk = math.factorial(k), math.factorial(n + k)
                if fk > 1e150 or fnk > 1e150:
                    break
                tot += (x / 2.0) ** (n + 2 * k) / float(fk) / float(fnk)
            return tot

        for n in (0, 1, 2):
            for x in np.linspace(0.1, 30.0, 23):
                ref = oracle(n, x)
                assert abs(nx.bessel_i(n, x) - ref) <= 1e-12 * abs(ref)

    def test_ode_residual(self):
        # x^2 y'' + x y' - (x^2 + n^2) y = 0
        xs = np.linspace(0.3, 30.0, 100)
        for n in (0, 1, 2):
            y = nx.bessel_i(n, xs)
            yp = nx.bessel_i(n, xs, derivative=True)
            ypp = nx._bessel_i_dd(n, xs)
            res = xs**2 * ypp + xs * yp - (xs**2 + n**2) * y
            assert np.max(np.abs(res) / ((xs**2 + n**2) * np.abs(y))) <= 1e-9

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            nx.bessel_i(1, -0.5)
        with pytest.raises(ValueError):
            nx.bessel_i(3, 1.0)


class TestNeumannEigs:
    def test_constant_mode(self):
        assert nx.neumann_laplacian_eigs(1.0, 1) == [0.0]

    def test_first_nonzero_by_bisection_oracle(self):
        # independent oracle: J1'(x) by an explicit power series for J1,
        # bisection on its sign changes
        def j1(x):
            tot = 0.0
            for k in range(60):
                tot += (-1) ** k / (math.factorial(k) * math.factorial(k + 1)) * (x / 2) ** (
                    2 * k + 1
                )
            return tot

        def j1p(x, h=1e-6):
            return (j1(x + h) - j1(x - h)) / (2 * h)

        lo, hi = 1.0, 2.5
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if j1p(lo) * j1p(mid) <= 0:
                hi = mid
            else:
                lo = mid
        jp11 = 0.5 * (lo + hi)
        vals = nx.neumann_laplacian_eigs(1.0, 3)
        assert vals[0] == 0.0
        assert abs(vals[1] - jp11**2) <= 1e-8
        assert vals[1] == vals[2]  # cos/sin multiplicity

    def test_radius_scaling(self):
        a = nx.neumann_laplacian_eigs(1.0, 5)
        b = nx.neumann_laplacian_eigs(2.0, 5)
        assert np.allclose(np.array(a) / 4.0, b, rtol=1e-13, atol=1e-13)

    def test_sorted_with_multiplicity(self):
        vals = nx.neumann_laplacian_eigs(3.6, 10)
        assert all(vals[i] <= vals[i + 1] for i in range(len(vals) - 1))
        # fourth eigenvalue (with multiplicity) is the first j2' zero
        assert abs(vals[3] - (3.0542369282271403 / 3.6) ** 2) <= 1e-8


class TestGaussLegendre:
    def test_one_point(self):
        rule = nx.gauss_legendre(1, -1.0, 1.0)
        assert abs(rule.nodes[0]) <= 1e-15
        assert abs(rule.weights[0] - 2.0) <= 1e-15

    def test_two_point(self):
        rule = nx.gauss_legendre(2, -1.0, 1.0)
        assert np.allclose(sorted(rule.nodes), [-1 / math.sqrt(3), 1 / math.sqrt(3)])
        assert np.allclose(rule.weights, [1.0, 1.0])

    def test_weights_sum(self):
        rule = nx.gauss_legendre(13, 0.25, 4.0)
        assert abs(rule.weights.sum() - 3.75) <= 1e-12

    def test_polynomial_exactness(self):
        for n in (4, 8, 12):
            rule = nx.gauss_legendre(n, 0.0, 1.0)
            for k in range(2 * n):
                val = rule.integrate(rule.nodes**k)
                assert abs(val - 1.0 / (k + 1)) <= 1e-12 / (k + 1) + 1e-14

    def test_degree_15(self):
        rule = nx.gauss_legendre(8, 0.0, 1.0)
        assert abs(rule.integrate(rule.nodes**7) - 1.0 / 8.0) <= 1e-14


class TestCollocationGrids:
    @pytest.mark.parametrize("parity,R", [("even", 1.0), ("odd", 1.0), ("even", 3.6), ("odd", 2.2)])
    def test_monomial_derivatives(self, parity, R):
        g = nx.parity_grid(24, R, parity)
        r = g.points
        assert r[0] == R and np.all(r > 0) and np.all(np.diff(r) < 0)
        start = 0 if parity == "even" else 1
        for k in range(start, 12, 2):
            f = r**k
            d1 = k * r ** (k - 1) if k > 0 else np.zeros_like(r)
            assert np.max(np.abs(g.D1 @ f - d1)) <= 1e-10 * max(1.0, R ** (k - 1)) * k * 10 + 1e-10

    def test_d2_consistency(self):
        g = nx.parity_grid(20, 1.5, "odd")
        r = g.points
        f = r**5 - 3 * r**3
        assert np.max(np.abs(g.D2 @ f - (20 * r**3 - 18 * r))) <= 1e-8

    def test_radial_grid(self):
        g = nx.radial_grid(18, 1.0)
        assert g.points[0] == 1.0 and np.all(g.points > 0)
        f = g.points**6
        assert np.max(np.abs(g.D1 @ f - 6 * g.points**5)) <= 1e-9
        assert np.max(np.abs(g.D2 @ f - 30 * g.points**4)) <= 1e-8

    def test_parity_interp(self):
        g = nx.parity_grid(20, 1.0, "odd")
        t = np.array([0.05, 0.33, 0.91])
        P = nx.parity_interp(g.points, "odd", t)
        assert np.max(np.abs(P @ g.points**3 - t**3)) <= 1e-12


class TestDenseEig:
    def test_identity(self):
        pairs = nx.dense_eig(np.eye(3))
        assert all(abs(lam - 1.0) <= 1e-12 for lam, _ in pairs)
        assert len(pairs) == 3

    def test_diagonal(self):
        pairs = nx.dense_eig(np.diag([1.0, 2.0, 3.0]))
        assert np.allclose(sorted(lam.real for lam, _ in pairs), [1, 2, 3])

    def test_random_residuals(self):
        rng = np.random.default_rng(42)
        A = rng.standard_normal((50, 50))
        pairs = nx.dense_eig(A)  # residual contract enforced internally
        normA = np.linalg.norm(A, 2)
        for lam, v in pairs:
            assert np.linalg.norm(A @ v - lam * v) <= 1e-8 * normA * np.linalg.norm(v)

    def test_trace_identity(self):
        rng = np.random.default_rng(7)
        A = rng.standard_normal((40, 40))
        pairs = nx.dense_eig(A)
        assert abs(sum(lam for lam, _ in pairs) - np.trace(A)) <= 1e-8 * abs(np.trace(A)) + 1e-8

    def test_conjugate_pairs(self):
        A = np.array([[0.0, -1.0], [1.0, 0.0]])
        lams = sorted((lam for lam, _ in nx.dense_eig(A)), key=lambda z: z.imag)
        assert abs(lams[0] - (-1j)) <= 1e-12 and abs(lams[1] - 1j) <= 1e-12

    def test_nonfinite_rejected(self):
        A = np.eye(4)
        A[2, 2] = np.nan
        with pytest.raises(nx.NumericsError):
            nx.dense_eig(A)
