"""Tests for parameters, the pressure law, and radial stationary states."""

import math

import numpy as np
import pytest

from motility.model import (
    HypothesisReport,
    ModelParams,
    M_of_R,
    check_hypotheses,
    dM_dR,
    p_star,
    radial_state,
)


def fig1_params(zeta=3.5677286848507963):
    # m0 = 0.62 at R = 3.6, gamma = 3.5, k_e = 5.0; zeta is an assumption
    return ModelParams.calibrated(zeta, 3.5, 5.0, 0.62, 3.6)


class TestPStar:
    def test_reference_area(self):
        p = ModelParams(zeta=1.0, gamma=1.0, k_e=5.0, p_h=2.5, area_ref=4.0)
        assert p_star(p, 4.0) == 2.5

    def test_ten_percent_stretch(self):
        p = ModelParams(zeta=1.0, gamma=1.0, k_e=5.0, p_h=2.5, area_ref=4.0)
        assert abs(p_star(p, 4.4) - 2.0) <= 1e-12

    def test_incompressible_limit(self):
        p = ModelParams(zeta=1.0, gamma=1.0, k_e=0.0, p_h=2.5, area_ref=4.0)
        for a in (0.5, 4.0, 80.0):
            assert p_star(p, a) == 2.5

    def test_validation(self):
        with pytest.raises(ValueError):
            ModelParams(zeta=-1.0, gamma=1.0, k_e=0.0, p_h=1.0, area_ref=1.0)
        with pytest.raises(ValueError):
            ModelParams(zeta=1.0, gamma=0.0, k_e=0.0, p_h=1.0, area_ref=1.0)


class TestRadialState:
    def test_fig1_calibration(self):
        p = fig1_params()
        st = radial_state(p, 3.6)
        assert abs(st.m0 - 0.62) <= 1e-13
        assert abs(st.p_star_val - (0.62 + 3.5 / 3.6)) <= 1e-13
        assert abs(st.M - math.pi * 3.6**2 * 0.62) <= 1e-10
        assert abs(st.phi0 - st.m0 / p.zeta) <= 1e-15

    def test_defining_identity(self):
        p = fig1_params()
        for R in (3.0, 3.3, 3.6, 3.8):
            st = radial_state(p, R)
            assert abs(st.m0 + p.gamma / R - st.p_star_val) <= 1e-14

    def test_small_tension_limit(self):
        p = ModelParams(zeta=1.0, gamma=1e-12, k_e=0.0, p_h=2.0, area_ref=1.0)
        st = radial_state(p, 1.0)
        assert abs(st.m0 - 2.0) <= 1e-11

    def test_nonpositive_density_rejected(self):
        p = fig1_params()
        with pytest.raises(ValueError, match="nonpositive"):
            radial_state(p, 3.9)

    def test_pure_function(self):
        p = fig1_params()
        a, b = radial_state(p, 3.6), radial_state(p, 3.6)
        assert a == b


class TestMassCurve:
    def test_plain_limit(self):
        p = ModelParams(zeta=1.0, gamma=1e-14, k_e=0.0, p_h=3.0, area_ref=1.0)
        assert abs(M_of_R(p, 2.0) - math.pi * 4.0 * 3.0) <= 1e-10

    def test_derivative_vs_fd(self):
        p = fig1_params()
        for R in (3.2, 3.6, 3.75):
            h = 1e-5
            fd = (M_of_R(p, R + h) - M_of_R(p, R - h)) / (2 * h)
            assert abs(dM_dR(p, R) - fd) <= 1e-6 * abs(fd)

    def test_decreasing_iff_condition_c(self):
        p = fig1_params()
        for R in (3.0, 3.4, 3.6, 3.8):
            rep = check_hypotheses(p, R)
            assert rep.holds_c == (rep.dM_dR < 0)


class TestHypotheses:
    def test_zero_ke_fails_c(self):
        p = ModelParams.calibrated(2.0, 1.0, 0.0, 0.5, 2.0)
        rep = check_hypotheses(p, 2.0)
        assert not rep.holds_c

    def test_small_zeta_fails_a(self):
        p = ModelParams.calibrated(0.3, 3.5, 5.0, 0.62, 3.6)
        rep = check_hypotheses(p, 3.6)
        assert not rep.holds_a

    def test_fig1_all_hold(self):
        rep = check_hypotheses(fig1_params(), 3.6)
        assert rep.holds_a and rep.holds_b_multiplicity and rep.holds_b_distinct and rep.holds_c
        assert rep.all_hold
        assert rep.margin_b_multiplicity > 0
        # both fourth-eigenvalue conventions are reported
        assert rep.margin_b_distinct >= rep.margin_b_multiplicity

    def test_margin_c_sign(self):
        rep = check_hypotheses(fig1_params(), 3.6)
        assert rep.holds_c and rep.margin_c > 0 and rep.dM_dR < 0
