"""Action-angle chart: transforms, transformed Hamiltonian, equations of motion."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import cyclores as cy
from cyclores.actionangle import (
    ActionAngleState,
    action_series,
    radial_turning_points,
    to_action_angle_trajectory,
)

from conftest import reference_params


def aa_params(a_value, b=1.0):
    """Parameters with a frozen a(t) = a_value (no drive)."""
    return reference_params(epsilon=0.0, p_theta=a_value, b=b)


class TestTransforms:
    def test_hand_case(self):
        params = aa_params(1.0)
        state = cy.to_action_angle(params, (2.0, 0.0), 0.0)
        assert state.I == pytest.approx(0.125, abs=1e-15)
        assert state.phi == pytest.approx(math.pi / 2, abs=1e-14)
        r, pr = cy.from_action_angle(params, state, 0.0)
        assert (r, pr) == (pytest.approx(2.0, rel=1e-14), pytest.approx(0.0, abs=1e-14))

    def test_circular_orbit_is_zero_action(self):
        params = aa_params(1.3, b=0.7)
        r_circ = math.sqrt(2 * 1.3 / 0.7)
        state = cy.to_action_angle(params, (r_circ, 0.0), 0.0)
        assert state.I == pytest.approx(0.0, abs=1e-15)
        assert state.phi == 0.0  # angle convention at the coordinate singularity

    def test_zero_action_inverse(self):
        params = aa_params(0.8)
        for phi in (0.0, 1.0, -2.5):
            r, pr = cy.from_action_angle(params, ActionAngleState(0.0, phi), 0.0)
            assert r == pytest.approx(math.sqrt(2 * 0.8), rel=1e-14)
            assert pr == 0.0

    def test_angle_periodicity(self):
        params = aa_params(1.1)
        s1 = ActionAngleState(0.4, 0.9)
        s2 = ActionAngleState(0.4, 0.9 + 2 * math.pi)
        assert cy.from_action_angle(params, s1, 0.0) == pytest.approx(
            cy.from_action_angle(params, s2, 0.0), rel=1e-13
        )

    @given(
        st.floats(0.1, 10), st.floats(-10, 10), st.floats(0.5, 2.0)
    )
    @settings(max_examples=200)
    def test_round_trip(self, r, pr, a):
        params = aa_params(a)
        state = cy.to_action_angle(params, (r, pr), 0.0)
        r2, pr2 = cy.from_action_angle(params, state, 0.0)
        assert r2 == pytest.approx(r, rel=1e-11, abs=1e-11)
        assert pr2 == pytest.approx(pr, rel=1e-11, abs=1e-11)

    @given(st.floats(0.01, 50), st.floats(-10, 10), st.floats(0.5, 2.0))
    @settings(max_examples=200)
    def test_radius_between_turning_points(self, I, phi, a):
        params = aa_params(a)
        r, _ = cy.from_action_angle(params, ActionAngleState(I, phi), 0.0)
        rm, rp = radial_turning_points(params, I, 0.0)
        assert rm - 1e-12 <= r <= rp + 1e-12

    def test_turning_point_equality_at_extreme_angles(self):
        params = aa_params(1.0)
        I = 0.7
        rm, rp = radial_turning_points(params, I, 0.0)
        r_top, _ = cy.from_action_angle(params, ActionAngleState(I, math.pi / 2), 0.0)
        r_bot, _ = cy.from_action_angle(params, ActionAngleState(I, -math.pi / 2), 0.0)
        assert r_top == pytest.approx(rp, rel=1e-13)
        assert r_bot == pytest.approx(rm, rel=1e-13)

    def test_canonicality_unit_jacobian(self):
        # {phi, I} = 1: the (r, p_r) -> (phi, I) Jacobian has determinant 1
        params = reference_params()
        rng = np.random.default_rng(2)
        h = 1e-6
        for _ in range(50):
            r = rng.uniform(0.4, 4.0)
            pr = rng.uniform(-2.0, 2.0)
            t = rng.uniform(0.0, 10.0)

            def chart(rr, pp):
                s = cy.to_action_angle(params, (rr, pp), t)
                return s.phi, s.I

            f_r = (np.array(chart(r + h, pr)) - np.array(chart(r - h, pr))) / (2 * h)
            f_p = (np.array(chart(r, pr + h)) - np.array(chart(r, pr - h))) / (2 * h)
            det = f_r[0] * f_p[1] - f_p[0] * f_r[1]
            assert det == pytest.approx(1.0, rel=1e-6)

    def test_energy_relation(self):
        # full polar H equals b*(I + a) for a > 0
        params = reference_params()
        rng = np.random.default_rng(3)
        for _ in range(100):
            r = rng.uniform(0.3, 5.0)
            pr = rng.uniform(-2.0, 2.0)
            t = rng.uniform(0.0, 10.0)
            a = cy.effective_momentum(params, t)
            H = 0.5 * (pr**2 + (a / r + 0.5 * params.b * r) ** 2)
            I = cy.to_action_angle(params, (r, pr), t).I
            assert H == pytest.approx(params.b * (I + a), rel=1e-10)

    def test_domain_error_at_origin(self):
        with pytest.raises(cy.DomainError):
            cy.to_action_angle(reference_params(), (0.0, 1.0), 0.0)


class TestHamiltonian:
    def test_reduces_to_bI_without_drive(self):
        params = aa_params(1.0, b=1.7)
        state = ActionAngleState(0.42, 1.1)
        assert cy.hamiltonian_action_angle(params, state, 0.3) == pytest.approx(1.7 * 0.42)

    def test_vanishes_at_zero_action(self):
        params = reference_params()
        assert cy.hamiltonian_action_angle(params, ActionAngleState(0.0, 0.0), 0.2) == 0.0

    def test_eom_is_gradient(self):
        params = reference_params()
        rng = np.random.default_rng(4)
        h = 1e-6
        for _ in range(100):
            I = rng.uniform(0.05, 5.0)
            phi = rng.uniform(-3.0, 3.0)
            t = rng.uniform(0.0, 10.0)
            dphi, dI = cy.eom_action_angle(params, ActionAngleState(I, phi), t)

            def Hc(ii, pp):
                return cy.hamiltonian_action_angle(params, ActionAngleState(ii, pp), t)

            dH_dI = (Hc(I + h, phi) - Hc(I - h, phi)) / (2 * h)
            dH_dphi = (Hc(I, phi + h) - Hc(I, phi - h)) / (2 * h)
            assert dphi == pytest.approx(dH_dI, rel=1e-6, abs=1e-7)
            assert dI == pytest.approx(-dH_dphi, rel=1e-6, abs=1e-7)


class TestEom:
    def test_frozen_without_drive(self):
        params = aa_params(1.0, b=2.2)
        dphi, dI = cy.eom_action_angle(params, ActionAngleState(1.0, 0.3), 0.0)
        assert (dphi, dI) == (2.2, 0.0)

    def test_large_action_limit(self):
        params = reference_params()
        t = 0.7
        ap = cy.effective_momentum_rate(params, t)
        _, dI = cy.eom_action_angle(params, ActionAngleState(1e8, 0.0), t)
        assert dI == pytest.approx(-0.5 * ap, rel=1e-7)

    def test_singular_at_zero_action(self):
        with pytest.raises(cy.DomainError):
            cy.eom_action_angle(reference_params(), ActionAngleState(0.0, 0.0), 0.0)

    def test_pushforward_of_radial_flow(self):
        # chain rule: d/dt of the chart applied to the radial flow matches
        params = reference_params()
        rng = np.random.default_rng(6)
        h = 1e-6
        for _ in range(40):
            r = rng.uniform(0.5, 3.0)
            pr = rng.uniform(-1.5, 1.5)
            t = rng.uniform(0.0, 10.0)
            state = cy.to_action_angle(params, (r, pr), t)
            if state.I < 1e-3:
                continue
            dphi, dI = cy.eom_action_angle(params, state, t)
            dr, dpr = cy.eom_radial(params, (r, pr), t)

            def chart(rr, pp, tt):
                s = cy.to_action_angle(params, (rr, pp), tt)
                return np.array([s.phi, s.I])

            total = (
                (chart(r + h * dr, pr + h * dpr, t + h) - chart(r - h * dr, pr - h * dpr, t - h))
                / (2 * h)
            )
            # unwrap a possible branch jump in the finite difference of phi
            total[0] = math.remainder(total[0] * 2 * h, 2 * math.pi) / (2 * h) if abs(total[0]) > 100 else total[0]
            assert total[0] == pytest.approx(dphi, rel=1e-5, abs=1e-5)
            assert total[1] == pytest.approx(dI, rel=1e-5, abs=1e-7)

    def test_chart_equivalence_with_radial_integration(self, fig_params, fig_polar_state):
        pol = fig_polar_state
        T = 100.0
        trp = cy.integrate(fig_params, "polar", (pol.r, pol.theta, pol.p_r), (0.0, T),
                           tol=(1e-11, 1e-13), sampling=2001)
        s0 = cy.to_action_angle(fig_params, (pol.r, pol.p_r), 0.0)
        tra = cy.integrate(fig_params, "actionangle", s0, (0.0, T),
                           tol=(1e-11, 1e-13), sampling=2001)
        r_from_aa = np.array([
            cy.from_action_angle(fig_params, ActionAngleState(I, phi), t)[0]
            for I, phi, t in zip(tra.column("I"), tra.column("phi"), tra.times)
        ])
        assert np.max(np.abs(r_from_aa - trp.column("r"))) < 1e-6


class TestSeries:
    def test_action_series_matches_pointwise_transform(self, fig_params, fig_polar_state):
        pol = fig_polar_state
        traj = cy.integrate(fig_params, "polar", (pol.r, pol.theta, pol.p_r), (0.0, 30.0), sampling=601)
        I, phi, rm, rp = action_series(fig_params, traj)
        k = 137
        st_ = cy.to_action_angle(
            fig_params, (traj.column("r")[k], traj.column("p_r")[k]), traj.times[k]
        )
        assert I[k] == pytest.approx(st_.I, rel=1e-12)
        assert math.remainder(phi[k] - st_.phi, 2 * math.pi) == pytest.approx(0.0, abs=1e-12)
        aa_traj = to_action_angle_trajectory(fig_params, traj)
        assert aa_traj.chart == "actionangle"
        assert np.allclose(aa_traj.column("I"), I)
