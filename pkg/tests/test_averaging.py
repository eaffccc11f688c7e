"""Resonant averaging: disk polynomial, reduced flow, generator, transform."""

import math
import warnings

import numpy as np
import pytest

import cyclores as cy
from cyclores import averaging
from cyclores.averaging import (
    AveragedState,
    coupling_hamiltonian,
    coupling_polynomial,
    disk_level_value,
    exceptional_level,
    generator_gradients,
    limit_growth_rate,
    pullback_from_averaged,
    push_to_averaged,
)

from conftest import reference_params, reference_profile


class TestCouplingPolynomial:
    def test_reference_coefficients_unit_ratio(self):
        params = reference_params(epsilon=0.35, p_theta=1.0)
        h = coupling_polynomial(params)
        assert h.degree == 2
        assert h.coeffs[0] == pytest.approx(0.175, abs=1e-15)
        assert h.coeffs[1] == pytest.approx(-0.35 / 6.0, abs=1e-15)

    def test_zero_profile_gives_zero_polynomial(self):
        params = cy.ModelParams.from_ratio(
            b=1.0, ratio=(1, 1), epsilon=0.1, p_theta=1.0, profile=cy.FluxProfile((), ())
        )
        assert coupling_polynomial(params).is_zero()

    def test_ratio_one_half_picks_even_harmonic(self):
        params = reference_params(epsilon=0.35, ratio=(1, 2), p_theta=1.0)
        h = coupling_polynomial(params)
        assert h.degree == 1
        # only F[f]_{-2} = -1/6 survives: c_1 = -eps*1*b*(-1/6)*i = i*eps*b/6
        assert h.coeffs[0] == pytest.approx(1j * 0.35 / 6.0, abs=1e-15)

    def test_nonresonant_ratio_is_zero(self):
        params = reference_params(ratio=(1, 3), p_theta=1.0)
        assert coupling_polynomial(params).is_zero()


class TestCouplingHamiltonian:
    def test_nonresonant_vanishes(self):
        params = reference_params(ratio=(1, 3), p_theta=1.0)
        assert coupling_hamiltonian(params, params.pair, 0.3, 0.7, 2.0) == 0.0

    def test_matches_disk_polynomial(self):
        params = reference_params(epsilon=0.35, p_theta=1.0)
        pair = params.pair
        h = coupling_polynomial(params)
        rng = np.random.default_rng(8)
        for _ in range(100):
            psi1, psi2 = rng.uniform(0, 2 * np.pi, 2)
            J1 = rng.uniform(0.1, 50.0)
            z = averaging.beta_of(J1, params.p_theta) ** pair.mu * np.exp(
                1j * (pair.mu * psi1 - pair.nu * psi2)
            )
            expect = h.value(z).real / (params.epsilon * pair.mu)
            assert coupling_hamiltonian(params, pair, psi1, psi2, J1) == pytest.approx(
                expect, abs=1e-12
            )

    def test_real_and_biperiodic(self):
        params = reference_params(epsilon=0.2, ratio=(2, 3), p_theta=1.0)
        pair = params.pair
        val = coupling_hamiltonian(params, pair, 0.4, 1.1, 3.0)
        assert isinstance(val, float)
        for dpsi1, dpsi2 in ((2 * np.pi, 0.0), (0.0, 2 * np.pi)):
            assert coupling_hamiltonian(
                params, pair, 0.4 + dpsi1, 1.1 + dpsi2, 3.0
            ) == pytest.approx(val, abs=1e-14)

    def test_averaged_hamiltonian_linear_part(self):
        params = reference_params(epsilon=0.0, p_theta=1.0)
        pair = params.pair
        val = averaging.averaged_hamiltonian(params, pair, (0.1, 0.2), (2.0, 3.0))
        assert val == pytest.approx(params.b * 2.0 + params.omega * 3.0, rel=1e-14)


class TestReducedFlow:
    def test_frozen_for_zero_polynomial(self):
        params = reference_params(ratio=(1, 3), p_theta=1.0)
        dchi, dJ = cy.reduced_eom(params, params.pair, AveragedState(0.3, 2.0))
        assert (dchi, dJ) == (0.0, 0.0)

    def test_level_value_conserved(self, fig_params):
        traj = cy.integrate(fig_params, "averaged", (0.7, 1.0), (0.0, 1e3),
                            tol=(1e-11, 1e-13), sampling=512)
        Z = traj.column("Z")
        assert np.max(np.abs(Z - Z[0])) < 1e-9

    def test_eom_matches_level_gradient(self, fig_params):
        # finite-difference Hamiltonian check of the reduced equations
        pair = fig_params.pair
        holo = coupling_polynomial(fig_params)
        rng = np.random.default_rng(1)
        h = 1e-7
        for _ in range(50):
            chi = rng.uniform(0, 2 * np.pi)
            J = rng.uniform(0.2, 20.0)
            dchi, dJ = cy.reduced_eom(fig_params, pair, AveragedState(chi, J), holo)

            def Z(c, j):
                return disk_level_value(fig_params, pair, AveragedState(c, j), holo)

            assert dchi == pytest.approx((Z(chi, J + h) - Z(chi, J - h)) / (2 * h), rel=2e-6, abs=1e-9)
            assert dJ == pytest.approx(-(Z(chi + h, J) - Z(chi - h, J)) / (2 * h), rel=2e-6, abs=1e-9)

    def test_growth_settles_to_boundary_rate(self, fig_params):
        holo = coupling_polynomial(fig_params)
        rng = np.random.default_rng(42)
        checked = 0
        for _ in range(6):
            chi0 = rng.uniform(0, 2 * np.pi)
            J0 = rng.uniform(0.5, 4.0)
            if exceptional_level(holo, disk_level_value(fig_params, fig_params.pair, AveragedState(chi0, J0), holo)):
                continue
            traj = cy.integrate(fig_params, "averaged", (chi0, J0), (0.0, 1e5),
                                tol=(1e-11, 1e-13), sampling=256)
            chi_end = traj.column("chi1")[-1]
            J_end = traj.column("J1")[-1]
            _, dJ = cy.reduced_eom(fig_params, fig_params.pair, AveragedState(chi_end, J_end), holo)
            lim = limit_growth_rate(holo, chi_end)
            assert lim > 0
            assert abs(dJ - lim) / lim < 1e-3
            checked += 1
        assert checked >= 4

    def test_action_combination_conserved_in_4d_flow(self, fig_params):
        pair = fig_params.pair
        traj = cy.integrate(fig_params, "averaged4", (0.3, 0.0, 2.0, 0.0), (0.0, 1e3),
                            tol=(1e-11, 1e-13), sampling=512)
        L2 = pair.nu * traj.column("J1") + pair.mu * traj.column("J2")
        assert np.max(np.abs(L2 - L2[0])) < 1e-9

    def test_reduced_and_4d_flows_agree(self, fig_params):
        pair = fig_params.pair
        psi0 = (0.8, 0.0, 1.5, 0.0)
        tr4 = cy.integrate(fig_params, "averaged4", psi0, (0.0, 500.0),
                           tol=(1e-12, 1e-14), sampling=256)
        chi0 = pair.mu * psi0[0] - pair.nu * psi0[1]
        tr2 = cy.integrate(fig_params, "averaged", (chi0, psi0[2]), (0.0, 500.0),
                           tol=(1e-12, 1e-14), sampling=256)
        chi_4d = pair.mu * tr4.column("psi1") - pair.nu * tr4.column("psi2")
        assert np.max(np.abs(chi_4d - tr2.column("chi1"))) < 1e-8
        assert np.max(np.abs(tr4.column("J1") - tr2.column("J1"))) < 1e-8


class TestGenerator:
    def test_zero_for_zero_drive(self):
        params = reference_params(epsilon=0.0, p_theta=1.0)
        assert generator_gradients(params, params.pair, 0.3, 0.7, 2.0) == (0.0, 0.0)

    def test_gradients_match_value_differences(self, fig_params):
        # finite differences of a directly summed S1 value
        pair = fig_params.pair
        prof = fig_params.profile
        lam = pair.mu / pair.nu
        p = fig_params.p_theta

        def S1(phi1, phi2, J1, N=4000):
            beta = math.sqrt(J1 / (J1 + p))
            w = 1j * beta * np.exp(1j * phi1)
            total = 0.0
            for k in range(1, prof.order + 1):
                fpk = 1j * k * prof.fourier_coefficient(k)
                if fpk == 0:
                    continue
                kl = k * lam
                m_ex = round(kl) if abs(kl - round(kl)) < 1e-12 else -1
                m = np.arange(1, N + 1)
                wm = w ** m
                Gk = lam * np.sum(wm / (2 * m * (m + kl)))
                keep = m != m_ex
                Gk += lam * np.sum(np.conj(wm[keep]) / (-2 * m[keep] * (-m[keep] + kl)))
                total += 2 * (fpk * Gk * np.exp(1j * k * phi2)).real
            return total

        h = 1e-6
        for phi1, phi2, J1 in [(0.3, 0.9, 2.0), (2.5, 4.0, 0.7), (1.0, 0.0, 10.0)]:
            dJ, dphi = generator_gradients(fig_params, pair, phi1, phi2, J1)
            fd_J = (S1(phi1, phi2, J1 + h) - S1(phi1, phi2, J1 - h)) / (2 * h)
            fd_phi = (S1(phi1 + h, phi2, J1) - S1(phi1 - h, phi2, J1)) / (2 * h)
            assert dJ == pytest.approx(fd_J, rel=2e-5, abs=1e-9)
            assert dphi == pytest.approx(fd_phi, rel=2e-5, abs=1e-9)

    def test_action_gradient_decays_along_growing_run(self, fig_params):
        pair = fig_params.pair
        traj = cy.integrate(fig_params, "averaged", (0.7, 1.0), (1.0, 2e4),
                            tol=(1e-11, 1e-13), sampling=np.geomspace(10.0, 2e4, 12))
        vals = []
        for t, chi, J in zip(traj.times, traj.column("chi1"), traj.column("J1")):
            phi1 = (chi + pair.nu * fig_params.omega * t) / pair.mu
            dJ, _ = generator_gradients(fig_params, pair, phi1, fig_params.omega * t, J)
            vals.append(abs(dJ))
        slope = np.polyfit(np.log(traj.times[3:]), np.log(vals[3:]), 1)[0]
        assert -1.5 < slope < -0.6  # O(1/t)

    def test_angle_gradient_log_bounded_toward_disk_edge(self, fig_params):
        pair = fig_params.pair
        p = fig_params.p_theta
        Js = np.geomspace(10.0, 1e7, 12)
        vals = []
        logs = []
        for J in Js:
            _, dphi = generator_gradients(fig_params, pair, 1.1, 0.4, J)
            beta = math.sqrt(J / (J + p))
            vals.append(abs(dphi))
            logs.append(abs(math.log(1.0 - beta)))
        coef = np.polyfit(logs, vals, 1)
        resid = np.array(vals) - np.polyval(coef, logs)
        # growth is at most logarithmic in 1/(1-beta)
        assert np.max(np.abs(resid)) < 0.25 * (max(vals) - min(vals) + 1e-12)


class TestTransform:
    def test_identity_without_drive(self):
        params = reference_params(epsilon=0.0, p_theta=1.0)
        psi1, I1 = cy.vonzeipel_forward(params, params.pair, 0.3, 0.8, 2.0)
        assert (psi1, I1) == (0.3, 2.0)
        phi1, J1 = cy.vonzeipel_inverse(params, params.pair, 0.3, 0.8, 2.0)
        assert (phi1, J1) == (0.3, 2.0)

    def test_forward_inverse_round_trip(self):
        params = reference_params(epsilon=0.05, p_theta=1.0)
        pair = params.pair
        rng = np.random.default_rng(12)
        for _ in range(40):
            phi1, phi2 = rng.uniform(0, 2 * np.pi, 2)
            J1 = rng.uniform(1.0, 100.0)
            psi1, I1 = cy.vonzeipel_forward(params, pair, phi1, phi2, J1)
            phi1b, J1b = cy.vonzeipel_inverse(params, pair, psi1, phi2, I1)
            assert phi1b == pytest.approx(phi1, abs=1e-10)
            assert J1b == pytest.approx(J1, abs=1e-10)

    def test_near_identity_displacement_bounded(self):
        params = reference_params(epsilon=0.05, p_theta=1.0)
        pair = params.pair
        rng = np.random.default_rng(13)
        for _ in range(40):
            phi1, phi2 = rng.uniform(0, 2 * np.pi, 2)
            J1 = rng.uniform(1.0, 100.0)
            dS_dJ, _ = generator_gradients(params, pair, phi1, phi2, J1)
            psi1, _ = cy.vonzeipel_forward(params, pair, phi1, phi2, J1)
            assert abs(psi1 - phi1) <= params.epsilon * abs(dS_dJ) + 1e-15

    def test_push_pullback_round_trip(self):
        params = reference_params(epsilon=0.05, p_theta=1.0)
        pair = params.pair
        psi1, J1 = push_to_averaged(params, pair, 0.4, 1.3, 2.0)
        phi1, I1 = pullback_from_averaged(params, pair, psi1, 1.3, J1)
        assert phi1 == pytest.approx(0.4, abs=1e-10)
        assert I1 == pytest.approx(2.0, abs=1e-10)


class TestComparison:
    def test_no_drive_is_exact(self):
        params = reference_params(epsilon=0.0, p_theta=1.0)
        rep = averaging.averaged_vs_true_comparison(
            params, params.pair, cy.ActionAngleState(1.0, 0.3), horizon=50.0
        )
        assert rep.sup_deviation == 0.0

    def test_first_order_accuracy_over_validity_horizon(self):
        devs = {}
        for eps in (0.04, 0.02, 0.01):
            params = reference_params(epsilon=eps, p_theta=1.0)
            rep = averaging.averaged_vs_true_comparison(
                params, params.pair, cy.ActionAngleState(1.0, 0.3), horizon=1e9
            )
            assert rep.horizon == pytest.approx(1.0 / eps)
            assert rep.sup_deviation <= 10.0 * eps
            devs[eps] = rep.sup_deviation
        es = sorted(devs)
        slope = np.polyfit(np.log(es), np.log([devs[e] for e in es]), 1)[0]
        assert 0.6 < slope < 1.5  # deviation scales like epsilon

    def test_nonresonant_actions_stay_bounded(self):
        params = reference_params(epsilon=0.05, ratio=(1, 3), p_theta=1.0)
        rep = averaging.averaged_vs_true_comparison(
            params, params.pair, cy.ActionAngleState(1.0, 0.3), horizon=1e9
        )
        for series in (rep.I_true, rep.I_averaged):
            assert np.max(series) / np.median(series) < 2.0


class TestPulledBackSlope:
    def test_growth_rate_matches_averaged_prediction(self):
        # evolve the averaged flow, pull back, fit the original action's slope
        params = reference_params(epsilon=0.05, p_theta=1.0)
        pair = params.pair
        psi0, J0 = push_to_averaged(params, pair, 0.3, 0.0, 1.0)
        traj = cy.integrate(params, "averaged4", (psi0, 0.0, J0, 0.0), (0.0, 1e5),
                            tol=(1e-11, 1e-13), sampling=600)
        I_back = np.empty(traj.times.size)
        phi_back = np.empty(traj.times.size)
        psi1 = traj.column("psi1")
        J1 = traj.column("J1")
        for i, t in enumerate(traj.times):
            phi_back[i], I_back[i] = pullback_from_averaged(
                params, pair, psi1[i], params.omega * t, J1[i]
            )
        fit = cy.fit_linear_growth(traj.times, I_back)
        phase = cy.analysis.extract_phase_details(params, (traj.times, phi_back))
        xi = (params.omega / params.b) * (phase.value + math.pi / 2)
        fnu = cy.averaged_profile(params.profile, pair.nu)
        C_formula = -0.5 * params.epsilon * params.omega * fnu.derivative(-xi)
        assert abs(fit.slope - C_formula) / C_formula < 5e-2


class TestExceptionalLevels:
    def test_zero_polynomial_always_exceptional(self):
        assert exceptional_level(cy.HoloPoly(()), 0.0)

    def test_center_level_excluded(self, fig_params):
        holo = coupling_polynomial(fig_params)
        assert exceptional_level(holo, 0.0)

    def test_boundary_critical_levels_detected(self, fig_params):
        holo = coupling_polynomial(fig_params)
        # boundary extrema of Re[h(e^{i chi})] sit where the growth rate vanishes
        chis = np.linspace(0, 2 * np.pi, 20001)
        bd = np.array([holo.value(np.exp(1j * c)).real for c in chis])
        crit_val = bd.max()
        assert exceptional_level(holo, crit_val, tol=1e-6)

    def test_generic_level_not_exceptional(self, fig_params):
        holo = coupling_polynomial(fig_params)
        assert not exceptional_level(holo, 0.123 * 0.35)
