"""Shared fixtures: the reference drive/parameters and the two long runs.

The long resonant run (1e4 cyclotron periods) is expensive enough to share
across the acceptance tests that consume it.
"""

import numpy as np
import pytest

import cyclores as cy
from cyclores.dynamics import CartesianState, cartesian_to_polar, momentum_from_velocity

REF_PTHETA = 1.617 - 0.5 - 0.35 / 3.0  # q^v - b|q|^2/2 + eps*f(0) at t=0


def reference_profile():
    # f(t) = sin t - (1/3) cos 2t
    return cy.FluxProfile.from_harmonics(cos={2: -1.0 / 3.0}, sin={1: 1.0})


def reference_params(epsilon=0.35, ratio=(1, 1), p_theta=REF_PTHETA, b=1.0):
    return cy.ModelParams.from_ratio(
        b=b, ratio=ratio, epsilon=epsilon, p_theta=p_theta, profile=reference_profile()
    )


@pytest.fixture(scope="session")
def fig_params():
    return reference_params()


@pytest.fixture(scope="session")
def fig_cart_state(fig_params):
    p0 = momentum_from_velocity(fig_params, (1.0, 0.0), (0.0, 1.617), 0.0)
    return CartesianState((1.0, 0.0), tuple(p0))


@pytest.fixture(scope="session")
def fig_polar_state(fig_cart_state):
    return cartesian_to_polar(fig_cart_state)


@pytest.fixture(scope="session")
def long_resonant_polar(fig_params, fig_polar_state):
    """Reference resonant run over 1e4 cyclotron periods in the polar chart."""
    T = 2.0 * np.pi * 1e4
    st = fig_polar_state
    return cy.integrate(
        fig_params, "polar", (st.r, st.theta, st.p_r), (0.0, T),
        sampling=int(T / 0.5),
    )


@pytest.fixture(scope="session")
def spiral_cartesian(fig_params, fig_cart_state):
    """The reference spiral over t in [0, 150], finely sampled."""
    return cy.integrate(
        fig_params, "cartesian", fig_cart_state, (0.0, 150.0),
        tol=(1e-11, 1e-13), sampling=15001,
    )
