"""Time-dependent action-angle chart for the radial motion.

With a = a(t) > 0 frozen, the radial Hamiltonian is integrable and carries
action-angle coordinates (I, phi):

    r   = (2/sqrt(b)) * (I + a/2 + sqrt(I(I+a)) sin(phi))^(1/2)
    p_r = 2 sqrt(I(I+a)) cos(phi) / r

with the orbit bounded between r_-(I) and r_+(I).  Substituting the actual
a(t) makes the transformation time dependent; the transformed Hamiltonian
picks up a generating-function term and reads

    H_c = b I - a'(t) * arctan( sqrt(I) cos(phi) /
                                (sqrt(I+a) + sqrt(I) sin(phi)) ).

The angle is recovered quadrant-correctly from the pair
(S sin(phi), S cos(phi)) = (b r^2/4 - I - a/2, r p_r / 2), S = sqrt(I(I+a)),
because the bare tangent form loses the quadrant and fails at p_r = 0.  At
I = 0 the angle is a genuine coordinate singularity and is set to 0.

The full (nonreduced) energy satisfies H = b*(I + a) for a > 0, which ties
action growth directly to energy growth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from . import stepping
from .errors import DomainError
from .flux import effective_momentum, effective_momentum_rate
from .dynamics import _a_packed, _aprime_packed, pack_params

__all__ = [
    "ActionAngleState",
    "to_action_angle",
    "from_action_angle",
    "hamiltonian_action_angle",
    "eom_action_angle",
    "action_series",
    "to_action_angle_trajectory",
    "radial_turning_points",
]


@dataclass(frozen=True)
class ActionAngleState:
    I: float
    phi: float

    def __post_init__(self):
        if not self.I >= 0:
            raise DomainError(f"action must be nonnegative, got I={self.I}")


def to_action_angle(params, state, t):
    """Map (r, p_r) at time t to (I, phi)."""
    r, p_r = (state.r, state.p_r) if hasattr(state, "p_r") else state
    if not r > 0:
        raise DomainError(f"action-angle chart needs r > 0, got r={r}")
    a = effective_momentum(params, t)
    b = params.b
    I = 0.5 / b * (p_r**2 + (a / r - 0.5 * b * r) ** 2)
    # S*sin(phi) and S*cos(phi); atan2 of the pair is quadrant-correct.  At
    # (numerically) zero action both parts are roundoff noise and the angle
    # is genuinely undefined; use the phi = 0 convention there.
    if I <= 1e-28 * (0.25 * b * r * r + 0.5 * a):
        return ActionAngleState(I=I, phi=0.0)
    sin_part = 0.25 * b * r * r - I - 0.5 * a
    cos_part = 0.5 * r * p_r
    phi = math.atan2(sin_part, cos_part)
    return ActionAngleState(I=I, phi=phi)


def from_action_angle(params, state, t):
    """Map (I, phi) at time t back to (r, p_r)."""
    I, phi = state.I, state.phi
    a = effective_momentum(params, t)
    b = params.b
    S = math.sqrt(I * (I + a))
    inner = I + 0.5 * a + S * math.sin(phi)
    r = 2.0 * math.sqrt(inner / b)
    p_r = 2.0 * S * math.cos(phi) / r
    return r, p_r


def radial_turning_points(params, I, t):
    """(r_minus, r_plus) of the instantaneous orbit through action I."""
    a = np.abs(effective_momentum(params, t))
    root_ia = np.sqrt(np.asarray(I) + a)
    root_i = np.sqrt(np.asarray(I))
    c = math.sqrt(2.0 / params.b)
    return c * (root_ia - root_i), c * (root_ia + root_i)


def hamiltonian_action_angle(params, state, t):
    """Radial Hamiltonian in the action-angle chart (up to an I,phi-free term)."""
    I, phi = state.I, state.phi
    a = effective_momentum(params, t)
    ap = effective_momentum_rate(params, t)
    num = math.sqrt(I) * math.cos(phi)
    den = math.sqrt(I + a) + math.sqrt(I) * math.sin(phi)
    return params.b * I - ap * math.atan2(num, den)


def eom_action_angle(params, state, t):
    """(dphi/dt, dI/dt); the phi equation is singular at I = 0."""
    I, phi = state.I, state.phi
    if not I > 0:
        raise DomainError("angle rate undefined at I = 0; integrate another chart near the circular orbit")
    a = effective_momentum(params, t)
    ap = effective_momentum_rate(params, t)
    S = math.sqrt(I * (I + a))
    den = 2.0 * I + a + 2.0 * S * math.sin(phi)
    dphi = params.b - math.cos(phi) * a * ap / (2.0 * S * den)
    dI = -0.5 * ap * (1.0 - a / den)
    return dphi, dI


# vectorised versions used on whole trajectories ------------------------

def action_series(params, traj):
    """(I, phi_unwrapped, r_minus, r_plus) along a polar-chart trajectory."""
    if traj.chart != "polar":
        raise ValueError(f"action_series expects a polar trajectory, got {traj.chart!r}")
    t = traj.times
    r = traj.column("r")
    p_r = traj.column("p_r")
    a = effective_momentum(params, t)
    b = params.b
    I = 0.5 / b * (p_r**2 + (a / r - 0.5 * b * r) ** 2)
    phi = np.unwrap(np.arctan2(0.25 * b * r * r - I - 0.5 * a, 0.5 * r * p_r))
    rm, rp = radial_turning_points(params, I, t)
    return I, phi, rm, rp


def to_action_angle_trajectory(params, traj):
    """Re-express a polar trajectory in the action-angle chart."""
    from .dynamics import Trajectory

    I, phi, rm, rp = action_series(params, traj)
    return Trajectory(
        chart="actionangle",
        times=traj.times,
        columns=("I", "phi", "r_minus", "r_plus"),
        data=np.column_stack((I, phi, rm, rp)),
        params_digest=traj.params_digest,
        events=traj.events,
        meta=dict(traj.meta),
    )


# jitted kernels for direct integration in this chart -------------------

@numba.njit(cache=True, inline="always")
def _orbit_den(I, a, phi):
    """2I + a + 2 sqrt(I(I+a)) sin(phi) without cancellation at sin = -1.

    (2I+a)^2 - 4I(I+a) = a^2, so the perihelion value a^2/(2(2I+a)) keeps
    full relative precision via the positive-term rewrite.
    """
    A = 2.0 * I + a
    S2 = 2.0 * np.sqrt(I * (I + a))
    sn = np.sin(phi)
    if sn >= 0.0:
        return A + S2 * sn
    cs = np.cos(phi)
    return (A * A * cs * cs + a * a * sn * sn) / (A - S2 * sn)


@numba.njit(cache=True)
def _rhs_actionangle(t, y, pa, out):
    I, phi = y[0], y[1]
    if I <= 0.0:
        out[0] = np.nan
        out[1] = np.nan
        return
    b = pa[0]
    a = _a_packed(pa, t)
    ap = _aprime_packed(pa, t)
    S = np.sqrt(I * (I + a))
    den = _orbit_den(I, a, phi)
    out[0] = -0.5 * ap * (1.0 - a / den)
    out[1] = b - np.cos(phi) * a * ap / (2.0 * S * den)


@numba.njit(cache=True)
def _metric_actionangle(t, y, pa):
    # instantaneous radius: r^2 = (2/b) * (2I + a + 2 S sin(phi))
    I, phi = y[0], y[1]
    a = _a_packed(pa, t)
    return np.sqrt(2.0 * _orbit_den(I, a, phi) / pa[0])


def chart_runtime(params, state0):
    """Hookup for dynamics.integrate(chart='actionangle')."""
    st = state0 if isinstance(state0, ActionAngleState) else ActionAngleState(*state0)
    if not st.I > 0:
        raise DomainError("direct action-angle integration needs I(0) > 0")
    y0 = np.array([st.I, st.phi])
    driver = stepping.compiled_driver(_rhs_actionangle, _metric_actionangle)
    pa = pack_params(params)

    def table(times, Y):
        # phi from direct integration is already continuous; no unwrapping
        I, phi = Y[:, 0], Y[:, 1]
        rm, rp = radial_turning_points(params, I, times)
        return ("I", "phi", "r_minus", "r_plus"), np.column_stack((I, phi, rm, rp))

    return driver, pa, y0, table, params.perihelion_radius()
