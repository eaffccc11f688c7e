"""Guiding-center decomposition q = X + R and drift/gyration observables.

With velocity v = p - A(q, t) and cyclotron frequency b (e = m = 1):

    X = q + v_perp / b   (guiding center),
    R = - v_perp / b     (gyroradius vector),

polar-decomposed as X = |X|(cos chi, sin chi), R = |R|(cos vartheta,
sin vartheta).  The norms close in action-angle data,

    |X|^2 = (2I + |a| - a)/b,   |R|^2 = (2I + |a| + a)/b,

so |R|^2 - |X|^2 = 2a/b identically: for a(t) > 0 the orbit always
encircles the flux line.  The geometry locks the angles together,
vartheta = phi + chi - pi/2 (mod 2pi).

During resonant acceleration the energy H = b(I + a) grows linearly at the
rate gamma = b*C, both radii grow like sqrt(2*gamma*t)/b, and the guiding
angle drifts logarithmically, chi(t) ~ D log(b t) + const, with D given in
closed form by the drive's derivative coefficients.  Energy is gained in
narrow kicks around b*t = -phi_inf - pi/2 (mod 2pi), i.e. whenever the
gyrophase opposes the guiding angle and the particle passes the flux line.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .actionangle import action_series, to_action_angle
from .dynamics import PolarState, Trajectory, cartesian_to_polar, hamiltonian_series
from .errors import DegenerateDenominator, DomainError, NotAccelerating
from .flux import effective_momentum, effective_momentum_rate

__all__ = [
    "GuidingFrame",
    "guiding_frame",
    "guiding_series",
    "energy_and_rate",
    "radii_growth_check",
    "guiding_angle_rate",
    "log_drift_constant",
    "fit_log_drift",
    "kick_localization",
]


@dataclass(frozen=True)
class GuidingFrame:
    """One snapshot of the decomposition; angles unwrapped when chained."""

    X: tuple
    R: tuple
    chi: float
    vartheta: float

    @property
    def q(self):
        return (self.X[0] + self.R[0], self.X[1] + self.R[1])

    @property
    def abs_X(self):
        return math.hypot(*self.X)

    @property
    def abs_R(self):
        return math.hypot(*self.R)


def _branch(angle, previous):
    """Continue an angle on the branch nearest to ``previous``."""
    if previous is None:
        return angle
    return previous + math.remainder(angle - previous, 2.0 * math.pi)


def guiding_frame(params, state, t, prev=None):
    """Decompose a cartesian state; ``prev`` continues the angle branches.

    At |X| = 0 the guiding angle is undefined; the previous value (or 0)
    is kept by convention.
    """
    q1, q2 = state.q
    if q1 * q1 + q2 * q2 <= 0.0:
        raise DomainError("guiding frame undefined at q = 0")
    p1, p2 = state.p
    r2 = q1 * q1 + q2 * q2
    c = params.epsilon * params.profile.value(params.omega * t)
    alpha = -0.5 * params.b + c / r2
    v1 = p1 + alpha * q2
    v2 = p2 - alpha * q1
    # v_perp = (-v2, v1)
    X = (q1 - v2 / params.b, q2 + v1 / params.b)
    R = (v2 / params.b, -v1 / params.b)
    if X[0] == 0.0 and X[1] == 0.0:
        chi = prev.chi if prev is not None else 0.0
    else:
        chi = _branch(math.atan2(X[1], X[0]), prev.chi if prev else None)
    vartheta = _branch(math.atan2(R[1], R[0]), prev.vartheta if prev else None)
    return GuidingFrame(X=X, R=R, chi=chi, vartheta=vartheta)


def _polar_arrays(traj):
    if traj.chart == "polar":
        return traj.column("r"), traj.column("theta"), traj.column("p_r"), traj.column("p_theta")
    if traj.chart == "cartesian":
        q1, q2 = traj.column("q1"), traj.column("q2")
        p1, p2 = traj.column("p1"), traj.column("p2")
        r = np.hypot(q1, q2)
        theta = np.unwrap(np.arctan2(q2, q1))
        return r, theta, (p1 * q1 + p2 * q2) / r, q1 * p2 - q2 * p1
    raise ValueError(f"need a cartesian or polar trajectory, got {traj.chart!r}")


def guiding_series(params, traj):
    """Guiding-frame observables along a trajectory, angles unwrapped.

    Returns a derived Trajectory with columns
    (X1, X2, R1, R2, absX, absR, chi, vartheta, H).
    """
    t = traj.times
    r, theta, p_r, _ = _polar_arrays(traj)
    a = effective_momentum(params, t)
    b = params.b
    v_th = a / r + 0.5 * b * r
    X_r = 0.5 * r - a / (b * r)
    X_t = p_r / b
    R_r = 0.5 * r + a / (b * r)
    R_t = -p_r / b
    ct, st = np.cos(theta), np.sin(theta)
    X1 = X_r * ct - X_t * st
    X2 = X_r * st + X_t * ct
    R1 = R_r * ct - R_t * st
    R2 = R_r * st + R_t * ct
    chi = np.unwrap(np.arctan2(X2, X1))
    vartheta = np.unwrap(np.arctan2(R2, R1))
    H = 0.5 * (p_r * p_r + v_th * v_th)
    data = np.column_stack((X1, X2, R1, R2, np.hypot(X1, X2), np.hypot(R1, R2), chi, vartheta, H))
    return Trajectory(
        chart="guiding",
        times=t,
        columns=("X1", "X2", "R1", "R2", "absX", "absR", "chi", "vartheta", "H"),
        data=data,
        params_digest=traj.params_digest,
        events=traj.events,
        meta=dict(traj.meta),
    )


@dataclass(frozen=True)
class EnergyRateReport:
    gamma_fit: float
    gamma_formula: float
    phi_infty: float
    C_fit: float
    fit: object
    times: np.ndarray
    H: np.ndarray


def energy_and_rate(params, traj, window_fraction=0.5, require_acceleration=True):
    """Linear energy-growth rate gamma from a tail fit of H(t).

    Also evaluates the closed-form rate
    gamma = -(b/(4*pi)) * Phi'(-(phi_inf + pi/2)/b) at the phase extracted
    from the same run, for comparison.  Raises NotAccelerating when the
    tail slope is not positive beyond its standard error (pass
    ``require_acceleration=False`` to inspect flat runs, e.g. epsilon = 0).
    """
    from .analysis import extract_phase, fit_linear_growth

    t = traj.times
    H = hamiltonian_series(params, traj)
    fit = fit_linear_growth(t, H, window_fraction=window_fraction)
    gamma_fit = fit.slope
    if require_acceleration and gamma_fit <= 3.0 * fit.slope_stderr:
        raise NotAccelerating(
            f"tail slope {gamma_fit!r} +- {fit.slope_stderr!r} is not positive", slope=gamma_fit
        )
    r, _, p_r, _ = _polar_arrays(traj)
    I, phi, _, _ = _aa_series(params, traj)
    phi_infty = extract_phase(params, (t, phi))
    # Phi'(t) = 2*pi*eps*Omega*f'(Omega t)
    arg = -(phi_infty + 0.5 * math.pi) / params.b
    gamma_formula = -0.5 * params.b * params.epsilon * params.omega * params.profile.derivative(params.omega * arg)
    return EnergyRateReport(
        gamma_fit=gamma_fit,
        gamma_formula=gamma_formula,
        phi_infty=phi_infty,
        C_fit=gamma_fit / params.b,
        fit=fit,
        times=t,
        H=H,
    )


def _aa_series(params, traj):
    if traj.chart == "polar":
        return action_series(params, traj)
    r, theta, p_r, _ = _polar_arrays(traj)
    t = traj.times
    a = effective_momentum(params, t)
    b = params.b
    I = 0.5 / b * (p_r**2 + (a / r - 0.5 * b * r) ** 2)
    phi = np.unwrap(np.arctan2(0.25 * b * r * r - I - 0.5 * a, 0.5 * r * p_r))
    return I, phi, None, None


@dataclass(frozen=True)
class RadiiGrowthReport:
    slope_X2: float
    slope_R2: float
    expected: float
    rel_err_X: float
    rel_err_R: float
    tail_ratio: float  # |X|/|R| near the end, -> 1 under acceleration


def radii_growth_check(params, traj, gamma_fit, window_fraction=0.5):
    """Check |X|^2, |R|^2 ~ (2*gamma/b^2) * t against a fitted gamma."""
    from .analysis import fit_linear_growth

    g = traj if traj.chart == "guiding" else guiding_series(params, traj)
    t = g.times
    sx = fit_linear_growth(t, g.column("absX") ** 2, window_fraction=window_fraction)
    sr = fit_linear_growth(t, g.column("absR") ** 2, window_fraction=window_fraction)
    expected = 2.0 * gamma_fit / params.b**2
    if expected <= 0:
        raise NotAccelerating("expected radii slope is not positive", slope=expected)
    n_tail = max(1, t.size // 10)
    ratio = float(np.mean(g.column("absX")[-n_tail:] / g.column("absR")[-n_tail:]))
    return RadiiGrowthReport(
        slope_X2=sx.slope,
        slope_R2=sr.slope,
        expected=expected,
        rel_err_X=abs(sx.slope - expected) / expected,
        rel_err_R=abs(sr.slope - expected) / expected,
        tail_ratio=ratio,
    )


def guiding_angle_rate(params, state, t):
    """chi' = |R| a' cos(phi) / (|X| b r^2) at one polar state."""
    if not isinstance(state, PolarState):
        state = cartesian_to_polar(state)
    a = effective_momentum(params, t)
    ap = effective_momentum_rate(params, t)
    b = params.b
    r, p_r = state.r, state.p_r
    absX2 = (0.5 * r - a / (b * r)) ** 2 + (p_r / b) ** 2
    if absX2 <= 0.0:
        raise DomainError("guiding angle rate undefined at |X| = 0")
    absR2 = (0.5 * r + a / (b * r)) ** 2 + (p_r / b) ** 2
    aa = to_action_angle(params, (r, p_r), t)
    return math.sqrt(absR2 / absX2) * ap * math.cos(aa.phi) / (b * r * r)


def log_drift_constant(params, xi):
    """Closed-form log-drift rate D of the guiding angle at kick phase xi.

    Writing f'(t) = sum_k (A_k cos(k t) + B_k sin(k t)),
    D = (1/2) * sum_k (A_k sin(k xi) + B_k cos(k xi))
              / sum_k (A_k cos(k xi) - B_k sin(k xi)),
    whose denominator equals f'(-xi) (nonzero whenever acceleration holds).
    """
    fp = params.profile.derivative_profile()
    ks = np.arange(1, fp.order + 1)
    A = np.asarray(fp.cos_coeffs)
    B = np.asarray(fp.sin_coeffs)
    num = float(np.sum(A * np.sin(ks * xi) + B * np.cos(ks * xi)))
    den = float(np.sum(A * np.cos(ks * xi) - B * np.sin(ks * xi)))
    if abs(den) < 1e-12:
        raise DegenerateDenominator(f"f'(-xi) = {den!r} at xi = {xi!r}")
    return 0.5 * num / den


def fit_log_drift(params, traj, window_fraction=0.5):
    """(D_fit, chi_offset) from a least-squares fit chi ~ D log(b t) + c."""
    g = traj if traj.chart == "guiding" else guiding_series(params, traj)
    t, chi = g.times, g.column("chi")
    keep = t > 0
    t, chi = t[keep], chi[keep]
    i0 = int(window_fraction * t.size)
    M = np.column_stack((np.log(params.b * t[i0:]), np.ones(t.size - i0)))
    coef, *_ = np.linalg.lstsq(M, chi[i0:], rcond=None)
    return float(coef[0]), float(coef[1])


def kick_localization(params, traj, phi_infty, halfwidth=0.3, window_fraction=0.5):
    """Fraction of the tail energy increase accrued near the kick phase.

    A sample interval belongs to a kick window when
    |b*t + phi_inf + pi/2| < halfwidth (mod 2pi) at its midpoint.  Under
    resonant acceleration the kicks coincide with perihelion passages and
    carry essentially the whole energy gain.
    """
    t = traj.times
    H = hamiltonian_series(params, traj)
    i0 = int(window_fraction * t.size)
    t, H = t[i0:], H[i0:]
    dH = np.diff(H)
    mid = 0.5 * (t[1:] + t[:-1])
    phase = np.remainder(params.b * mid + phi_infty + 0.5 * math.pi + math.pi, 2.0 * math.pi) - math.pi
    inside = np.abs(phase) < halfwidth
    total = H[-1] - H[0]
    if total <= 0:
        raise NotAccelerating("no net energy increase over the tail window", slope=total)
    return float(np.sum(dH[inside]) / total)
