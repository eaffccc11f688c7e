"""Exact dynamics of a charged particle in a uniform field plus driven flux line.

Cartesian chart: H(q, p, t) = (1/2)(p - A(q,t))^2 with
A(q,t) = (-b/2 + Phi(t)/(2*pi*|q|^2)) * q_perp,  q_perp = (-q2, q1),
units e = m = 1, cyclotron frequency b > 0.

Polar chart: the angular momentum p_theta = q ^ p is conserved and the
radial motion reduces to

    H_rad = p_r^2/2 + a(t)^2/(2 r^2) + b^2 r^2 / 8,
    a(t)  = p_theta - epsilon*f(Omega*t),

with the azimuth recovered from theta' = a(t)/r^2 + b/2.

All simulation layers share the adaptive 5(4) stepper from
:mod:`cyclores.stepping`; near-origin passages (perihelia) are logged as
events because they carry essentially all of the energy exchange.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numba
import numpy as np

from . import stepping
from .errors import DomainError, InsufficientSamples, ParameterError, StepFloorReached
from .flux import FluxProfile, ResonancePair, effective_momentum, is_resonant

__all__ = [
    "ModelParams",
    "CartesianState",
    "PolarState",
    "Trajectory",
    "hamiltonian_cartesian",
    "eom_cartesian",
    "eom_radial",
    "theta_rate",
    "energy_rate_residual",
    "integrate",
    "cartesian_to_polar",
    "polar_to_cartesian",
    "momentum_from_velocity",
]

CHARTS = ("cartesian", "polar", "actionangle", "averaged", "averaged4", "decoupled")


@dataclass(frozen=True)
class ModelParams:
    """Physical constants of one model instance.

    b > 0 homogeneous field (cyclotron frequency), omega > 0 drive frequency,
    epsilon >= 0 flux amplitude, p_theta > 0 conserved angular momentum.
    ``pair`` is the exact rational omega/b = mu/nu when known; None marks a
    nonresonant sweep where no resonance classification is claimed.
    """

    b: float
    omega: float
    epsilon: float
    p_theta: float
    profile: FluxProfile
    pair: ResonancePair | None = None

    def __post_init__(self):
        bad = []
        if not self.b > 0:
            bad.append(f"b > 0 violated (b={self.b})")
        if not self.omega > 0:
            bad.append(f"omega > 0 violated (omega={self.omega})")
        if not self.epsilon >= 0:
            bad.append(f"epsilon >= 0 violated (epsilon={self.epsilon})")
        if not self.p_theta > 0:
            bad.append(f"p_theta > 0 violated (p_theta={self.p_theta})")
        elif not self.epsilon * self.profile.coeff_bound < self.p_theta:
            bad.append(
                "epsilon*max|f| >= p_theta: a(t) would not stay positive "
                f"(epsilon*sum|coeffs| = {self.epsilon * self.profile.coeff_bound:g}, "
                f"p_theta = {self.p_theta:g})"
            )
        if self.pair is not None:
            expect = self.b * self.pair.mu / self.pair.nu
            if abs(self.omega - expect) > 1e-12 * max(1.0, abs(self.omega)):
                bad.append(
                    f"pair {self.pair.mu}/{self.pair.nu} inconsistent with omega/b = "
                    f"{self.omega / self.b!r}"
                )
        if bad:
            raise ParameterError("; ".join(bad))

    @classmethod
    def from_ratio(cls, b, ratio, epsilon, p_theta, profile):
        """Construct with an exact rational omega/b so (mu, nu) carry no rounding."""
        pair = ratio if isinstance(ratio, ResonancePair) else ResonancePair.from_ratio(ratio)
        return cls(
            b=float(b),
            omega=float(b) * pair.mu / pair.nu,
            epsilon=float(epsilon),
            p_theta=float(p_theta),
            profile=profile,
            pair=pair,
        )

    def replace(self, **kw):
        vals = dict(
            b=self.b, omega=self.omega, epsilon=self.epsilon,
            p_theta=self.p_theta, profile=self.profile, pair=self.pair,
        )
        vals.update(kw)
        return ModelParams(**vals)

    def digest(self):
        """Short stable identifier tying output files to these parameters."""
        text = (
            f"b={self.b!r};omega={self.omega!r};epsilon={self.epsilon!r};"
            f"p_theta={self.p_theta!r};cos={self.profile.cos_coeffs!r};"
            f"sin={self.profile.sin_coeffs!r};"
            f"pair={(self.pair.mu, self.pair.nu) if self.pair else None!r}"
        )
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def resonant(self):
        """Resonance classification; False when no exact rational is declared."""
        return self.pair is not None and is_resonant(self.profile, self.pair)

    def perihelion_radius(self):
        """Radius below which a passage is logged as a perihelion event."""
        return 1e-3 * math.sqrt(2.0 * self.p_theta / self.b)


@dataclass(frozen=True)
class CartesianState:
    q: tuple
    p: tuple

    def __post_init__(self):
        q = (float(self.q[0]), float(self.q[1]))
        p = (float(self.p[0]), float(self.p[1]))
        if q[0] * q[0] + q[1] * q[1] <= 0.0:
            raise DomainError("cartesian state needs |q| > 0 (flux line at the origin)")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)

    def as_array(self):
        return np.array([*self.q, *self.p])


@dataclass(frozen=True)
class PolarState:
    r: float
    theta: float
    p_r: float
    p_theta: float

    def __post_init__(self):
        if not self.r > 0:
            raise DomainError(f"polar state needs r > 0, got r={self.r}")


@dataclass(frozen=True)
class Trajectory:
    """Sampled output of one integration in one chart.

    ``data`` holds one row per sample with the columns named in ``columns``
    (time excluded); ``events`` is an (n, 2) array of perihelion/near-kick
    log entries (time, metric minimum).
    """

    chart: str
    times: np.ndarray
    columns: tuple
    data: np.ndarray
    params_digest: str
    events: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or np.any(np.diff(t) <= 0):
            raise ValueError("trajectory times must be strictly increasing")
        if self.data.shape != (t.size, len(self.columns)):
            raise ValueError(
                f"data shape {self.data.shape} does not match "
                f"{t.size} samples x {len(self.columns)} columns"
            )

    def column(self, name):
        try:
            j = self.columns.index(name)
        except ValueError:
            raise KeyError(f"no column {name!r} in chart {self.chart!r} ({self.columns})") from None
        return self.data[:, j]

    def __len__(self):
        return self.times.size


# ----------------------------------------------------------------------
# packed parameter vector and jitted kernels
#
# layout: [b, omega, epsilon, p_theta, K, a_1..a_K, b_1..b_K]

def pack_params(params):
    pr = params.profile
    K = pr.order
    return np.array(
        [params.b, params.omega, params.epsilon, params.p_theta, float(K)]
        + list(pr.cos_coeffs)
        + list(pr.sin_coeffs)
    )


@numba.njit(cache=True, inline="always")
def _f_packed(pa, theta):
    K = int(pa[4])
    s = 0.0
    for k in range(1, K + 1):
        s += pa[4 + k] * np.cos(k * theta) + pa[4 + K + k] * np.sin(k * theta)
    return s


@numba.njit(cache=True, inline="always")
def _fprime_packed(pa, theta):
    K = int(pa[4])
    s = 0.0
    for k in range(1, K + 1):
        s += k * (pa[4 + K + k] * np.cos(k * theta) - pa[4 + k] * np.sin(k * theta))
    return s


@numba.njit(cache=True, inline="always")
def _a_packed(pa, t):
    return pa[3] - pa[2] * _f_packed(pa, pa[1] * t)


@numba.njit(cache=True, inline="always")
def _aprime_packed(pa, t):
    return -pa[2] * pa[1] * _fprime_packed(pa, pa[1] * t)


@numba.njit(cache=True)
def _rhs_cartesian(t, y, pa, out):
    q1, q2, p1, p2 = y[0], y[1], y[2], y[3]
    r2 = q1 * q1 + q2 * q2
    if r2 <= 0.0:
        out[0] = np.nan
        out[1] = np.nan
        out[2] = np.nan
        out[3] = np.nan
        return
    b = pa[0]
    c = pa[2] * _f_packed(pa, pa[1] * t)  # Phi/(2*pi)
    alpha = -0.5 * b + c / r2
    v1 = p1 + alpha * q2
    v2 = p2 - alpha * q1
    out[0] = v1
    out[1] = v2
    r4 = r2 * r2
    out[2] = v1 * (2.0 * c * q1 * q2 / r4) + v2 * (alpha - 2.0 * c * q1 * q1 / r4)
    out[3] = v1 * (-alpha + 2.0 * c * q2 * q2 / r4) + v2 * (-2.0 * c * q1 * q2 / r4)


@numba.njit(cache=True)
def _metric_cartesian(t, y, pa):
    return np.sqrt(y[0] * y[0] + y[1] * y[1])


@numba.njit(cache=True)
def _rhs_polar(t, y, pa, out):
    r = y[0]
    if r <= 0.0:
        out[0] = np.nan
        out[1] = np.nan
        out[2] = np.nan
        return
    b = pa[0]
    a = _a_packed(pa, t)
    out[0] = y[1]
    out[1] = a * a / (r * r * r) - 0.25 * b * b * r
    out[2] = a / (r * r) + 0.5 * b


@numba.njit(cache=True)
def _metric_polar(t, y, pa):
    return y[0]


# ----------------------------------------------------------------------
# single-state operations

def hamiltonian_cartesian(params, state, t):
    """Full Hamiltonian (kinetic energy of the gauge-covariant velocity)."""
    q1, q2 = state.q
    p1, p2 = state.p
    r2 = q1 * q1 + q2 * q2
    if r2 <= 0.0:
        raise DomainError("H undefined at q = 0")
    c = params.epsilon * params.profile.value(params.omega * t)
    alpha = -0.5 * params.b + c / r2
    v1 = p1 + alpha * q2
    v2 = p2 - alpha * q1
    return 0.5 * (v1 * v1 + v2 * v2)


def eom_cartesian(params, state, t):
    """Hamilton's equations (dq, dp); the exact gradient of the Hamiltonian."""
    q1, q2 = state.q
    if q1 * q1 + q2 * q2 <= 0.0:
        raise DomainError("equations of motion undefined at q = 0")
    out = np.empty(4)
    _rhs_cartesian(t, state.as_array(), pack_params(params), out)
    return out[:2].copy(), out[2:].copy()


def eom_radial(params, state, t):
    """(dr, dp_r) for the reduced radial Hamiltonian."""
    r, p_r = state
    if r <= 0.0:
        raise DomainError(f"radial chart needs r > 0, got r={r}")
    a = effective_momentum(params, t)
    return p_r, a * a / r**3 - 0.25 * params.b**2 * r


def theta_rate(params, polar, t):
    """Azimuthal rate theta' = a(t)/r^2 + b/2; accepts a state, radius or radii."""
    r = polar.r if isinstance(polar, PolarState) else np.asarray(polar, dtype=float)
    return effective_momentum(params, t) / r**2 + 0.5 * params.b


def momentum_from_velocity(params, q, v, t):
    """Canonical momentum p = v + A(q, t) for a given velocity (m = e = 1)."""
    q1, q2 = float(q[0]), float(q[1])
    r2 = q1 * q1 + q2 * q2
    if r2 <= 0.0:
        raise DomainError("A(q, t) undefined at q = 0")
    c = params.epsilon * params.profile.value(params.omega * t)
    alpha = -0.5 * params.b + c / r2
    return np.array([v[0] - alpha * q2, v[1] + alpha * q1])


def cartesian_to_polar(state):
    """(q, p) -> (r, theta, p_r, p_theta); theta is the principal angle."""
    q1, q2 = state.q
    p1, p2 = state.p
    r = math.hypot(q1, q2)
    if r <= 0.0:
        raise DomainError("polar chart undefined at q = 0")
    return PolarState(
        r=r,
        theta=math.atan2(q2, q1),
        p_r=(p1 * q1 + p2 * q2) / r,
        p_theta=q1 * p2 - q2 * p1,
    )


def polar_to_cartesian(state):
    c, s = math.cos(state.theta), math.sin(state.theta)
    pt_over_r = state.p_theta / state.r
    return CartesianState(
        q=(state.r * c, state.r * s),
        p=(state.p_r * c - pt_over_r * s, state.p_r * s + pt_over_r * c),
    )


def hamiltonian_series(params, traj):
    """H(t) along a cartesian- or polar-chart trajectory (vectorised)."""
    t = traj.times
    if traj.chart == "cartesian":
        q1, q2 = traj.column("q1"), traj.column("q2")
        p1, p2 = traj.column("p1"), traj.column("p2")
        r2 = q1 * q1 + q2 * q2
        c = params.epsilon * params.profile.value(params.omega * t)
        alpha = -0.5 * params.b + c / r2
        v1 = p1 + alpha * q2
        v2 = p2 - alpha * q1
        return 0.5 * (v1 * v1 + v2 * v2)
    if traj.chart == "polar":
        r, p_r = traj.column("r"), traj.column("p_r")
        a = effective_momentum(params, t)
        return 0.5 * (p_r**2 + (a / r + 0.5 * params.b * r) ** 2)
    raise ValueError(f"hamiltonian_series needs a cartesian or polar trajectory, got {traj.chart!r}")


def energy_rate_residual(params, traj):
    """Max residual of dH/dt = -theta'(t) Phi'(t)/(2*pi) along a cartesian run.

    dH/dt is taken by finite differences of the sampled H(t) (4th order on
    uniform grids), so the result also reflects sampling density; it is a
    validation diagnostic, not a precision observable.
    """
    if traj.chart != "cartesian":
        raise ValueError("energy-rate residual is defined on the cartesian chart")
    t = traj.times
    if t.size < 8:
        raise InsufficientSamples(f"need at least 8 samples, got {t.size}")
    H = hamiltonian_series(params, traj)
    q1, q2 = traj.column("q1"), traj.column("q2")
    p1, p2 = traj.column("p1"), traj.column("p2")
    r2 = q1 * q1 + q2 * q2
    c = params.epsilon * params.profile.value(params.omega * t)
    ptheta = q1 * p2 - q2 * p1
    th_rate = (ptheta - c) / r2 + 0.5 * params.b
    # Phi'(t)/(2*pi) = epsilon*Omega*f'(Omega t)
    phi_rate = params.epsilon * params.omega * params.profile.derivative(params.omega * t)

    dt = np.diff(t)
    if np.allclose(dt, dt[0], rtol=1e-9, atol=0.0):
        h = dt[0]
        dH = (-H[4:] + 8.0 * H[3:-1] - 8.0 * H[1:-3] + H[:-4]) / (12.0 * h)
        core = slice(2, -2)
    else:
        dH = np.gradient(H, t)[1:-1]
        core = slice(1, -1)
    return float(np.max(np.abs(dH + (th_rate * phi_rate)[core])))


# ----------------------------------------------------------------------
# the integrator facade

def _sampling_times(t0, t1, sampling):
    if isinstance(sampling, (int, np.integer)):
        if sampling < 2:
            raise ValueError("need at least 2 samples")
        return np.linspace(t0, t1, int(sampling))
    if isinstance(sampling, float):
        n = int(math.floor((t1 - t0) / sampling)) + 1
        ts = t0 + sampling * np.arange(n)
        return np.append(ts, t1) if ts[-1] < t1 else ts
    ts = np.asarray(sampling, dtype=float)
    if ts.ndim != 1 or ts.size < 1 or np.any(np.diff(ts) <= 0):
        raise ValueError("explicit sampling times must be increasing")
    if ts[0] < t0 - 1e-12 or ts[-1] > t1 + 1e-12:
        raise ValueError("sampling times must lie within t_span")
    return ts


def _chart_runtime(params, chart, state0, t0):
    """Resolve (driver, param vector, y0, table builder, threshold) per chart."""
    if chart == "cartesian":
        st = state0 if isinstance(state0, CartesianState) else CartesianState(tuple(state0[:2]), tuple(state0[2:4]))
        y0 = st.as_array()
        driver = stepping.compiled_driver(_rhs_cartesian, _metric_cartesian)
        pa = pack_params(params)

        def table(times, Y):
            return ("q1", "q2", "p1", "p2"), Y

        return driver, pa, y0, table, params.perihelion_radius()

    if chart == "polar":
        if isinstance(state0, PolarState):
            if abs(state0.p_theta - params.p_theta) > 1e-9 * max(1.0, abs(params.p_theta)):
                raise ParameterError(
                    f"polar state p_theta={state0.p_theta!r} disagrees with params.p_theta={params.p_theta!r}"
                )
            y0 = np.array([state0.r, state0.p_r, state0.theta])
        else:
            r, theta, p_r = state0
            y0 = np.array([float(r), float(p_r), float(theta)])
        driver = stepping.compiled_driver(_rhs_polar, _metric_polar)
        pa = pack_params(params)

        def table(times, Y):
            pt = np.full(times.size, params.p_theta)
            return ("r", "theta", "p_r", "p_theta"), np.column_stack((Y[:, 0], Y[:, 2], Y[:, 1], pt))

        return driver, pa, y0, table, params.perihelion_radius()

    if chart == "actionangle":
        from . import actionangle

        return actionangle.chart_runtime(params, state0)

    if chart in ("averaged", "averaged4"):
        from . import averaging

        return averaging.chart_runtime(params, chart, state0)

    if chart == "decoupled":
        raise ValueError("the decoupled pair integrates through cyclores.decoupled, not integrate()")
    raise ValueError(f"unknown chart {chart!r}; expected one of {CHARTS}")


def integrate(params, chart, state0, t_span, tol=(1e-10, 1e-12), sampling=1024,
              floor_frac=1e-12, max_steps=2_000_000_000):
    """Integrate one chart's equations of motion and sample densely.

    Parameters
    ----------
    params : ModelParams
    chart : str
        One of 'cartesian', 'polar', 'actionangle', 'averaged', 'averaged4'.
    state0 : chart state object or plain sequence in chart order
    t_span : (t0, t1), t1 > t0
    tol : (rtol, atol) for the embedded 5(4) error control
    sampling : int (uniform count), float (uniform spacing) or array of times

    Returns
    -------
    Trajectory with chart-specific columns and a perihelion event log.

    Raises
    ------
    StepFloorReached
        the controller hit the minimum step three times in a row.
    DomainError
        the state left the chart domain (e.g. r <= 0 numerically).
    """
    t0, t1 = float(t_span[0]), float(t_span[1])
    if not t1 > t0:
        raise ValueError(f"need t1 > t0, got {t_span}")
    rtol, atol = tol
    driver, pa, y0, table, threshold = _chart_runtime(params, chart, state0, t0)
    t_eval = _sampling_times(t0, t1, sampling)
    cap = int(2 * (t1 - t0) * params.b / (2.0 * math.pi)) + 64
    status, yout, events, t_last, y_last, nsteps = stepping.solve(
        driver, pa, y0, (t0, t1), t_eval, rtol=rtol, atol=atol,
        floor_frac=floor_frac, metric_threshold=threshold,
        event_capacity=cap, max_steps=max_steps,
    )
    if status == stepping.STEP_FLOOR:
        raise StepFloorReached(
            f"step floor {floor_frac:g}*(t1-t0) hit 3x consecutively at t={t_last!r} in chart {chart!r}",
            t=t_last, state=y_last.copy(),
        )
    if status == stepping.DOMAIN:
        raise DomainError(f"state left the {chart!r} chart domain at t={t_last!r}: y={y_last!r}")
    if status == stepping.MAX_STEPS:
        raise RuntimeError(f"integration exceeded {max_steps} steps at t={t_last!r}")
    columns, data = table(t_eval, yout)
    return Trajectory(
        chart=chart,
        times=t_eval,
        columns=columns,
        data=data,
        params_digest=params.digest(),
        events=events,
        meta={"rtol": rtol, "atol": atol, "nsteps": int(nsteps), "t_span": (t0, t1)},
    )
