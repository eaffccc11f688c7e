"""Decoupled asymptotic-regime equations and their period maps.

In the accelerating regime the action-angle pair is well described after
substituting the anticipated leading behaviour of one variable into the
other's equation.  With F = 2I + |a| and the slow phase phi = angle - b*t:

  growth equation (phase frozen at a constant):
      F' = a a' / (F + sqrt(F^2 - a^2) sin(b t + phi)),
  phase equation (growth prescribed, e.g. F(t) = alpha*t + F0):
      phi' = -a a' cos(b t + phi) / (sqrt(F^2 - a^2) (F + sqrt(F^2 - a^2) sin(b t + phi))).

For integer Omega/b and f'(-(Omega/b)(phi + pi/2)) < 0 the growth equation
produces F(t) = epsilon*Omega*|f'| * t + O(log^2 t); with linearly growing
F the phase settles with a log(t)/t tail.  Both rates follow from the
one-period increment of

      h' = rho(t) / (h +/- sqrt(h^2 - a^2) cos t),

whose limit for large h(0) is 2*pi*rho(pi)/a(pi) over a full period (and
pi*rho(0)/a(0) over [0, pi/2] with the minus sign).  The period maps
integrate the increment u = h - h0 directly so that h0 = 1e6 does not eat
the answer's precision.

The near-singular denominators (the "kicks") reuse the adaptive stepper and
its step-floor policy; kick passages are logged as events.  Times at the
interface are physical; the internal b*t rescaling is never exposed.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numba
import numpy as np

from . import stepping
from .dynamics import Trajectory, _a_packed, _aprime_packed, pack_params
from .errors import DomainError, ExistenceBound, ParameterError, SignError, StepFloorReached

__all__ = [
    "DecoupledState",
    "growth_rhs_frozen_phase",
    "phase_rhs_prescribed_growth",
    "integrate_growth",
    "integrate_phase",
    "half_period_map",
    "full_period_map",
    "period_map_increment",
    "predicted_slope",
    "PredictedSlope",
]


def _max_effective_momentum(params):
    # conservative bound max_t a(t) <= p_theta + eps*sum|coeffs|
    return params.p_theta + params.epsilon * params.profile.coeff_bound


@dataclass(frozen=True)
class DecoupledState:
    """Growth variable F = 2I + a and slow phase phi = angle - b*t."""

    F: float
    phi: float

    @classmethod
    def checked(cls, params, F, phi):
        if not F > _max_effective_momentum(params):
            raise DomainError(
                f"F={F!r} must exceed max a(t) <= {_max_effective_momentum(params)!r} "
                "for the square roots to stay real"
            )
        return cls(float(F), float(phi))


def growth_rhs_frozen_phase(params, F, t, phi_const):
    """F' with the slow phase frozen; defined for F >= a(t)."""
    a = params.p_theta - params.epsilon * params.profile.value(params.omega * t)
    ap = -params.epsilon * params.omega * params.profile.derivative(params.omega * t)
    if F < a:
        raise DomainError(f"growth equation needs F >= a(t), got F={F!r} < a={a!r}")
    s = math.sqrt(F * F - a * a)
    return a * ap / (F + s * math.sin(params.b * t + phi_const))


def phase_rhs_prescribed_growth(params, phi, t, growth):
    """phi' with a prescribed growth history F(t); needs F(t) > a(t).

    Satisfies the a-priori bound |phi'| <= |a'| / sqrt(F^2 - a^2) because
    |a cos(s) / (F + sqrt(F^2-a^2) sin(s))| <= 1 for all F >= |a| > 0.
    """
    F = growth(t) if callable(growth) else growth[0] * t + growth[1]
    a = params.p_theta - params.epsilon * params.profile.value(params.omega * t)
    ap = -params.epsilon * params.omega * params.profile.derivative(params.omega * t)
    if F <= a:
        raise DomainError(f"phase equation needs F(t) > a(t), got F={F!r} <= a={a!r}")
    s = math.sqrt(F * F - a * a)
    arg = params.b * t + phi
    return -a * ap * math.cos(arg) / (s * (F + s * math.sin(arg)))


# packed layout: common params + trailing extras

@numba.njit(cache=True, inline="always")
def _stable_den(F, a, s, arg):
    """F + s*sin(arg) without cancellation near sin = -1.

    Uses F^2 - s^2 sin^2 = F^2 cos^2 + a^2 sin^2 (all positive terms), so the
    near-kick minimum ~ a^2/(2F) keeps full relative precision.
    """
    sn = np.sin(arg)
    if sn >= 0.0:
        return F + s * sn
    cs = np.cos(arg)
    return (F * F * cs * cs + a * a * sn * sn) / (F - s * sn)


@numba.njit(cache=True)
def _rhs_growth(t, y, pa, out):
    F = y[0]
    a = _a_packed(pa, t)
    if F < a:
        out[0] = np.nan
        return
    ap = _aprime_packed(pa, t)
    s = np.sqrt(F * F - a * a)
    out[0] = a * ap / _stable_den(F, a, s, pa[0] * t + pa[-1])


@numba.njit(cache=True)
def _metric_growth(t, y, pa):
    # kick indicator: denominator rescaled so the near-minimum ~ 1/2
    F = y[0]
    a = _a_packed(pa, t)
    if F <= a:
        return 0.0
    s = np.sqrt(F * F - a * a)
    return _stable_den(F, a, s, pa[0] * t + pa[-1]) * F / (a * a)


@numba.njit(cache=True, inline="always")
def _next_kick_time(t, b, phi):
    """Next time after t with sin(b*t + phi) = -1 (the denominator minimum)."""
    period = 2.0 * np.pi / b
    k = np.floor((b * t + phi + 0.5 * np.pi) / (2.0 * np.pi)) + 1.0
    tn = (2.0 * np.pi * k - phi - 0.5 * np.pi) / b
    if tn - t < 1e-9 * (1.0 + abs(t)):
        tn += period
    return tn


@numba.njit(cache=True)
def _forced_growth(t, y, pa):
    return _next_kick_time(t, pa[0], pa[-1])


@numba.njit(cache=True)
def _rhs_phase(t, y, pa, out):
    F = pa[-2] * t + pa[-1]
    a = _a_packed(pa, t)
    if F <= a:
        out[0] = np.nan
        return
    ap = _aprime_packed(pa, t)
    s = np.sqrt(F * F - a * a)
    arg = pa[0] * t + y[0]
    out[0] = -a * ap * np.cos(arg) / (s * _stable_den(F, a, s, arg))


@numba.njit(cache=True)
def _forced_phase(t, y, pa):
    return _next_kick_time(t, pa[0], y[0])


def _warn_outside_regime(params):
    ratio = params.omega / params.b
    if abs(ratio - round(ratio)) > 1e-9:
        warnings.warn(
            f"decoupled analysis proven for integer Omega/b; ratio {ratio:g} is outside that regime",
            RuntimeWarning,
        )


def _run(driver, pa, y0, t_span, tol, sampling, params, events=False):
    from .dynamics import _sampling_times

    t0, t1 = float(t_span[0]), float(t_span[1])
    t_eval = _sampling_times(t0, t1, sampling)
    cap = int(2 * (t1 - t0) * params.b / (2 * math.pi)) + 64 if events else 0
    status, yout, ev, t_last, y_last, nsteps = stepping.solve(
        driver, pa, y0, (t0, t1), t_eval, rtol=tol[0], atol=tol[1],
        metric_threshold=1.0 if events else -1.0, event_capacity=cap,
    )
    if status == stepping.STEP_FLOOR:
        raise StepFloorReached(f"step floor hit at t={t_last!r}", t=t_last, state=y_last.copy())
    if status == stepping.DOMAIN:
        raise DomainError(f"F(t) fell below a(t) at t={t_last!r}")
    if status != stepping.OK:
        raise RuntimeError(f"integration failed with status {status}")
    return t_eval, yout, ev, nsteps


def integrate_growth(params, F0, phi_const, t_span, tol=(1e-10, 1e-12), sampling=2048):
    """Integrate the frozen-phase growth equation; events log the kicks."""
    _warn_outside_regime(params)
    DecoupledState.checked(params, F0, phi_const)
    pa = np.append(pack_params(params), float(phi_const))
    driver = stepping.compiled_driver(_rhs_growth, _metric_growth, _forced_growth)
    t_eval, yout, ev, nsteps = _run(driver, pa, np.array([float(F0)]), t_span, tol, sampling, params, events=True)
    phi = np.full(t_eval.size, float(phi_const))
    return Trajectory(
        chart="decoupled",
        times=t_eval,
        columns=("F", "phi"),
        data=np.column_stack((yout[:, 0], phi)),
        params_digest=params.digest(),
        events=ev,
        meta={"kind": "growth", "phi_const": float(phi_const), "nsteps": int(nsteps)},
    )


def integrate_phase(params, phi0, growth, t_span, tol=(1e-10, 1e-12), sampling=2048):
    """Integrate the phase equation with prescribed growth.

    ``growth`` is (alpha, F0) for F(t) = alpha*t + F0 (compiled path) or an
    arbitrary callable (python path).
    """
    _warn_outside_regime(params)
    if callable(growth):
        base = pack_params(params)

        def rhs(t, y, pa, out):
            out[0] = phase_rhs_prescribed_growth(params, y[0], t, growth)

        def forced(t, y, pa):
            return _next_kick_time(t, params.b, y[0])

        driver = stepping.python_driver(rhs, next_forced=forced)
        pa = base
        F_of = growth
    else:
        alpha, F0 = float(growth[0]), float(growth[1])
        pa = np.append(pack_params(params), [alpha, F0])
        driver = stepping.compiled_driver(_rhs_phase, next_forced=_forced_phase)
        F_of = lambda t: alpha * t + F0
    t_eval, yout, ev, nsteps = _run(driver, pa, np.array([float(phi0)]), t_span, tol, sampling, params)
    F = np.array([F_of(t) for t in t_eval])
    return Trajectory(
        chart="decoupled",
        times=t_eval,
        columns=("F", "phi"),
        data=np.column_stack((F, yout[:, 0])),
        params_digest=params.digest(),
        events=ev,
        meta={"kind": "phase", "nsteps": int(nsteps)},
    )


# ----------------------------------------------------------------------
# period maps of the auxiliary one-frequency equation

def _as_fn(f):
    if callable(f):
        return f
    v = float(f)
    return lambda t: v


def period_map_increment(rho, a, h0, cos_sign, t_end, tol=(1e-11, 1e-13)):
    """h(t_end) - h0 for h' = rho(t)/(h + cos_sign*sqrt(h^2-a^2)*cos t).

    Integrates the shifted variable u = h - h0 so large h0 costs no
    precision.  ``rho`` and ``a`` are callables or constants.
    """
    rho_fn, a_fn = _as_fn(rho), _as_fn(a)
    ts = np.linspace(0.0, t_end, 513)
    a_s = np.array([a_fn(t) for t in ts])
    rho_s = np.array([rho_fn(t) for t in ts])
    if np.min(a_s) <= 0:
        raise ParameterError("period map needs a(t) > 0 on the interval")
    A = float(np.min(a_s))
    sufficient = math.exp(2.0 * float(np.max(np.abs(rho_s))) * t_end / A**2) * float(np.max(np.abs(a_s)))
    if not h0 > sufficient:
        if np.min(rho_s) >= 0.0:
            warnings.warn(
                f"h0={h0:g} below the sufficient existence bound {sufficient:g}; "
                "proceeding because rho >= 0 keeps the solution monotone",
                RuntimeWarning,
            )
        else:
            raise ExistenceBound(
                f"h0={h0:g} below the sufficient bound {sufficient:g} and rho changes sign"
            )

    def rhs(t, y, pa, out):
        h = h0 + y[0]
        a = a_fn(t)
        d = h * h - a * a
        if d < 0.0:
            out[0] = math.nan
            return
        c = cos_sign * math.cos(t)
        if c >= 0.0:
            den = h + math.sqrt(d) * c
        else:
            # cancellation-free near the denominator minimum ~ a^2/(2h)
            st = math.sin(t)
            den = (h * h * st * st + a * a * c * c) / (h - math.sqrt(d) * c)
        out[0] = rho_fn(t) / den

    def forced(t, y, pa):
        # pin a sample on each denominator minimum (cos_sign*cos(t) = -1)
        base = 0.0 if cos_sign < 0 else math.pi
        k = math.floor((t - base) / (2.0 * math.pi)) + 1.0
        tn = base + 2.0 * math.pi * k
        if tn - t < 1e-12 * (1.0 + abs(t)):
            tn += 2.0 * math.pi
        return tn

    driver = stepping.python_driver(rhs, next_forced=forced)
    status, yout, _, t_last, y_last, _ = stepping.solve(
        driver, np.zeros(1), np.zeros(1), (0.0, t_end), np.array([t_end]),
        rtol=tol[0], atol=tol[1],
    )
    if status == stepping.DOMAIN:
        raise DomainError(f"h(t) fell below a(t) at t={t_last!r}")
    if status != stepping.OK:
        raise StepFloorReached(f"period map integration stalled at t={t_last!r}", t=t_last, state=y_last)
    return float(yout[0, 0])


def half_period_map(rho, a, h0, tol=(1e-11, 1e-13)):
    """h(pi/2) for the quarter-interval equation with the -cos(t) denominator.

    The large-h0 increment tends to pi*rho(0)/a(0) with an
    O(log(h0)/h0) error.
    """
    return h0 + period_map_increment(rho, a, h0, -1.0, 0.5 * math.pi, tol)


def full_period_map(rho, a, h0, tol=(1e-11, 1e-13)):
    """h(2*pi) for the full-period equation with the +cos(t) denominator.

    The large-h0 increment tends to 2*pi*rho(pi)/a(pi) with an
    O(log(h0)/h0) error.
    """
    return h0 + period_map_increment(rho, a, h0, +1.0, 2.0 * math.pi, tol)


# ----------------------------------------------------------------------

@dataclass(frozen=True)
class PredictedSlope:
    """Closed-form asymptotic slopes at a settled phase."""

    growth_slope: float  # dF/dt
    action_slope: float  # dI/dt = C = growth_slope/2
    xi: float
    fprime: float


def predicted_slope(params, phi_infty):
    """Asymptotic growth rates at the settled slow phase.

    Requires an integer drive/cyclotron ratio; raises SignError when the
    drive slope at the kick phase does not predict acceleration
    (epsilon * Omega * f'(-xi) must be negative).
    """
    ratio = params.omega / params.b
    n = round(ratio)
    if params.pair is not None:
        if params.pair.nu != 1:
            raise ParameterError(
                f"closed-form slope proven only for integer Omega/b, got {params.pair.mu}/{params.pair.nu}"
            )
    elif abs(ratio - n) > 1e-9 or n < 1:
        raise ParameterError(f"closed-form slope proven only for integer Omega/b, got {ratio!r}")
    xi = ratio * (phi_infty + 0.5 * math.pi)
    fp = params.profile.derivative(-xi)
    if not params.epsilon * params.omega * fp < 0:
        raise SignError(
            f"epsilon*Omega*f'(-xi) = {params.epsilon * params.omega * fp!r} is not negative: "
            "no acceleration predicted at this phase"
        )
    slope = params.epsilon * params.omega * abs(fp)
    return PredictedSlope(growth_slope=slope, action_slope=0.5 * slope, xi=xi, fprime=fp)
