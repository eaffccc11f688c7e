"""Embedded Runge-Kutta 5(4) stepping with PI control, dense output and events.

One driver algorithm, two instantiations.  ``compiled_driver`` wraps the
right-hand side and the event metric into a numba-jitted loop (used for the
long resonant runs, where near-origin passages force millions of steps);
``python_driver`` builds the identical loop uncompiled so arbitrary Python
callables (e.g. user-supplied period-map coefficient functions) can be
integrated with the same semantics.

The pair is the classic Dormand-Prince 5(4) with a quartic interpolant for
dense output.  Near-singular passages are handled by the error controller
shrinking the step down to a hard floor ``floor_frac*(t1 - t0)``; three
consecutive floor-limited rejections abort the run.  A scalar "metric"
(distance to the chart singularity, e.g. the radius) is monitored and one
event per below-threshold excursion is logged at the excursion minimum.
"""

from __future__ import annotations

import numpy as np
import numba

__all__ = [
    "OK",
    "STEP_FLOOR",
    "DOMAIN",
    "MAX_STEPS",
    "compiled_driver",
    "python_driver",
    "no_metric",
]

OK = 0
STEP_FLOOR = 1
DOMAIN = 2
MAX_STEPS = 3

# Dormand-Prince 5(4).  Row 6 of A is the 5th-order weight vector b, so the
# 7th stage is the FSAL evaluation f(t+h, y1).
_A = np.array(
    [
        [0, 0, 0, 0, 0, 0],
        [1 / 5, 0, 0, 0, 0, 0],
        [3 / 40, 9 / 40, 0, 0, 0, 0],
        [44 / 45, -56 / 15, 32 / 9, 0, 0, 0],
        [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0, 0],
        [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656, 0],
        [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
    ]
)
_C = np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1, 1])
# weights of (5th order - 4th order) applied to the 7 stages
_E = np.array(
    [71 / 57600, 0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40]
)
# dense-output polynomial: y(t0 + th*h) = y0 + h * K^T P [th, th^2, th^3, th^4]
_P = np.array(
    [
        [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
        [0, 0, 0, 0],
        [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
        [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
        [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
        [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
        [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
    ]
)

_SAFETY = 0.9
_BETA_PI = 0.04  # PI stabilisation; error exponent is 1/5 - 0.75*beta
_EXPO = 0.2 - 0.75 * _BETA_PI
_FAC_MIN = 0.2
_FAC_MAX = 10.0


def no_metric(t, y, params):
    """Event metric for charts without a singularity to watch."""
    return 1e300


def no_forced_times(t, y, params):
    """Forced-sample schedule for problems without hidden narrow features."""
    return 1e300


def _make_driver(rhs, metric, next_forced):
    """Build the stepping loop around a specific rhs/metric/schedule triple.

    rhs(t, y, params, out) writes dy/dt into ``out``; signalling NaN values
    marks a domain violation.  metric(t, y, params) returns the watched
    scalar.  next_forced(t, y, params) returns the next time (> t) the
    integrator must land on exactly; this pins steps to analytically known
    narrow features (kicks hiding in a time-dependent denominator) that the
    error estimator could otherwise straddle without sampling.  The returned
    function is pure numpy/python and can be handed to numba.njit unchanged.
    """
    A = _A
    C = _C
    E = _E
    P = _P

    def drive(params, y0, t0, t1, rtol, atol, t_eval, floor_frac, metric_threshold, ev_t, ev_m, max_steps):
        n = y0.size
        n_eval = t_eval.size
        yout = np.full((n_eval, n), np.nan)
        k = np.empty((7, n))
        y = y0.copy()
        y1 = np.empty(n)
        ytmp = np.empty(n)
        t = t0
        span = t1 - t0
        h_floor = floor_frac * span

        rhs(t, y, params, k[0])
        for i in range(n):
            if not np.isfinite(k[0, i]):
                return DOMAIN, yout, 0, t, y, 0

        # Hairer-style initial step guess from y0 and an Euler probe.
        d0 = 0.0
        d1 = 0.0
        for i in range(n):
            sc = atol + rtol * abs(y[i])
            d0 += (y[i] / sc) ** 2
            d1 += (k[0, i] / sc) ** 2
        d0 = np.sqrt(d0 / n)
        d1 = np.sqrt(d1 / n)
        h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
        h0 = min(h0, span)
        for i in range(n):
            ytmp[i] = y[i] + h0 * k[0, i]
        rhs(t + h0, ytmp, params, k[1])
        d2 = 0.0
        for i in range(n):
            sc = atol + rtol * abs(y[i])
            d2 += ((k[1, i] - k[0, i]) / sc) ** 2
        d2 = np.sqrt(d2 / n) / h0
        dm = max(d1, d2)
        h1 = h0 * 1e-3 if dm <= 1e-15 else (0.01 / dm) ** 0.2
        h = min(100.0 * h0, h1, span)

        err_prev = 1e-4
        rejected = False
        floor_fails = 0
        nsteps = 0
        ie = 0
        # inclusive left endpoint
        while ie < n_eval and t_eval[ie] <= t:
            for i in range(n):
                yout[ie, i] = y[i]
            ie += 1

        n_ev = 0
        cap_ev = ev_t.size
        inside = False
        m_min = 1e300
        m_argt = t0
        m0 = metric(t, y, params)
        if m0 < metric_threshold:
            inside = True
            m_min = m0
            m_argt = t0

        eps_t = 1e-14 * max(abs(t0), abs(t1), 1.0)

        while t1 - t > eps_t:
            nsteps += 1
            if nsteps > max_steps:
                return MAX_STEPS, yout, n_ev, t, y, nsteps
            at_floor = False
            if h <= h_floor:
                h = h_floor
                at_floor = True
            if h > t1 - t:
                h = t1 - t
            tf = next_forced(t, y, params)
            if tf - t > h_floor and h > tf - t:
                h = tf - t
                at_floor = False
            # stages 1..5 and the 5th-order combination (stage row 6)
            for s in range(1, 7):
                for i in range(n):
                    acc = 0.0
                    for j in range(s):
                        acc += A[s, j] * k[j, i]
                    ytmp[i] = y[i] + h * acc
                if s < 6:
                    rhs(t + C[s] * h, ytmp, params, k[s])
                else:
                    for i in range(n):
                        y1[i] = ytmp[i]
                    rhs(t + h, y1, params, k[6])

            err = 0.0
            bad = False
            for i in range(n):
                if not np.isfinite(y1[i]) or not np.isfinite(k[6, i]):
                    bad = True
                    break
                e = 0.0
                for j in range(7):
                    e += E[j] * k[j, i]
                e *= h
                sc = atol + rtol * max(abs(y[i]), abs(y1[i]))
                err += (e / sc) ** 2
            err = 1e12 if bad else np.sqrt(err / n)

            if err > 1.0 and not at_floor:
                fac = max(_FAC_MIN, _SAFETY * err ** (-0.2))
                h *= fac
                rejected = True
                continue

            if err > 1.0:
                # forced acceptance at the floor; three in a row aborts
                if bad:
                    return DOMAIN, yout, n_ev, t, y, nsteps
                floor_fails += 1
                if floor_fails >= 3:
                    return STEP_FLOOR, yout, n_ev, t, y, nsteps
            else:
                floor_fails = 0

            # dense output on (t, t+h]
            while ie < n_eval and t_eval[ie] <= t + h + eps_t:
                th = (t_eval[ie] - t) / h
                for i in range(n):
                    acc = 0.0
                    tp = th
                    for col in range(4):
                        q = 0.0
                        for s in range(7):
                            q += k[s, i] * P[s, col]
                        acc += q * tp
                        tp *= th
                    yout[ie, i] = y[i] + h * acc
                ie += 1

            t_new = t + h
            m = metric(t_new, y1, params)
            if m < metric_threshold:
                if not inside:
                    inside = True
                    m_min = m
                    m_argt = t_new
                elif m < m_min:
                    m_min = m
                    m_argt = t_new
            elif inside:
                inside = False
                if n_ev < cap_ev:
                    ev_t[n_ev] = m_argt
                    ev_m[n_ev] = m_min
                n_ev += 1

            t = t_new
            for i in range(n):
                y[i] = y1[i]
                k[0, i] = k[6, i]

            if err <= 1.0:
                fac = _SAFETY * (err + 1e-300) ** (-_EXPO) * err_prev ** _BETA_PI
                if fac > _FAC_MAX:
                    fac = _FAC_MAX
                if fac < _FAC_MIN:
                    fac = _FAC_MIN
                if rejected and fac > 1.0:
                    fac = 1.0
                err_prev = max(err, 1e-4)
                rejected = False
                h *= fac
            # after a forced floor step keep h at the floor and try again

        # close a passage still open at the final time
        if inside:
            if n_ev < cap_ev:
                ev_t[n_ev] = m_argt
                ev_m[n_ev] = m_min
            n_ev += 1
        while ie < n_eval:
            for i in range(n):
                yout[ie, i] = y[i]
            ie += 1
        return OK, yout, n_ev, t, y, nsteps

    return drive


_COMPILED_CACHE = {}
_NO_METRIC_C = None
_NO_FORCED_C = None


def compiled_driver(rhs, metric=None, next_forced=None):
    """JIT-compiled driver specialised to an njit rhs (and optional hooks)."""
    global _NO_METRIC_C, _NO_FORCED_C
    key = (rhs, metric, next_forced)
    drv = _COMPILED_CACHE.get(key)
    if drv is None:
        if metric is None:
            if _NO_METRIC_C is None:
                _NO_METRIC_C = numba.njit(cache=True)(no_metric)
            metric = _NO_METRIC_C
        if next_forced is None:
            if _NO_FORCED_C is None:
                _NO_FORCED_C = numba.njit(cache=True)(no_forced_times)
            next_forced = _NO_FORCED_C
        drv = numba.njit(cache=True, nogil=True)(_make_driver(rhs, metric, next_forced))
        _COMPILED_CACHE[key] = drv
    return drv


def python_driver(rhs, metric=None, next_forced=None):
    """Uncompiled driver with identical semantics, for plain Python callables."""
    return _make_driver(
        rhs,
        metric if metric is not None else no_metric,
        next_forced if next_forced is not None else no_forced_times,
    )


def solve(driver, params, y0, t_span, t_eval, rtol=1e-10, atol=1e-12,
          floor_frac=1e-12, metric_threshold=-1.0, event_capacity=0, max_steps=1_000_000_000):
    """Run a driver and return ``(status, yout, events, t_last, y_last, nsteps)``.

    ``events`` is an (n_events, 2) array of (time, metric minimum) per
    below-threshold excursion, truncated at ``event_capacity`` entries.
    """
    t0, t1 = float(t_span[0]), float(t_span[1])
    if not t1 > t0:
        raise ValueError(f"need t1 > t0, got span ({t0}, {t1})")
    y0 = np.asarray(y0, dtype=float)
    t_eval = np.asarray(t_eval, dtype=float)
    ev_t = np.empty(max(int(event_capacity), 1))
    ev_m = np.empty_like(ev_t)
    status, yout, n_ev, t_last, y_last, nsteps = driver(
        params, y0, t0, t1, float(rtol), float(atol), t_eval,
        float(floor_frac), float(metric_threshold), ev_t, ev_m, int(max_steps),
    )
    n_rec = min(n_ev, ev_t.size)
    events = np.column_stack((ev_t[:n_rec], ev_m[:n_rec]))
    return status, yout, events, t_last, y_last, nsteps
