"""The adaptive 5(4) stepper: accuracy, dense output, events, floor, forcing."""

import numpy as np
import numba
import pytest

from cyclores import stepping


@numba.njit(cache=True)
def _rhs_oscillator(t, y, pa, out):
    out[0] = y[1]
    out[1] = -y[0]


@numba.njit(cache=True)
def _rhs_decay(t, y, pa, out):
    out[0] = -pa[0] * y[0]


@numba.njit(cache=True)
def _metric_first(t, y, pa):
    return y[0]


@numba.njit(cache=True)
def _rhs_blowup(t, y, pa, out):
    # finite-time singularity at t = 1
    out[0] = y[0] * y[0]


def test_oscillator_dense_output_accuracy():
    drv = stepping.compiled_driver(_rhs_oscillator)
    t_eval = np.linspace(0, 20 * np.pi, 257)
    status, yout, events, t_last, y_last, nsteps = stepping.solve(
        drv, np.zeros(1), np.array([1.0, 0.0]), (0.0, 20 * np.pi), t_eval,
        rtol=1e-10, atol=1e-12,
    )
    assert status == stepping.OK
    assert np.max(np.abs(yout[:, 0] - np.cos(t_eval))) < 5e-9
    assert np.max(np.abs(yout[:, 1] + np.sin(t_eval))) < 5e-9


def test_decay_python_driver_matches_compiled():
    t_eval = np.array([0.0, 1.0, 3.0])
    args = (np.array([2.0]), np.array([1.0]), (0.0, 3.0), t_eval)
    kw = dict(rtol=1e-12, atol=1e-14)

    def rhs_py(t, y, pa, out):
        out[0] = -pa[0] * y[0]

    _, y_c, *_ = stepping.solve(stepping.compiled_driver(_rhs_decay), *args, **kw)
    _, y_p, *_ = stepping.solve(stepping.python_driver(rhs_py), *args, **kw)
    assert np.allclose(y_c, y_p, rtol=0, atol=1e-13)
    assert y_c[2, 0] == pytest.approx(np.exp(-6.0), rel=1e-11)


def test_endpoint_sample_exact():
    drv = stepping.compiled_driver(_rhs_decay)
    status, yout, *_ = stepping.solve(
        drv, np.array([1.0]), np.array([1.0]), (0.0, 2.0), np.array([0.0, 2.0])
    )
    assert status == stepping.OK
    assert yout[0, 0] == 1.0
    assert yout[1, 0] == pytest.approx(np.exp(-2.0), rel=1e-9)


def test_events_one_entry_per_excursion():
    drv = stepping.compiled_driver(_rhs_oscillator, _metric_first)
    t_eval = np.array([20 * np.pi])
    status, _, events, *_ = stepping.solve(
        drv, np.zeros(1), np.array([1.0, 0.0]), (0.0, 20 * np.pi), t_eval,
        metric_threshold=0.0, event_capacity=64,
    )
    assert status == stepping.OK
    assert events.shape[0] == 10  # cos(t) < 0 on ten sub-intervals
    # logged minima track the troughs of cos at step resolution
    assert np.allclose(events[:, 1], -1.0, atol=1e-3)
    assert np.allclose(np.remainder(events[:, 0], 2 * np.pi), np.pi, atol=5e-2)


def test_step_floor_reported_on_blowup():
    drv = stepping.compiled_driver(_rhs_blowup)
    status, _, _, t_last, y_last, _ = stepping.solve(
        drv, np.zeros(1), np.array([1.0]), (0.0, 2.0), np.array([2.0]),
        rtol=1e-10, atol=1e-12, floor_frac=1e-12,
    )
    assert status in (stepping.STEP_FLOOR, stepping.DOMAIN)
    assert t_last == pytest.approx(1.0, abs=1e-3)


def test_forced_times_pin_samples():
    # without forcing, a narrow Gaussian pulse in an otherwise flat RHS is
    # stepped over once the controller has grown the step
    def rhs(t, y, pa, out):
        out[0] = np.exp(-0.5 * ((t - 50.0) / 1e-5) ** 2)

    def forced(t, y, pa):
        return 50.0 if t < 50.0 else 1e300

    kw = dict(rtol=1e-10, atol=1e-12)
    _, miss, *_ = stepping.solve(
        stepping.python_driver(rhs), np.zeros(1), np.zeros(1), (0.0, 100.0), np.array([100.0]), **kw
    )
    _, hit, *_ = stepping.solve(
        stepping.python_driver(rhs, next_forced=forced), np.zeros(1), np.zeros(1),
        (0.0, 100.0), np.array([100.0]), **kw
    )
    exact = np.sqrt(2 * np.pi) * 1e-5
    assert abs(miss[0, 0] - exact) > 0.5 * exact  # demonstrates the hazard
    assert hit[0, 0] == pytest.approx(exact, rel=1e-6)


def test_rejects_reversed_span():
    drv = stepping.compiled_driver(_rhs_decay)
    with pytest.raises(ValueError):
        stepping.solve(drv, np.array([1.0]), np.array([1.0]), (1.0, 0.0), np.array([1.0]))
