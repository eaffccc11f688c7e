"""Asymptotic extraction: linear-growth fits, phase limits, law checks, scans.

Everything here works on sampled trajectories.  Linear growth is always
fitted on a tail window (late-time data) after log-spaced resampling, since
the expected residuals grow like log(t)^2 and bias short-window fits.
Residuals are classified by comparing RMS improvements of candidate
envelopes {1, log t, log^2 t, t}; an honest "undecided" classification
exists because finite-horizon true flows may simply be pre-asymptotic.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientSamples, NonConvergent, NotAccelerating
from .flux import ResonancePair, averaged_profile

__all__ = [
    "AsymptoticFit",
    "fit_linear_growth",
    "PhaseEstimate",
    "extract_phase",
    "extract_phase_details",
    "LawReport",
    "acceleration_law_check",
    "ScanRow",
    "ScanResult",
    "resonance_scan",
]

_ENVELOPES = ("bounded", "log", "log_squared", "linear")
# a more complex envelope must beat the incumbent by this factor
_IMPROVEMENT = 0.75


@dataclass(frozen=True)
class AsymptoticFit:
    """Tail-window least-squares line with a residual-envelope classification."""

    slope: float
    intercept: float
    window: tuple
    residual_class: str
    rms_residual: float
    slope_stderr: float
    envelope_rms: dict = field(default_factory=dict)
    phi_infty: float | None = None
    n_samples: int = 0


def _envelope_rms(t, resid):
    """RMS left after regressing the residual on each candidate envelope."""
    out = {}

    def reduced(cols):
        M = np.column_stack(cols)
        coef, *_ = np.linalg.lstsq(M, resid, rcond=None)
        return float(np.sqrt(np.mean((resid - M @ coef) ** 2)))

    out["bounded"] = reduced([np.ones_like(t)])
    if t[0] > 0:
        lg = np.log(t)
        out["log"] = reduced([np.ones_like(t), lg])
        out["log_squared"] = reduced([np.ones_like(t), lg * lg])
    else:
        out["log"] = math.inf
        out["log_squared"] = math.inf
    out["linear"] = reduced([np.ones_like(t), t])
    return out


def fit_linear_growth(times, values, window_fraction=0.5, resample="log", min_samples=32):
    """Least-squares slope/intercept over the tail window plus residual class.

    Parameters
    ----------
    times, values : 1-D samples (times increasing)
    window_fraction : start of the fit window as a fraction of the samples
    resample : 'log' re-interpolates the window to log-spaced times before
        fitting (the default; neutralises the late-sample dominance of
        uniform grids), anything else fits the raw window.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    i0 = int(window_fraction * t.size)
    tw, yw = t[i0:], y[i0:]
    if tw.size < min_samples:
        raise InsufficientSamples(f"need >= {min_samples} samples in the fit window, got {tw.size}")
    if resample == "log" and tw[0] > 0 and tw[-1] > tw[0]:
        tg = np.geomspace(tw[0], tw[-1], tw.size)
        yw = np.interp(tg, tw, yw)
        tw = tg
    M = np.column_stack((tw, np.ones_like(tw)))
    coef, *_ = np.linalg.lstsq(M, yw, rcond=None)
    slope, intercept = float(coef[0]), float(coef[1])
    resid = yw - M @ coef
    rms = float(np.sqrt(np.mean(resid**2)))
    # standard error of the slope from the unbiased residual variance
    dof = max(tw.size - 2, 1)
    tc = tw - tw.mean()
    stt = float(np.sum(tc * tc))
    stderr = math.sqrt(np.sum(resid**2) / dof / stt) if stt > 0 else math.inf

    env = _envelope_rms(tw, resid)
    best = "bounded"
    for cand in ("log", "log_squared", "linear"):
        if env[cand] < _IMPROVEMENT * env[best]:
            best = cand
    return AsymptoticFit(
        slope=slope,
        intercept=intercept,
        window=(float(tw[0]), float(tw[-1])),
        residual_class="other" if best == "linear" else best,
        rms_residual=rms,
        slope_stderr=stderr,
        envelope_rms=env,
        n_samples=int(tw.size),
    )


@dataclass(frozen=True)
class PhaseEstimate:
    value: float
    stderr: float
    tail_std: float
    window: tuple
    n_samples: int


def _phase_series(params, source):
    if hasattr(source, "chart"):
        if source.chart != "actionangle":
            raise ValueError(f"phase extraction expects the actionangle chart, got {source.chart!r}")
        return source.times, source.column("phi")
    t, phi = source
    return np.asarray(t, dtype=float), np.asarray(phi, dtype=float)


def extract_phase_details(params, source, window_fraction=0.5, tail_std_tol=0.05, blocks=20):
    """Tail average of phi(t) - b*t with a jackknife error estimate.

    Raises NonConvergent when the tail still fluctuates beyond
    ``tail_std_tol`` (nonresonant or pre-asymptotic run).
    """
    t, phi = _phase_series(params, source)
    resid = phi - params.b * t
    i0 = int(window_fraction * t.size)
    tail = resid[i0:]
    if tail.size < 8:
        raise InsufficientSamples(f"need >= 8 tail samples, got {tail.size}")
    tail_std = float(np.std(tail))
    if tail_std > tail_std_tol:
        raise NonConvergent(
            f"phi(t) - b*t still fluctuates (tail std {tail_std:.3g} > {tail_std_tol:g})"
        )
    blocks = min(blocks, tail.size)
    means = np.array([np.mean(chunk) for chunk in np.array_split(tail, blocks)])
    jack = np.array([(means.sum() - m) / (blocks - 1) for m in means])
    se = math.sqrt((blocks - 1) / blocks * np.sum((jack - jack.mean()) ** 2))
    return PhaseEstimate(
        value=float(np.mean(tail)),
        stderr=float(se),
        tail_std=tail_std,
        window=(float(t[i0]), float(t[-1])),
        n_samples=int(tail.size),
    )


def extract_phase(params, source, window_fraction=0.5, tail_std_tol=0.05):
    """The settled phase phi_inf = lim (phi(t) - b*t); see extract_phase_details."""
    return extract_phase_details(params, source, window_fraction, tail_std_tol).value


@dataclass(frozen=True)
class LawReport:
    """Fitted linear action growth compared against the closed-form slope."""

    C_fit: float
    C_formula: float
    phi_infty: float
    xi: float
    discrepancy: float
    sign_ok: bool
    fprime_at_minus_xi: float
    fit: AsymptoticFit
    phase: PhaseEstimate


def acceleration_law_check(params, traj, window_fraction=0.5):
    """Compare fitted C = lim I(t)/t and phi_inf with the predicted slope.

    The prediction is C = -(epsilon*omega2/2) * f_nu'(-xi) with
    xi = (omega/b)*(phi_inf + pi/2) and f_nu the nu-averaged drive (equal to
    the drive itself for integer ratios).  Raises NotAccelerating on flat
    tails and propagates NonConvergent from the phase extraction.
    """
    if traj.chart == "polar":
        from .actionangle import to_action_angle_trajectory

        traj = to_action_angle_trajectory(params, traj)
    if traj.chart != "actionangle":
        raise ValueError(f"law check expects actionangle (or polar) data, got {traj.chart!r}")
    t = traj.times
    fit = fit_linear_growth(t, traj.column("I"), window_fraction=window_fraction)
    if fit.slope <= 3.0 * fit.slope_stderr:
        raise NotAccelerating(
            f"action tail slope {fit.slope!r} +- {fit.slope_stderr!r} is not positive", slope=fit.slope
        )
    phase = extract_phase_details(params, (t, traj.column("phi")), window_fraction=window_fraction)
    lam = params.omega / params.b
    xi = lam * (phase.value + 0.5 * math.pi)
    prof = averaged_profile(params.profile, params.pair.nu) if params.pair else params.profile
    fp = prof.derivative(-xi)
    C_formula = -0.5 * params.epsilon * params.omega * fp
    return LawReport(
        C_fit=fit.slope,
        C_formula=C_formula,
        phi_infty=phase.value,
        xi=xi,
        discrepancy=abs(fit.slope - C_formula) / abs(fit.slope),
        sign_ok=fp < 0,
        fprime_at_minus_xi=fp,
        fit=fit,
        phase=phase,
    )


# ----------------------------------------------------------------------
# resonance scans

@dataclass(frozen=True)
class ScanRow:
    ratio_num: int
    ratio_den: int
    seed: int
    classification: str
    C_fit: float
    C_formula: float
    phi_infty: float
    discrepancy: float
    note: str = ""


@dataclass(frozen=True)
class ScanResult:
    rows: tuple
    horizon: float

    def acceleration_fraction(self, ratio):
        pair = ResonancePair.from_ratio(ratio)
        cells = [r for r in self.rows if (r.ratio_num, r.ratio_den) == (pair.mu, pair.nu)]
        if not cells:
            return math.nan
        return sum(r.classification == "accelerating" for r in cells) / len(cells)


_BOUNDED_SPREAD = 5.0  # max/median of I(t) separating bounded from growing


def _scan_cell(template, pair, seed, horizon, tol, samples_cap):
    from . import dynamics
    from .actionangle import ActionAngleState, action_series, from_action_angle

    params = dynamics.ModelParams.from_ratio(
        b=template.b, ratio=pair, epsilon=template.epsilon,
        p_theta=template.p_theta, profile=template.profile,
    )
    rng = np.random.default_rng([seed, pair.mu, pair.nu])
    I0 = rng.uniform(0.5, 2.0)
    phi0 = rng.uniform(0.0, 2.0 * math.pi)
    r0, pr0 = from_action_angle(params, ActionAngleState(I0, phi0), 0.0)
    n_samp = int(min(samples_cap, max(512, 8 * horizon * params.b / (2 * math.pi))))
    nan = math.nan
    try:
        traj = dynamics.integrate(params, "polar", (r0, 0.0, pr0), (0.0, horizon), tol=tol, sampling=n_samp)
    except Exception as exc:  # per-cell errors land in the table, not the scan
        return ScanRow(pair.mu, pair.nu, seed, "error", nan, nan, nan, nan, note=repr(exc))
    I, phi, _, _ = action_series(params, traj)
    spread = float(np.max(I) / np.median(I))
    t = traj.times
    fit = fit_linear_growth(t, I)
    growing = fit.slope > 3.0 * fit.slope_stderr and fit.slope > 0
    if spread <= _BOUNDED_SPREAD and not growing:
        return ScanRow(pair.mu, pair.nu, seed, "bounded", nan, nan, nan, nan)
    if spread > _BOUNDED_SPREAD and growing:
        try:
            phase = extract_phase_details(params, (t, phi))
            lam = params.omega / params.b
            xi = lam * (phase.value + 0.5 * math.pi)
            fnu = averaged_profile(params.profile, pair.nu)
            C_formula = -0.5 * params.epsilon * params.omega * fnu.derivative(-xi)
            disc = abs(fit.slope - C_formula) / abs(fit.slope)
            return ScanRow(pair.mu, pair.nu, seed, "accelerating", fit.slope, C_formula, phase.value, disc)
        except NonConvergent:
            return ScanRow(pair.mu, pair.nu, seed, "accelerating", fit.slope, nan, nan, nan,
                           note="phase not converged")
    return ScanRow(pair.mu, pair.nu, seed, "undecided", fit.slope, nan, nan, nan)


def resonance_scan(params_template, ratios, seeds, horizon, tol=(1e-9, 1e-11),
                   threads=None, samples_cap=200_000):
    """Classify {accelerating, bounded, undecided} across frequency ratios.

    One cell = one (ratio, seed) pair with a random action-angle initial
    condition drawn from a per-cell deterministic generator, so reports are
    bitwise reproducible.  ``CYCLORES_THREADS`` (or ``threads``) caps the
    number of concurrent cells; the integrator releases the GIL.
    """
    pairs = [r if isinstance(r, ResonancePair) else ResonancePair.from_ratio(r) for r in ratios]
    cells = [(pair, seed) for pair in pairs for seed in range(int(seeds))]
    if threads is None:
        threads = int(os.environ.get("CYCLORES_THREADS", os.cpu_count() or 1))
    threads = max(1, min(threads, len(cells)))
    if threads == 1:
        rows = [_scan_cell(params_template, pair, seed, horizon, tol, samples_cap) for pair, seed in cells]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(lambda c: _scan_cell(params_template, c[0], c[1], horizon, tol, samples_cap), cells))
    rows.sort(key=lambda r: (r.ratio_num, r.ratio_den, r.seed))
    return ScanResult(rows=tuple(rows), horizon=float(horizon))
