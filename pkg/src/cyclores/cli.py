"""Config-driven command line front end.

Configs are plain text, one ``key value...`` pair per line, ``#`` comments.
Drive harmonics are given as ``cos k v`` / ``sin k v`` lines (k >= 1; a
constant term is rejected since it is absorbed by p_theta).  The frequency
ratio is given exactly as two integers, ``ratio mu nu``, so the resonance
classification carries no rounding; a bare ``omega`` value is accepted but
flagged as a nonresonant sweep.

Every CSV written here starts with a ``# params_digest=...`` line tying it
to the parameters that produced it, followed by a header row; values are
full double precision with a C-locale decimal point.  A JSON manifest
records the run metadata.  Identical config + seed gives byte-identical
CSVs.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass, field, fields

import numpy as np

from . import __version__
from .errors import CycloresError, ParameterError, ParseError, ValidationError
from .flux import FluxProfile, ResonancePair
from .dynamics import ModelParams, Trajectory, integrate

MODES = ("simulate", "averaged", "decoupled", "analyze", "scan", "periodmap")
_CHART_COLUMNS = {
    ("q1", "q2", "p1", "p2"): "cartesian",
    ("r", "theta", "p_r", "p_theta"): "polar",
    ("I", "phi", "r_minus", "r_plus"): "actionangle",
    ("chi1", "J1", "Z", "beta"): "averaged",
    ("F", "phi"): "decoupled",
}


@dataclass
class ExperimentConfig:
    mode: str = "simulate"
    b: float = 1.0
    ratio: tuple | None = None
    omega: float | None = None
    epsilon: float = 0.0
    p_theta: float | None = None
    cos: tuple = ()
    sin: tuple = ()
    chart: str = "polar"
    q0: tuple | None = None
    v0: tuple | None = None
    r0: float | None = None
    theta0: float = 0.0
    pr0: float = 0.0
    I0: float | None = None
    phi0: float = 0.0
    chi0: float = 0.0
    J0: float | None = None
    t0: float = 0.0
    horizon: float = 100.0
    rtol: float = 1e-10
    atol: float = 1e-12
    samples: int = 2048
    seed: int = 0
    out: str = "run"
    guiding: bool = False
    plot: int = 0
    decoupled_kind: str = "growth"
    F0: float = 1000.0
    phase: float = 0.0
    alpha: float = 0.35
    map_kind: str = "full"
    h0: tuple = ()
    rho_const: float = 1.0
    a_const: float = 1.0
    ratios: tuple = ()
    scan_seeds: int = 20
    input: str | None = None

    def profile(self):
        cosmap = {k: v for k, v in self.cos}
        sinmap = {k: v for k, v in self.sin}
        return FluxProfile.from_harmonics(cosmap, sinmap)

    def params(self):
        """ModelParams for this config, deriving p_theta from cartesian data if absent."""
        prof = self.profile()
        p_theta = self.p_theta
        omega, pair = self._frequency()
        if p_theta is None:
            if self.q0 is None or self.v0 is None:
                raise ValidationError(["p_theta missing and no cartesian q0/v0 to derive it from"])
            q1, q2 = self.q0
            v1, v2 = self.v0
            r2 = q1 * q1 + q2 * q2
            f0 = prof.value(omega * self.t0)
            p_theta = q1 * v2 - q2 * v1 - 0.5 * self.b * r2 + self.epsilon * f0
        return ModelParams(
            b=self.b, omega=omega, epsilon=self.epsilon,
            p_theta=p_theta, profile=prof, pair=pair,
        )

    def _frequency(self):
        if self.ratio is not None:
            pair = ResonancePair(*self.ratio)
            return self.b * pair.mu / pair.nu, pair
        return float(self.omega), None


_TUPLE2_KEYS = {"q0", "v0"}
_FLOAT_KEYS = {
    "b", "epsilon", "p_theta", "r0", "theta0", "pr0", "I0", "phi0", "chi0",
    "J0", "t0", "horizon", "rtol", "atol", "F0", "phase", "alpha",
    "rho_const", "a_const", "omega",
}
_INT_KEYS = {"samples", "seed", "plot", "scan_seeds"}
_STR_KEYS = {"mode", "chart", "out", "decoupled_kind", "map_kind", "input"}
_BOOL_KEYS = {"guiding"}


def parse_config(text):
    """Parse config text; ParseError on structure, ValidationError listing
    every violated invariant."""
    cfg = ExperimentConfig()
    seen = set()
    cos = {}
    sin = {}
    violations = []
    any_line = False

    def number(tok, line_no, col):
        try:
            return float(tok)
        except ValueError:
            raise ParseError(f"line {line_no}: expected a number, got {tok!r}", line=line_no, column=col) from None

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        any_line = True
        toks = line.split()
        key, vals = toks[0], toks[1:]
        if key in ("cos", "sin"):
            if len(vals) != 2:
                raise ParseError(f"line {line_no}: {key} needs 'k value'", line=line_no, column=len(key) + 2)
            kf = number(vals[0], line_no, len(key) + 2)
            if kf != int(kf):
                raise ParseError(f"line {line_no}: harmonic index must be an integer", line=line_no, column=len(key) + 2)
            k = int(kf)
            v = number(vals[1], line_no, len(key) + len(vals[0]) + 3)
            if k == 0:
                violations.append(
                    f"line {line_no}: constant drive term rejected: it only shifts p_theta "
                    "(add it there instead)"
                )
                continue
            if k < 0:
                violations.append(f"line {line_no}: harmonic index must be >= 1, got {k}")
                continue
            target = cos if key == "cos" else sin
            if k in target:
                violations.append(f"line {line_no}: duplicate {key} harmonic {k}")
            target[k] = v
            continue
        if key == "ratio":
            if len(vals) != 2:
                raise ParseError(f"line {line_no}: ratio needs 'mu nu'", line=line_no, column=7)
            mu = number(vals[0], line_no, 7)
            nu = number(vals[1], line_no, 7 + len(vals[0]) + 1)
            if mu != int(mu) or nu != int(nu):
                raise ParseError(f"line {line_no}: ratio must be two integers", line=line_no, column=7)
            if "ratio" in seen:
                violations.append(f"line {line_no}: duplicate key ratio")
            seen.add("ratio")
            if int(mu) < 1 or int(nu) < 1:
                violations.append(f"line {line_no}: ratio integers must be positive, got {int(mu)}/{int(nu)}")
            else:
                cfg.ratio = (int(mu), int(nu))
            continue
        if key in ("ratios", "h0"):
            if not vals:
                raise ParseError(f"line {line_no}: {key} needs at least one value", line=line_no, column=len(key) + 2)
            if key == "ratios":
                items = []
                for v in vals:
                    if "/" in v:
                        num, _, den = v.partition("/")
                        items.append((int(number(num, line_no, 0)), int(number(den, line_no, 0))))
                    else:
                        items.append((int(number(v, line_no, 0)), 1))
                cfg.ratios = tuple(items)
            else:
                cfg.h0 = tuple(number(v, line_no, 0) for v in vals)
            seen.add(key)
            continue
        if key in _TUPLE2_KEYS:
            if len(vals) != 2:
                raise ParseError(f"line {line_no}: {key} needs two components", line=line_no, column=len(key) + 2)
            if key in seen:
                violations.append(f"line {line_no}: duplicate key {key}")
            seen.add(key)
            setattr(cfg, key, (number(vals[0], line_no, 0), number(vals[1], line_no, 0)))
            continue
        if key in _FLOAT_KEYS or key in _INT_KEYS or key in _STR_KEYS or key in _BOOL_KEYS:
            if len(vals) != 1:
                raise ParseError(f"line {line_no}: {key} takes exactly one value", line=line_no, column=len(key) + 2)
            if key in seen:
                violations.append(f"line {line_no}: duplicate key {key}")
            seen.add(key)
            v = vals[0]
            if key in _FLOAT_KEYS:
                setattr(cfg, key, number(v, line_no, len(key) + 2))
            elif key in _INT_KEYS:
                fv = number(v, line_no, len(key) + 2)
                if fv != int(fv):
                    raise ParseError(f"line {line_no}: {key} must be an integer", line=line_no, column=len(key) + 2)
                setattr(cfg, key, int(fv))
            elif key in _BOOL_KEYS:
                if v not in ("true", "false"):
                    raise ParseError(f"line {line_no}: {key} must be true/false", line=line_no, column=len(key) + 2)
                setattr(cfg, key, v == "true")
            else:
                setattr(cfg, key, v)
            continue
        raise ParseError(f"line {line_no}: unknown key {key!r}", line=line_no, column=1)

    if not any_line:
        raise ParseError("empty config", line=1, column=1)
    cfg.cos = tuple(sorted(cos.items()))
    cfg.sin = tuple(sorted(sin.items()))
    violations.extend(_validate(cfg))
    if violations:
        raise ValidationError(violations)
    return cfg


def _validate(cfg):
    bad = []
    if cfg.mode not in MODES:
        bad.append(f"mode must be one of {MODES}, got {cfg.mode!r}")
    if not cfg.b > 0:
        bad.append(f"b > 0 violated (b={cfg.b!r})")
    if cfg.ratio is None and cfg.omega is None:
        bad.append("need either 'ratio mu nu' (exact rational) or 'omega' (nonresonant sweep)")
    if cfg.ratio is not None and cfg.omega is not None:
        bad.append("give only one of 'ratio' and 'omega'")
    if cfg.omega is not None and not cfg.omega > 0:
        bad.append(f"omega > 0 violated (omega={cfg.omega!r})")
    if not cfg.epsilon >= 0:
        bad.append(f"epsilon >= 0 violated (epsilon={cfg.epsilon!r})")
    coeff_bound = sum(abs(v) for _, v in cfg.cos) + sum(abs(v) for _, v in cfg.sin)
    if cfg.p_theta is not None:
        if not cfg.p_theta > 0:
            bad.append(f"p_theta > 0 violated (p_theta={cfg.p_theta!r})")
        elif not cfg.epsilon * coeff_bound < cfg.p_theta:
            bad.append(
                "epsilon*max|f| >= p_theta (positivity of a(t) would fail): "
                f"epsilon*sum|coeffs| = {cfg.epsilon * coeff_bound!r} vs p_theta = {cfg.p_theta!r}"
            )
    if not cfg.horizon > 0:
        bad.append(f"horizon > 0 violated (horizon={cfg.horizon!r})")
    if not (cfg.rtol > 0 and cfg.atol > 0):
        bad.append(f"tolerances must be positive (rtol={cfg.rtol!r}, atol={cfg.atol!r})")
    if cfg.samples < 2:
        bad.append(f"samples >= 2 violated (samples={cfg.samples!r})")
    if cfg.mode == "simulate":
        if cfg.chart not in ("cartesian", "polar", "actionangle"):
            bad.append(f"simulate chart must be cartesian|polar|actionangle, got {cfg.chart!r}")
        has_cart = cfg.q0 is not None and cfg.v0 is not None
        if cfg.chart == "cartesian" and not has_cart:
            bad.append("cartesian chart needs q0 and v0")
        if cfg.chart == "polar" and cfg.r0 is None and not has_cart:
            bad.append("polar chart needs r0 (or q0/v0 to convert)")
        if cfg.chart == "actionangle" and cfg.I0 is None:
            bad.append("actionangle chart needs I0 (and I0 > 0)")
        if cfg.p_theta is None and not has_cart:
            bad.append("p_theta missing and no q0/v0 to derive it from")
    if cfg.mode == "averaged":
        if cfg.ratio is None:
            bad.append("averaged mode needs the exact 'ratio mu nu'")
        if cfg.J0 is None or not cfg.J0 > 0:
            bad.append(f"averaged mode needs J0 > 0 (J0={cfg.J0!r})")
        if cfg.p_theta is None:
            bad.append("averaged mode needs p_theta")
    if cfg.mode == "decoupled":
        if cfg.decoupled_kind not in ("growth", "phase"):
            bad.append(f"decoupled_kind must be growth|phase, got {cfg.decoupled_kind!r}")
        if cfg.p_theta is None:
            bad.append("decoupled mode needs p_theta")
    if cfg.mode == "periodmap":
        if cfg.map_kind not in ("full", "half"):
            bad.append(f"map_kind must be full|half, got {cfg.map_kind!r}")
        if not cfg.h0:
            bad.append("periodmap mode needs 'h0 <value...>'")
        if not cfg.a_const > 0:
            bad.append(f"a_const > 0 violated (a_const={cfg.a_const!r})")
    if cfg.mode == "scan":
        if not cfg.ratios:
            bad.append("scan mode needs 'ratios mu/nu ...'")
        if cfg.scan_seeds < 1:
            bad.append(f"scan_seeds >= 1 violated (scan_seeds={cfg.scan_seeds!r})")
        if cfg.p_theta is None:
            bad.append("scan mode needs p_theta")
    if cfg.mode == "analyze" and not cfg.input:
        bad.append("analyze mode needs 'input <trajectory.csv>'")
    return bad


def serialize_config(cfg):
    """Emit config text that parses back to an identical config."""
    lines = [f"mode {cfg.mode}", f"b {cfg.b!r}"]
    if cfg.ratio is not None:
        lines.append(f"ratio {cfg.ratio[0]} {cfg.ratio[1]}")
    if cfg.omega is not None:
        lines.append(f"omega {cfg.omega!r}")
    lines.append(f"epsilon {cfg.epsilon!r}")
    if cfg.p_theta is not None:
        lines.append(f"p_theta {cfg.p_theta!r}")
    for k, v in cfg.cos:
        lines.append(f"cos {k} {v!r}")
    for k, v in cfg.sin:
        lines.append(f"sin {k} {v!r}")
    lines.append(f"chart {cfg.chart}")
    if cfg.q0 is not None:
        lines.append(f"q0 {cfg.q0[0]!r} {cfg.q0[1]!r}")
    if cfg.v0 is not None:
        lines.append(f"v0 {cfg.v0[0]!r} {cfg.v0[1]!r}")
    for key in ("r0", "I0", "J0"):
        v = getattr(cfg, key)
        if v is not None:
            lines.append(f"{key} {v!r}")
    for key in ("theta0", "pr0", "phi0", "chi0", "t0", "horizon", "rtol", "atol",
                "F0", "phase", "alpha", "rho_const", "a_const"):
        lines.append(f"{key} {getattr(cfg, key)!r}")
    for key in ("samples", "seed", "plot", "scan_seeds"):
        lines.append(f"{key} {getattr(cfg, key)}")
    lines.append(f"out {cfg.out}")
    lines.append(f"guiding {'true' if cfg.guiding else 'false'}")
    lines.append(f"decoupled_kind {cfg.decoupled_kind}")
    lines.append(f"map_kind {cfg.map_kind}")
    if cfg.h0:
        lines.append("h0 " + " ".join(repr(v) for v in cfg.h0))
    if cfg.ratios:
        lines.append("ratios " + " ".join(f"{m}/{n}" for m, n in cfg.ratios))
    if cfg.input:
        lines.append(f"input {cfg.input}")
    return "\n".join(lines) + "\n"


# ----------------------------------------------------------------------
# CSV / manifest io

def _fmt(x):
    return f"{x:.17g}"


def write_trajectory_csv(path, traj):
    with open(path, "w", newline="\n") as fh:
        fh.write(f"# params_digest={traj.params_digest}\n")
        fh.write("t," + ",".join(traj.columns) + "\n")
        for i in range(len(traj)):
            fh.write(_fmt(traj.times[i]) + "," + ",".join(_fmt(v) for v in traj.data[i]) + "\n")


def read_trajectory_csv(path):
    with open(path) as fh:
        first = fh.readline().strip()
        digest = ""
        if first.startswith("# params_digest="):
            digest = first.split("=", 1)[1]
            header = fh.readline().strip()
        else:
            header = first
        cols = tuple(header.split(","))
        if cols[0] != "t":
            raise ParseError(f"{path}: expected a 't' leading column, got {cols[0]!r}", line=1, column=1)
        body = np.loadtxt(fh, delimiter=",", ndmin=2)
    chart = _CHART_COLUMNS.get(cols[1:], "unknown")
    return Trajectory(
        chart=chart,
        times=body[:, 0],
        columns=cols[1:],
        data=body[:, 1:],
        params_digest=digest,
    )


def write_xy_csv(path, digest, xname, yname, x, y, max_points=0):
    if max_points and x.size > max_points:
        idx = np.linspace(0, x.size - 1, max_points).astype(int)
        x, y = x[idx], y[idx]
    with open(path, "w", newline="\n") as fh:
        fh.write(f"# params_digest={digest}\n")
        fh.write(f"{xname},{yname}\n")
        for xi, yi in zip(x, y):
            fh.write(_fmt(xi) + "," + _fmt(yi) + "\n")


def _write_manifest(path, cfg, digest, outputs, wall, extra=None):
    doc = {
        "tool": "cyclores",
        "version": __version__,
        "mode": cfg.mode,
        "params_digest": digest,
        "seed": cfg.seed,
        "wall_time_s": wall,
        "outputs": outputs,
        "tolerances": [cfg.rtol, cfg.atol],
    }
    if extra:
        doc.update(extra)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ----------------------------------------------------------------------
# mode runners

def _initial_state(cfg, params):
    from .dynamics import CartesianState, cartesian_to_polar, momentum_from_velocity

    if cfg.chart == "cartesian" or (cfg.chart == "polar" and cfg.r0 is None):
        p = momentum_from_velocity(params, cfg.q0, cfg.v0, cfg.t0)
        st = CartesianState(tuple(cfg.q0), tuple(p))
        if cfg.chart == "cartesian":
            return st
        pol = cartesian_to_polar(st)
        return (pol.r, pol.theta, pol.p_r)
    if cfg.chart == "polar":
        return (cfg.r0, cfg.theta0, cfg.pr0)
    return (cfg.I0, cfg.phi0)


def _run_simulate(cfg, out):
    params = cfg.params()
    state0 = _initial_state(cfg, params)
    traj = integrate(
        params, cfg.chart, state0, (cfg.t0, cfg.t0 + cfg.horizon),
        tol=(cfg.rtol, cfg.atol), sampling=cfg.samples,
    )
    outputs = []
    tpath = f"{out}_trajectory.csv"
    write_trajectory_csv(tpath, traj)
    outputs.append(tpath)
    if cfg.guiding and cfg.chart in ("cartesian", "polar"):
        from .guiding import guiding_series

        gpath = f"{out}_guiding.csv"
        write_trajectory_csv(gpath, guiding_series(params, traj))
        outputs.append(gpath)
    if cfg.plot:
        ppath = f"{out}_xy.csv"
        if cfg.chart == "cartesian":
            write_xy_csv(ppath, traj.params_digest, "q1", "q2",
                         traj.column("q1"), traj.column("q2"), cfg.plot)
        elif cfg.chart == "polar":
            write_xy_csv(ppath, traj.params_digest, "t", "r",
                         traj.times, traj.column("r"), cfg.plot)
        else:
            write_xy_csv(ppath, traj.params_digest, "t", "I",
                         traj.times, traj.column("I"), cfg.plot)
        outputs.append(ppath)
    return params.digest(), outputs, {}


def _run_averaged(cfg, out):
    params = cfg.params()
    traj = integrate(
        params, "averaged", (cfg.chi0, cfg.J0), (cfg.t0, cfg.t0 + cfg.horizon),
        tol=(cfg.rtol, cfg.atol), sampling=cfg.samples,
    )
    path = f"{out}_averaged.csv"
    write_trajectory_csv(path, traj)
    return params.digest(), [path], {}


def _run_decoupled(cfg, out):
    from . import decoupled

    params = cfg.params()
    span = (cfg.t0, cfg.t0 + cfg.horizon)
    if cfg.decoupled_kind == "growth":
        traj = decoupled.integrate_growth(params, cfg.F0, cfg.phase, span,
                                          tol=(cfg.rtol, cfg.atol), sampling=cfg.samples)
    else:
        traj = decoupled.integrate_phase(params, cfg.phase, (cfg.alpha, cfg.F0), span,
                                         tol=(cfg.rtol, cfg.atol), sampling=cfg.samples)
    path = f"{out}_decoupled.csv"
    write_trajectory_csv(path, traj)
    return params.digest(), [path], {}


def _run_periodmap(cfg, out):
    from . import decoupled

    rho, a = cfg.rho_const, cfg.a_const
    if cfg.map_kind == "full":
        mapper, predicted = decoupled.full_period_map, 2.0 * math.pi * rho / a
    else:
        mapper, predicted = decoupled.half_period_map, math.pi * rho / a
    rows = []
    for h0 in cfg.h0:
        h_end = mapper(rho, a, h0, tol=(cfg.rtol, cfg.atol))
        rows.append((h0, h_end, h_end - h0, predicted))
    path = f"{out}_periodmap.csv"
    digest = f"periodmap-{cfg.map_kind}"
    with open(path, "w", newline="\n") as fh:
        fh.write(f"# params_digest={digest}\n")
        fh.write("h0,h_end,increment,predicted_increment\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return digest, [path], {}


def _run_scan(cfg, out):
    from .analysis import resonance_scan

    template = ModelParams(
        b=cfg.b, omega=cfg.b, epsilon=cfg.epsilon, p_theta=cfg.p_theta,
        profile=cfg.profile(), pair=None,
    )
    result = resonance_scan(template, cfg.ratios, cfg.scan_seeds, cfg.horizon,
                            tol=(cfg.rtol, cfg.atol))
    path = f"{out}_scan.csv"
    digest = template.digest()
    with open(path, "w", newline="\n") as fh:
        fh.write(f"# params_digest={digest}\n")
        fh.write("ratio_num,ratio_den,seed,classification,C_fit,C_formula,phi_infty,discrepancy\n")
        for r in result.rows:
            fh.write(
                f"{r.ratio_num},{r.ratio_den},{r.seed},{r.classification},"
                f"{_fmt(r.C_fit)},{_fmt(r.C_formula)},{_fmt(r.phi_infty)},{_fmt(r.discrepancy)}\n"
            )
    return digest, [path], {}


def _run_analyze(cfg, out):
    from .analysis import acceleration_law_check

    params = cfg.params()
    traj = read_trajectory_csv(cfg.input)
    if traj.params_digest and traj.params_digest != params.digest():
        raise ValidationError(
            [f"trajectory digest {traj.params_digest} does not match config params {params.digest()}"]
        )
    report = acceleration_law_check(params, traj)
    path = f"{out}_analysis.json"
    with open(path, "w") as fh:
        json.dump(
            {
                "C_fit": report.C_fit,
                "C_formula": report.C_formula,
                "phi_infty": report.phi_infty,
                "xi": report.xi,
                "discrepancy": report.discrepancy,
                "sign_ok": bool(report.sign_ok),
                "residual_class": report.fit.residual_class,
                "params_digest": params.digest(),
            },
            fh, indent=2, sort_keys=True,
        )
        fh.write("\n")
    return params.digest(), [path], {"discrepancy": report.discrepancy}


def run(cfg, out_dir=None):
    """Execute one config; returns (exit_code, outputs). Artifacts land on disk."""
    import os

    out = cfg.out
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        out = os.path.join(out_dir, cfg.out)
    started = time.monotonic()
    runner = {
        "simulate": _run_simulate,
        "averaged": _run_averaged,
        "decoupled": _run_decoupled,
        "periodmap": _run_periodmap,
        "scan": _run_scan,
        "analyze": _run_analyze,
    }[cfg.mode]
    digest, outputs, extra = runner(cfg, out)
    manifest = f"{out}_manifest.json"
    _write_manifest(manifest, cfg, digest, outputs, time.monotonic() - started, extra)
    outputs.append(manifest)
    return 0, outputs


def _apply_overrides(cfg, args):
    if args.seed is not None:
        cfg.seed = args.seed
    if args.horizon is not None:
        cfg.horizon = args.horizon
    if args.tol is not None:
        parts = args.tol.split(",")
        if len(parts) != 2:
            raise ParseError("--tol expects 'rtol,atol'", line=0, column=0)
        cfg.rtol, cfg.atol = float(parts[0]), float(parts[1])
    violations = _validate(cfg)
    if violations:
        raise ValidationError(violations)
    return cfg


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="cyclores",
        description="Resonant cyclotron acceleration by a periodically driven flux line",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for mode in MODES:
        sp = sub.add_parser(mode, help=f"run a config in {mode} mode")
        sp.add_argument("config", help="path to a plain-text config file")
        sp.add_argument("--out", default=None, help="output directory")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--horizon", type=float, default=None)
        sp.add_argument("--tol", default=None, help="rtol,atol")
    args = parser.parse_args(argv)
    try:
        with open(args.config) as fh:
            text = fh.read()
        cfg = parse_config(text)
        cfg.mode = args.command
        cfg = _apply_overrides(cfg, args)
        code, outputs = run(cfg, out_dir=args.out)
        for path in outputs:
            print(path)
        return code
    except ValidationError as exc:
        record = {"error": "ValidationError", "violations": exc.violations}
        print(json.dumps(record), file=sys.stderr)
        return 2
    except CycloresError as exc:
        record = {"error": type(exc).__name__, "message": str(exc)}
        print(json.dumps(record), file=sys.stderr)
        return 2
    except OSError as exc:
        print(json.dumps({"error": "OSError", "message": str(exc)}), file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
