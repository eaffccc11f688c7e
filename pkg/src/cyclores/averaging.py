"""First-order resonant averaging of the driven action-angle dynamics.

On the extended phase space (phi1, phi2, I1, I2) with frequencies
omega1 = b, omega2 = Omega and rational ratio omega2/omega1 = mu/nu, the
Poincare-von Zeipel scheme eliminates the nonresonant angle combination at
first order in epsilon.  The surviving resonant angle is
chi1 = mu*psi1 - nu*psi2, and the reduced dynamics is generated by

    Z(chi1, J1) = Re[ h(rho(J1) * exp(i*chi1)) ],

where rho(x) = (x/(x + p_theta))^(mu/2) in [0, 1) and h is the finite
polynomial

    h(z) = -epsilon*mu*omega1 * sum_{n>=1} F[f]_{-n*nu} * i^(n*mu) * z^n,

built from the drive's Fourier coefficients (finite because the drive is a
finite trig polynomial).  The flow follows level lines of the harmonic
function Re[h] on the unit disk; for almost every initial condition the
level line ends transversally on the boundary, the resonant angle settles,
the action grows linearly, and

    dJ1/dt -> Im[ exp(i*chi_inf) * h'(exp(i*chi_inf)) ] > 0.

The first-order generating term S1 of the eliminating transform gives the
near-identity change of variables psi = phi + eps*dS1/dJ,
I = J + eps*dS1/dphi used to pull averaged trajectories back to the
original chart.  Its inner harmonic sums are geometric in
beta = sqrt(J1/(J1+p_theta)) and are truncated with an explicit tail bound;
for k*mu/nu integer the non-invertible harmonic is omitted exactly (the
conventional gauge choice).
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass

import numba
import numpy as np

from . import stepping
from .errors import DomainError, NoConvergence, ParameterError
from .flux import is_resonant

__all__ = [
    "AveragedState",
    "HoloPoly",
    "coupling_polynomial",
    "coupling_hamiltonian",
    "averaged_hamiltonian",
    "reduced_eom",
    "disk_level_value",
    "generator_gradients",
    "vonzeipel_forward",
    "vonzeipel_inverse",
    "push_to_averaged",
    "pullback_from_averaged",
    "averaged_vs_true_comparison",
    "exceptional_level",
    "limit_growth_rate",
]


@dataclass(frozen=True)
class AveragedState:
    """Reduced chart: resonant angle chi1 (unwrapped) and action J1 > 0."""

    chi1: float
    J1: float

    def __post_init__(self):
        if not self.J1 > 0:
            raise DomainError(f"reduced chart needs J1 > 0, got {self.J1}")


@dataclass(frozen=True)
class HoloPoly:
    """h(z) = sum_{n=1..N} c_n z^n, holomorphic on the closed unit disk."""

    coeffs: tuple  # c_1..c_N

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(complex(c) for c in self.coeffs))

    @property
    def degree(self):
        return len(self.coeffs)

    def is_zero(self):
        return all(c == 0 for c in self.coeffs)

    def value(self, z):
        out = 0j
        for c in reversed(self.coeffs):
            out = (out + c) * z
        return out

    def deriv(self, z):
        out = 0j
        for n in range(self.degree, 0, -1):
            out = out * z + n * self.coeffs[n - 1]
        return out

    def z_deriv(self, z):
        """z * h'(z), the combination entering both reduced equations."""
        return z * self.deriv(z)


def beta_of(J1, p_theta):
    """beta(J1) = sqrt(J1/(J1+p_theta)), the disk radius variable."""
    return np.sqrt(np.asarray(J1) / (np.asarray(J1) + p_theta))


def _rho(J1, p_theta, mu):
    return (J1 / (J1 + p_theta)) ** (mu / 2.0)


def coupling_polynomial(params, pair=None):
    """The disk polynomial h built from the drive's resonant harmonics.

    Nonresonant (mu, nu) give the zero polynomial: no harmonic of the drive
    survives the averaging and the reduced flow is frozen.
    """
    pair = pair or params.pair
    if pair is None:
        raise ParameterError("coupling polynomial needs a resonance pair (exact rational omega/b)")
    prof = params.profile
    N = prof.order // pair.nu
    coeffs = []
    for n in range(1, N + 1):
        fk = prof.fourier_coefficient(-n * pair.nu)
        coeffs.append(-params.epsilon * pair.mu * params.b * fk * (1j) ** ((n * pair.mu) % 4))
    return HoloPoly(tuple(coeffs))


def disk_level_value(params, pair, state, holo=None):
    """Z(chi1, J1) = Re[h(rho(J1) e^{i chi1})], conserved by the reduced flow."""
    holo = holo or coupling_polynomial(params, pair)
    z = _rho(state.J1, params.p_theta, pair.mu) * cmath.exp(1j * state.chi1)
    return holo.value(z).real


def coupling_hamiltonian(params, pair, psi1, psi2, J1):
    """First-order averaged coupling (per unit epsilon) at angles (psi1, psi2).

    Real by conjugate symmetry of the drive coefficients; depends on the
    angles only through the resonant combination mu*psi1 - nu*psi2.
    """
    pair = pair or params.pair
    prof = params.profile
    chi = pair.mu * np.asarray(psi1) - pair.nu * np.asarray(psi2)
    beta = beta_of(J1, params.p_theta)
    acc = np.zeros_like(np.asarray(chi, dtype=float), dtype=complex)
    N = prof.order // pair.nu
    for n in range(1, N + 1):
        fk = prof.fourier_coefficient(-n * pair.nu)
        if fk == 0:
            continue
        acc = acc + fk * (1j) ** ((n * pair.mu) % 4) * beta ** (n * pair.mu) * np.exp(1j * n * chi)
    out = -params.b * acc.real
    return float(out) if np.ndim(out) == 0 else out


def averaged_hamiltonian(params, pair, psi, J):
    """Truncated averaged Hamiltonian: linear part + epsilon * coupling.

    nu*J1 + mu*J2 commutes with it, so the 4D flow reduces to (chi1, J1).
    """
    psi1, psi2 = psi
    J1, J2 = J
    lin = params.b / pair.nu * (pair.nu * J1 + pair.mu * J2)
    return lin + params.epsilon * coupling_hamiltonian(params, pair, psi1, psi2, J1)


def reduced_eom(params, pair, state, holo=None):
    """(dchi1/dt, dJ1/dt) of the level-line flow on the disk."""
    if not state.J1 > 0:
        raise DomainError("reduced flow needs J1 > 0")
    holo = holo or coupling_polynomial(params, pair)
    p = params.p_theta
    J = state.J1
    z = _rho(J, p, pair.mu) * cmath.exp(1j * state.chi1)
    w = holo.z_deriv(z)
    dchi = pair.mu * p / (2.0 * J * (J + p)) * w.real
    return dchi, w.imag


def limit_growth_rate(holo, chi_inf):
    """Boundary growth rate Im[e^{i chi} h'(e^{i chi})] for the settled angle."""
    z = cmath.exp(1j * chi_inf)
    return (z * holo.deriv(z)).imag


# ----------------------------------------------------------------------
# jitted kernels; packed layout [p_theta, mu, nu, omega1, N, Re c.., Im c..]

def _pack_averaged(params, pair, holo):
    N = holo.degree
    re = [c.real for c in holo.coeffs]
    im = [c.imag for c in holo.coeffs]
    return np.array([params.p_theta, float(pair.mu), float(pair.nu), params.b, float(N)] + re + im)


@numba.njit(cache=True, inline="always")
def _zhprime_packed(pa, z):
    N = int(pa[4])
    w = 0j
    zp = z
    for n in range(1, N + 1):
        w += n * complex(pa[4 + n], pa[4 + N + n]) * zp
        zp *= z
    return w


@numba.njit(cache=True)
def _rhs_reduced(t, y, pa, out):
    chi, J = y[0], y[1]
    p = pa[0]
    mu = pa[1]
    if J <= 0.0:
        out[0] = np.nan
        out[1] = np.nan
        return
    rho = (J / (J + p)) ** (0.5 * mu)
    z = rho * np.exp(1j * chi)
    w = _zhprime_packed(pa, z)
    out[0] = mu * p / (2.0 * J * (J + p)) * w.real
    out[1] = w.imag


@numba.njit(cache=True)
def _rhs_averaged4(t, y, pa, out):
    psi1, psi2, J1 = y[0], y[1], y[2]
    p = pa[0]
    mu = pa[1]
    nu = pa[2]
    om1 = pa[3]
    if J1 <= 0.0:
        for i in range(4):
            out[i] = np.nan
        return
    chi = mu * psi1 - nu * psi2
    rho = (J1 / (J1 + p)) ** (0.5 * mu)
    z = rho * np.exp(1j * chi)
    w = _zhprime_packed(pa, z)
    out[0] = om1 + p / (2.0 * J1 * (J1 + p)) * w.real
    out[1] = om1 * mu / nu
    out[2] = w.imag
    out[3] = -(nu / mu) * w.imag


def chart_runtime(params, chart, state0):
    """Hookup for dynamics.integrate(chart='averaged'/'averaged4')."""
    pair = params.pair
    if pair is None:
        raise ParameterError(f"chart {chart!r} needs params.pair (exact rational omega/b)")
    holo = coupling_polynomial(params, pair)
    pa = _pack_averaged(params, pair, holo)
    if chart == "averaged":
        st = state0 if isinstance(state0, AveragedState) else AveragedState(*state0)
        y0 = np.array([st.chi1, st.J1])
        driver = stepping.compiled_driver(_rhs_reduced)

        def table(times, Y):
            chi1, J1 = Y[:, 0], Y[:, 1]
            beta = beta_of(J1, params.p_theta)
            z = beta**pair.mu * np.exp(1j * chi1)
            Z = np.real(np.polyval([*(reversed(holo.coeffs))] + [0.0], z)) if holo.degree else np.zeros_like(chi1)
            return ("chi1", "J1", "Z", "beta"), np.column_stack((chi1, J1, Z, beta))

        return driver, pa, y0, table, -1.0

    # averaged4: (psi1, psi2, J1, J2)
    y0 = np.asarray(state0, dtype=float)
    if y0.shape != (4,):
        raise ValueError("averaged4 initial state is (psi1, psi2, J1, J2)")
    driver = stepping.compiled_driver(_rhs_averaged4)

    def table(times, Y):
        return ("psi1", "psi2", "J1", "J2"), Y

    return driver, pa, y0, table, -1.0


# ----------------------------------------------------------------------
# first-order generating term of the eliminating transform

@numba.njit(cache=True)
def _gk_sums(w, klam, N, m_excl):
    """P = sum_{m=1..N} w^m/(m+k*lam), M = sum_{m != m_excl} conj(w)^m/(m-k*lam)."""
    P = 0j
    M = 0j
    wm = 1.0 + 0j
    cw = np.conj(w)
    cm = 1.0 + 0j
    for m in range(1, N + 1):
        wm *= w
        cm *= cw
        P += wm / (m + klam)
        if m != m_excl:
            M += cm / (m - klam)
    return P, M


def _inner_truncation(beta, lam, klam, tol):
    """Smallest N with a certified geometric tail bound below tol."""
    if beta <= 0.0:
        return 8
    N = max(8, 2 * int(math.ceil(klam)) + 4)
    cap = 1 << 22
    while N < cap:
        # tail <= lam * beta^(N+1) / ((N+1) * (1 - beta)); |m +- k*lam| >= m/2 for m > N
        bound = lam * beta ** (N + 1) / ((N + 1) * (1.0 - beta))
        if bound < tol:
            return N
        N *= 2
    warnings.warn(
        f"generator tail bound not reached (beta={beta:.15g}); truncated at N={cap}",
        RuntimeWarning,
    )
    return cap


def generator_gradients(params, pair, phi1, phi2, J1, tol=1e-14):
    """Partial derivatives (dS1/dJ1, dS1/dphi1) of the first-order generator.

    S1 = 2 Re sum_{k>=1} F[f']_k G_k(phi1, J1) e^{i k phi2}, with G_k the
    standard homological solution; harmonics with m = k*mu/nu integer are
    excluded exactly (gauge choice for the non-unique resonant component).
    """
    pair = pair or params.pair
    if not J1 > 0:
        raise DomainError("generator needs J1 > 0")
    prof = params.profile
    p = params.p_theta
    lam = pair.mu / pair.nu
    beta = math.sqrt(J1 / (J1 + p))
    beta_prime = p / (2.0 * beta * (J1 + p) ** 2)
    w = 1j * beta * cmath.exp(1j * phi1)

    dS_dJ = 0.0
    dS_dphi = 0.0
    for k in range(1, prof.order + 1):
        fk = prof.fourier_coefficient(k)
        if fk == 0:
            continue
        fpk = 1j * k * fk  # Fourier coefficient of f'
        klam = k * lam
        m_excl = k * pair.mu // pair.nu if (k * pair.mu) % pair.nu == 0 else -1
        N = _inner_truncation(beta, lam, klam, tol)
        P, M = _gk_sums(w, klam, N, m_excl)
        phase2 = cmath.exp(1j * k * phi2)
        dG_dJ = lam * (beta_prime / beta) * 0.5 * (P - M)
        dG_dphi = lam * 0.5j * (P - M)
        dS_dJ += 2.0 * (fpk * dG_dJ * phase2).real
        dS_dphi += 2.0 * (fpk * dG_dphi * phase2).real
    return dS_dJ, dS_dphi


def vonzeipel_forward(params, pair, phi1, phi2, J1):
    """Explicit half of the transform: (phi, J) -> (psi1, I1)."""
    dS_dJ, dS_dphi = generator_gradients(params, pair, phi1, phi2, J1)
    return phi1 + params.epsilon * dS_dJ, J1 + params.epsilon * dS_dphi


def vonzeipel_inverse(params, pair, psi1, phi2, I1, tol=1e-12, max_iter=50):
    """Implicit half: recover (phi1, J1) from (psi1, I1) by fixed point."""
    phi1, J1 = psi1, I1
    for _ in range(max_iter):
        dS_dJ, dS_dphi = generator_gradients(params, pair, phi1, phi2, J1)
        phi_new = psi1 - params.epsilon * dS_dJ
        J_new = I1 - params.epsilon * dS_dphi
        res = abs(phi_new - phi1) + abs(J_new - J1)
        phi1, J1 = phi_new, J_new
        if J1 <= 0:
            raise NoConvergence("transform inversion left J1 > 0", residual=res)
        if res <= tol:
            return phi1, J1
    raise NoConvergence(
        f"transform inversion did not reach {tol:g} in {max_iter} iterations", residual=res
    )


def push_to_averaged(params, pair, phi1, phi2, I1, tol=1e-12, max_iter=50):
    """Initialise averaged coordinates (psi1, J1) from original (phi1, I1)."""
    J1 = I1
    for _ in range(max_iter):
        _, dS_dphi = generator_gradients(params, pair, phi1, phi2, J1)
        J_new = I1 - params.epsilon * dS_dphi
        res = abs(J_new - J1)
        J1 = J_new
        if J1 <= 0:
            raise NoConvergence("action solve left J1 > 0", residual=res)
        if res <= tol:
            break
    else:
        raise NoConvergence(f"action solve did not reach {tol:g}", residual=res)
    dS_dJ, _ = generator_gradients(params, pair, phi1, phi2, J1)
    return phi1 + params.epsilon * dS_dJ, J1


def pullback_from_averaged(params, pair, psi1, phi2, J1, tol=1e-12, max_iter=50):
    """Recover original (phi1, I1) from averaged (psi1, J1)."""
    phi1 = psi1
    for _ in range(max_iter):
        dS_dJ, _ = generator_gradients(params, pair, phi1, phi2, J1)
        phi_new = psi1 - params.epsilon * dS_dJ
        res = abs(phi_new - phi1)
        phi1 = phi_new
        if res <= tol:
            break
    else:
        raise NoConvergence(f"angle solve did not reach {tol:g}", residual=res)
    _, dS_dphi = generator_gradients(params, pair, phi1, phi2, J1)
    return phi1, J1 + params.epsilon * dS_dphi


# ----------------------------------------------------------------------

@dataclass(frozen=True)
class ComparisonReport:
    """Sup-norm deviation of the action between true and averaged flows."""

    times: np.ndarray
    I_true: np.ndarray
    I_averaged: np.ndarray
    sup_deviation: float
    horizon: float


def averaged_vs_true_comparison(params, pair, initial, horizon, n_samples=256, tol=(1e-11, 1e-13)):
    """Compare action histories of the true flow and the pulled-back averaged flow.

    The comparison window is capped at 1/epsilon, the guaranteed first-order
    validity horizon.
    """
    from . import dynamics

    T = horizon if params.epsilon == 0 else min(horizon, 1.0 / params.epsilon)
    true = dynamics.integrate(params, "actionangle", initial, (0.0, T), tol=tol, sampling=n_samples)
    if params.epsilon == 0:
        I_true = true.column("I")
        return ComparisonReport(true.times, I_true, I_true.copy(), 0.0, T)
    psi1_0, J1_0 = push_to_averaged(params, pair, initial.phi, 0.0, initial.I)
    avg = dynamics.integrate(
        params, "averaged4", (psi1_0, 0.0, J1_0, 0.0), (0.0, T), tol=tol, sampling=n_samples
    )
    I_back = np.empty(avg.times.size)
    psi1 = avg.column("psi1")
    J1 = avg.column("J1")
    for i, t in enumerate(avg.times):
        _, I_back[i] = pullback_from_averaged(params, pair, psi1[i], params.omega * t, J1[i])
    I_true = true.column("I")
    dev = float(np.max(np.abs(I_true - I_back)))
    return ComparisonReport(true.times, I_true, I_back, dev, T)


# ----------------------------------------------------------------------

def exceptional_level(holo, level, tol=1e-8, n_grid=8192):
    """True when a reduced-flow level is (numerically) critical.

    Almost-sure statements about the disk flow exclude levels through an
    interior zero of h', levels meeting the boundary tangentially, and the
    level through the disk centre; runs on such levels are skipped rather
    than failed.
    """
    if holo.is_zero():
        return True
    if abs(level - 0.0) < tol:  # h(0) = 0
        return True
    dcoef = [n * c for n, c in enumerate(holo.coeffs, start=1)]
    if len(dcoef) > 1:
        roots = np.roots(list(reversed(dcoef)))
        for z in roots:
            if abs(z) <= 1.0 + 1e-9 and abs(holo.value(z).real - level) < max(tol, 1e-12):
                return True
    chi = np.linspace(0.0, 2.0 * math.pi, n_grid, endpoint=False)
    zb = np.exp(1j * chi)
    bound = np.array([holo.value(z).real for z in zb]) - level
    sign_flips = np.nonzero(np.diff(np.sign(bound)) != 0)[0]
    for i in sign_flips:
        lo, hi = chi[i], chi[i] + (chi[1] - chi[0])
        flo = bound[i]
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            fm = holo.value(cmath.exp(1j * mid)).real - level
            if (fm > 0) == (flo > 0):
                lo, flo = mid, fm
            else:
                hi = mid
        chi_star = 0.5 * (lo + hi)
        if abs(limit_growth_rate(holo, chi_star)) < tol:
            return True
    return False
