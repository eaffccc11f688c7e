"""Periodic flux drive represented as a finite trigonometric polynomial.

The drive strength is ``Phi(t) = 2*pi*epsilon*f(Omega*t)`` where

    f(t) = sum_{k=1..K} (a_k cos(k t) + b_k sin(k t)).

Keeping ``f`` a finite trig polynomial (mean zero by construction) gives
exact derivatives, exact Fourier coefficients and absolutely convergent
harmonic sums without any truncation bookkeeping.  A constant term in the
drive would merely shift the conserved angular momentum, so it is excluded
from the representation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ParameterError

__all__ = [
    "FluxProfile",
    "ResonancePair",
    "averaged_profile",
    "is_resonant",
    "effective_momentum",
    "effective_momentum_rate",
]


@dataclass(frozen=True)
class FluxProfile:
    """Coefficients (a_k, b_k), k = 1..K, of a real 2*pi-periodic drive."""

    cos_coeffs: tuple
    sin_coeffs: tuple

    def __post_init__(self):
        a = tuple(float(c) for c in self.cos_coeffs)
        b = tuple(float(c) for c in self.sin_coeffs)
        # pad to a common truncation order so eval loops never branch
        K = max(len(a), len(b))
        a = a + (0.0,) * (K - len(a))
        b = b + (0.0,) * (K - len(b))
        object.__setattr__(self, "cos_coeffs", a)
        object.__setattr__(self, "sin_coeffs", b)

    @classmethod
    def from_harmonics(cls, cos=None, sin=None):
        """Build from sparse ``{k: coeff}`` maps (k >= 1)."""
        cos = dict(cos or {})
        sin = dict(sin or {})
        for k in list(cos) + list(sin):
            if int(k) < 1:
                raise ParameterError(
                    f"harmonic index {k} invalid: a constant drive term only "
                    "shifts p_theta and is not representable here"
                )
        K = max([0, *cos.keys(), *sin.keys()])
        return cls(
            tuple(cos.get(k, 0.0) for k in range(1, K + 1)),
            tuple(sin.get(k, 0.0) for k in range(1, K + 1)),
        )

    @property
    def order(self):
        """Truncation order K (0 for the zero drive)."""
        return len(self.cos_coeffs)

    @property
    def coeff_bound(self):
        """sum_k (|a_k| + |b_k|), an upper bound for max |f|."""
        return sum(abs(c) for c in self.cos_coeffs) + sum(abs(c) for c in self.sin_coeffs)

    def is_zero(self, tol=0.0):
        return all(abs(c) <= tol for c in self.cos_coeffs + self.sin_coeffs)

    def value(self, t):
        """f(t); accepts scalars or numpy arrays."""
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for k in range(1, self.order + 1):
            out = out + self.cos_coeffs[k - 1] * np.cos(k * t) + self.sin_coeffs[k - 1] * np.sin(k * t)
        return out if out.ndim else float(out)

    def derivative(self, t, order=1):
        """Exact derivative f', f'' of the trig polynomial."""
        if order not in (1, 2):
            raise ValueError(f"derivative order must be 1 or 2, got {order}")
        return self.derivative_profile(order).value(t)

    def derivative_profile(self, order=1):
        """The derivative as a new coefficient set (f' has cos <- k*b, sin <- -k*a)."""
        a, b = self.cos_coeffs, self.sin_coeffs
        for _ in range(order):
            a, b = (
                tuple(k * bk for k, bk in enumerate(b, start=1)),
                tuple(-k * ak for k, ak in enumerate(a, start=1)),
            )
        return FluxProfile(a, b)

    def fourier_coefficient(self, k):
        """Complex Fourier coefficient of exp(i*k*t); conjugate-symmetric in k."""
        k = int(k)
        if k == 0 or abs(k) > self.order:
            return 0j
        a = self.cos_coeffs[abs(k) - 1]
        b = self.sin_coeffs[abs(k) - 1]
        # cos kt = (e^{ikt}+e^{-ikt})/2, sin kt = (e^{ikt}-e^{-ikt})/(2i)
        return 0.5 * (a - 1j * math.copysign(1.0, k) * b)

    def support(self):
        """Positive harmonic indices with a nonzero coefficient."""
        return tuple(
            k
            for k in range(1, self.order + 1)
            if self.cos_coeffs[k - 1] != 0.0 or self.sin_coeffs[k - 1] != 0.0
        )


@dataclass(frozen=True)
class ResonancePair:
    """Coprime integers (mu, nu) with drive/cyclotron frequency ratio mu/nu."""

    mu: int
    nu: int

    def __post_init__(self):
        mu, nu = int(self.mu), int(self.nu)
        if mu < 1 or nu < 1:
            raise ParameterError(f"resonance pair must be positive integers, got ({mu}, {nu})")
        g = math.gcd(mu, nu)
        object.__setattr__(self, "mu", mu // g)
        object.__setattr__(self, "nu", nu // g)

    @classmethod
    def from_ratio(cls, ratio):
        if isinstance(ratio, (tuple, list)):
            return cls(int(ratio[0]), int(ratio[1]))
        frac = Fraction(ratio).limit_denominator(10**12)
        return cls(frac.numerator, frac.denominator)

    @property
    def ratio(self):
        return Fraction(self.mu, self.nu)

    @property
    def lam(self):
        """The frequency ratio mu/nu as a float."""
        return self.mu / self.nu


def averaged_profile(profile, nu):
    """Subharmonic filtration: keep only harmonics divisible by nu.

    Equivalent to averaging f over the nu shifted copies
    f(t + 2*pi*j/nu), j = 0..nu-1, which kills every harmonic whose index
    is not a multiple of nu and leaves the rest untouched.
    """
    nu = int(nu)
    if nu < 1:
        raise ParameterError(f"nu must be >= 1, got {nu}")
    if nu == 1:
        return profile
    keep = lambda k, c: c if k % nu == 0 else 0.0
    return FluxProfile(
        tuple(keep(k, c) for k, c in enumerate(profile.cos_coeffs, start=1)),
        tuple(keep(k, c) for k, c in enumerate(profile.sin_coeffs, start=1)),
    )


def is_resonant(profile, pair):
    """True iff the drive support contains a nonzero multiple of pair.nu.

    Equivalently: the nu-averaged profile is not identically zero, which is
    the condition for the first-order averaged dynamics to be nontrivial.
    """
    return any(k % pair.nu == 0 for k in profile.support())


def effective_momentum(params, t):
    """a(t) = p_theta - epsilon*f(Omega*t), the screened angular momentum.

    Strict positivity is guaranteed by the ModelParams invariant
    epsilon*max|f| < p_theta.
    """
    return params.p_theta - params.epsilon * params.profile.value(params.omega * np.asarray(t))


def effective_momentum_rate(params, t, order=1):
    """Time derivative a'(t) = -epsilon*Omega*f'(Omega t) (or a'' for order 2)."""
    om = params.omega
    return -params.epsilon * om**order * params.profile.derivative(om * np.asarray(t), order)
