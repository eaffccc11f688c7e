"""Exception hierarchy shared by all cyclores modules."""


class CycloresError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(CycloresError):
    """Physical parameters violate a model invariant (e.g. a(t) would vanish)."""


class DomainError(CycloresError):
    """A state left the domain of its coordinate chart (r <= 0, |X| = 0, ...)."""


class InsufficientSamples(CycloresError):
    """A trajectory diagnostic needs more sample points than were supplied."""


class StepFloorReached(CycloresError):
    """The adaptive integrator hit its minimum step size repeatedly.

    Carries ``t`` and ``state`` at the failure point.
    """

    def __init__(self, message, t=None, state=None):
        super().__init__(message)
        self.t = t
        self.state = state


class NoConvergence(CycloresError):
    """An implicit solve (canonical-transform inversion) did not converge."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ExistenceBound(CycloresError):
    """Initial value below the sufficient condition for the period-map ODE."""


class SignError(CycloresError):
    """The drive slope at the limiting phase has the wrong sign: no acceleration."""


class DegenerateDenominator(CycloresError):
    """The closed-form drift constant is evaluated at a zero denominator."""


class NotAccelerating(CycloresError):
    """A fit expected linear energy growth but the tail slope is not positive.

    Carries the fitted slope so a zero-growth result is still inspectable.
    """

    def __init__(self, message, slope=None):
        super().__init__(message)
        self.slope = slope


class NonConvergent(CycloresError):
    """Phase extraction found a non-settling tail (nonresonant or pre-asymptotic)."""


class ParseError(CycloresError):
    """Config text is syntactically malformed. Carries line/column."""

    def __init__(self, message, line=None, column=None):
        super().__init__(message)
        self.line = line
        self.column = column


class ValidationError(CycloresError):
    """A parsed config violates model invariants. Lists every violation found."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))
