"""Resonant cyclotron acceleration by a time-periodic singular flux tube.

A charged particle on the punctured plane in a uniform magnetic field,
driven by an oscillating flux line through the origin, is accelerated
without bound when the drive and cyclotron frequencies are resonant.  This
package simulates the exact dynamics in several coordinate charts, the
first-order resonant-averaged dynamics on the unit disk, and the decoupled
asymptotic equations, and cross-checks the closed-form growth laws
(linear action growth, sqrt-growth of the guiding radii, logarithmic
guiding-angle drift) against long-horizon numerics.
"""

__version__ = "0.1.0"

from .errors import (
    CycloresError,
    DegenerateDenominator,
    DomainError,
    ExistenceBound,
    InsufficientSamples,
    NoConvergence,
    NonConvergent,
    NotAccelerating,
    ParameterError,
    ParseError,
    SignError,
    StepFloorReached,
    ValidationError,
)
from .flux import (
    FluxProfile,
    ResonancePair,
    averaged_profile,
    effective_momentum,
    effective_momentum_rate,
    is_resonant,
)
from .dynamics import (
    CartesianState,
    ModelParams,
    PolarState,
    Trajectory,
    cartesian_to_polar,
    eom_cartesian,
    eom_radial,
    energy_rate_residual,
    hamiltonian_cartesian,
    integrate,
    polar_to_cartesian,
    theta_rate,
)
from .actionangle import (
    ActionAngleState,
    eom_action_angle,
    from_action_angle,
    hamiltonian_action_angle,
    to_action_angle,
)
from .averaging import (
    AveragedState,
    HoloPoly,
    averaged_hamiltonian,
    averaged_vs_true_comparison,
    coupling_hamiltonian,
    coupling_polynomial,
    generator_gradients,
    reduced_eom,
    vonzeipel_forward,
    vonzeipel_inverse,
)
from .decoupled import (
    DecoupledState,
    full_period_map,
    growth_rhs_frozen_phase,
    half_period_map,
    integrate_growth,
    integrate_phase,
    phase_rhs_prescribed_growth,
    predicted_slope,
)
from .guiding import (
    GuidingFrame,
    energy_and_rate,
    guiding_frame,
    guiding_series,
    guiding_angle_rate,
    log_drift_constant,
    radii_growth_check,
)
from .analysis import (
    AsymptoticFit,
    acceleration_law_check,
    extract_phase,
    fit_linear_growth,
    resonance_scan,
)
