"""Coaxial circular vortex filament pairs under localized induction.

Classifies, times, and verifies the motion of two coaxial circular vortex
filaments with opposite-signed circulations: head-on and asymmetric
collisions below a critical circulation ratio, pass-through above it, plus
exact/implicit collision-time formulas, comparison-principle upper bounds,
an a-priori supercritical corridor, a no-collision certificate for
conserved-quantity levels away from the collision manifold, and an
event-detecting adaptive integrator that serves as the independent oracle
for all of it.
"""

from .analysis import (
    CollisionTimeEstimate,
    Equilibria,
    EstimateKind,
    FormulaTag,
    GAMMA_STAR_ATOL,
    LinearCorridor,
    MotionClass,
    NoCollisionCertificate,
    Verdict,
    apriori_corridor,
    classify,
    collision_time,
    equilibria,
    gamma_star,
    no_collision_certificate,
    theta_star,
)
from .dynamics import (
    Derivative,
    FullState,
    HyperbolicState,
    Params,
    ReducedState,
    ansatz_residual,
    conserved_d,
    hamiltonian,
    hamiltonian_hyperbolic,
    hyperbolic_radii,
    hyperbolic_separation,
    reduce_state,
    rhs_full,
    rhs_hyperbolic,
    rhs_reduced,
    rhs_reduced_alt,
    w_from_theta,
)
from .errors import (
    ConfigInvalid,
    Divergent,
    DomainError,
    EmptyTrajectory,
    FilcolError,
    InvalidInitialState,
    InversionFailure,
    NumericalError,
    NumericalFailure,
    OffLevelSet,
    OnSingularLine,
    RegimeError,
    SeparationZero,
    StepLimitExceeded,
    ValidationError,
)
from .integrate import (
    CollisionResult,
    Direction,
    EventHit,
    EventKind,
    EventSpec,
    IntegrationConfig,
    Outcome,
    SimStatus,
    SystemKind,
    Trajectory,
    drift_report,
    integrate,
    simulate_until_collision,
)
from .verify import run_battery

__version__ = "0.1.0"

__all__ = [
    "Params",
    "FullState",
    "ReducedState",
    "HyperbolicState",
    "Derivative",
    "rhs_full",
    "conserved_d",
    "reduce_state",
    "hyperbolic_radii",
    "hyperbolic_separation",
    "rhs_reduced",
    "rhs_hyperbolic",
    "rhs_reduced_alt",
    "w_from_theta",
    "hamiltonian",
    "hamiltonian_hyperbolic",
    "ansatz_residual",
    "Verdict",
    "MotionClass",
    "Equilibria",
    "EstimateKind",
    "FormulaTag",
    "CollisionTimeEstimate",
    "LinearCorridor",
    "NoCollisionCertificate",
    "GAMMA_STAR_ATOL",
    "gamma_star",
    "equilibria",
    "theta_star",
    "classify",
    "collision_time",
    "apriori_corridor",
    "no_collision_certificate",
    "SystemKind",
    "EventKind",
    "Direction",
    "EventSpec",
    "EventHit",
    "IntegrationConfig",
    "Outcome",
    "Trajectory",
    "integrate",
    "SimStatus",
    "CollisionResult",
    "simulate_until_collision",
    "drift_report",
    "run_battery",
    "FilcolError",
    "ValidationError",
    "NumericalError",
    "DomainError",
    "SeparationZero",
    "OnSingularLine",
    "Divergent",
    "OffLevelSet",
    "InversionFailure",
    "RegimeError",
    "StepLimitExceeded",
    "InvalidInitialState",
    "EmptyTrajectory",
    "ConfigInvalid",
    "NumericalFailure",
]
