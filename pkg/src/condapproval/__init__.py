"""Evidence synthesis and post-market trial design for conditional drug approval."""

from .design import DesignParams, SizingResult, adaptive_level, size_post_market, variance_ratio
from .errors import (
    DegenerateTruncation,
    DirectionViolation,
    DomainError,
    NecessaryConditionViolated,
    NoTrialRequired,
    QuadratureError,
)
from .evidence import (
    NO_TRIAL_REQUIRED,
    UNWEIGHTED,
    WEIGHTED_3_2,
    CombinationOutcome,
    Method,
    TrialSummary,
    WeightPair,
    combine,
)
from .interim import EffectBelief, InterimState, interim_power
from .simulate import Scenario, SimulationConfig, SimulationReport, run_study
from .superiority import compare_powers, superiority_probabilities

__version__ = "0.1.0"

__all__ = [
    "NO_TRIAL_REQUIRED",
    "UNWEIGHTED",
    "WEIGHTED_3_2",
    "CombinationOutcome",
    "DegenerateTruncation",
    "DesignParams",
    "DirectionViolation",
    "DomainError",
    "EffectBelief",
    "InterimState",
    "Method",
    "NecessaryConditionViolated",
    "NoTrialRequired",
    "QuadratureError",
    "Scenario",
    "SimulationConfig",
    "SimulationReport",
    "SizingResult",
    "TrialSummary",
    "WeightPair",
    "adaptive_level",
    "combine",
    "compare_powers",
    "interim_power",
    "run_study",
    "size_post_market",
    "superiority_probabilities",
    "variance_ratio",
]
