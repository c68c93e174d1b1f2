"""Simulator and certification toolkit for loophole-free EPR steering.

The package simulates the two-party steering experiment (honest and
adversarial sources), evaluates the three-setting quadratic steering
inequality with ternary outcomes, optimizes local-hidden-state cheating
bounds, reconstructs analyzer operators by maximum-likelihood tomography,
and audits space-time event logs for locality and freedom-of-choice
closure.
"""

__version__ = "0.1.0"

from ._kernels import BACKEND as KERNEL_BACKEND
from .model import (
    AnalyzerModel,
    LhsEnsemble,
    LhsMember,
    NoiseModel,
    Setting,
    honest_distribution,
    lhs_distribution,
    optimal_lhs_ensemble,
    predicted_S,
    sample_honest_trial,
)
from .protocol import (
    HonestStrategy,
    LhsStrategy,
    TrialRecord,
    coincidence_gate,
    qrng_choice,
    run_session,
    run_trial,
)
from .quantum import (
    bloch_to_density,
    born_probability,
    conditional_state,
    density_to_bloch,
    singlet,
    werner,
)
from .spacetime import (
    LoopholeReport,
    audit_session,
    check_freedom_of_choice,
    check_outcome_independence,
    check_setting_independence,
    interval,
    trusted_window,
)
from .steering import (
    CountTally,
    SteeringResult,
    conditional_mean,
    correlation_T,
    mc_error,
    runs_error,
    steering_value,
    tally_from_distributions,
)
from .timing import TimingConfig

__all__ = [
    "AnalyzerModel",
    "CountTally",
    "HonestStrategy",
    "KERNEL_BACKEND",
    "LhsEnsemble",
    "LhsMember",
    "LhsStrategy",
    "LoopholeReport",
    "NoiseModel",
    "Setting",
    "SteeringResult",
    "TimingConfig",
    "TrialRecord",
    "audit_session",
    "bloch_to_density",
    "born_probability",
    "check_freedom_of_choice",
    "check_outcome_independence",
    "check_setting_independence",
    "coincidence_gate",
    "conditional_mean",
    "conditional_state",
    "correlation_T",
    "density_to_bloch",
    "honest_distribution",
    "interval",
    "lhs_distribution",
    "mc_error",
    "optimal_lhs_ensemble",
    "predicted_S",
    "qrng_choice",
    "run_session",
    "run_trial",
    "runs_error",
    "sample_honest_trial",
    "singlet",
    "steering_value",
    "tally_from_distributions",
    "trusted_window",
    "werner",
]
