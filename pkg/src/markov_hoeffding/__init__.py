"""Hoeffding-type large-deviation bounds for Markov chains with an L2(pi) spectral gap."""

from .bounds import (
    BoundReport,
    ChainParams,
    HalfWidth,
    InitialBias,
    biased_bound,
    bound_report,
    chernoff_log_bound,
    delta,
    half_width,
    log_theta,
    loose_log_bound,
    lower_tail_bound,
    sample_size,
    sharp_log_bound,
    tail_log_bound,
    theta,
    two_sided_bound,
    two_state_matrix,
)
from .errors import (
    AssumptionViolation,
    AssumptionWarning,
    DomainError,
    GridMismatchError,
    HoeffdingError,
    NotIrreducibleError,
    NotReversibleError,
    NumericalFailure,
    ValidationError,
)
from .spectral import (
    FiniteKernel,
    LevelProfile,
    TiltedOperator,
    doeblin_kernel,
    eigenfunction_g,
    level_profile,
    op_norm,
    reversible_rho,
    solve_r,
    spectral_norm_gap,
    stationary,
    tilted_operator,
)

__version__ = "0.1.0"
