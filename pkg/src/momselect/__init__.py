"""Outlier-robust estimator selection and hyperparameter tuning.

Candidates (learner, training subsample) are compared pairwise by
medians of block empirical-risk differences, and the winner of the
resulting minmax tournament is returned.  Training subsamples come from
a dyadic block system that caps their size at a quarter of the data and
guarantees, for every candidate pair, enough comparison blocks that are
disjoint from both training sets.
"""

from .bounds import (
    BoundsError,
    BoundsInput,
    BoundsWarning,
    OracleInequalityConstants,
    ensemble_guarantee_rhs,
    effective_block_size,
    erm_rate,
    lasso_rate,
    oracle_inequality_constants,
)
from .dataset import (
    CsvFormatError,
    Dataset,
    DatasetError,
    InvalidSpecError,
    SyntheticSpec,
    generate_synthetic,
    load_csv,
    save_csv,
)
from .ensemble import (
    ConfigError,
    ConfigWarning,
    EnsembleConfig,
    EnsembleResult,
    build_grid,
    run_ensemble,
)
from .experiment import (
    ExperimentConfig,
    ExperimentError,
    ExperimentRecord,
    best_basic,
    oracle_candidate,
    run_single,
    run_sweep,
    true_excess_risk,
)
from .learners import (
    ConvergenceError,
    Erm,
    Estimator,
    InvalidSubspaceError,
    Lasso,
    Learner,
    LearnerError,
    NumericError,
    erm_fit,
    fit_learner,
    kkt_residual,
    lasso_fit,
    lasso_objective,
    predict,
)
from .partition import (
    BlockId,
    ComparisonLayout,
    InfeasibleLayoutError,
    InvalidIndexError,
    InvalidLevelError,
    InvalidVError,
    PartitionError,
    block_indices,
    block_size,
    blocks_at_level,
    comparison_blocks,
    eligible_k0_blocks,
    k0_level,
    max_level,
    verify_lemmas,
)
from .selection import (
    CandidateId,
    RiskTable,
    SelectionError,
    SelectionResult,
    build_risk_table,
    comparator_matrix,
    empirical_risk,
    minmax_select,
    mom_compare,
    mom_mean,
    write_comparator_csv,
)

__version__ = "0.1.0"

__all__ = [
    "BlockId",
    "BoundsError",
    "BoundsInput",
    "BoundsWarning",
    "CandidateId",
    "ComparisonLayout",
    "ConfigError",
    "ConfigWarning",
    "ConvergenceError",
    "CsvFormatError",
    "Dataset",
    "DatasetError",
    "EnsembleConfig",
    "EnsembleResult",
    "Erm",
    "Estimator",
    "ExperimentConfig",
    "ExperimentError",
    "ExperimentRecord",
    "InfeasibleLayoutError",
    "InvalidIndexError",
    "InvalidLevelError",
    "InvalidSpecError",
    "InvalidSubspaceError",
    "InvalidVError",
    "Lasso",
    "Learner",
    "LearnerError",
    "NumericError",
    "PartitionError",
    "RiskTable",
    "SelectionError",
    "SelectionResult",
    "SyntheticSpec",
    "OracleInequalityConstants",
    "best_basic",
    "block_indices",
    "block_size",
    "blocks_at_level",
    "build_grid",
    "build_risk_table",
    "comparator_matrix",
    "comparison_blocks",
    "ensemble_guarantee_rhs",
    "effective_block_size",
    "eligible_k0_blocks",
    "empirical_risk",
    "erm_fit",
    "erm_rate",
    "fit_learner",
    "generate_synthetic",
    "k0_level",
    "kkt_residual",
    "lasso_fit",
    "lasso_objective",
    "lasso_rate",
    "load_csv",
    "max_level",
    "minmax_select",
    "mom_compare",
    "mom_mean",
    "oracle_candidate",
    "predict",
    "run_ensemble",
    "run_single",
    "run_sweep",
    "save_csv",
    "oracle_inequality_constants",
    "true_excess_risk",
    "verify_lemmas",
    "write_comparator_csv",
]
