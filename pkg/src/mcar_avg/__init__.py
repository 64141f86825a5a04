"""Model averaging for generalized linear models with covariates that are
missing completely at random.

Candidate models are the complete-case fit plus one fit per
column-missingness pattern; weights minimize a penalized KL-based criterion
over the probability simplex.  Baselines (mean imputation, all-subsets
averaging) and a reproducible Monte Carlo harness are included.
"""

from ._kernels import backend
from .averaging import (
    AveragedEstimate,
    criterion,
    criterion_gradient,
    kkt_certificate,
    minimize_weights,
    predict,
)
from .baselines import ImputedDataset, fit_cc, fit_mim, fit_mima, mean_impute
from .data import ObservedDataset, ZeroFilledMatrix, load_csv, write_csv, zero_fill
from .errors import CandidateError, CliError, DataError, McarAvgError, RankError
from .glm import (
    FittedCandidate,
    GlmFamily,
    family,
    fit_design,
    fit_mle,
    log_likelihood_kernel,
)
from .patterns import (
    CandidateModel,
    ColumnGroup,
    Projection,
    build_candidates,
    detect_column_groups,
)
from .simulate import (
    SimConfig,
    SimResult,
    TruthRecord,
    format_table,
    generate_replication,
    kl_loss,
    optimality_ratio_experiment,
    run_grid,
    run_study,
    simplex_grid,
)

__version__ = "0.1.0"

__all__ = [
    "AveragedEstimate",
    "CandidateError",
    "CandidateModel",
    "CliError",
    "ColumnGroup",
    "DataError",
    "FittedCandidate",
    "GlmFamily",
    "ImputedDataset",
    "McarAvgError",
    "ObservedDataset",
    "Projection",
    "RankError",
    "SimConfig",
    "SimResult",
    "TruthRecord",
    "ZeroFilledMatrix",
    "backend",
    "build_candidates",
    "criterion",
    "criterion_gradient",
    "detect_column_groups",
    "family",
    "fit_cc",
    "fit_design",
    "fit_mim",
    "fit_mima",
    "fit_mle",
    "format_table",
    "generate_replication",
    "kkt_certificate",
    "kl_loss",
    "load_csv",
    "log_likelihood_kernel",
    "mean_impute",
    "minimize_weights",
    "optimality_ratio_experiment",
    "predict",
    "run_grid",
    "run_study",
    "simplex_grid",
    "write_csv",
    "zero_fill",
]
