"""Kronecker-core covariance decomposition and core-shrinkage estimation.

A toolkit for positive-definite covariance matrices of matrix-variate
data: the separable (Kronecker) covariance closest to an arbitrary
covariance, the complementary core obtained by whitening, an
empirical-Bayes estimator that shrinks the sample covariance towards its
separable fit, plus samplers, a Monte Carlo study harness, and a QDA
classifier built on these estimators.
"""

from .kcd import (
    FactorSingular,
    KCDOptions,
    KCDResult,
    SqrtKind,
    core_cov,
    is_core,
    kcd,
    kronecker_cov,
    separable_sqrt,
)
from .linalg import (
    Covariance,
    Dims,
    DomainError,
    NotPositiveDefinite,
    SeparableCovariance,
    chol_sqrt,
    col_gram,
    divergence,
    kron,
    log_det,
    row_gram,
    sym_eigen,
    sym_sqrt,
)
from .qda import (
    ClassModel,
    EstimatorKind,
    LabeledDataset,
    classify,
    confusion,
    fit_class_models,
    load_dataset,
    save_dataset,
    score,
)
from .sampling import (
    ScenarioPrior,
    derive_seed,
    random_separable,
    random_spd,
    sample_matrix_normal,
    sample_prior_sigma,
    sample_wishart,
)
from .shrink import (
    PriorSpec,
    ShrinkageFit,
    cse,
    fit_weight,
    lmgamma,
    log_marginal,
    oracle_bayes,
    shrink_combine,
    shrink_weight,
)
from .sim import (
    ESTIMATORS,
    ScenarioSummary,
    SimConfig,
    SimRecord,
    desk_config,
    loss_sq,
    read_records,
    replicate_seeds,
    run_study,
    scenarios,
    summarize,
    write_records,
)

__version__ = "0.1.0"

__all__ = [
    "ClassModel",
    "Covariance",
    "Dims",
    "DomainError",
    "ESTIMATORS",
    "EstimatorKind",
    "FactorSingular",
    "KCDOptions",
    "KCDResult",
    "LabeledDataset",
    "NotPositiveDefinite",
    "PriorSpec",
    "ScenarioPrior",
    "ScenarioSummary",
    "SeparableCovariance",
    "ShrinkageFit",
    "SimConfig",
    "SimRecord",
    "SqrtKind",
    "chol_sqrt",
    "classify",
    "col_gram",
    "confusion",
    "core_cov",
    "cse",
    "derive_seed",
    "desk_config",
    "divergence",
    "fit_class_models",
    "fit_weight",
    "is_core",
    "kcd",
    "kron",
    "kronecker_cov",
    "lmgamma",
    "load_dataset",
    "log_det",
    "log_marginal",
    "loss_sq",
    "oracle_bayes",
    "random_separable",
    "random_spd",
    "read_records",
    "replicate_seeds",
    "row_gram",
    "run_study",
    "sample_matrix_normal",
    "sample_prior_sigma",
    "sample_wishart",
    "save_dataset",
    "scenarios",
    "score",
    "separable_sqrt",
    "shrink_combine",
    "shrink_weight",
    "sym_eigen",
    "sym_sqrt",
    "summarize",
    "write_records",
]
