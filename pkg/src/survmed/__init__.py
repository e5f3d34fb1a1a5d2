"""R^2-based mediation effect sizes for right-censored survival outcomes.

Core pieces: immutable survival/mediation containers with CSV ingestion
(:mod:`survmed.data`), a Newton-Raphson Cox partial-likelihood fitter with
left truncation and Efron/Breslow ties (:mod:`survmed.cox`), five
pseudo-R^2 measures (:mod:`survmed.r2`), the mediation pipeline with
bootstrap intervals (:mod:`survmed.mediation`), a calibrated scenario
generator (:mod:`survmed.simulate`), and the replication harness and
analysis pipeline behind the ``survmed`` CLI (:mod:`survmed.harness`).
"""

from .cox import (
    CoxError,
    CoxFit,
    FitOptions,
    MonotoneLikelihoodError,
    NoEventsError,
    SingularError,
    TieMethod,
    fit_cox,
    null_cox_fit,
    partial_loglik,
    score_and_hessian,
)
from .data import (
    ColumnMapping,
    CovariateMatrix,
    DataError,
    MediationDataset,
    SurvivalOutcomes,
    SurvivalRecord,
    ValidationResult,
    read_csv,
    validate_dataset,
    write_csv,
)
from .mediation import (
    MediationFitError,
    MediationReport,
    MediatorRegression,
    UnreliableCIError,
    bootstrap_ci,
    difference_measure,
    fit_mediator_regressions,
    fit_three_models,
    product_measure,
    r2_mediation,
    scalar_quantities,
)
from .r2 import MEASURES, R2Set, compute_all, r2_b, r2_k, r2_n, r2_r, r2_w
from .simulate import (
    CalibrationError,
    ScenarioConfig,
    apply_censoring,
    calibrate_censoring,
    gen_dataset,
    inverse_weibull_time,
    make_scenarios,
)

__version__ = "0.1.0"

__all__ = [
    "CalibrationError",
    "ColumnMapping",
    "CovariateMatrix",
    "CoxError",
    "CoxFit",
    "DataError",
    "FitOptions",
    "MEASURES",
    "MediationDataset",
    "MediationFitError",
    "MediationReport",
    "MediatorRegression",
    "MonotoneLikelihoodError",
    "NoEventsError",
    "R2Set",
    "ScenarioConfig",
    "SingularError",
    "SurvivalOutcomes",
    "SurvivalRecord",
    "TieMethod",
    "UnreliableCIError",
    "ValidationResult",
    "apply_censoring",
    "bootstrap_ci",
    "calibrate_censoring",
    "compute_all",
    "difference_measure",
    "fit_cox",
    "fit_mediator_regressions",
    "fit_three_models",
    "gen_dataset",
    "inverse_weibull_time",
    "make_scenarios",
    "null_cox_fit",
    "partial_loglik",
    "product_measure",
    "r2_b",
    "r2_k",
    "r2_mediation",
    "r2_n",
    "r2_r",
    "r2_w",
    "read_csv",
    "scalar_quantities",
    "score_and_hessian",
    "validate_dataset",
    "write_csv",
]
