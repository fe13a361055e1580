"""Survey-weighted LATE estimation and ATE bounds across two study cohorts."""

from .bounds import BoundsReport, OutcomeScale, bounds_report, scale_outcome, v_variables
from .crossfit import (
    CrossfitPlan,
    DiagnosticsReport,
    NuisancePredictions,
    cross_fit,
    diagnostics,
)
from .dataset import (
    ColumnMapping,
    FoldAssignment,
    PooledSample,
    StudySample,
    load_csv,
    make_folds,
    parse_mapping,
    pool_for_weights,
    write_csv,
)
from .estimator import (
    EstimateReport,
    gamma_plugin,
    phi_denominator,
    phi_numerator,
    swlate,
)
from .learners import LearnerSpec, fit, fit_stack, predict
from .simulation import (
    DgmSpec,
    ReplicationSummary,
    SimulatedCohorts,
    cohort_split,
    gen_cohorts,
    gen_covariates,
    gen_strata,
    ground_truth_late,
    run_replications,
)

__version__ = "0.1.0"

__all__ = [
    "BoundsReport",
    "ColumnMapping",
    "CrossfitPlan",
    "DgmSpec",
    "DiagnosticsReport",
    "EstimateReport",
    "FoldAssignment",
    "LearnerSpec",
    "NuisancePredictions",
    "OutcomeScale",
    "PooledSample",
    "ReplicationSummary",
    "SimulatedCohorts",
    "StudySample",
    "bounds_report",
    "cohort_split",
    "cross_fit",
    "diagnostics",
    "fit",
    "fit_stack",
    "gamma_plugin",
    "gen_cohorts",
    "gen_covariates",
    "gen_strata",
    "ground_truth_late",
    "load_csv",
    "make_folds",
    "parse_mapping",
    "phi_denominator",
    "phi_numerator",
    "pool_for_weights",
    "predict",
    "run_replications",
    "scale_outcome",
    "swlate",
    "v_variables",
    "write_csv",
]
