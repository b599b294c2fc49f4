"""Personalized tuning of ridge regression via the euclidean-distance-ridge
(edr) estimator and personalized adaptive validation (PAV)."""

from .calibration import (
    OracleDiagnostics,
    PavSelection,
    Schedule,
    SubjectQuery,
    correlation_factor,
    gaussian_bound,
    oracle_tuning,
    pairwise_test,
    select_batch,
    select_tuning,
    sort_schedule,
)
from .cv import FoldPlan, cv_select, make_folds
from .datagen import (
    RegressionProblem,
    SimConfig,
    Truth,
    generate_semisynthetic,
    generate_synthetic,
    load_matrix,
    save_matrix,
)
from .estimators import KFoldRidge, PAVRidge
from .exceptions import *  # noqa: F401,F403
from .experiments import (
    ExperimentReport,
    emit_report,
    read_report,
    replay_report,
    run_pipeline,
    run_real_data,
    run_simulation_study,
)
from .linalg import (
    DesignMatrix,
    RidgePath,
    SvdFactors,
    TuningGrid,
    count_factorizations,
    normalize_columns,
    ridge_path,
    svd,
)
from .mapping import EdrPath, build_edr_path, edr_objective, map_tuning

__version__ = "0.1.0"
