"""Sequential design toolkit for expensive black-box simulators.

Fits Gaussian-process emulators to evaluated runs, scores candidate inputs
with expected-improvement criteria (optimization, contour and percentile
estimation, noisy quantiles, constraints), and iterates propose -> evaluate
-> refit until an EI-based stopping rule fires.
"""

from .criteria import (
    CriterionSpec,
    ei_constrained,
    ei_contour,
    ei_min,
    ei_min_exponentiated,
    ei_min_weighted,
    ei_multi_contour,
    ei_noisy_quantile,
    ei_percentile,
    estimate_percentile,
    feasibility_probability,
    improvement_contour,
    improvement_min,
)
from .design import (
    CandidateSet,
    Design,
    grid_candidates,
    initial_run_count,
    latin_hypercube,
    maximin_lhs,
    min_interpoint_distance,
)
from .domain import Domain
from .emulator import (
    CorrelationParams,
    Dataset,
    Diagnostics,
    FitConfig,
    GpModel,
    PredictiveDistribution,
    build_model,
    choose_transformation,
    correlation,
    fit,
    loo_cv,
    predict,
    predict_batch,
    profile_loglik,
)
from .errors import (
    ConfigError,
    FactorizationError,
    FitError,
    SeqDesignError,
    TransformationError,
)
from .oracle import McEstimate, VerificationReport, mc_ei, verify_criterion
from .sequential import (
    Proposal,
    RunConfig,
    RunHistory,
    StopRule,
    propose,
    run_from_config,
    run_loop,
    stop_check,
    update_incumbent,
)
from .simulators import (
    GridSimulator,
    SimulatorSpec,
    branin,
    contour_ring,
    eval_grid,
    quadratic_bowl,
    tidal_like_grid,
    volcano_like_grid,
    with_noise,
)
from .transforms import Transformation

__version__ = "0.1.0"

__all__ = [
    "CandidateSet",
    "ConfigError",
    "CorrelationParams",
    "CriterionSpec",
    "Dataset",
    "Design",
    "Diagnostics",
    "Domain",
    "FactorizationError",
    "FitConfig",
    "FitError",
    "GpModel",
    "GridSimulator",
    "McEstimate",
    "PredictiveDistribution",
    "Proposal",
    "RunConfig",
    "RunHistory",
    "SeqDesignError",
    "SimulatorSpec",
    "StopRule",
    "Transformation",
    "TransformationError",
    "VerificationReport",
    "branin",
    "build_model",
    "choose_transformation",
    "contour_ring",
    "correlation",
    "ei_constrained",
    "ei_contour",
    "ei_min",
    "ei_min_exponentiated",
    "ei_min_weighted",
    "ei_multi_contour",
    "ei_noisy_quantile",
    "ei_percentile",
    "estimate_percentile",
    "eval_grid",
    "feasibility_probability",
    "fit",
    "grid_candidates",
    "improvement_contour",
    "improvement_min",
    "initial_run_count",
    "latin_hypercube",
    "loo_cv",
    "maximin_lhs",
    "mc_ei",
    "min_interpoint_distance",
    "predict",
    "predict_batch",
    "profile_loglik",
    "propose",
    "quadratic_bowl",
    "run_from_config",
    "run_loop",
    "stop_check",
    "tidal_like_grid",
    "update_incumbent",
    "verify_criterion",
    "volcano_like_grid",
    "with_noise",
]
