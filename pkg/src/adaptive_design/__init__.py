"""Adaptive treatment assignment designs for average treatment effect
estimation: clipped online gradient descent propensities, a multigroup
variant driven by sleeping experts, inverse propensity weighted estimation
with conservative intervals, and a seeded Monte Carlo harness."""

from .core import (AssignmentRecord, BoundednessConstants, BoundsReport,
                   ConfigurationError, Design, OutcomeSequence,
                   PotentialOutcomePair, Trajectory, run_design, verify_bounds)
from .data import (DatasetSpec, GaussianSpec, IngestedData, ScoreGroupSpec,
                   ScoreGroups, balance_scores, gen_gaussian, ingest_csv,
                   midpoint_ranks, score_quantile_groups)
from .designs import (ClipOgd, ClippingFunction, FixedDesign, Schedule,
                      clip_ogd_sc, clip_ogd_zero, fixed_design,
                      gradient_estimate, log_power_clipping,
                      polynomial_clipping, schedule_sc, schedule_zero)
from .estimation import (AteEstimate, ConfidenceInterval, OutcomeCorrelation,
                         VarianceBoundEstimate, chebyshev_ci,
                         correlation_diagnostic, ipw_estimate, ipw_trace,
                         true_ate, variance_bound_estimate)
from .evaluation import (GroupRegretResult, RegretCurve, comparator_loss,
                         group_regret, neyman_objective, neyman_regret,
                         optimal_propensity, optimal_propensity_from_moments,
                         optimal_propensity_grid)
from .harness import (AggregateReport, CoverageResult, DesignConfig,
                      ExperimentConfig, GroupAggregate, GroupsConfig,
                      checkpoints, config_from_dict, config_to_dict,
                      coverage_study, derive_seed, load_config, read_curves,
                      run_experiment, write_report)
from .multigroup import (GroupFamily, MetaGroupDesign, Mgate, active_groups,
                         effective_propensity, general_meta_design,
                         meta_mgate, mgate, mgate_gradient, mgate_loss)
from .olo import (SleepingExperts, SoloState, se_normalize, se_surrogate_loss,
                  sleeping_experts_round, sleeping_regret, solo_ingest,
                  solo_weights)

__version__ = "0.1.0"

__all__ = [
    "AssignmentRecord", "AteEstimate", "AggregateReport",
    "BoundednessConstants", "BoundsReport", "ClipOgd", "ClippingFunction",
    "ConfidenceInterval", "ConfigurationError", "CoverageResult",
    "DatasetSpec", "Design", "DesignConfig", "ExperimentConfig",
    "FixedDesign", "GaussianSpec", "GroupAggregate", "GroupFamily",
    "GroupRegretResult", "GroupsConfig", "IngestedData", "MetaGroupDesign",
    "Mgate", "OutcomeCorrelation", "OutcomeSequence", "PotentialOutcomePair",
    "RegretCurve", "Schedule", "ScoreGroupSpec", "ScoreGroups",
    "SleepingExperts", "SoloState", "Trajectory", "VarianceBoundEstimate",
    "active_groups", "balance_scores", "chebyshev_ci", "checkpoints",
    "clip_ogd_sc", "clip_ogd_zero", "comparator_loss", "config_from_dict",
    "config_to_dict", "correlation_diagnostic", "coverage_study",
    "derive_seed", "effective_propensity", "fixed_design", "gen_gaussian",
    "general_meta_design", "gradient_estimate", "group_regret", "ingest_csv",
    "ipw_estimate", "ipw_trace", "load_config", "log_power_clipping",
    "meta_mgate", "mgate", "mgate_gradient", "mgate_loss", "midpoint_ranks",
    "neyman_objective", "neyman_regret", "optimal_propensity",
    "optimal_propensity_from_moments", "optimal_propensity_grid",
    "polynomial_clipping", "read_curves", "run_design", "run_experiment",
    "schedule_sc", "schedule_zero", "score_quantile_groups", "se_normalize",
    "se_surrogate_loss", "sleeping_experts_round", "sleeping_regret",
    "solo_ingest", "solo_weights", "true_ate", "variance_bound_estimate",
    "verify_bounds", "write_report",
]
