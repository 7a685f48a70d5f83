"""Prediction intervals for individual treatment effects.

Construction and stress-testing toolkit: a split-and-pair interval built
from cross-arm residual differences, conformal baselines (per-arm
Bonferroni, nested endpoint regression with and without a second
conformalization, pseudo-outcome meta-learners), stochastic-order
diagnostics for score calibration, adversarial counterexample
constructions, and a seeded benchmark runner.
"""

from .bench import (
    EvalSummary,
    ExperimentGrid,
    build_method,
    emit_csv,
    emit_plot,
    evaluate_intervals,
    parse_grid,
    run_experiment,
)
from .conformal import (
    Interval,
    IntervalMap,
    MethodConfig,
    MethodError,
    counterfactual_interval,
    cqr_score,
    metalearner_ite,
    naive_ite,
    nested_exact_ite,
    nested_inexact_ite,
    pseudo_outcome,
    weighted_quantile,
)
from .dgp import (
    CovariateDesign,
    Dataset,
    ObservedData,
    OutcomeModel,
    PropensityRegime,
    ScenarioConfig,
    beta24_cdf,
    gen_covariates,
    gen_dataset,
    link_f,
    propensity_eval,
    scenario_from_kv,
    scenario_id,
    scenario_to_kv,
    surface_eval,
)
from .hardness import (
    MirrorSpec,
    MixSpec,
    ProbeResult,
    construct_mirror,
    implied_propensity,
    mix_propensity,
    triviality_probe,
)
from .learners import (
    LearnerConfig,
    FittedModel,
    fit_mean,
    fit_propensity,
    fit_quantile,
)
from .orders import (
    OrderReport,
    ScorePair,
    dr_score_pair,
    estimate_alpha_star,
    fosd_check,
    mcx_check,
    sosd_check,
)
from .split_pair import (
    PairedResiduals,
    RatePoint,
    SplitIndices,
    SplitPairConfig,
    build_interval,
    pair_quantiles,
    paired_residuals,
    rate_experiment,
    stratified_split,
)

__version__ = "0.1.0"
