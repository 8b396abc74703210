//! Group-sparse linear regression.
//!
//! Two-stage Co-adaptive Lasso with Lasso, Adaptive Lasso and Group Lasso
//! baselines, restricted-eigenvalue diagnostics and a synthetic benchmark
//! harness.

pub mod data;
pub mod group_lasso;
pub mod model_selection;
pub mod re_diagnostics;
pub mod simulation;
pub mod solver;
pub mod weights;

pub use data::{estimation_error, s_tilde, DataError, Dataset, GroupStructure, SparsityPattern};
pub use solver::{
    fit_lasso_path, fit_weighted_lasso, lambda_grid, lambda_max, ols_restricted, soft_threshold,
    CoordinateDescent, FitResult, LambdaPath, SolverError, SolverOptions, WeightVector,
};
pub use group_lasso::{
    fit_group_lasso, group_lambda_max, BlockCoordinateDescent, GroupFitResult, GroupLassoError,
    GroupLassoOptions,
};
pub use weights::{
    compute_weights, group_norms, weight_separation_stats, WeightError, WeightScheme,
    WeightSeparation,
};
pub use re_diagnostics::{
    check_lemma_chain, check_lemma_chain_with, condition_report, group_re_statistic,
    re_statistic, ConditionInputs, ConditionReport, LemmaChain, ModeRequest, ReError, ReEstimate,
    ReMode, ReOptions, ReQuery,
};
pub use model_selection::{
    cross_validate, cv_group_lasso, cv_weighted_lasso, fit_second_stage, fit_two_stage,
    fold_assignment, CvError, CvPlan, CvResult, GroupLassoCv, LassoCv, PathEstimator,
    TwoStageResult,
};
pub use simulation::{
    generate_instance, generate_overlap_instance, run_benchmark, BenchmarkConfig, CoefKind,
    Instance, Layout, Method, ScenarioSpec, SimulationError, SimulationReport,
};
