//! K-fold cross-validation and the two-stage weighted fit.
//!
//! Every grid is anchored at the full-data `lambda_max` of the estimator being
//! tuned and shared by all folds. Training folds are re-centered views of the
//! standardized data, so coefficients and weights keep one scale throughout.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::data::{Dataset, GroupStructure};
use crate::group_lasso::{
    group_lambda_max, BlockCoordinateDescent, GroupFitResult, GroupLassoError, GroupLassoOptions,
};
use crate::solver::{
    lambda_grid, lambda_max, CoordinateDescent, FitResult, SolverError, SolverOptions, WeightVector,
    DEFAULT_GRID_SIZE, DEFAULT_LAMBDA_MIN_RATIO,
};
use crate::weights::{compute_weights, WeightError, WeightScheme};

/// Share of failed fold/grid cells above which a CV curve is flagged.
pub const FAILED_CELL_FLAG: f64 = 0.10;

#[derive(Debug, Error, Clone)]
pub enum CvError {
    #[error("invalid cross-validation plan: {0}")]
    InvalidPlan(String),
    #[error("every fold failed at every grid point")]
    AllCellsFailed,
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    GroupLasso(#[from] GroupLassoError),
    #[error(transparent)]
    Weights(#[from] WeightError),
}

impl CvError {
    pub fn is_non_convergence(&self) -> bool {
        matches!(
            self,
            CvError::Solver(SolverError::NonConvergence { .. })
                | CvError::GroupLasso(GroupLassoError::NonConvergence { .. })
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CvPlan {
    pub k: usize,
    pub seed: u64,
    pub grid_size: usize,
    pub lambda_min_ratio: f64,
    /// Pick the largest `λ` within one standard error of the minimum.
    pub one_se: bool,
}

impl CvPlan {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            seed,
            grid_size: DEFAULT_GRID_SIZE,
            lambda_min_ratio: DEFAULT_LAMBDA_MIN_RATIO,
            one_se: false,
        }
    }

    pub fn fold_assignment(&self, n: usize) -> Result<Vec<usize>, CvError> {
        fold_assignment(n, self.k, self.seed)
    }
}

/// Balanced random fold ids, a deterministic function of `(n, k, seed)`.
pub fn fold_assignment(n: usize, k: usize, seed: u64) -> Result<Vec<usize>, CvError> {
    if k < 2 {
        return Err(CvError::InvalidPlan(format!("need at least 2 folds, got {k}")));
    }
    if n < k {
        return Err(CvError::InvalidPlan(format!("{k} folds need at least {k} samples, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((n as u64) << 32) ^ k as u64);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    let mut fold = vec![0; n];
    for (pos, &i) in perm.iter().enumerate() {
        fold[i] = pos % k;
    }
    Ok(fold)
}

/// Solutions along a grid: one coefficient vector per grid point, `None` where the fit failed.
pub struct PathOutcome {
    pub betas: Vec<Option<Vec<f64>>>,
    pub sweeps: usize,
}

/// An estimator that can be fitted along a decreasing tuning-parameter grid.
pub trait PathEstimator: Sync {
    fn lambda_max(&self, data: &Dataset) -> Result<f64, CvError>;
    fn fit_path(&self, data: &Dataset, grid: &[f64]) -> Result<PathOutcome, CvError>;
}

pub struct WeightedLassoPath<'a> {
    pub weights: &'a WeightVector,
    pub opts: SolverOptions,
}

impl PathEstimator for WeightedLassoPath<'_> {
    fn lambda_max(&self, data: &Dataset) -> Result<f64, CvError> {
        Ok(lambda_max(data, self.weights)?)
    }

    fn fit_path(&self, data: &Dataset, grid: &[f64]) -> Result<PathOutcome, CvError> {
        let mut cd = CoordinateDescent::new(data, self.opts);
        let fits = cd.path(self.weights, grid);
        Ok(PathOutcome {
            betas: fits.into_iter().map(|f| f.ok().map(|f| f.beta)).collect(),
            sweeps: cd.total_sweeps(),
        })
    }
}

pub struct GroupLassoPath<'a> {
    pub groups: &'a GroupStructure,
    pub opts: GroupLassoOptions,
}

impl PathEstimator for GroupLassoPath<'_> {
    fn lambda_max(&self, data: &Dataset) -> Result<f64, CvError> {
        Ok(group_lambda_max(data, self.groups, self.opts.scale_by_size))
    }

    fn fit_path(&self, data: &Dataset, grid: &[f64]) -> Result<PathOutcome, CvError> {
        let mut bcd = BlockCoordinateDescent::new(data, self.groups, self.opts)?;
        let fits = bcd.path(grid);
        Ok(PathOutcome {
            betas: fits.into_iter().map(|f| f.ok().map(|f| f.beta)).collect(),
            sweeps: bcd.total_sweeps(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvResult {
    pub grid: Vec<f64>,
    /// Pooled held-out mean squared error; `None` where every fold failed.
    pub cv_curve: Vec<Option<f64>>,
    /// Standard error of the per-fold errors.
    pub cv_se: Vec<Option<f64>>,
    pub best_index: usize,
    pub best_lambda: f64,
    pub failed_cells: usize,
    pub total_cells: usize,
    /// More than [`FAILED_CELL_FLAG`] of the cells failed.
    pub flagged: bool,
    pub sweeps: usize,
}

pub fn cross_validate<E: PathEstimator>(
    data: &Dataset,
    estimator: &E,
    plan: &CvPlan,
) -> Result<CvResult, CvError> {
    let n = data.n();
    let folds = plan.fold_assignment(n)?;
    let grid = lambda_grid(estimator.lambda_max(data)?, plan.grid_size, plan.lambda_min_ratio)?;
    let g = grid.len();

    let per_fold: Vec<Result<(Vec<Option<(f64, usize)>>, usize), CvError>> = (0..plan.k)
        .into_par_iter()
        .map(|f| {
            let train: Vec<usize> = (0..n).filter(|&i| folds[i] != f).collect();
            let test: Vec<usize> = (0..n).filter(|&i| folds[i] == f).collect();
            let view = data.centered_rows(&train);
            let out = estimator.fit_path(&view, &grid)?;
            let errs = out
                .betas
                .iter()
                .map(|b| b.as_ref().map(|beta| (held_out_sse(data, &view, beta, &test), test.len())))
                .collect();
            Ok((errs, out.sweeps))
        })
        .collect();

    let mut sse = vec![0.0; g];
    let mut count = vec![0usize; g];
    let mut fold_mse: Vec<Vec<f64>> = vec![Vec::new(); g];
    let mut failed = 0;
    let mut sweeps = 0;
    for res in per_fold {
        let (errs, sw) = res?;
        sweeps += sw;
        for (i, e) in errs.into_iter().enumerate() {
            match e {
                Some((s, m)) if s.is_finite() => {
                    sse[i] += s;
                    count[i] += m;
                    fold_mse[i].push(s / m as f64);
                }
                _ => failed += 1,
            }
        }
    }
    let cv_curve: Vec<Option<f64>> = (0..g)
        .map(|i| (count[i] > 0).then(|| sse[i] / count[i] as f64))
        .collect();
    let cv_se: Vec<Option<f64>> = fold_mse
        .iter()
        .map(|v| {
            (v.len() >= 2).then(|| {
                let m = v.iter().sum::<f64>() / v.len() as f64;
                let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64;
                (var / v.len() as f64).sqrt()
            })
        })
        .collect();

    let mut best: Option<(usize, f64)> = None;
    for (i, c) in cv_curve.iter().enumerate() {
        if let Some(c) = *c {
            // Strict comparison keeps the larger λ on ties.
            if best.map_or(true, |(_, b)| c < b) {
                best = Some((i, c));
            }
        }
    }
    let (mut best_index, best_err) = best.ok_or(CvError::AllCellsFailed)?;
    if plan.one_se {
        let limit = best_err + cv_se[best_index].unwrap_or(0.0);
        if let Some(i) = cv_curve.iter().position(|c| c.is_some_and(|c| c <= limit)) {
            best_index = i;
        }
    }
    let total = g * plan.k;
    Ok(CvResult {
        best_lambda: grid[best_index],
        grid,
        cv_curve,
        cv_se,
        best_index,
        failed_cells: failed,
        total_cells: total,
        flagged: failed as f64 > FAILED_CELL_FLAG * total as f64,
        sweeps,
    })
}

/// Held-out squared error of a fold fit, predicting with the training-fold means.
fn held_out_sse(data: &Dataset, view: &Dataset, beta: &[f64], test: &[usize]) -> f64 {
    let mut pred = vec![view.y_mean(); test.len()];
    for (j, &b) in beta.iter().enumerate() {
        if b == 0.0 {
            continue;
        }
        let col = data.column(j);
        let mean = view.x_means()[j];
        for (pi, &i) in pred.iter_mut().zip(test) {
            *pi += (col[i] - mean) * b;
        }
    }
    test.iter()
        .zip(&pred)
        .map(|(&i, p)| {
            let r = data.y()[i] - p;
            r * r
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LassoCv {
    pub cv: CvResult,
    pub fit: FitResult,
    /// Sweeps of the fold paths plus the final full-data path.
    pub sweeps: usize,
}

/// Cross-validated weighted Lasso followed by the full-data path down to the chosen `λ`.
pub fn cv_weighted_lasso(
    data: &Dataset,
    weights: &WeightVector,
    plan: &CvPlan,
    opts: SolverOptions,
) -> Result<LassoCv, CvError> {
    let est = WeightedLassoPath { weights, opts };
    let cv = cross_validate(data, &est, plan)?;
    let mut cd = CoordinateDescent::new(data, opts);
    let fit = cd
        .path(weights, &cv.grid[..=cv.best_index])
        .pop()
        .expect("non-empty grid prefix")?;
    let sweeps = cv.sweeps + cd.total_sweeps();
    Ok(LassoCv { cv, fit, sweeps })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupLassoCv {
    pub cv: CvResult,
    pub fit: GroupFitResult,
    pub sweeps: usize,
}

pub fn cv_group_lasso(
    data: &Dataset,
    groups: &GroupStructure,
    plan: &CvPlan,
    opts: GroupLassoOptions,
) -> Result<GroupLassoCv, CvError> {
    let est = GroupLassoPath { groups, opts };
    let cv = cross_validate(data, &est, plan)?;
    let mut bcd = BlockCoordinateDescent::new(data, groups, opts)?;
    let fit = bcd
        .path(&cv.grid[..=cv.best_index])
        .pop()
        .expect("non-empty grid prefix")?;
    let sweeps = cv.sweeps + bcd.total_sweeps();
    Ok(GroupLassoCv { cv, fit, sweeps })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoStageResult {
    pub stage1: FitResult,
    pub stage1_cv: CvResult,
    pub weights: WeightVector,
    pub stage2: FitResult,
    /// Absent when every weight is infinite.
    pub stage2_cv: Option<CvResult>,
    pub scheme: WeightScheme,
    /// Every coordinate was excluded by the weights; `stage2` is the zero fit.
    pub all_excluded: bool,
    pub sweeps: usize,
}

/// Cross-validated Lasso, weights from its full-data fit, then a cross-validated weighted Lasso.
pub fn fit_two_stage(
    data: &Dataset,
    groups: &GroupStructure,
    scheme: WeightScheme,
    plan1: &CvPlan,
    plan2: &CvPlan,
    opts: SolverOptions,
) -> Result<TwoStageResult, CvError> {
    scheme.check_groups(groups)?;
    let stage1 = cv_weighted_lasso(data, &WeightVector::ones(data.p()), plan1, opts)?;
    fit_second_stage(data, groups, scheme, &stage1, plan2, opts)
}

/// Second stage on top of an existing stage-1 result, so several schemes can share it.
pub fn fit_second_stage(
    data: &Dataset,
    groups: &GroupStructure,
    scheme: WeightScheme,
    stage1: &LassoCv,
    plan2: &CvPlan,
    opts: SolverOptions,
) -> Result<TwoStageResult, CvError> {
    let weights = compute_weights(&stage1.fit.beta, groups, scheme)?;
    if weights.finite_count() == 0 {
        let y = data.y();
        let objective = 0.5 * y.dot(y) / data.n() as f64;
        return Ok(TwoStageResult {
            stage1: stage1.fit.clone(),
            stage1_cv: stage1.cv.clone(),
            weights,
            stage2: FitResult {
                beta: vec![0.0; data.p()],
                lambda: 0.0,
                active_set: Vec::new(),
                kkt_residual: 0.0,
                iterations: 0,
                objective,
                objective_trace: Vec::new(),
            },
            stage2_cv: None,
            scheme,
            all_excluded: true,
            sweeps: stage1.sweeps,
        });
    }
    let stage2 = cv_weighted_lasso(data, &weights, plan2, opts)?;
    Ok(TwoStageResult {
        stage1: stage1.fit.clone(),
        stage1_cv: stage1.cv.clone(),
        weights,
        stage2: stage2.fit,
        stage2_cv: Some(stage2.cv),
        scheme,
        all_excluded: false,
        sweeps: stage1.sweeps + stage2.sweeps,
    })
}
