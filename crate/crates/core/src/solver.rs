//! Weighted Lasso by cyclic coordinate descent.
//!
//! Minimizes `(1/2)‖y - Xβ‖_n² + λ Σ_j w_j |β_j|` on a centered [`Dataset`].
//! The plain Lasso is the all-ones weight vector; the Adaptive and Co-adaptive
//! second stages only change the weights.
//!
//! The solver alternates between sweeps over an active set, where gradients are
//! kept current through cached column inner products, and a full pass that
//! recomputes the gradient from the residual, certifies the KKT conditions and
//! admits violators into the active set.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{dot, Dataset};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 10_000;
pub const DEFAULT_GRID_SIZE: usize = 100;
pub const DEFAULT_LAMBDA_MIN_RATIO: f64 = 1e-3;

/// Reciprocal condition number below which a restricted Gram matrix is rejected.
pub const OLS_RCOND_MIN: f64 = 1e-12;

#[derive(Debug, Error, Clone)]
pub enum SolverError {
    #[error("dimension mismatch: {what} (expected {expected}, found {found})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("tuning parameter must be finite and non-negative, got {0}")]
    InvalidLambda(f64),
    #[error("no covariate has a finite penalty weight")]
    AllExcluded,
    #[error("unpenalized fit has {p} free columns but only {n} samples; use a positive tuning parameter")]
    UnpenalizedHighDim { n: usize, p: usize },
    #[error("no convergence within {max_iter} sweeps (KKT residual {kkt:e})", kkt = best.kkt_residual)]
    NonConvergence {
        max_iter: usize,
        best: Box<FitResult>,
    },
    #[error("objective became non-finite")]
    NonFinite,
    #[error("restricted Gram matrix of size {size} is singular (reciprocal condition {rcond:e})")]
    SingularGram { size: usize, rcond: f64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
}

/// Per-covariate penalty weights in `[0, +∞]`; `+∞` excludes the covariate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(w: Vec<f64>) -> Result<Self, SolverError> {
        if let Some(j) = w.iter().position(|v| v.is_nan() || *v < 0.0) {
            return Err(SolverError::InvalidWeights(format!(
                "entry {j} is {}; weights must be non-negative",
                w[j]
            )));
        }
        Ok(Self(w))
    }

    pub fn ones(p: usize) -> Self {
        Self(vec![1.0; p])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_excluded(&self, j: usize) -> bool {
        self.0[j].is_infinite()
    }

    pub fn finite_count(&self) -> usize {
        self.0.iter().filter(|w| w.is_finite()).count()
    }

    /// Multiplies every weight by `c > 0`.
    pub fn scaled(&self, c: f64) -> Self {
        Self(self.0.iter().map(|w| w * c).collect())
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Bound on the returned KKT residual.
    pub tol: f64,
    /// Budget of coordinate sweeps (active-set and full passes both count).
    pub max_iter: usize,
    /// Record the objective after every sweep in [`FitResult::objective_trace`].
    pub track_objective: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            track_objective: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// Coefficients on the standardized scale.
    pub beta: Vec<f64>,
    pub lambda: f64,
    pub active_set: Vec<usize>,
    pub kkt_residual: f64,
    /// Sweeps used by this fit.
    pub iterations: usize,
    pub objective: f64,
    #[serde(skip)]
    pub objective_trace: Vec<f64>,
}

impl FitResult {
    fn zero(p: usize, lambda: f64, objective: f64) -> Self {
        Self {
            beta: vec![0.0; p],
            lambda,
            active_set: Vec::new(),
            kkt_residual: 0.0,
            iterations: 0,
            objective,
            objective_trace: Vec::new(),
        }
    }
}

/// Tuning-parameter grid with the warm-started fit at each value.
#[derive(Debug, Clone)]
pub struct LambdaPath {
    pub grid: Vec<f64>,
    pub fits: Vec<Result<FitResult, SolverError>>,
}

impl LambdaPath {
    pub fn failures(&self) -> usize {
        self.fits.iter().filter(|f| f.is_err()).count()
    }
}

/// `sign(z) · max(|z| - gamma, 0)`
#[inline]
pub fn soft_threshold(z: f64, gamma: f64) -> f64 {
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}

/// Log-spaced decreasing grid from `lambda_max` to `lambda_min_ratio · lambda_max`.
pub fn lambda_grid(
    lambda_max: f64,
    grid_size: usize,
    lambda_min_ratio: f64,
) -> Result<Vec<f64>, SolverError> {
    if grid_size < 2 {
        return Err(SolverError::InvalidGrid(format!(
            "grid size must be at least 2, got {grid_size}"
        )));
    }
    if !(lambda_min_ratio > 0.0 && lambda_min_ratio < 1.0) {
        return Err(SolverError::InvalidGrid(format!(
            "lambda_min_ratio must lie in (0, 1), got {lambda_min_ratio}"
        )));
    }
    if !lambda_max.is_finite() || lambda_max < 0.0 {
        return Err(SolverError::InvalidLambda(lambda_max));
    }
    // A zero response gives lambda_max = 0; keep the grid strictly decreasing.
    let top = lambda_max.max(f64::EPSILON);
    let last = (grid_size - 1) as f64;
    Ok((0..grid_size)
        .map(|i| {
            if i == 0 {
                top
            } else {
                top * lambda_min_ratio.powf(i as f64 / last)
            }
        })
        .collect())
}

fn effective_weights(data: &Dataset, weights: &WeightVector) -> Result<Vec<f64>, SolverError> {
    if weights.len() != data.p() {
        return Err(SolverError::DimensionMismatch {
            what: "weight vector length",
            expected: data.p(),
            found: weights.len(),
        });
    }
    Ok(weights
        .as_slice()
        .iter()
        .enumerate()
        .map(|(j, &w)| if data.is_constant(j) { f64::INFINITY } else { w })
        .collect())
}

/// Smallest tuning parameter whose solution is identically zero on the penalized coordinates.
///
/// Unpenalized (zero-weight) coordinates are first fitted by least squares and
/// the bound is taken on that residual.
pub fn lambda_max(data: &Dataset, weights: &WeightVector) -> Result<f64, SolverError> {
    let w = effective_weights(data, weights)?;
    let free: Vec<usize> = (0..w.len()).filter(|&j| w[j] == 0.0).collect();
    let penalized: Vec<usize> = (0..w.len())
        .filter(|&j| w[j] > 0.0 && w[j].is_finite())
        .collect();
    if penalized.is_empty() {
        return if free.is_empty() {
            Err(SolverError::AllExcluded)
        } else {
            Ok(0.0)
        };
    }
    let r = if free.is_empty() {
        data.y().as_slice().to_vec()
    } else {
        let b = ols_restricted(data, &free)?;
        data.residual(&b)
    };
    let n = data.n() as f64;
    Ok(penalized
        .iter()
        .map(|&j| dot(data.column(j), &r).abs() / n / w[j])
        .fold(0.0, f64::max))
}

/// Reusable coordinate-descent engine bound to one dataset.
///
/// Inner products between columns that have ever been active are cached, so
/// warm-started fits along a path and refits with new weights share the work.
pub struct CoordinateDescent<'a> {
    data: &'a Dataset,
    opts: SolverOptions,
    slot: Vec<usize>,
    ever: Vec<usize>,
    gram: Vec<Vec<f64>>,
    factor: SupportFactor,
    sweeps: usize,
}

const NO_SLOT: usize = usize::MAX;
/// Active sweeps between sign-fixed Newton steps.
const NEWTON_EVERY: usize = 3;
const NEWTON_PIVOT_MIN: f64 = 1e-7;
const NEWTON_ROUNDS: usize = 8;

impl<'a> CoordinateDescent<'a> {
    pub fn new(data: &'a Dataset, opts: SolverOptions) -> Self {
        Self {
            data,
            opts,
            slot: vec![NO_SLOT; data.p()],
            ever: Vec::new(),
            gram: Vec::new(),
            factor: SupportFactor::default(),
            sweeps: 0,
        }
    }

    /// Total sweeps spent by this engine across all fits.
    pub fn total_sweeps(&self) -> usize {
        self.sweeps
    }

    pub fn options(&self) -> SolverOptions {
        self.opts
    }

    fn ensure_cached(&mut self, j: usize) -> usize {
        if self.slot[j] != NO_SLOT {
            return self.slot[j];
        }
        let n = self.data.n() as f64;
        let cj = self.data.column(j);
        let mut row: Vec<f64> = self
            .ever
            .iter()
            .map(|&k| dot(cj, self.data.column(k)) / n)
            .collect();
        for (r, &v) in self.gram.iter_mut().zip(&row) {
            r.push(v);
        }
        row.push(self.data.col_sq_norm(j));
        let s = self.ever.len();
        self.ever.push(j);
        self.gram.push(row);
        self.slot[j] = s;
        s
    }

    fn objective(&self, r: &[f64], beta: &[f64], w: &[f64], lambda: f64) -> f64 {
        let n = self.data.n() as f64;
        let loss = 0.5 * r.iter().map(|v| v * v).sum::<f64>() / n;
        let pen: f64 = beta
            .iter()
            .zip(w)
            .filter(|(b, _)| **b != 0.0)
            .map(|(b, wj)| wj * b.abs())
            .sum();
        loss + lambda * pen
    }

    /// Fits at one tuning parameter, optionally warm-started.
    pub fn fit(
        &mut self,
        weights: &WeightVector,
        lambda: f64,
        warm_start: Option<&[f64]>,
    ) -> Result<FitResult, SolverError> {
        let data = self.data;
        let (n, p) = (data.n(), data.p());
        let nf = n as f64;
        let w = effective_weights(data, weights)?;
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(SolverError::InvalidLambda(lambda));
        }
        let finite: Vec<usize> = (0..p).filter(|&j| w[j].is_finite()).collect();
        if finite.is_empty() {
            let obj = self.objective(data.y().as_slice(), &[], &[], lambda);
            return Ok(FitResult::zero(p, lambda, obj));
        }
        if lambda == 0.0 && finite.len() > n {
            return Err(SolverError::UnpenalizedHighDim { n, p: finite.len() });
        }

        let mut beta = match warm_start {
            Some(b) if b.len() != p => {
                return Err(SolverError::DimensionMismatch {
                    what: "warm start length",
                    expected: p,
                    found: b.len(),
                })
            }
            Some(b) => b.to_vec(),
            None => vec![0.0; p],
        };
        for j in 0..p {
            if !w[j].is_finite() || !beta[j].is_finite() {
                beta[j] = 0.0;
            }
        }

        let tol = self.opts.tol;
        let mut in_active = vec![false; p];
        let mut active: Vec<usize> = Vec::new();
        for j in 0..p {
            if beta[j] != 0.0 {
                in_active[j] = true;
                active.push(j);
                self.ensure_cached(j);
            }
        }

        let mut used = 0usize;
        let mut trace = Vec::new();
        let mut g = vec![0.0; self.ever.len()];
        let mut grad = vec![0.0; p];

        loop {
            // Full pass: exact gradient from the residual.
            let r = data.residual(&beta);
            for &j in &finite {
                grad[j] = dot(data.column(j), &r) / nf;
            }
            used += 1;
            let obj = self.objective(&r, &beta, &w, lambda);
            if !obj.is_finite() || grad.iter().any(|v| !v.is_finite()) {
                self.sweeps += used;
                return Err(SolverError::NonFinite);
            }
            if self.opts.track_objective {
                trace.push(obj);
            }

            let mut kkt = 0.0f64;
            for &j in &finite {
                let v = coordinate_violation(grad[j], beta[j], lambda * w[j]);
                kkt = kkt.max(v);
                if !in_active[j] && grad[j].abs() > lambda * w[j] {
                    in_active[j] = true;
                    active.push(j);
                }
            }
            let result = |beta: &Vec<f64>, used, trace: Vec<f64>| FitResult {
                active_set: (0..p).filter(|&j| beta[j] != 0.0).collect(),
                beta: beta.clone(),
                lambda,
                kkt_residual: kkt,
                iterations: used,
                objective: obj,
                objective_trace: trace,
            };
            if kkt <= tol {
                self.sweeps += used;
                return Ok(result(&beta, used, trace));
            }
            if used >= self.opts.max_iter {
                self.sweeps += used;
                return Err(SolverError::NonConvergence {
                    max_iter: self.opts.max_iter,
                    best: Box::new(result(&beta, used, trace)),
                });
            }

            let slots: Vec<usize> = active.iter().map(|&j| self.ensure_cached(j)).collect();
            g.resize(self.ever.len(), 0.0);
            for (&j, &s) in active.iter().zip(&slots) {
                g[s] = grad[j];
            }

            // Active-set sweeps on cached inner products.
            let mut inner = 0usize;
            loop {
                let mut viol = 0.0f64;
                for (&j, &s) in active.iter().zip(&slots) {
                    let d = data.col_sq_norm(j);
                    let pen = lambda * w[j];
                    viol = viol.max(coordinate_violation(g[s], beta[j], pen));
                    let old = beta[j];
                    let new = soft_threshold(d * old + g[s], pen) / d;
                    let delta = new - old;
                    if delta != 0.0 {
                        beta[j] = new;
                        let row = &self.gram[s];
                        for &t in &slots {
                            g[t] -= row[t] * delta;
                        }
                    }
                }
                used += 1;
                inner += 1;
                if viol > 0.25 * tol && inner % NEWTON_EVERY == 0 {
                    self.newton_step(&active, &slots, &mut beta, &mut g, &w, lambda);
                }
                if self.opts.track_objective {
                    let r = data.residual(&beta);
                    trace.push(self.objective(&r, &beta, &w, lambda));
                }
                if viol <= 0.25 * tol || used >= self.opts.max_iter {
                    break;
                }
            }
        }
    }

    /// Exact minimization over the nonzero coordinates with their signs held fixed.
    ///
    /// Each round either takes the sign-fixed Newton step, stopping at the first
    /// coordinate that would change sign, or, when the restricted Gram is
    /// singular, moves along a null direction of the restricted design (fitted
    /// values unchanged, penalty not increasing) until a coordinate reaches zero.
    fn newton_step(
        &mut self,
        active: &[usize],
        slots: &[usize],
        beta: &mut [f64],
        g: &mut [f64],
        w: &[f64],
        lambda: f64,
    ) {
        let gram = &self.gram;
        let factor = &mut self.factor;
        let mut in_support = vec![false; gram.len()];
        for _ in 0..NEWTON_ROUNDS {
            in_support.iter_mut().for_each(|v| *v = false);
            for (&j, &s) in active.iter().zip(slots) {
                in_support[s] = beta[j] != 0.0;
            }
            for pos in (0..factor.members.len()).rev() {
                if !in_support[factor.members[pos]] {
                    factor.remove(pos);
                }
            }
            let mut member = vec![false; gram.len()];
            factor.members.iter().for_each(|&m| member[m] = true);
            let mut failed = None;
            for (&j, &s) in active.iter().zip(slots) {
                if beta[j] != 0.0 && !member[s] {
                    if let Err(e) = factor.append(s, gram) {
                        failed = Some((s, e));
                        break;
                    }
                }
            }
            let mut coords = factor.members.clone();
            let rhs_of = |s: usize| {
                let j = self.ever[s];
                g[s] - lambda * w[j] * beta[j].signum()
            };
            let (step, limit) = match failed {
                None => {
                    let rhs: Vec<f64> = coords.iter().map(|&s| rhs_of(s)).collect();
                    (factor.solve(&rhs), 1.0)
                }
                Some((s, (mut v, pivot))) => {
                    // Direction with H v ≈ 0 on the factored block plus `s`, oriented downhill.
                    factor.back(&mut v);
                    v.push(-1.0);
                    coords.push(s);
                    let slope: f64 = coords.iter().zip(&v).map(|(&c, a)| a * rhs_of(c)).sum();
                    if slope < 0.0 {
                        v.iter_mut().for_each(|x| *x = -*x);
                    }
                    let curv = pivot.max(0.0);
                    let lim = if curv > 0.0 { slope.abs() / curv } else { f64::INFINITY };
                    (v, lim)
                }
            };
            if step.iter().any(|v| !v.is_finite()) {
                *factor = SupportFactor::default();
                return;
            }
            let mut t = limit;
            let mut blocking = None;
            for (a, &s) in coords.iter().enumerate() {
                let b = beta[self.ever[s]];
                let d = step[a];
                if b * d < 0.0 {
                    let ta = -b / d;
                    if ta <= t {
                        t = ta;
                        blocking = Some(a);
                    }
                }
            }
            if !t.is_finite() {
                return;
            }
            for (a, &s) in coords.iter().enumerate() {
                let j = self.ever[s];
                let delta = if Some(a) == blocking { -beta[j] } else { t * step[a] };
                if delta == 0.0 {
                    continue;
                }
                beta[j] += delta;
                if Some(a) == blocking {
                    beta[j] = 0.0;
                }
                let row = &gram[s];
                for &u in slots {
                    g[u] -= row[u] * delta;
                }
            }
            if blocking.is_none() {
                return;
            }
        }
    }

    /// Warm-started fits along a decreasing grid; failures are recorded and the path continues.
    pub fn path(
        &mut self,
        weights: &WeightVector,
        grid: &[f64],
    ) -> Vec<Result<FitResult, SolverError>> {
        let mut warm: Option<Vec<f64>> = None;
        let mut out = Vec::with_capacity(grid.len());
        for &lambda in grid {
            let fit = self.fit(weights, lambda, warm.as_deref());
            match &fit {
                Ok(f) => warm = Some(f.beta.clone()),
                Err(SolverError::NonConvergence { best, .. }) => warm = Some(best.beta.clone()),
                Err(_) => {}
            }
            out.push(fit);
        }
        out
    }
}

/// Cholesky factor of the Gram matrix restricted to a set of cached slots,
/// maintained under appends and removals.
#[derive(Default)]
struct SupportFactor {
    members: Vec<usize>,
    /// Lower-triangular rows; row `i` holds `i + 1` entries.
    rows: Vec<Vec<f64>>,
}

impl SupportFactor {
    /// Appends `slot`, or returns `(L⁻¹h, pivot)` when its pivot falls below the floor.
    fn append(&mut self, slot: usize, gram: &[Vec<f64>]) -> Result<(), (Vec<f64>, f64)> {
        let row = &gram[slot];
        let mut z: Vec<f64> = self.members.iter().map(|&m| row[m]).collect();
        for (i, r) in self.rows.iter().enumerate() {
            z[i] = (z[i] - dot(&r[..i], &z[..i])) / r[i];
        }
        let d = row[slot] - dot(&z, &z);
        if !(d > NEWTON_PIVOT_MIN * NEWTON_PIVOT_MIN * row[slot]) {
            return Err((z, d));
        }
        z.push(d.sqrt());
        self.rows.push(z);
        self.members.push(slot);
        Ok(())
    }

    /// Drops member `pos` with a rank-one update of the trailing block.
    fn remove(&mut self, pos: usize) {
        let mut x: Vec<f64> = self.rows[pos + 1..].iter().map(|r| r[pos]).collect();
        self.rows.remove(pos);
        self.members.remove(pos);
        for r in &mut self.rows[pos..] {
            r.remove(pos);
        }
        let m = self.rows.len();
        for (jj, j) in (pos..m).enumerate() {
            let ljj = self.rows[j][j];
            let rr = ljj.hypot(x[jj]);
            let (c, s) = (rr / ljj, x[jj] / ljj);
            self.rows[j][j] = rr;
            for (ii, i) in (j + 1..m).enumerate().map(|(o, i)| (jj + 1 + o, i)) {
                let lij = (self.rows[i][j] + s * x[ii]) / c;
                x[ii] = c * x[ii] - s * lij;
                self.rows[i][j] = lij;
            }
        }
    }

    /// Solves `L Lᵀ x = b`.
    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        for (i, r) in self.rows.iter().enumerate() {
            x[i] = (x[i] - dot(&r[..i], &x[..i])) / r[i];
        }
        self.back(&mut x);
        x
    }

    /// Solves `Lᵀ x = b` in place.
    fn back(&self, x: &mut [f64]) {
        for (i, r) in self.rows.iter().enumerate().rev() {
            x[i] /= r[i];
            let xi = x[i];
            for (xj, lij) in x[..i].iter_mut().zip(&r[..i]) {
                *xj -= lij * xi;
            }
        }
    }
}

/// Subgradient violation of one coordinate.
#[inline]
pub(crate) fn coordinate_violation(grad: f64, beta: f64, pen: f64) -> f64 {
    if beta > 0.0 {
        (grad - pen).abs()
    } else if beta < 0.0 {
        (grad + pen).abs()
    } else {
        (grad.abs() - pen).max(0.0)
    }
}

/// Max KKT violation of `beta` for the weighted problem, computed from scratch.
pub fn kkt_residual(data: &Dataset, weights: &WeightVector, lambda: f64, beta: &[f64]) -> f64 {
    let r = data.residual(beta);
    let n = data.n() as f64;
    (0..data.p())
        .filter(|&j| !weights.is_excluded(j) && !data.is_constant(j))
        .map(|j| {
            let g = dot(data.column(j), &r) / n;
            coordinate_violation(g, beta[j], lambda * weights.as_slice()[j])
        })
        .fold(0.0, f64::max)
}

/// Weighted objective `(1/2)‖y - Xβ‖_n² + λ Σ w_j |β_j|`.
pub fn weighted_objective(data: &Dataset, weights: &WeightVector, lambda: f64, beta: &[f64]) -> f64 {
    let r = data.residual(beta);
    let loss = 0.5 * r.iter().map(|v| v * v).sum::<f64>() / data.n() as f64;
    let pen: f64 = beta
        .iter()
        .zip(weights.as_slice())
        .filter(|(b, _)| **b != 0.0)
        .map(|(b, w)| w * b.abs())
        .sum();
    loss + lambda * pen
}

/// One fit with explicit tolerance and sweep budget.
pub fn fit_weighted_lasso(
    data: &Dataset,
    weights: &WeightVector,
    lambda: f64,
    warm_start: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> Result<FitResult, SolverError> {
    let opts = SolverOptions {
        tol,
        max_iter,
        track_objective: false,
    };
    CoordinateDescent::new(data, opts).fit(weights, lambda, warm_start)
}

pub fn fit_lasso_path(
    data: &Dataset,
    weights: &WeightVector,
    grid_size: usize,
    lambda_min_ratio: f64,
) -> Result<LambdaPath, SolverError> {
    let grid = lambda_grid(lambda_max(data, weights)?, grid_size, lambda_min_ratio)?;
    let fits = CoordinateDescent::new(data, SolverOptions::default()).path(weights, &grid);
    Ok(LambdaPath { grid, fits })
}

/// Least squares restricted to the columns in `t`; zero elsewhere.
pub fn ols_restricted(data: &Dataset, t: &[usize]) -> Result<Vec<f64>, SolverError> {
    let p = data.p();
    let mut cols: Vec<usize> = t.to_vec();
    cols.sort_unstable();
    cols.dedup();
    if let Some(&j) = cols.iter().find(|&&j| j >= p) {
        return Err(SolverError::DimensionMismatch {
            what: "restricted column index",
            expected: p,
            found: j,
        });
    }
    let mut beta = vec![0.0; p];
    if cols.is_empty() {
        return Ok(beta);
    }
    let k = cols.len();
    let n = data.n() as f64;
    let mut gram = DMatrix::zeros(k, k);
    let mut rhs = DVector::zeros(k);
    for (a, &i) in cols.iter().enumerate() {
        rhs[a] = dot(data.column(i), data.y().as_slice()) / n;
        for (b, &j) in cols.iter().enumerate().take(a + 1) {
            let v = dot(data.column(i), data.column(j)) / n;
            gram[(a, b)] = v;
            gram[(b, a)] = v;
        }
    }
    let eig = gram.clone().symmetric_eigen();
    let hi = eig.eigenvalues.max();
    let lo = eig.eigenvalues.min();
    let rcond = if hi > 0.0 { lo / hi } else { 0.0 };
    if !(rcond >= OLS_RCOND_MIN) {
        return Err(SolverError::SingularGram { size: k, rcond });
    }
    let sol = match gram.cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => return Err(SolverError::SingularGram { size: k, rcond }),
    };
    for (a, &i) in cols.iter().enumerate() {
        beta[i] = sol[a];
    }
    Ok(beta)
}
