//! Synthetic group-sparse benchmarks and Monte Carlo checks of the error bounds.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{estimation_error, Dataset, GroupStructure};
use crate::group_lasso::GroupLassoOptions;
use crate::model_selection::{cv_group_lasso, cv_weighted_lasso, fit_second_stage, CvPlan};
use crate::re_diagnostics::{
    group_re_statistic_with, re_statistic_with, ModeRequest, ReError, ReOptions, ReQuery,
};
use crate::solver::{fit_weighted_lasso, SolverOptions, WeightVector};
use crate::weights::WeightScheme;

/// Share of failed replicates above which a method summary is flagged.
pub const FAILED_REPLICATE_FLAG: f64 = 0.05;
/// Block length of the overlapping layout.
pub const OVERLAP_BLOCK: usize = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimulationError {
    #[error("invalid scenario: {0}")]
    SpecInvalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefKind {
    ConstantOne,
    StandardNormal,
}

impl FromStr for CoefKind {
    type Err = SimulationError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "const" | "constant" | "constant_one" => Ok(Self::ConstantOne),
            "norm" | "normal" | "standard_normal" => Ok(Self::StandardNormal),
            other => Err(SimulationError::SpecInvalid(format!("unknown coefficient kind `{other}`"))),
        }
    }
}

impl CoefKind {
    pub fn short(&self) -> &'static str {
        match self {
            Self::ConstantOne => "const",
            Self::StandardNormal => "norm",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Layout {
    /// Non-overlapping contiguous groups; the signal sits in two random groups.
    Contiguous { group_size: usize },
    /// `p/20` blocks of 20 plus 20 strided sets `{r, r+20, …}`; the signal is the first block.
    Overlap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Lasso,
    Adaptive,
    Coadaptive,
    GroupLasso,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Lasso, Method::Adaptive, Method::Coadaptive, Method::GroupLasso];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Lasso => "lasso",
            Self::Adaptive => "adaptive",
            Self::Coadaptive => "coadaptive",
            Self::GroupLasso => "grouplasso",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = SimulationError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| SimulationError::SpecInvalid(format!("unknown method `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: String,
    pub n: usize,
    pub p: usize,
    pub layout: Layout,
    pub s_size: usize,
    pub coef_kind: CoefKind,
    /// Realized signal variance over noise variance.
    pub snr: f64,
    /// Generate `y = Xβ` exactly, ignoring `snr`.
    pub noiseless: bool,
    pub n_reps: usize,
    pub seed: u64,
}

impl ScenarioSpec {
    /// The five non-overlapping benchmark scenarios, numbered from 1.
    pub fn scenario(index: u8, coef_kind: CoefKind) -> Result<Self, SimulationError> {
        let (n, group_size, s_size) = match index {
            1 => (150, 10, 10),
            2 => (150, 10, 20),
            3 => (150, 100, 10),
            4 => (500, 10, 20),
            5 => (500, 100, 10),
            _ => return Err(SimulationError::SpecInvalid(format!("no scenario {index}"))),
        };
        Ok(Self {
            name: index.to_string(),
            n,
            p: 2000,
            layout: Layout::Contiguous { group_size },
            s_size,
            coef_kind,
            snr: 2.0,
            noiseless: false,
            n_reps: 30,
            seed: 0,
        })
    }

    pub fn overlap(coef_kind: CoefKind) -> Self {
        Self {
            name: "overlap".into(),
            n: 500,
            p: 2000,
            layout: Layout::Overlap,
            s_size: OVERLAP_BLOCK,
            coef_kind,
            snr: 2.0,
            noiseless: false,
            n_reps: 30,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), SimulationError> {
        let bad = |m: String| Err(SimulationError::SpecInvalid(m));
        if self.n < 2 || self.p == 0 {
            return bad(format!("need n >= 2 and p >= 1, got n = {}, p = {}", self.n, self.p));
        }
        if !self.noiseless && !(self.snr > 0.0 && self.snr.is_finite()) {
            return bad(format!("snr must be positive and finite, got {}", self.snr));
        }
        match self.layout {
            Layout::Contiguous { group_size } => {
                if group_size == 0 || self.p % group_size != 0 {
                    return bad(format!("p = {} is not a multiple of group size {group_size}", self.p));
                }
                if self.p / group_size < 2 {
                    return bad("need at least two groups".into());
                }
                if self.s_size == 0 || self.s_size % 2 != 0 || self.s_size / 2 > group_size {
                    return bad(format!(
                        "support size {} must be even and at most twice the group size {group_size}",
                        self.s_size
                    ));
                }
            }
            Layout::Overlap => {
                if self.p % OVERLAP_BLOCK != 0 || self.p < OVERLAP_BLOCK {
                    return bad(format!("overlap layout needs p a multiple of {OVERLAP_BLOCK}, got {}", self.p));
                }
                if self.s_size != OVERLAP_BLOCK {
                    return bad(format!("overlap layout has support size {OVERLAP_BLOCK}, got {}", self.s_size));
                }
            }
        }
        Ok(())
    }

    pub fn groups(&self) -> Result<GroupStructure, SimulationError> {
        self.validate()?;
        let g = match self.layout {
            Layout::Contiguous { group_size } => GroupStructure::contiguous(self.p, group_size),
            Layout::Overlap => GroupStructure::new(overlap_groups(self.p), self.p),
        };
        g.map_err(|e| SimulationError::SpecInvalid(e.to_string()))
    }

    /// Weight scheme used by the co-adaptive method on this layout.
    pub fn coadaptive_scheme(&self) -> WeightScheme {
        match self.layout {
            Layout::Contiguous { .. } => WeightScheme::CoadaptiveNonoverlap,
            Layout::Overlap => WeightScheme::CoadaptiveMin,
        }
    }
}

/// Contiguous blocks of 20 followed by the 20 residue classes modulo 20.
pub fn overlap_groups(p: usize) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = (0..p / OVERLAP_BLOCK)
        .map(|i| (i * OVERLAP_BLOCK..(i + 1) * OVERLAP_BLOCK).collect())
        .collect();
    groups.extend((0..OVERLAP_BLOCK).map(|r| (r..p).step_by(OVERLAP_BLOCK).collect()));
    groups
}

/// One generated replicate on the raw scale.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub groups: GroupStructure,
    pub beta_true: Vec<f64>,
    pub support: Vec<usize>,
    pub sigma: f64,
}

fn replicate_rng(seed: u64, rep_index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep_index as u64);
    rng
}

pub fn generate_instance(spec: &ScenarioSpec, rep_index: usize) -> Result<Instance, SimulationError> {
    if spec.layout == Layout::Overlap {
        return generate_overlap_instance(spec, rep_index);
    }
    let groups = spec.groups()?;
    let Layout::Contiguous { group_size } = spec.layout else { unreachable!() };
    let mut rng = replicate_rng(spec.seed, rep_index);
    let x = gaussian_design(&mut rng, spec.n, spec.p);
    let chosen = sample(&mut rng, groups.len(), 2).into_vec();
    let mut support = Vec::with_capacity(spec.s_size);
    for g in chosen {
        let base = g * group_size;
        support.extend(sample(&mut rng, group_size, spec.s_size / 2).into_iter().map(|i| base + i));
    }
    support.sort_unstable();
    Ok(finish(spec, rng, x, groups, support))
}

pub fn generate_overlap_instance(spec: &ScenarioSpec, rep_index: usize) -> Result<Instance, SimulationError> {
    if spec.layout != Layout::Overlap {
        return Err(SimulationError::SpecInvalid("scenario does not use the overlap layout".into()));
    }
    let groups = spec.groups()?;
    let mut rng = replicate_rng(spec.seed, rep_index);
    let x = gaussian_design(&mut rng, spec.n, spec.p);
    let support = (0..OVERLAP_BLOCK).collect();
    Ok(finish(spec, rng, x, groups, support))
}

fn gaussian_design(rng: &mut ChaCha8Rng, n: usize, p: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, p, |_, _| rng.sample(StandardNormal))
}

fn finish(
    spec: &ScenarioSpec,
    mut rng: ChaCha8Rng,
    x: DMatrix<f64>,
    groups: GroupStructure,
    support: Vec<usize>,
) -> Instance {
    let mut beta = vec![0.0; spec.p];
    for &j in &support {
        beta[j] = match spec.coef_kind {
            CoefKind::ConstantOne => 1.0,
            CoefKind::StandardNormal => rng.sample(StandardNormal),
        };
    }
    let mut signal = DVector::zeros(spec.n);
    for &j in &support {
        signal.axpy(beta[j], &x.column(j), 1.0);
    }
    let sigma = if spec.noiseless {
        0.0
    } else {
        (signal.norm_squared() / (spec.n as f64 * spec.snr)).sqrt()
    };
    let noise = DVector::from_fn(spec.n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let y = signal + noise * sigma;
    Instance {
        x,
        y,
        groups,
        beta_true: beta,
        support,
        sigma,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchmarkConfig {
    pub cv_folds: usize,
    pub grid_size: usize,
    pub lambda_min_ratio: f64,
    pub solver: SolverOptions,
    pub group: GroupLassoOptions,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            cv_folds: 10,
            grid_size: crate::solver::DEFAULT_GRID_SIZE,
            lambda_min_ratio: crate::solver::DEFAULT_LAMBDA_MIN_RATIO,
            solver: SolverOptions::default(),
            group: GroupLassoOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicateRecord {
    pub rep_index: usize,
    pub seed: u64,
    pub sigma: f64,
    /// Squared estimation error per method, in report method order.
    pub errors: Vec<Option<f64>>,
    pub failures: Vec<Option<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodSummary {
    pub method: Method,
    pub mean: Option<f64>,
    pub median: Option<f64>,
    pub stderr: Option<f64>,
    pub n_ok: usize,
    pub n_failed: usize,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub scenario: ScenarioSpec,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub summaries: Vec<MethodSummary>,
    pub records: Vec<ReplicateRecord>,
}

impl SimulationReport {
    pub fn summary(&self, method: Method) -> Option<&MethodSummary> {
        self.summaries.iter().find(|s| s.method == method)
    }

    pub fn median(&self, method: Method) -> Option<f64> {
        self.summary(method).and_then(|s| s.median)
    }

    /// Table-shaped CSV: one row per method plus an absent sparse-group-lasso row.
    pub fn to_csv(&self) -> Result<String, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["method", "scenario", "coef", "mean", "median", "stderr", "n_ok", "n_failed", "note"])?;
        let fmt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        for s in &self.summaries {
            w.write_record([
                s.method.name().to_string(),
                self.scenario.name.clone(),
                self.scenario.coef_kind.short().to_string(),
                fmt(s.mean),
                fmt(s.median),
                fmt(s.stderr),
                s.n_ok.to_string(),
                s.n_failed.to_string(),
                if s.flagged { "more than 5% of replicates failed".into() } else { String::new() },
            ])?;
        }
        w.write_record([
            "sgl",
            &self.scenario.name,
            self.scenario.coef_kind.short(),
            "",
            "",
            "",
            "0",
            "0",
            "absent: sparse group lasso is not implemented",
        ])?;
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

fn cv_seed(seed: u64, rep_index: usize) -> u64 {
    seed ^ (rep_index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Fits every requested method on one replicate; errors are squared distances on the raw scale.
pub fn run_replicate(
    spec: &ScenarioSpec,
    rep_index: usize,
    methods: &[Method],
    cfg: &BenchmarkConfig,
) -> Result<ReplicateRecord, SimulationError> {
    let inst = generate_instance(spec, rep_index)?;
    let mut errors = vec![None; methods.len()];
    let mut failures = vec![None; methods.len()];
    let data = match Dataset::standardize(&inst.x, &inst.y) {
        Ok(d) => d,
        Err(e) => {
            failures.iter_mut().for_each(|f| *f = Some(e.to_string()));
            return Ok(ReplicateRecord { rep_index, seed: spec.seed, sigma: inst.sigma, errors, failures });
        }
    };
    let plan = CvPlan {
        grid_size: cfg.grid_size,
        lambda_min_ratio: cfg.lambda_min_ratio,
        ..CvPlan::new(cfg.cv_folds, cv_seed(spec.seed, rep_index))
    };
    let score = |beta: &[f64]| {
        let (raw, _) = data.to_raw(beta);
        estimation_error(&raw, &inst.beta_true).map_err(|e| e.to_string())
    };

    let needs_stage1 = methods.iter().any(|m| matches!(m, Method::Lasso | Method::Adaptive | Method::Coadaptive));
    let stage1 = needs_stage1.then(|| cv_weighted_lasso(&data, &WeightVector::ones(data.p()), &plan, cfg.solver));
    let singletons = GroupStructure::singletons(data.p());

    for (slot, &method) in methods.iter().enumerate() {
        let outcome: Result<f64, String> = match method {
            Method::Lasso => match stage1.as_ref().expect("stage one requested") {
                Ok(s1) => score(&s1.fit.beta),
                Err(e) => Err(e.to_string()),
            },
            Method::Adaptive | Method::Coadaptive => match stage1.as_ref().expect("stage one requested") {
                Ok(s1) => {
                    let (groups, scheme) = if method == Method::Adaptive {
                        (&singletons, WeightScheme::Adaptive)
                    } else {
                        (&inst.groups, spec.coadaptive_scheme())
                    };
                    fit_second_stage(&data, groups, scheme, s1, &plan, cfg.solver)
                        .map_err(|e| e.to_string())
                        .and_then(|r| score(&r.stage2.beta))
                }
                Err(e) => Err(e.to_string()),
            },
            Method::GroupLasso => cv_group_lasso(&data, &inst.groups, &plan, cfg.group)
                .map_err(|e| e.to_string())
                .and_then(|r| score(&r.fit.beta)),
        };
        match outcome {
            Ok(v) => errors[slot] = Some(v),
            Err(e) => failures[slot] = Some(e),
        }
    }
    Ok(ReplicateRecord { rep_index, seed: spec.seed, sigma: inst.sigma, errors, failures })
}

pub fn run_benchmark(
    spec: &ScenarioSpec,
    methods: &[Method],
    cfg: &BenchmarkConfig,
) -> Result<SimulationReport, SimulationError> {
    spec.validate()?;
    if spec.n < cfg.cv_folds {
        return Err(SimulationError::SpecInvalid(format!(
            "{} folds need at least {} samples",
            cfg.cv_folds, cfg.cv_folds
        )));
    }
    let records = (0..spec.n_reps)
        .into_par_iter()
        .map(|r| run_replicate(spec, r, methods, cfg))
        .collect::<Result<Vec<_>, _>>()?;
    let summaries = methods
        .iter()
        .enumerate()
        .map(|(k, &method)| {
            let vals: Vec<f64> = records.iter().filter_map(|r| r.errors[k]).collect();
            let n_failed = records.len() - vals.len();
            let (mean, median, stderr) = summarize(&vals);
            MethodSummary {
                method,
                mean,
                median,
                stderr,
                n_ok: vals.len(),
                n_failed,
                flagged: n_failed as f64 > FAILED_REPLICATE_FLAG * records.len() as f64,
            }
        })
        .collect();
    Ok(SimulationReport {
        scenario: spec.clone(),
        seed: spec.seed,
        methods: methods.to_vec(),
        summaries,
        records,
    })
}

fn summarize(v: &[f64]) -> (Option<f64>, Option<f64>, Option<f64>) {
    if v.is_empty() {
        return (None, None, None);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let mid = s.len() / 2;
    let median = if s.len() % 2 == 0 { 0.5 * (s[mid - 1] + s[mid]) } else { s[mid] };
    let stderr = (v.len() >= 2).then(|| {
        let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    });
    (Some(mean), Some(median), stderr)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailCheck {
    pub frequency: f64,
    pub mc_stderr: f64,
    /// `exp(-t/2) / sqrt(π (t + 2 log k))`
    pub bound: f64,
    pub threshold: f64,
    pub draws: usize,
    pub holds: bool,
}

/// Monte Carlo frequency of `max_j |x_jᵀε/n| > σ sqrt((t + 2 log k)/n)` on a fixed
/// Gaussian design whose columns have `‖x_j‖_n = 1`.
pub fn max_correlation_tail(n: usize, k: usize, t: f64, sigma: f64, draws: usize, seed: u64) -> TailCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = gaussian_design(&mut rng, n, k);
    for mut c in x.column_iter_mut() {
        let norm = (c.norm_squared() / n as f64).sqrt();
        c /= norm;
    }
    let nf = n as f64;
    let level = t + 2.0 * (k as f64).ln();
    let threshold = sigma * (level / nf).sqrt();
    let mut hits = 0usize;
    let mut eps = DVector::zeros(n);
    for _ in 0..draws {
        eps.iter_mut().for_each(|e| *e = sigma * rng.sample::<f64, _>(StandardNormal));
        let corr = x.tr_mul(&eps);
        if corr.iter().any(|c| (c / nf).abs() > threshold) {
            hits += 1;
        }
    }
    let frequency = hits as f64 / draws as f64;
    let mc_stderr = (frequency * (1.0 - frequency) / draws as f64).sqrt();
    let bound = (-t / 2.0).exp() / (std::f64::consts::PI * level).sqrt();
    TailCheck {
        frequency,
        mc_stderr,
        bound,
        threshold,
        draws,
        holds: frequency <= bound + 3.0 * mc_stderr,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupErrorCheck {
    pub lambda: f64,
    pub max_correlation: f64,
    pub phi: f64,
    pub phi_group: f64,
    /// Per group: `(‖β̂_G - β_G‖/√|G|, bound)`.
    pub groups: Vec<(f64, f64)>,
    pub holds: bool,
}

/// Compares group-wise first-stage errors with their bound at a given `λ ≥ 2 max|Xᵀε/n|`.
///
/// `data` must be standardized with `y` generated as `Xβ + ε` on that scale, so
/// the centered residual at the truth is the centered noise.
pub fn group_error_check(
    data: &Dataset,
    groups: &GroupStructure,
    beta: &[f64],
    lambda: f64,
) -> Result<GroupErrorCheck, ReError> {
    let n = data.n() as f64;
    let resid = data.residual(beta);
    let max_corr = (0..data.p())
        .map(|j| crate::data::dot(data.column(j), &resid).abs() / n)
        .fold(0.0, f64::max);
    let support: Vec<usize> = (0..beta.len()).filter(|&j| beta[j] != 0.0).collect();
    let opts = ReOptions { mode: ModeRequest::Exact, ..ReOptions::default() };
    let q = ReQuery::new(3.0, &support);
    let phi = re_statistic_with(data, &q, &opts)?.value.sqrt();
    let phi_group = group_re_statistic_with(data, &q.with_groups(groups.clone()), &opts)?.value.sqrt();
    let fit = fit_weighted_lasso(data, &WeightVector::ones(data.p()), lambda, None, 1e-12, 100_000)
        .map_err(|e| ReError::InvalidQuery(e.to_string()))?;
    let s = (support.len() as f64).sqrt();
    let mut rows = Vec::with_capacity(groups.len());
    let mut holds = true;
    for g in groups.groups() {
        let size = (g.len() as f64).sqrt();
        let err = g.iter().map(|&j| (fit.beta[j] - beta[j]).powi(2)).sum::<f64>().sqrt() / size;
        let bound = 2.0 * (lambda + max_corr) * s / (phi_group * phi * size);
        holds &= err <= bound * (1.0 + 1e-9);
        rows.push((err, bound));
    }
    Ok(GroupErrorCheck {
        lambda,
        max_correlation: max_corr,
        phi,
        phi_group,
        groups: rows,
        holds,
    })
}
