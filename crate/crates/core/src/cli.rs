//! Command-line front end: `fit`, `cv`, `simulate` and `diagnose`.
//!
//! User-facing column indices are 1-based; conversion happens while parsing
//! and while writing output. Loss convention: `(1/2)‖y - Xβ‖_n²` with
//! `‖v‖_n² = (1/n) Σ v_i²`.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::{DMatrix, DVector};
use serde_json::{json, Value};

use coadaptive::simulation::{run_benchmark, BenchmarkConfig, CoefKind, Method, ScenarioSpec};
use coadaptive::{
    check_lemma_chain_with, compute_weights, condition_report, cv_group_lasso, cv_weighted_lasso,
    fit_weighted_lasso, BlockCoordinateDescent, ConditionInputs, CvError, CvPlan, CvResult,
    Dataset, FitResult, GroupFitResult, GroupLassoError, GroupLassoOptions, GroupStructure,
    ModeRequest, ReOptions, SolverError, SolverOptions, WeightScheme, WeightVector,
};

#[derive(Parser, Debug)]
#[command(
    name = "coadaptive",
    version,
    about = "Lasso, Adaptive, Co-adaptive and Group Lasso fits with CV and diagnostics"
)]
pub struct Cli {
    /// Worker threads (defaults to all cores). Output does not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit one model; tuning parameters not given on the command line are chosen by CV.
    Fit(FitArgs),
    /// Cross-validate a method and report the curve and the selected fit.
    Cv(FitArgs),
    /// Run the synthetic benchmark.
    Simulate(SimulateArgs),
    /// Restricted-eigenvalue diagnostics for a design.
    Diagnose(DiagnoseArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Lasso,
    Adaptive,
    Coadaptive,
    Grouplasso,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug)]
struct Inputs {
    /// Design matrix CSV, one sample per row (an optional header row is skipped).
    #[arg(long)]
    x: PathBuf,
    /// Response CSV, one value per row.
    #[arg(long)]
    y: Option<PathBuf>,
    /// Group file: `{"groups": [[1,2],[3,4,5]]}` with 1-based column indices.
    #[arg(long)]
    groups: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CvArgs {
    #[arg(long, default_value_t = 10)]
    cv_folds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = coadaptive::solver::DEFAULT_GRID_SIZE)]
    grid_size: usize,
    #[arg(long, default_value_t = coadaptive::solver::DEFAULT_LAMBDA_MIN_RATIO)]
    lambda_min_ratio: f64,
    /// Choose the largest tuning parameter within one standard error of the minimum.
    #[arg(long)]
    one_se: bool,
}

impl CvArgs {
    fn plan(&self) -> CvPlan {
        CvPlan {
            grid_size: self.grid_size,
            lambda_min_ratio: self.lambda_min_ratio,
            one_se: self.one_se,
            ..CvPlan::new(self.cv_folds, self.seed)
        }
    }
}

#[derive(Args, Debug)]
struct FitArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long, value_enum)]
    method: MethodArg,
    /// Tuning parameter (stage 1 for the two-stage methods).
    #[arg(long)]
    lambda: Option<f64>,
    /// Stage-2 tuning parameter of the two-stage methods.
    #[arg(long)]
    mu: Option<f64>,
    /// Weight scheme for `coadaptive`: coadaptive, coadaptive-min, coadaptive-sum or coadaptive-trimmed.
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    trim_fraction: Option<f64>,
    /// Disable the `√|G|` group penalty factor.
    #[arg(long)]
    no_size_scaling: bool,
    #[command(flatten)]
    cv: CvArgs,
    #[arg(long, default_value_t = coadaptive::solver::DEFAULT_TOL)]
    tol: f64,
    #[arg(long, default_value_t = coadaptive::solver::DEFAULT_MAX_ITER)]
    max_iter: usize,
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// 1..5 or `overlap`.
    #[arg(long)]
    scenario: String,
    #[arg(long, default_value = "const")]
    coef: String,
    #[arg(long, default_value_t = 30)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated subset of lasso,adaptive,coadaptive,grouplasso.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "lasso,adaptive,coadaptive,grouplasso"
    )]
    methods: Vec<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long, default_value_t = 10)]
    cv_folds: usize,
    #[arg(long, default_value_t = coadaptive::solver::DEFAULT_GRID_SIZE)]
    grid_size: usize,
    #[arg(long, default_value_t = coadaptive::solver::DEFAULT_LAMBDA_MIN_RATIO)]
    lambda_min_ratio: f64,
    /// JSON report path (stdout when absent).
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Table-shaped CSV path.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DiagnoseArgs {
    #[command(flatten)]
    inputs: Inputs,
    /// Support set S, 1-based and comma-separated.
    #[arg(long, value_delimiter = ',', required = true)]
    support: Vec<usize>,
    /// Cone parameter L of the chain.
    #[arg(long, default_value_t = 3.0)]
    l: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::Auto)]
    mode: ModeArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 50)]
    random_starts: usize,
    /// Coefficient CSV (one value per row) for the condition report.
    #[arg(long)]
    beta: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 0.0)]
    gamma1: f64,
    #[arg(long, default_value_t = 0.0)]
    gamma2: f64,
    /// Set T of the C2 ratio, 1-based and comma-separated.
    #[arg(long, value_delimiter = ',')]
    t: Option<Vec<usize>>,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Auto,
    Exact,
    Heuristic,
}

/// Failure with its exit status.
#[derive(Debug)]
pub struct CliError {
    kind: &'static str,
    message: String,
    path: Option<PathBuf>,
    code: i32,
}

impl CliError {
    fn data(message: impl Into<String>) -> Self {
        Self {
            kind: "data",
            message: message.into(),
            path: None,
            code: 2,
        }
    }

    fn file(path: &Path, message: impl Into<String>) -> Self {
        Self {
            kind: "data",
            message: message.into(),
            path: Some(path.to_path_buf()),
            code: 2,
        }
    }

    fn convergence(message: impl Into<String>) -> Self {
        Self {
            kind: "non_convergence",
            message: message.into(),
            path: None,
            code: 3,
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.code
    }

    pub fn to_json(&self) -> String {
        let mut e = json!({ "kind": self.kind, "message": self.message });
        if let Some(p) = &self.path {
            e["path"] = json!(p.display().to_string());
        }
        json!({ "error": e }).to_string()
    }
}

impl From<CvError> for CliError {
    fn from(e: CvError) -> Self {
        if e.is_non_convergence() {
            CliError::convergence(e.to_string())
        } else {
            CliError::data(e.to_string())
        }
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::NonConvergence { .. } => CliError::convergence(e.to_string()),
            _ => CliError::data(e.to_string()),
        }
    }
}

impl From<GroupLassoError> for CliError {
    fn from(e: GroupLassoError) -> Self {
        match e {
            GroupLassoError::NonConvergence { .. } => CliError::convergence(e.to_string()),
            _ => CliError::data(e.to_string()),
        }
    }
}

macro_rules! data_err {
    ($e:expr) => {
        $e.map_err(|e| CliError::data(e.to_string()))
    };
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(j) = cli.jobs {
        data_err!(rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build_global())?;
    }
    match cli.command {
        Command::Fit(a) => cmd_fit(&a, false),
        Command::Cv(a) => cmd_fit(&a, true),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Diagnose(a) => cmd_diagnose(&a),
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::file(path, format!("cannot read {}: {e}", path.display())))
}

/// Numeric CSV rows; a first row that does not parse is taken as a header.
fn read_rows(path: &Path) -> Result<Vec<Vec<f64>>, CliError> {
    let text = read_text(path)?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::file(path, format!("{}: {e}", path.display())))?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(v) => rows.push(v),
            Err(_) if i == 0 => continue,
            Err(e) => {
                return Err(CliError::file(
                    path,
                    format!("{} line {}: {e}", path.display(), i + 1),
                ))
            }
        }
    }
    if rows.is_empty() {
        return Err(CliError::file(
            path,
            format!("{} holds no numeric rows", path.display()),
        ));
    }
    Ok(rows)
}

fn read_matrix(path: &Path) -> Result<DMatrix<f64>, CliError> {
    let rows = read_rows(path)?;
    let p = rows[0].len();
    if let Some(i) = rows.iter().position(|r| r.len() != p) {
        return Err(CliError::file(
            path,
            format!("row {} has {} fields, expected {p}", i + 1, rows[i].len()),
        ));
    }
    Ok(DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j]))
}

fn read_vector(path: &Path) -> Result<DVector<f64>, CliError> {
    let rows = read_rows(path)?;
    if rows.iter().any(|r| r.len() != 1) {
        return Err(CliError::file(
            path,
            format!("{} must hold one value per row", path.display()),
        ));
    }
    Ok(DVector::from_iterator(
        rows.len(),
        rows.iter().map(|r| r[0]),
    ))
}

struct Loaded {
    data: Dataset,
    groups: Option<GroupStructure>,
}

/// Parses every input file before any fitting starts.
fn load(inputs: &Inputs, need_y: bool) -> Result<Loaded, CliError> {
    let x = read_matrix(&inputs.x)?;
    let y = match &inputs.y {
        Some(p) => read_vector(p)?,
        None if need_y => return Err(CliError::data("--y is required")),
        None => DVector::zeros(x.nrows()),
    };
    let groups = match &inputs.groups {
        Some(path) => Some(
            GroupStructure::from_json(&read_text(path)?, x.ncols())
                .map_err(|e| CliError::file(path, format!("{}: {e}", path.display())))?,
        ),
        None => None,
    };
    if y.len() != x.nrows() {
        return Err(CliError::data(format!(
            "x has {} rows but y has {}",
            x.nrows(),
            y.len()
        )));
    }
    let data = data_err!(Dataset::standardize(&x, &y))?;
    Ok(Loaded { data, groups })
}

fn one_based(v: &[usize]) -> Vec<usize> {
    v.iter().map(|j| j + 1).collect()
}

fn zero_based(v: &[usize], p: usize, what: &str) -> Result<Vec<usize>, CliError> {
    v.iter()
        .map(|&j| {
            if j == 0 || j > p {
                Err(CliError::data(format!("{what} index {j} outside 1..={p}")))
            } else {
                Ok(j - 1)
            }
        })
        .collect()
}

fn write_output(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text)
            .map_err(|e| CliError::file(p, format!("cannot write {}: {e}", p.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn fit_json(data: &Dataset, beta: &[f64], lambda: f64, kkt: f64, iterations: usize) -> Value {
    let (coef, intercept) = data.to_raw(beta);
    let active: Vec<usize> = (0..beta.len()).filter(|&j| beta[j] != 0.0).collect();
    json!({
        "lambda": lambda,
        "intercept": intercept,
        "coefficients": coef,
        "active_set": one_based(&active),
        "kkt_residual": kkt,
        "iterations": iterations,
    })
}

fn lasso_json(data: &Dataset, f: &FitResult) -> Value {
    fit_json(data, &f.beta, f.lambda, f.kkt_residual, f.iterations)
}

fn group_json(data: &Dataset, f: &GroupFitResult) -> Value {
    let mut v = fit_json(data, &f.beta, f.lambda, f.block_kkt_residual, f.iterations);
    v["active_groups"] = json!(one_based(&f.active_groups));
    v
}

fn cv_json(cv: &CvResult) -> Value {
    json!({
        "grid": cv.grid,
        "cv_curve": cv.cv_curve,
        "cv_se": cv.cv_se,
        "best_index": cv.best_index + 1,
        "best_lambda": cv.best_lambda,
        "failed_cells": cv.failed_cells,
        "total_cells": cv.total_cells,
        "flagged": cv.flagged,
    })
}

fn weight_summary(w: &WeightVector) -> Value {
    let finite: Vec<f64> = w
        .as_slice()
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .collect();
    let excluded: Vec<usize> = (0..w.len()).filter(|&j| w.is_excluded(j)).collect();
    json!({
        "finite": finite.len(),
        "excluded": w.len() - finite.len(),
        "excluded_indices": one_based(&excluded),
        "min": finite.iter().copied().reduce(f64::min),
        "max": finite.iter().copied().reduce(f64::max),
    })
}

fn cmd_fit(a: &FitArgs, report_cv: bool) -> Result<(), CliError> {
    let Loaded { data, groups } = load(&a.inputs, true)?;
    let p = data.p();
    let plan = a.cv.plan();
    let sopts = SolverOptions {
        tol: a.tol,
        max_iter: a.max_iter,
        track_objective: false,
    };
    let method = match a.method {
        MethodArg::Lasso => "lasso",
        MethodArg::Adaptive => "adaptive",
        MethodArg::Coadaptive => "coadaptive",
        MethodArg::Grouplasso => "grouplasso",
    };
    let mut out = json!({ "method": method, "n": data.n(), "p": p });

    match a.method {
        MethodArg::Lasso => {
            let ones = WeightVector::ones(p);
            let fit = match a.lambda {
                Some(l) if !report_cv => {
                    fit_weighted_lasso(&data, &ones, l, None, a.tol, a.max_iter)?
                }
                _ => {
                    let r = cv_weighted_lasso(&data, &ones, &plan, sopts)?;
                    out["cv"] = cv_json(&r.cv);
                    r.fit
                }
            };
            out["fit"] = lasso_json(&data, &fit);
        }
        MethodArg::Grouplasso => {
            let groups =
                groups.ok_or_else(|| CliError::data("--groups is required for grouplasso"))?;
            let gopts = GroupLassoOptions {
                tol: a.tol,
                max_iter: a.max_iter,
                scale_by_size: !a.no_size_scaling,
            };
            let fit = match a.lambda {
                Some(l) if !report_cv => {
                    BlockCoordinateDescent::new(&data, &groups, gopts)?.fit(l, None)?
                }
                _ => {
                    let r = cv_group_lasso(&data, &groups, &plan, gopts)?;
                    out["cv"] = cv_json(&r.cv);
                    r.fit
                }
            };
            out["fit"] = group_json(&data, &fit);
        }
        MethodArg::Adaptive | MethodArg::Coadaptive => {
            let (scheme, groups) = if a.method == MethodArg::Adaptive {
                if a.scheme.is_some() || a.trim_fraction.is_some() {
                    return Err(CliError::data(
                        "--scheme and --trim-fraction apply to coadaptive only",
                    ));
                }
                (WeightScheme::Adaptive, GroupStructure::singletons(p))
            } else {
                let groups =
                    groups.ok_or_else(|| CliError::data("--groups is required for coadaptive"))?;
                let default = if groups.is_overlapping() {
                    "coadaptive-min"
                } else {
                    "coadaptive"
                };
                let name = a.scheme.as_deref().unwrap_or(default);
                let scheme = data_err!(WeightScheme::parse(name, a.trim_fraction))?;
                data_err!(scheme.check_groups(&groups))?;
                (scheme, groups)
            };
            let ones = WeightVector::ones(p);
            let stage1 = match a.lambda {
                Some(l) if !report_cv => {
                    fit_weighted_lasso(&data, &ones, l, None, a.tol, a.max_iter)?
                }
                _ => {
                    let r = cv_weighted_lasso(&data, &ones, &plan, sopts)?;
                    out["stage1_cv"] = cv_json(&r.cv);
                    r.fit
                }
            };
            let weights = data_err!(compute_weights(&stage1.beta, &groups, scheme))?;
            out["scheme"] = json!(scheme);
            out["stage1"] = lasso_json(&data, &stage1);
            out["weights"] = weight_summary(&weights);
            if weights.finite_count() == 0 {
                out["all_excluded"] = json!(true);
                out["fit"] = fit_json(&data, &vec![0.0; p], 0.0, 0.0, 0);
            } else {
                let stage2 = match a.mu {
                    Some(mu) if !report_cv => {
                        fit_weighted_lasso(&data, &weights, mu, None, a.tol, a.max_iter)?
                    }
                    _ => {
                        let r = cv_weighted_lasso(&data, &weights, &plan, sopts)?;
                        out["stage2_cv"] = cv_json(&r.cv);
                        r.fit
                    }
                };
                out["all_excluded"] = json!(false);
                out["mu"] = json!(stage2.lambda);
                out["fit"] = lasso_json(&data, &stage2);
            }
        }
    }
    let text = match a.format {
        Format::Json => data_err!(serde_json::to_string_pretty(&out))?,
        Format::Csv => coefficient_csv(&out["fit"])?,
    };
    write_output(a.output.as_deref(), &text)
}

fn coefficient_csv(fit: &Value) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    data_err!(w.write_record(["index", "coefficient"]))?;
    data_err!(w.write_record(["intercept".to_string(), fit["intercept"].to_string()]))?;
    for (j, c) in fit["coefficients"]
        .as_array()
        .into_iter()
        .flatten()
        .enumerate()
    {
        data_err!(w.write_record([(j + 1).to_string(), c.to_string()]))?;
    }
    let bytes = data_err!(w.into_inner())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn cmd_simulate(a: &SimulateArgs) -> Result<(), CliError> {
    let coef: CoefKind = data_err!(a.coef.parse::<CoefKind>())?;
    let mut spec = match a.scenario.as_str() {
        "overlap" => ScenarioSpec::overlap(coef),
        s => {
            let idx: u8 = s
                .parse()
                .map_err(|_| CliError::data(format!("unknown scenario {s}")))?;
            data_err!(ScenarioSpec::scenario(idx, coef))?
        }
    };
    spec.n_reps = a.reps;
    spec.seed = a.seed;
    if let Some(n) = a.n {
        spec.n = n;
    }
    if let Some(p) = a.p {
        spec.p = p;
    }
    let methods: Vec<Method> = a
        .methods
        .iter()
        .map(|m| data_err!(m.parse::<Method>()))
        .collect::<Result<_, _>>()?;
    let cfg = BenchmarkConfig {
        cv_folds: a.cv_folds,
        grid_size: a.grid_size,
        lambda_min_ratio: a.lambda_min_ratio,
        ..BenchmarkConfig::default()
    };
    let report = data_err!(run_benchmark(&spec, &methods, &cfg))?;
    if let Some(path) = &a.csv {
        let csv = data_err!(report.to_csv())?;
        write_output(Some(path), &csv)?;
    }
    let text = data_err!(serde_json::to_string_pretty(&report))?;
    write_output(a.output.as_deref(), &text)
}

fn cmd_diagnose(a: &DiagnoseArgs) -> Result<(), CliError> {
    let beta_raw = a.beta.as_deref().map(read_vector).transpose()?;
    let Loaded { data, groups } = load(&a.inputs, false)?;
    let p = data.p();
    let groups = groups.unwrap_or_else(|| GroupStructure::singletons(p));
    let s = zero_based(&a.support, p, "support")?;
    let opts = ReOptions {
        mode: match a.mode {
            ModeArg::Auto => ModeRequest::Auto,
            ModeArg::Exact => ModeRequest::Exact,
            ModeArg::Heuristic => ModeRequest::Heuristic,
        },
        random_starts: a.random_starts,
        seed: a.seed,
        ..ReOptions::default()
    };
    let chain = data_err!(check_lemma_chain_with(&data, &groups, &s, a.l, &opts))?;
    let mut out = json!({
        "n": data.n(),
        "p": p,
        "support": one_based(&s),
        "l": a.l,
        "chain": {
            "values": [
                chain.cover_size as f64 * chain.phi2,
                chain.phi2_group,
                chain.phi2_min_extended,
                chain.phi2_deflated,
            ],
            "cover_times_phi2": chain.cover_size as f64 * chain.phi2,
            "phi2_group": chain.phi2_group,
            "phi2_min_extended": chain.phi2_min_extended,
            "phi2_deflated": chain.phi2_deflated,
            "cover_size": chain.cover_size,
            "phi2": chain.phi2,
            "holds": chain.holds,
        },
    });
    if let Some(beta) = beta_raw {
        if beta.len() != p {
            return Err(CliError::data(format!(
                "beta has {} entries, expected {p}",
                beta.len()
            )));
        }
        let t = a.t.as_deref().map(|t| zero_based(t, p, "T")).transpose()?;
        let inputs = ConditionInputs {
            groups: &groups,
            s: &s,
            beta: beta.as_slice(),
            sigma: a.sigma,
            gamma1: a.gamma1,
            gamma2: a.gamma2,
            t: t.as_deref(),
        };
        let report = data_err!(condition_report(&data, &inputs, &opts))?;
        out["conditions"] = data_err!(serde_json::to_value(&report))?;
    }
    let text = data_err!(serde_json::to_string_pretty(&out))?;
    write_output(a.output.as_deref(), &text)
}
