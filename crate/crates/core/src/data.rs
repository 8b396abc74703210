//! Data model: standardized datasets, group structures and sparsity patterns.
//!
//! All solver arithmetic uses the empirical norm `‖v‖_n = sqrt((1/n) Σ v_i²)`,
//! so a standardized column has `‖x_j‖_n = 1` and the least-squares loss is
//! `(1/2n) ‖y - Xβ‖²`.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Columns whose centered empirical norm falls below this are treated as constant.
const CONSTANT_COLUMN_EPS: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DataError {
    #[error("dimension mismatch: {what} (expected {expected}, found {found})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("need at least 2 samples, found {0}")]
    TooFewSamples(usize),
    #[error("design matrix has no columns")]
    EmptyDesign,
    #[error("index {index} out of range for {p} columns")]
    IndexOutOfRange { index: usize, p: usize },
    #[error("group {0} is empty")]
    EmptyGroup(usize),
    #[error("group {group} lists column {index} more than once")]
    DuplicateIndex { group: usize, index: usize },
    #[error("column {0} is not covered by any group")]
    UncoveredColumn(usize),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("parse error: {0}")]
    Parse(String),
}

/// Centered and scaled design with the offsets needed to map back to raw units.
#[derive(Debug, Clone)]
pub struct Dataset {
    x: DMatrix<f64>,
    y: DVector<f64>,
    column_scales: Vec<f64>,
    x_means: Vec<f64>,
    y_mean: f64,
    constant_columns: Vec<usize>,
    col_sq_norms: Vec<f64>,
}

impl Dataset {
    /// Centers every column and the response and rescales columns to unit empirical norm.
    ///
    /// Zero-variance columns are kept (as all-zero columns) and listed in
    /// [`Dataset::constant_columns`]; solvers pin their coefficients to zero.
    pub fn standardize(raw_x: &DMatrix<f64>, raw_y: &DVector<f64>) -> Result<Self, DataError> {
        let (n, p) = raw_x.shape();
        if raw_y.len() != n {
            return Err(DataError::DimensionMismatch {
                what: "response length",
                expected: n,
                found: raw_y.len(),
            });
        }
        if n < 2 {
            return Err(DataError::TooFewSamples(n));
        }
        if p == 0 {
            return Err(DataError::EmptyDesign);
        }
        if raw_x.iter().any(|v| !v.is_finite()) {
            return Err(DataError::NonFinite("design matrix"));
        }
        if raw_y.iter().any(|v| !v.is_finite()) {
            return Err(DataError::NonFinite("response"));
        }

        let nf = n as f64;
        let mut x = raw_x.clone();
        let mut column_scales = vec![1.0; p];
        let mut x_means = vec![0.0; p];
        let mut constant_columns = Vec::new();
        for j in 0..p {
            let col = column_mut(&mut x, j);
            let mean = col.iter().sum::<f64>() / nf;
            col.iter_mut().for_each(|v| *v -= mean);
            let norm = (col.iter().map(|v| v * v).sum::<f64>() / nf).sqrt();
            x_means[j] = mean;
            if norm <= CONSTANT_COLUMN_EPS * mean.abs().max(1.0) {
                col.iter_mut().for_each(|v| *v = 0.0);
                constant_columns.push(j);
            } else {
                col.iter_mut().for_each(|v| *v /= norm);
                column_scales[j] = norm;
            }
        }
        let y_mean = raw_y.mean();
        let y = raw_y.map(|v| v - y_mean);
        Ok(Self::assemble(x, y, column_scales, x_means, y_mean, constant_columns))
    }

    fn assemble(
        x: DMatrix<f64>,
        y: DVector<f64>,
        column_scales: Vec<f64>,
        x_means: Vec<f64>,
        y_mean: f64,
        constant_columns: Vec<usize>,
    ) -> Self {
        let n = x.nrows() as f64;
        let col_sq_norms = (0..x.ncols())
            .map(|j| {
                let c = &x.as_slice()[j * x.nrows()..(j + 1) * x.nrows()];
                c.iter().map(|v| v * v).sum::<f64>() / n
            })
            .collect();
        Self {
            x,
            y,
            column_scales,
            x_means,
            y_mean,
            constant_columns,
            col_sq_norms,
        }
    }

    /// Training-fold view: the selected rows, re-centered but not rescaled.
    ///
    /// Coefficients fitted on the view live on the parent's standardized scale,
    /// so penalty weights keep their meaning across folds. Columns that are
    /// constant inside the fold are flagged as constant.
    pub(crate) fn centered_rows(&self, rows: &[usize]) -> Self {
        let p = self.p();
        let m = rows.len();
        let mf = m as f64;
        let mut x = DMatrix::zeros(m, p);
        let mut x_means = vec![0.0; p];
        let mut constant_columns = Vec::new();
        for j in 0..p {
            let src = self.column(j);
            let dst = column_mut(&mut x, j);
            for (d, &r) in dst.iter_mut().zip(rows) {
                *d = src[r];
            }
            let mean = dst.iter().sum::<f64>() / mf;
            dst.iter_mut().for_each(|v| *v -= mean);
            x_means[j] = mean;
            let norm = (dst.iter().map(|v| v * v).sum::<f64>() / mf).sqrt();
            if norm <= CONSTANT_COLUMN_EPS {
                dst.iter_mut().for_each(|v| *v = 0.0);
                constant_columns.push(j);
            }
        }
        let ys: Vec<f64> = rows.iter().map(|&r| self.y[r]).collect();
        let y_mean = ys.iter().sum::<f64>() / mf;
        let y = DVector::from_iterator(m, ys.into_iter().map(|v| v - y_mean));
        Self::assemble(x, y, vec![1.0; p], x_means, y_mean, constant_columns)
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    /// Contiguous storage of column `j`.
    #[inline]
    pub fn column(&self, j: usize) -> &[f64] {
        let n = self.n();
        &self.x.as_slice()[j * n..(j + 1) * n]
    }

    /// `‖x_j‖_n²`; 1 for standardized non-constant columns.
    #[inline]
    pub fn col_sq_norm(&self, j: usize) -> f64 {
        self.col_sq_norms[j]
    }

    pub fn column_scales(&self) -> &[f64] {
        &self.column_scales
    }

    pub fn x_means(&self) -> &[f64] {
        &self.x_means
    }

    pub fn y_mean(&self) -> f64 {
        self.y_mean
    }

    pub fn constant_columns(&self) -> &[usize] {
        &self.constant_columns
    }

    pub fn is_constant(&self, j: usize) -> bool {
        self.col_sq_norms[j] == 0.0
    }

    /// Maps standardized-scale coefficients to the raw scale, returning `(beta_raw, intercept)`.
    pub fn to_raw(&self, beta: &[f64]) -> (Vec<f64>, f64) {
        let raw: Vec<f64> = beta
            .iter()
            .zip(&self.column_scales)
            .map(|(b, s)| b / s)
            .collect();
        let intercept = self.y_mean
            - raw
                .iter()
                .zip(&self.x_means)
                .map(|(b, m)| b * m)
                .sum::<f64>();
        (raw, intercept)
    }

    /// Fitted values `Xβ` on the centered scale.
    pub fn fitted(&self, beta: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        for (j, &b) in beta.iter().enumerate() {
            if b != 0.0 {
                axpy(b, self.column(j), &mut out);
            }
        }
        out
    }

    /// Residual `y - Xβ`.
    pub fn residual(&self, beta: &[f64]) -> Vec<f64> {
        let mut r: Vec<f64> = self.y.iter().copied().collect();
        for (j, &b) in beta.iter().enumerate() {
            if b != 0.0 {
                axpy(-b, self.column(j), &mut r);
            }
        }
        r
    }
}

fn column_mut(x: &mut DMatrix<f64>, j: usize) -> &mut [f64] {
    let n = x.nrows();
    &mut x.as_mut_slice()[j * n..(j + 1) * n]
}

/// Dot product with four accumulators.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let tail: f64 = ca
        .remainder()
        .iter()
        .zip(cb.remainder())
        .map(|(x, y)| x * y)
        .sum();
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `y += a * x`
#[inline]
pub(crate) fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Squared Euclidean distance `‖beta_hat - beta_true‖²`.
pub fn estimation_error(beta_hat: &[f64], beta_true: &[f64]) -> Result<f64, DataError> {
    if beta_hat.len() != beta_true.len() {
        return Err(DataError::DimensionMismatch {
            what: "coefficient vector length",
            expected: beta_true.len(),
            found: beta_hat.len(),
        });
    }
    Ok(beta_hat
        .iter()
        .zip(beta_true)
        .map(|(a, b)| (a - b) * (a - b))
        .sum())
}

/// Ordered collection of (0-based) column index sets covering `0..p`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GroupFile", into = "GroupFile")]
pub struct GroupStructure {
    groups: Vec<Vec<usize>>,
    p: usize,
    overlapping: bool,
    membership: Vec<Vec<usize>>,
}

/// On-disk shape: `{"groups": [[1,2,3],[4,5]]}` with 1-based indices.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct GroupFile {
    groups: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p: Option<usize>,
}

impl TryFrom<GroupFile> for GroupStructure {
    type Error = DataError;

    fn try_from(file: GroupFile) -> Result<Self, DataError> {
        let max = file.groups.iter().flatten().copied().max().unwrap_or(0);
        let p = file.p.unwrap_or(max);
        let mut zero_based = Vec::with_capacity(file.groups.len());
        for g in file.groups {
            let mut out = Vec::with_capacity(g.len());
            for i in g {
                if i == 0 {
                    return Err(DataError::Parse(
                        "group indices are 1-based; found 0".to_string(),
                    ));
                }
                out.push(i - 1);
            }
            zero_based.push(out);
        }
        GroupStructure::new(zero_based, p)
    }
}

impl From<GroupStructure> for GroupFile {
    fn from(g: GroupStructure) -> Self {
        GroupFile {
            groups: g
                .groups
                .iter()
                .map(|grp| grp.iter().map(|i| i + 1).collect())
                .collect(),
            p: Some(g.p),
        }
    }
}

impl GroupStructure {
    /// Validates and builds a structure over `0..p` from 0-based index lists.
    pub fn new(groups: Vec<Vec<usize>>, p: usize) -> Result<Self, DataError> {
        let mut membership = vec![Vec::new(); p];
        for (k, g) in groups.iter().enumerate() {
            if g.is_empty() {
                return Err(DataError::EmptyGroup(k));
            }
            let mut seen = BTreeSet::new();
            for &i in g {
                if i >= p {
                    return Err(DataError::IndexOutOfRange { index: i, p });
                }
                if !seen.insert(i) {
                    return Err(DataError::DuplicateIndex { group: k, index: i });
                }
                membership[i].push(k);
            }
        }
        if let Some(j) = membership.iter().position(|m| m.is_empty()) {
            return Err(DataError::UncoveredColumn(j));
        }
        let overlapping = membership.iter().any(|m| m.len() > 1);
        Ok(Self {
            groups,
            p,
            overlapping,
            membership,
        })
    }

    /// Parses the JSON group file format (1-based indices) for a design with `p` columns.
    pub fn from_json(text: &str, p: usize) -> Result<Self, DataError> {
        let mut file: GroupFile =
            serde_json::from_str(text).map_err(|e| DataError::Parse(e.to_string()))?;
        file.p = Some(p);
        Self::try_from(file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&GroupFile::from(self.clone())).expect("group file serializes")
    }

    /// Every column in its own group.
    pub fn singletons(p: usize) -> Self {
        Self::new((0..p).map(|j| vec![j]).collect(), p).expect("singletons cover 0..p")
    }

    /// Consecutive blocks of `size` columns; the last block may be shorter.
    pub fn contiguous(p: usize, size: usize) -> Result<Self, DataError> {
        if size == 0 {
            return Err(DataError::EmptyGroup(0));
        }
        let groups = (0..p)
            .step_by(size)
            .map(|s| (s..(s + size).min(p)).collect())
            .collect();
        Self::new(groups, p)
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn group(&self, k: usize) -> &[usize] {
        &self.groups[k]
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn is_overlapping(&self) -> bool {
        self.overlapping
    }

    /// Indices of the groups containing column `j`.
    pub fn groups_of(&self, j: usize) -> &[usize] {
        &self.membership[j]
    }

    pub fn max_group_size(&self) -> usize {
        self.groups.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Indices of groups with nonempty intersection with `s`.
    pub fn intersecting(&self, s: &[usize]) -> Result<Vec<usize>, DataError> {
        let mut hit = BTreeSet::new();
        for &j in s {
            if j >= self.p {
                return Err(DataError::IndexOutOfRange { index: j, p: self.p });
            }
            hit.extend(self.membership[j].iter().copied());
        }
        Ok(hit.into_iter().collect())
    }
}

/// Union of all groups meeting `s`, sorted.
pub fn s_tilde(groups: &GroupStructure, s: &[usize]) -> Result<Vec<usize>, DataError> {
    let hit = groups.intersecting(s)?;
    let set: BTreeSet<usize> = hit
        .iter()
        .flat_map(|&k| groups.group(k).iter().copied())
        .collect();
    Ok(set.into_iter().collect())
}

/// A support set `S` with its derived group quantities.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SparsityPattern {
    pub s: Vec<usize>,
    pub g_cap_s: Vec<usize>,
    pub s_tilde: Vec<usize>,
}

impl SparsityPattern {
    pub fn new(groups: &GroupStructure, s: &[usize]) -> Result<Self, DataError> {
        let set: BTreeSet<usize> = s.iter().copied().collect();
        let s: Vec<usize> = set.into_iter().collect();
        Ok(Self {
            g_cap_s: groups.intersecting(&s)?,
            s_tilde: s_tilde(groups, &s)?,
            s,
        })
    }

    /// Support of a coefficient vector.
    pub fn from_beta(groups: &GroupStructure, beta: &[f64]) -> Result<Self, DataError> {
        let s: Vec<usize> = (0..beta.len()).filter(|&j| beta[j] != 0.0).collect();
        Self::new(groups, &s)
    }
}
