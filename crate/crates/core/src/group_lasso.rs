//! Group Lasso by block coordinate descent.
//!
//! Minimizes `(1/2)‖y - Xβ‖_n² + λ Σ_G c_G ‖β_G‖` with `c_G = √|G|` (or 1 when
//! size scaling is disabled). Overlapping groups use latent replication: each
//! group owns its own copy of its coefficients, the penalty applies to the
//! copies and `β` is their sum.
//!
//! Each block update minimizes the objective exactly in its block. With the
//! block Gram `H = U diag(h) Uᵀ` and `c = X_Gᵀr/n + H v`, the minimizer is zero
//! when `‖c‖ ≤ τ`, otherwise `(H + νI)⁻¹ c` where `ν > 0` solves
//! `ν ‖(H + νI)⁻¹ c‖ = τ`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::data::{axpy, dot, Dataset, GroupStructure};

#[derive(Debug, Error, Clone)]
pub enum GroupLassoError {
    #[error("groups cover {groups} columns but the design has {design}")]
    DimensionMismatch { groups: usize, design: usize },
    #[error("tuning parameter must be finite and non-negative, got {0}")]
    InvalidLambda(f64),
    #[error("no convergence within {max_iter} sweeps (block KKT residual {kkt:e})", kkt = best.block_kkt_residual)]
    NonConvergence {
        max_iter: usize,
        best: Box<GroupFitResult>,
    },
    #[error("objective became non-finite")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupLassoOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Multiply each group's penalty by `√|G|`.
    pub scale_by_size: bool,
}

impl Default for GroupLassoOptions {
    fn default() -> Self {
        Self {
            tol: crate::solver::DEFAULT_TOL,
            max_iter: crate::solver::DEFAULT_MAX_ITER,
            scale_by_size: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupFitResult {
    /// Coefficients on the standardized scale (sum of the latent copies).
    pub beta: Vec<f64>,
    pub lambda: f64,
    pub active_groups: Vec<usize>,
    pub block_kkt_residual: f64,
    pub iterations: usize,
    pub objective: f64,
    /// Per-group coefficient copies, in group order and within-group index order.
    #[serde(skip)]
    pub latent: Vec<Vec<f64>>,
}

fn penalty_factors(groups: &GroupStructure, scale: bool) -> Vec<f64> {
    groups
        .groups()
        .iter()
        .map(|g| if scale { (g.len() as f64).sqrt() } else { 1.0 })
        .collect()
}

/// Smallest `λ` at which every group is inactive.
pub fn group_lambda_max(data: &Dataset, groups: &GroupStructure, scale_by_size: bool) -> f64 {
    let n = data.n() as f64;
    let z: Vec<f64> = (0..data.p())
        .map(|j| dot(data.column(j), data.y().as_slice()) / n)
        .collect();
    groups
        .groups()
        .iter()
        .zip(penalty_factors(groups, scale_by_size))
        .map(|(g, c)| g.iter().map(|&j| z[j] * z[j]).sum::<f64>().sqrt() / c)
        .fold(0.0, f64::max)
}

struct BlockEigen {
    vectors: DMatrix<f64>,
    values: Vec<f64>,
}

impl BlockEigen {
    fn new(data: &Dataset, cols: &[usize]) -> Self {
        let k = cols.len();
        let n = data.n() as f64;
        let mut h = DMatrix::zeros(k, k);
        for a in 0..k {
            for b in 0..=a {
                let v = dot(data.column(cols[a]), data.column(cols[b])) / n;
                h[(a, b)] = v;
                h[(b, a)] = v;
            }
        }
        let eig = h.symmetric_eigen();
        let scale = eig.eigenvalues.amax().max(1.0);
        let values = eig
            .eigenvalues
            .iter()
            .map(|&v| if v < 1e-13 * scale { 0.0 } else { v })
            .collect();
        Self {
            vectors: eig.eigenvectors,
            values,
        }
    }

    fn to_eigen(&self, v: &[f64]) -> Vec<f64> {
        let v = DVector::from_column_slice(v);
        (self.vectors.tr_mul(&v)).as_slice().to_vec()
    }

    fn from_eigen(&self, e: &[f64]) -> Vec<f64> {
        let e = DVector::from_column_slice(e);
        (&self.vectors * e).as_slice().to_vec()
    }

    /// `H v`
    fn apply(&self, v: &[f64]) -> Vec<f64> {
        let e: Vec<f64> = self
            .to_eigen(v)
            .iter()
            .zip(&self.values)
            .map(|(x, h)| x * h)
            .collect();
        self.from_eigen(&e)
    }

    /// Exact minimizer of `(1/2) bᵀHb - cᵀb + τ‖b‖`.
    fn solve(&self, c: &[f64], tau: f64) -> Vec<f64> {
        let e = self.to_eigen(c);
        let norm_c = e.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm_c <= tau {
            return vec![0.0; c.len()];
        }
        if tau == 0.0 {
            let coef: Vec<f64> = e
                .iter()
                .zip(&self.values)
                .map(|(x, &h)| if h > 0.0 { x / h } else { 0.0 })
                .collect();
            return self.from_eigen(&coef);
        }
        let nu = secular_root(&e, &self.values, tau, norm_c);
        let coef: Vec<f64> = e
            .iter()
            .zip(&self.values)
            .map(|(x, &h)| x / (h + nu))
            .collect();
        self.from_eigen(&coef)
    }
}

/// Root `ν > 0` of `1/‖b(ν)‖ = ν/τ` with `b(ν)_i = e_i / (h_i + ν)`.
fn secular_root(e: &[f64], h: &[f64], tau: f64, norm_e: f64) -> f64 {
    let hmax = h.iter().copied().fold(0.0, f64::max);
    let hmin = h.iter().copied().fold(f64::INFINITY, f64::min).max(0.0);
    let gap = norm_e - tau;
    let mut lo = tau * hmin / gap;
    let mut hi = tau * hmax / gap;
    if hi <= lo {
        return hi.max(lo);
    }
    // f(ν) = 1/‖b(ν)‖ - ν/τ is decreasing with f(lo) ≥ 0 ≥ f(hi).
    let eval = |nu: f64| {
        let mut s2 = 0.0;
        let mut d3 = 0.0;
        for (x, &hv) in e.iter().zip(h) {
            let den = hv + nu;
            s2 += x * x / (den * den);
            d3 += x * x / (den * den * den);
        }
        let s = s2.sqrt();
        (1.0 / s - nu / tau, d3 / (s * s2) - 1.0 / tau)
    };
    let mut nu = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (f, df) = eval(nu);
        if f == 0.0 {
            return nu;
        }
        if f > 0.0 {
            lo = nu;
        } else {
            hi = nu;
        }
        let newton = nu - f / df;
        let next = if df < 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - nu).abs() <= 1e-15 * nu.max(f64::MIN_POSITIVE) || hi - lo <= 1e-15 * hi {
            return next;
        }
        nu = next;
    }
    nu
}

/// Block coordinate-descent engine; block eigendecompositions are cached across fits.
pub struct BlockCoordinateDescent<'a> {
    data: &'a Dataset,
    groups: &'a GroupStructure,
    opts: GroupLassoOptions,
    factors: Vec<f64>,
    blocks: Vec<Option<BlockEigen>>,
    sweeps: usize,
}

impl<'a> BlockCoordinateDescent<'a> {
    pub fn new(
        data: &'a Dataset,
        groups: &'a GroupStructure,
        opts: GroupLassoOptions,
    ) -> Result<Self, GroupLassoError> {
        if groups.p() != data.p() {
            return Err(GroupLassoError::DimensionMismatch {
                groups: groups.p(),
                design: data.p(),
            });
        }
        Ok(Self {
            data,
            groups,
            opts,
            factors: penalty_factors(groups, opts.scale_by_size),
            blocks: (0..groups.len()).map(|_| None).collect(),
            sweeps: 0,
        })
    }

    pub fn total_sweeps(&self) -> usize {
        self.sweeps
    }

    fn block(&mut self, k: usize) -> &BlockEigen {
        if self.blocks[k].is_none() {
            self.blocks[k] = Some(BlockEigen::new(self.data, self.groups.group(k)));
        }
        self.blocks[k].as_ref().expect("block cached")
    }

    fn assemble_beta(&self, latent: &[Vec<f64>]) -> Vec<f64> {
        let mut beta = vec![0.0; self.data.p()];
        for (g, v) in self.groups.groups().iter().zip(latent) {
            for (&j, &b) in g.iter().zip(v) {
                beta[j] += b;
            }
        }
        beta
    }

    pub fn fit(
        &mut self,
        lambda: f64,
        warm_start: Option<&[Vec<f64>]>,
    ) -> Result<GroupFitResult, GroupLassoError> {
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(GroupLassoError::InvalidLambda(lambda));
        }
        let data = self.data;
        let groups = self.groups;
        let n = data.n() as f64;
        let q = groups.len();
        let tol = self.opts.tol;
        let tau: Vec<f64> = self.factors.iter().map(|c| lambda * c).collect();

        let mut latent: Vec<Vec<f64>> = match warm_start {
            Some(w) if w.len() == q => w.to_vec(),
            _ => groups.groups().iter().map(|g| vec![0.0; g.len()]).collect(),
        };
        let mut in_active: Vec<bool> = latent.iter().map(|v| v.iter().any(|&b| b != 0.0)).collect();
        let mut active: Vec<usize> = (0..q).filter(|&k| in_active[k]).collect();
        let mut used = 0usize;

        loop {
            let beta = self.assemble_beta(&latent);
            let mut r = data.residual(&beta);
            let z: Vec<f64> = (0..data.p()).map(|j| dot(data.column(j), &r) / n).collect();
            used += 1;

            let mut kkt = 0.0f64;
            let mut pen = 0.0;
            for k in 0..q {
                let g: Vec<f64> = groups.group(k).iter().map(|&j| z[j]).collect();
                let v = block_violation(&g, &latent[k], tau[k]);
                kkt = kkt.max(v);
                pen += tau[k] * norm(&latent[k]);
                if !in_active[k] && norm(&g) > tau[k] {
                    in_active[k] = true;
                    active.push(k);
                }
            }
            let objective = 0.5 * r.iter().map(|v| v * v).sum::<f64>() / n + pen;
            if !objective.is_finite() || kkt.is_nan() {
                self.sweeps += used;
                return Err(GroupLassoError::NonFinite);
            }
            let result = |latent: &Vec<Vec<f64>>, used| GroupFitResult {
                active_groups: (0..q).filter(|&k| latent[k].iter().any(|&b| b != 0.0)).collect(),
                beta: beta.clone(),
                lambda,
                block_kkt_residual: kkt,
                iterations: used,
                objective,
                latent: latent.clone(),
            };
            if kkt <= tol {
                self.sweeps += used;
                return Ok(result(&latent, used));
            }
            if used >= self.opts.max_iter {
                self.sweeps += used;
                return Err(GroupLassoError::NonConvergence {
                    max_iter: self.opts.max_iter,
                    best: Box::new(result(&latent, used)),
                });
            }

            let (mut last, mut before) = (f64::INFINITY, f64::INFINITY);
            let mut since_newton = usize::MAX;
            loop {
                // Newton only once block descent has slowed down.
                if since_newton >= 2 && last > NEWTON_SLOW * before {
                    newton_step(data, groups, &active, &mut latent, &mut r, &tau);
                    since_newton = 0;
                }
                since_newton = since_newton.saturating_add(1);
                let mut viol = 0.0f64;
                for &k in &active {
                    let cols = groups.group(k);
                    let g: Vec<f64> = cols.iter().map(|&j| dot(data.column(j), &r) / n).collect();
                    viol = viol.max(block_violation(&g, &latent[k], tau[k]));
                    let block = self.block(k);
                    let hv = block.apply(&latent[k]);
                    let c: Vec<f64> = g.iter().zip(&hv).map(|(a, b)| a + b).collect();
                    let new = block.solve(&c, tau[k]);
                    for ((&j, &old), &nw) in cols.iter().zip(&latent[k]).zip(&new) {
                        let delta = nw - old;
                        if delta != 0.0 {
                            axpy(-delta, data.column(j), &mut r);
                        }
                    }
                    latent[k] = new;
                }
                used += 1;
                (before, last) = (last, viol);
                if viol <= 0.25 * tol || used >= self.opts.max_iter {
                    break;
                }
            }
        }
    }

    pub fn path(&mut self, grid: &[f64]) -> Vec<Result<GroupFitResult, GroupLassoError>> {
        let mut warm: Option<Vec<Vec<f64>>> = None;
        let mut out = Vec::with_capacity(grid.len());
        for &lambda in grid {
            let fit = self.fit(lambda, warm.as_deref());
            match &fit {
                Ok(f) => warm = Some(f.latent.clone()),
                Err(GroupLassoError::NonConvergence { best, .. }) => warm = Some(best.latent.clone()),
                Err(_) => {}
            }
            out.push(fit);
        }
        out
    }
}

/// Sweep-to-sweep violation ratio above which block descent counts as slow.
const NEWTON_SLOW: f64 = 0.2;
/// Row block for forming the lower triangle of `X D⁻¹ Xᵀ`.
const SYRK_BLOCK: usize = 64;

/// Newton direction `H⁻¹ grad` through the `n × n` system; used when blocks outnumber samples.
fn woodbury_direction(
    x: &DMatrix<f64>,
    dinv: &DVector<f64>,
    u: &DMatrix<f64>,
    grad: &DVector<f64>,
    offsets: &[usize],
) -> Option<DVector<f64>> {
    let (nn, q) = (x.nrows(), u.ncols());
    let n = nn as f64;
    // K = nI + X D⁻¹ Xᵀ
    let mut xs = x.clone();
    for (col, mut c) in xs.column_iter_mut().enumerate() {
        c *= dinv[col].sqrt();
    }
    let xt = xs.transpose();
    // Only the lower triangle is read by the factorization.
    let mut kmat = DMatrix::zeros(nn, nn);
    for i0 in (0..nn).step_by(SYRK_BLOCK) {
        let bi = SYRK_BLOCK.min(nn - i0);
        kmat.view_mut((i0, 0), (bi, i0 + bi))
            .gemm(1.0, &xs.rows(i0, bi), &xt.columns(0, i0 + bi), 0.0);
    }
    for i in 0..nn {
        kmat[(i, i)] += n;
    }
    let kchol = kmat.cholesky()?;
    // H'⁻¹z = D⁻¹z - D⁻¹Xᵀ K⁻¹ X D⁻¹z. U is block-diagonal, so X D⁻¹ U is cheap.
    let mut v = DMatrix::zeros(nn, q);
    for b in 0..q {
        for col in offsets[b]..offsets[b + 1] {
            let coef = dinv[col] * u[(col, b)];
            if coef != 0.0 {
                v.column_mut(b).axpy(coef, &x.column(col), 1.0);
            }
        }
    }
    let dg = grad.component_mul(&dinv);
    let xdg = x * &dg;
    let kv = kchol.solve(&v);
    let kxdg = kchol.solve(&xdg);
    // Uᵀ H'⁻¹ U and Uᵀ H'⁻¹ g
    let utd = |z: &DVector<f64>| DVector::from_fn(q, |b, _| (offsets[b]..offsets[b + 1]).map(|c| u[(c, b)] * z[c]).sum::<f64>());
    // S = C⁻¹ - UᵀH'⁻¹U; the diagonal parts cancel because each u_G has unit norm.
    let smat = v.tr_mul(&kv);
    let wg = utd(&dg) - v.tr_mul(&kxdg);
    let mut z = grad.clone();
    if let Some(sc) = smat.clone().cholesky() {
        let diag = sc.l_dirty().diagonal();
        let (lo, hi) = diag.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
        if lo > 1e-7 * hi {
            let y = sc.solve(&wg);
            for b in 0..q {
                for c in offsets[b]..offsets[b + 1] {
                    z[c] += u[(c, b)] * y[b];
                }
            }
        }
    }
    let dz = z.component_mul(&dinv);
    let corr = x.tr_mul(&kchol.solve(&(x * &dz))).component_mul(&dinv);
    Some(dz - corr)
}

/// Newton direction from the exact `m × m` Hessian, falling back to the radially damped one.
fn direct_direction(
    x: &DMatrix<f64>,
    dinv: &DVector<f64>,
    u: &DMatrix<f64>,
    grad: &DVector<f64>,
    offsets: &[usize],
) -> Option<DVector<f64>> {
    let n = x.nrows() as f64;
    let mut h = x.tr_mul(x) / n;
    for b in 0..u.ncols() {
        let (lo, hi) = (offsets[b], offsets[b + 1]);
        let c = 1.0 / dinv[lo];
        for i in lo..hi {
            h[(i, i)] += c;
            for j in lo..hi {
                h[(i, j)] -= c * u[(i, b)] * u[(j, b)];
            }
        }
    }
    let pivots_ok = |l: &DMatrix<f64>| {
        let d = l.diagonal();
        d.min() > 1e-7 * d.max()
    };
    if let Some(ch) = h.clone().cholesky().filter(|c| pivots_ok(c.l_dirty())) {
        return Some(ch.solve(grad));
    }
    for b in 0..u.ncols() {
        let (lo, hi) = (offsets[b], offsets[b + 1]);
        let c = 1.0 / dinv[lo];
        for i in lo..hi {
            for j in lo..hi {
                h[(i, j)] += c * u[(i, b)] * u[(j, b)];
            }
        }
    }
    h.cholesky().map(|ch| ch.solve(grad))
}

/// One damped Newton step on the blocks that are currently nonzero.
///
/// On that set the objective is smooth with Hessian `XᵀX/n + Σ_G (τ_G/ρ_G)(I - u_G u_Gᵀ)`.
/// Writing it as `H' - U C Uᵀ` with `H' = XᵀX/n + diag(τ_G/ρ_G)` lets both solves go
/// through an `n × n` system and a small system in the number of blocks.
/// Returns false when no decrease was found.
fn newton_step(
    data: &Dataset,
    groups: &GroupStructure,
    active: &[usize],
    latent: &mut [Vec<f64>],
    r: &mut [f64],
    tau: &[f64],
) -> bool {
    let nn = data.n();
    let n = nn as f64;
    let blocks: Vec<usize> = active.iter().copied().filter(|&k| norm(&latent[k]) > 0.0).collect();
    let q = blocks.len();
    if q == 0 || blocks.iter().any(|&k| tau[k] <= 0.0) {
        return false;
    }
    let mut offsets = Vec::with_capacity(q + 1);
    offsets.push(0);
    for &k in &blocks {
        offsets.push(offsets.last().unwrap() + groups.group(k).len());
    }
    let m = offsets[q];
    let mut x = DMatrix::zeros(nn, m);
    let mut dinv = DVector::zeros(m);
    let mut u = DMatrix::zeros(m, q);
    let mut grad = DVector::zeros(m);
    let mut cdiag = vec![0.0; q];
    for (b, &k) in blocks.iter().enumerate() {
        let rho = norm(&latent[k]);
        cdiag[b] = tau[k] / rho;
        for (i, &j) in groups.group(k).iter().enumerate() {
            let col = offsets[b] + i;
            let c = data.column(j);
            x.column_mut(col).copy_from_slice(c);
            dinv[col] = rho / tau[k];
            u[(col, b)] = latent[k][i] / rho;
            grad[col] = -dot(c, r) / n + tau[k] * latent[k][i] / rho;
        }
    }
    let dir = if m <= nn {
        direct_direction(&x, &dinv, &u, &grad, &offsets)
    } else {
        woodbury_direction(&x, &dinv, &u, &grad, &offsets)
    };
    let Some(dir) = dir else {
        return false;
    };
    let step: Vec<f64> = dir.iter().map(|v| -v).collect();
    let xd = &x * DVector::from_column_slice(&step);

    let objective = |t: f64, r: &[f64], latent: &[Vec<f64>]| {
        let loss: f64 = r.iter().zip(xd.iter()).map(|(a, b)| (a - t * b).powi(2)).sum::<f64>() / (2.0 * n);
        let pen: f64 = blocks
            .iter()
            .enumerate()
            .map(|(b, &k)| {
                let v: Vec<f64> = latent[k]
                    .iter()
                    .zip(&step[offsets[b]..offsets[b + 1]])
                    .map(|(a, d)| a + t * d)
                    .collect();
                tau[k] * norm(&v)
            })
            .sum();
        loss + pen
    };
    let f0 = objective(0.0, r, latent);
    let slope: f64 = grad.iter().zip(&step).map(|(a, b)| a * b).sum();
    if !(slope < 0.0) {
        return false;
    }
    let mut t = 1.0;
    for _ in 0..30 {
        if objective(t, r, latent) <= f0 + 1e-4 * t * slope {
            for (b, &k) in blocks.iter().enumerate() {
                for (v, d) in latent[k].iter_mut().zip(&step[offsets[b]..offsets[b + 1]]) {
                    *v += t * d;
                }
            }
            for (ri, d) in r.iter_mut().zip(xd.iter()) {
                *ri -= t * d;
            }
            return true;
        }
        t *= 0.5;
    }
    false
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Block subgradient violation for gradient `g` at block value `v`.
fn block_violation(g: &[f64], v: &[f64], tau: f64) -> f64 {
    let nv = norm(v);
    if nv == 0.0 {
        (norm(g) - tau).max(0.0)
    } else {
        g.iter()
            .zip(v)
            .map(|(gi, vi)| {
                let d = gi - tau * vi / nv;
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }
}

pub fn fit_group_lasso(
    data: &Dataset,
    groups: &GroupStructure,
    lambda: f64,
    tol: f64,
    max_iter: usize,
) -> Result<GroupFitResult, GroupLassoError> {
    let opts = GroupLassoOptions {
        tol,
        max_iter,
        scale_by_size: true,
    };
    BlockCoordinateDescent::new(data, groups, opts)?.fit(lambda, None)
}

/// Objective `(1/2)‖y - Xβ‖_n² + λ Σ c_G ‖v_G‖` of a latent configuration.
pub fn group_objective(
    data: &Dataset,
    groups: &GroupStructure,
    lambda: f64,
    scale_by_size: bool,
    latent: &[Vec<f64>],
) -> f64 {
    let mut beta = vec![0.0; data.p()];
    for (g, v) in groups.groups().iter().zip(latent) {
        for (&j, &b) in g.iter().zip(v) {
            beta[j] += b;
        }
    }
    let r = data.residual(&beta);
    let loss = 0.5 * r.iter().map(|v| v * v).sum::<f64>() / data.n() as f64;
    let pen: f64 = penalty_factors(groups, scale_by_size)
        .iter()
        .zip(latent)
        .map(|(c, v)| c * norm(v))
        .sum();
    loss + lambda * pen
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_data(n: usize, p: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let y = DVector::from_fn(n, |i, _| {
            x[(i, 0)] + x[(i, 1)] - x[(i, p - 1)] + rng.sample::<f64, _>(StandardNormal)
        });
        Dataset::standardize(&x, &y).unwrap()
    }

    #[test]
    fn all_inactive_at_lambda_max() {
        let d = random_data(30, 6, 1);
        let g = GroupStructure::contiguous(6, 3).unwrap();
        let lmax = group_lambda_max(&d, &g, true);
        let f = fit_group_lasso(&d, &g, lmax, 1e-10, 1000).unwrap();
        assert!(f.active_groups.is_empty());
        assert!(f.beta.iter().all(|&b| b == 0.0));
        let f = fit_group_lasso(&d, &g, 0.9999 * lmax, 1e-12, 1000).unwrap();
        assert_eq!(f.active_groups.len(), 1);
    }

    #[test]
    fn inactive_groups_are_exact_zero_and_active_groups_are_dense() {
        let d = random_data(40, 12, 2);
        let g = GroupStructure::contiguous(12, 4).unwrap();
        let lmax = group_lambda_max(&d, &g, true);
        let f = fit_group_lasso(&d, &g, 0.3 * lmax, 1e-10, 10_000).unwrap();
        assert!(f.block_kkt_residual <= 1e-10);
        for k in 0..3 {
            let block: Vec<f64> = g.group(k).iter().map(|&j| f.beta[j]).collect();
            if f.active_groups.contains(&k) {
                assert!(block.iter().all(|&b| b != 0.0));
            } else {
                assert!(block.iter().all(|&b| b == 0.0));
            }
        }
    }

    #[test]
    fn objective_decreases_along_refits() {
        let d = random_data(25, 10, 3);
        let g = GroupStructure::contiguous(10, 5).unwrap();
        let lmax = group_lambda_max(&d, &g, true);
        let lambda = 0.2 * lmax;
        let mut prev = f64::INFINITY;
        for budget in [1, 2, 3, 5, 50] {
            let opts = GroupLassoOptions { tol: 1e-12, max_iter: budget, scale_by_size: true };
            let mut bcd = BlockCoordinateDescent::new(&d, &g, opts).unwrap();
            let obj = match bcd.fit(lambda, None) {
                Ok(f) => f.objective,
                Err(GroupLassoError::NonConvergence { best, .. }) => best.objective,
                Err(e) => panic!("{e}"),
            };
            assert!(obj <= prev + 1e-12);
            prev = obj;
        }
    }

    #[test]
    fn block_solver_satisfies_stationarity() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let d = random_data(15, 5, 5);
        let eig = BlockEigen::new(&d, &[0, 1, 2, 3, 4]);
        for _ in 0..50 {
            let c: Vec<f64> = (0..5).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let tau = rng.gen_range(0.0..1.0);
            let b = eig.solve(&c, tau);
            let hb = eig.apply(&b);
            let nb = norm(&b);
            if nb == 0.0 {
                assert!(norm(&c) <= tau);
            } else {
                for i in 0..5 {
                    assert!((hb[i] - c[i] + tau * b[i] / nb).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn overlapping_latent_fit_is_certified() {
        let d = random_data(30, 6, 6);
        let g = GroupStructure::new(vec![vec![0, 1, 2], vec![2, 3, 4], vec![4, 5]], 6).unwrap();
        let lmax = group_lambda_max(&d, &g, true);
        let f = fit_group_lasso(&d, &g, 0.25 * lmax, 1e-10, 10_000).unwrap();
        assert!(f.block_kkt_residual <= 1e-10);
        let sum: f64 = f.latent[0][2] + f.latent[1][0];
        assert!((sum - f.beta[2]).abs() < 1e-15);
    }

    #[test]
    fn singleton_groups_match_lasso() {
        let d = random_data(30, 8, 7);
        let g = GroupStructure::singletons(8);
        let w = crate::solver::WeightVector::ones(8);
        let lmax = group_lambda_max(&d, &g, true);
        for frac in [0.5, 0.1, 0.02] {
            let gl = fit_group_lasso(&d, &g, frac * lmax, 1e-12, 10_000).unwrap();
            let l = crate::solver::fit_weighted_lasso(&d, &w, frac * lmax, None, 1e-12, 10_000)
                .unwrap();
            for (a, b) in gl.beta.iter().zip(&l.beta) {
                assert!((a - b).abs() < 1e-8);
            }
        }
    }
}
