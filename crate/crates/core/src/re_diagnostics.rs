//! Restricted-eigenvalue statistics on small designs.
//!
//! With `Σ = XᵀX/n`, the statistics minimize `δᵀΣδ / ‖δ_M‖²` over the cone
//! `‖δ_{Sᶜ}‖₁ ≤ L√|S| ‖δ_S‖` and over normalizing sets `M`: supersets of `S`
//! with `|M| ≤ m` for [`re_statistic`], single groups for [`group_re_statistic`].
//!
//! The ratio is scale invariant, so `δ_S` is kept on the unit sphere and `δ_{Sᶜ}`
//! in the ℓ1 ball of radius `L√|S|`. Each subproblem is solved by multi-start
//! projected gradient. When the normalizing set lies inside `S`, the problem
//! over `δ_{Sᶜ}` for a fixed `δ_S` is a convex quadratic program; it is solved
//! to high accuracy and, for `|S| ≤ 2`, the direction of `δ_S` is searched
//! directly. The reported value is always attained by a feasible `δ`, so it
//! is an upper bound on the true minimum.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::data::{DataError, Dataset, GroupStructure};

/// Largest `p` for which every normalizing set is enumerated.
pub const EXACT_MAX_P: usize = 12;
/// Multiplicative slack for the inequality chain.
pub const CHAIN_SLACK: f64 = 0.05;
const CHAIN_ABS_SLACK: f64 = 1e-9;
const COORDINATE_START_LIMIT: usize = 50;
/// Grid over the half circle of unit `δ_S` directions when `|S| = 2`.
const ANGLE_GRID: usize = 90;
const QP_MAX_SWEEPS: usize = 20_000;

#[derive(Debug, Error, Clone)]
pub enum ReError {
    #[error("exact evaluation needs p <= {EXACT_MAX_P}, got p = {p}")]
    TooLargeForExact { p: usize },
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error(transparent)]
    Data(#[from] DataError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReMode {
    ExactSmall,
    Heuristic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ModeRequest {
    /// Exact when `p <= EXACT_MAX_P`, heuristic otherwise.
    #[default]
    Auto,
    Exact,
    Heuristic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReQuery {
    pub l: f64,
    pub s: Vec<usize>,
    /// Bound on `|M|`; `None` means `|S|`.
    pub m: Option<usize>,
    pub groups: Option<GroupStructure>,
}

impl ReQuery {
    pub fn new(l: f64, s: &[usize]) -> Self {
        Self {
            l,
            s: s.to_vec(),
            m: None,
            groups: None,
        }
    }

    pub fn with_m(mut self, m: usize) -> Self {
        self.m = Some(m);
        self
    }

    pub fn with_groups(mut self, groups: GroupStructure) -> Self {
        self.groups = Some(groups);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReOptions {
    pub mode: ModeRequest,
    pub random_starts: usize,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for ReOptions {
    fn default() -> Self {
        Self {
            mode: ModeRequest::Auto,
            random_starts: 50,
            max_iter: 2000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReEstimate {
    pub value: f64,
    /// Ratio at the best `δ` found, with the most favourable normalizing set.
    pub certified_upper: f64,
    pub mode: ReMode,
    #[serde(skip)]
    pub delta: Vec<f64>,
}

/// How the denominator `‖δ_M‖²` is chosen.
#[derive(Clone)]
enum Denominator {
    Fixed(Vec<bool>),
    /// `S` plus the `k` largest `|δ_j|` outside `S`.
    TopK(usize),
    BestGroup(Vec<Vec<usize>>),
}

struct Problem {
    sigma: DMatrix<f64>,
    s: Vec<usize>,
    sc: Vec<usize>,
    in_s: Vec<bool>,
    radius: f64,
}

impl Problem {
    fn new(data: &Dataset, s: &[usize], l: f64) -> Result<Self, ReError> {
        let p = data.p();
        if !l.is_finite() || l < 0.0 {
            return Err(ReError::InvalidQuery(format!("cone parameter must be finite and >= 0, got {l}")));
        }
        let mut s = s.to_vec();
        s.sort_unstable();
        s.dedup();
        if s.is_empty() {
            return Err(ReError::InvalidQuery("S must be non-empty".into()));
        }
        if let Some(&j) = s.iter().find(|&&j| j >= p) {
            return Err(DataError::IndexOutOfRange { index: j, p }.into());
        }
        let mut in_s = vec![false; p];
        for &j in &s {
            in_s[j] = true;
        }
        let sc = (0..p).filter(|&j| !in_s[j]).collect();
        let x = data.x();
        let sigma = x.tr_mul(x) / data.n() as f64;
        let radius = l * (s.len() as f64).sqrt();
        Ok(Self { sigma, s, sc, in_s, radius })
    }

    fn p(&self) -> usize {
        self.in_s.len()
    }

    fn quad(&self, d: &[f64]) -> (f64, Vec<f64>) {
        let v = DVector::from_column_slice(d);
        let sv = &self.sigma * &v;
        (v.dot(&sv), sv.as_slice().to_vec())
    }

    fn denominator(&self, d: &[f64], den: &Denominator) -> f64 {
        match den {
            Denominator::Fixed(mask) => d.iter().zip(mask).filter(|(_, &m)| m).map(|(x, _)| x * x).sum(),
            Denominator::TopK(k) => {
                let base: f64 = self.s.iter().map(|&j| d[j] * d[j]).sum();
                let mut rest: Vec<f64> = self.sc.iter().map(|&j| d[j] * d[j]).collect();
                rest.sort_unstable_by(|a, b| b.total_cmp(a));
                base + rest.iter().take(*k).sum::<f64>()
            }
            Denominator::BestGroup(groups) => groups
                .iter()
                .map(|g| g.iter().map(|&j| d[j] * d[j]).sum::<f64>())
                .fold(0.0, f64::max),
        }
    }

    fn ratio(&self, d: &[f64], den: &Denominator) -> f64 {
        let dd = self.denominator(d, den);
        if dd <= 0.0 {
            return f64::INFINITY;
        }
        (self.quad(d).0 / dd).max(0.0)
    }

    /// Rescales `δ_S` to the unit sphere and projects `δ_{Sᶜ}` onto the ℓ1 ball.
    fn project(&self, d: &mut [f64]) -> bool {
        let ns = self.s.iter().map(|&j| d[j] * d[j]).sum::<f64>().sqrt();
        if !(ns > 1e-150) || !ns.is_finite() {
            return false;
        }
        for &j in &self.s {
            d[j] /= ns;
        }
        let mut b: Vec<f64> = self.sc.iter().map(|&j| d[j]).collect();
        project_l1_ball(&mut b, self.radius);
        for (&j, v) in self.sc.iter().zip(b) {
            d[j] = v;
        }
        true
    }

    /// Projected gradient with Armijo backtracking for a fixed mask.
    fn descend(&self, start: &[f64], mask: &[bool], max_iter: usize) -> Option<(f64, Vec<f64>)> {
        let den = Denominator::Fixed(mask.to_vec());
        let mut x = start.to_vec();
        if !self.project(&mut x) {
            return None;
        }
        let mut f = self.ratio(&x, &den);
        if !f.is_finite() {
            return None;
        }
        let mut t = 1.0;
        let mut stalled = 0;
        for _ in 0..max_iter {
            let (q, sx) = self.quad(&x);
            let dd = self.denominator(&x, &den);
            let g: Vec<f64> = (0..x.len())
                .map(|j| {
                    let pm = if mask[j] { x[j] } else { 0.0 };
                    2.0 * (sx[j] - q / dd * pm) / dd
                })
                .collect();
            let mut accepted = None;
            while t > 1e-20 {
                let mut y: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - t * b).collect();
                if self.project(&mut y) {
                    let fy = self.ratio(&y, &den);
                    let step2: f64 = y.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum();
                    if fy <= f - 1e-4 * step2 / t && fy.is_finite() {
                        accepted = Some((fy, y, step2));
                        break;
                    }
                }
                t *= 0.5;
            }
            let Some((fy, y, step2)) = accepted else { break };
            let gain = f - fy;
            x = y;
            f = fy;
            t = (t * 2.0).min(1e6);
            if step2 < 1e-24 || gain <= 1e-15 * f.max(1e-300) {
                stalled += 1;
                if stalled >= 3 {
                    break;
                }
            } else {
                stalled = 0;
            }
        }
        Some((f, x))
    }

    fn starts(&self, rng: &mut ChaCha8Rng, random: usize) -> Vec<Vec<f64>> {
        let p = self.p();
        let mut out = Vec::new();
        let eig = self.sigma.clone().symmetric_eigen();
        let imin = eig.eigenvalues.imin();
        out.push(eig.eigenvectors.column(imin).iter().copied().collect());

        let k = self.s.len();
        let sub = DMatrix::from_fn(k, k, |a, b| self.sigma[(self.s[a], self.s[b])]);
        let sub_eig = sub.symmetric_eigen();
        let a_min = sub_eig.eigenvectors.column(sub_eig.eigenvalues.imin()).clone_owned();
        let mut base = vec![0.0; p];
        for (i, &j) in self.s.iter().enumerate() {
            base[j] = a_min[i];
        }
        out.push(base.clone());
        if self.radius > 0.0 && self.sc.len() <= COORDINATE_START_LIMIT {
            for &j in &self.sc {
                for sign in [1.0, -1.0] {
                    let mut d = base.clone();
                    d[j] = sign * self.radius;
                    out.push(d);
                }
            }
        }
        for _ in 0..random {
            let mut d: Vec<f64> = (0..p).map(|_| rng.sample(StandardNormal)).collect();
            let ns = self.s.iter().map(|&j| d[j] * d[j]).sum::<f64>().sqrt().max(1e-300);
            let l1: f64 = self.sc.iter().map(|&j| d[j].abs()).sum::<f64>().max(1e-300);
            let r: f64 = rng.gen::<f64>() * self.radius;
            for &j in &self.s {
                d[j] /= ns;
            }
            for &j in &self.sc {
                d[j] *= r / l1;
            }
            out.push(d);
        }
        out
    }

    /// Best ratio for one fixed normalizing set.
    fn minimize_fixed(&self, mask: &[bool], opts: &ReOptions, stream: u64) -> Option<(f64, Vec<f64>)> {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(stream);
        let mut best: Option<(f64, Vec<f64>)> = None;
        let mut keep = |f: f64, x: Vec<f64>| {
            if f.is_finite() && best.as_ref().map_or(true, |(bf, _)| f < *bf) {
                best = Some((f, x));
            }
        };
        let inside_s = self.sc.iter().all(|&j| !mask[j]);
        for start in self.starts(&mut rng, opts.random_starts) {
            if let Some((f, x)) = self.descend(&start, mask, opts.max_iter) {
                if inside_s {
                    let (g, y) = self.polish(&x, mask);
                    keep(g, y);
                }
                keep(f, x);
            }
        }
        if inside_s && self.s.len() <= 2 {
            for x in self.direction_scan(mask) {
                let f = self.ratio(&x, &Denominator::Fixed(mask.to_vec()));
                keep(f, x);
            }
        }
        best
    }

    /// Keeps `δ_S` and re-solves the convex problem in `δ_{Sᶜ}`.
    fn polish(&self, d: &[f64], mask: &[bool]) -> (f64, Vec<f64>) {
        let mut u = vec![0.0; self.p()];
        for &j in &self.s {
            u[j] = d[j];
        }
        let x = self.best_completion(&u);
        (self.ratio(&x, &Denominator::Fixed(mask.to_vec())), x)
    }

    /// Candidate minimizers over unit `δ_S`: the single direction for `|S| = 1`,
    /// an angle grid refined by golden-section search for `|S| = 2`.
    fn direction_scan(&self, mask: &[bool]) -> Vec<Vec<f64>> {
        let den = Denominator::Fixed(mask.to_vec());
        let at = |theta: f64| {
            let mut u = vec![0.0; self.p()];
            if self.s.len() == 1 {
                u[self.s[0]] = 1.0;
            } else {
                u[self.s[0]] = theta.cos();
                u[self.s[1]] = theta.sin();
            }
            let x = self.best_completion(&u);
            (self.ratio(&x, &den), x)
        };
        if self.s.len() == 1 {
            return vec![at(0.0).1];
        }
        let h = std::f64::consts::PI / ANGLE_GRID as f64;
        let vals: Vec<f64> = (0..ANGLE_GRID).map(|i| at(i as f64 * h).0).collect();
        let mut out = Vec::new();
        for i in 0..ANGLE_GRID {
            let (prev, next) = (vals[(i + ANGLE_GRID - 1) % ANGLE_GRID], vals[(i + 1) % ANGLE_GRID]);
            if vals[i] > prev || vals[i] > next || !vals[i].is_finite() {
                continue;
            }
            let (mut a, mut b) = ((i as f64 - 1.0) * h, (i as f64 + 1.0) * h);
            let r = 0.5 * (5f64.sqrt() - 1.0);
            let (mut c, mut d) = (b - r * (b - a), a + r * (b - a));
            let (mut fc, mut fd) = (at(c).0, at(d).0);
            while b - a > 1e-9 {
                if fc <= fd {
                    b = d;
                    d = c;
                    fd = fc;
                    c = b - r * (b - a);
                    fc = at(c).0;
                } else {
                    a = c;
                    c = d;
                    fc = fd;
                    d = a + r * (b - a);
                    fd = at(d).0;
                }
            }
            out.push(at(0.5 * (a + b)).1);
        }
        out
    }

    /// For fixed `δ_S = u`, minimizes `δᵀΣδ` over `‖δ_{Sᶜ}‖₁ ≤ L√|S|‖u‖`.
    ///
    /// Solves the penalized form by coordinate descent and bisects the
    /// multiplier until the ℓ1 constraint is met; the returned point is feasible.
    fn best_completion(&self, u: &[f64]) -> Vec<f64> {
        let radius = self.radius * self.s.iter().map(|&j| u[j] * u[j]).sum::<f64>().sqrt();
        let sc = &self.sc;
        let k = sc.len();
        let mut out = u.to_vec();
        if k == 0 || radius <= 0.0 {
            sc.iter().for_each(|&j| out[j] = 0.0);
            return out;
        }
        let a = DMatrix::from_fn(k, k, |i, j| self.sigma[(sc[i], sc[j])]);
        let b: Vec<f64> = sc
            .iter()
            .map(|&i| self.s.iter().map(|&j| self.sigma[(i, j)] * u[j]).sum())
            .collect();
        let l1 = |v: &[f64]| v.iter().map(|x| x.abs()).sum::<f64>();
        let mut v = vec![0.0; k];
        qp_descent(&a, &b, 0.0, &mut v);
        if l1(&v) > radius {
            let (mut lo, mut hi) = (0.0, b.iter().map(|x| x.abs()).fold(0.0, f64::max));
            let mut feasible = vec![0.0; k];
            let mut w = v.clone();
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                qp_descent(&a, &b, mid, &mut w);
                if l1(&w) > radius {
                    lo = mid;
                } else {
                    hi = mid;
                    feasible.copy_from_slice(&w);
                }
                if hi - lo <= 1e-15 * hi.max(1e-300) {
                    break;
                }
            }
            v = feasible;
            // stay inside the ball despite rounding
            project_l1_ball(&mut v, radius);
        }
        for (&j, x) in sc.iter().zip(v) {
            out[j] = x;
        }
        out
    }

    /// Alternates between the best normalizing set at the current point and descent.
    fn minimize_alternating(
        &self,
        den: &Denominator,
        opts: &ReOptions,
    ) -> Option<(f64, Vec<f64>)> {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let mut best: Option<(f64, Vec<f64>)> = None;
        for start in self.starts(&mut rng, opts.random_starts) {
            let mut x = start;
            if !self.project(&mut x) {
                continue;
            }
            let mut prev = f64::INFINITY;
            for _ in 0..20 {
                let mask = self.best_mask(&x, den);
                let Some((_, y)) = self.descend(&x, &mask, opts.max_iter) else { break };
                x = y;
                let f = self.ratio(&x, den);
                if f >= prev - 1e-14 * prev.abs() {
                    break;
                }
                prev = f;
            }
            let f = self.ratio(&x, den);
            if f.is_finite() && best.as_ref().map_or(true, |(bf, _)| f < *bf) {
                best = Some((f, x));
            }
        }
        best
    }

    fn best_mask(&self, d: &[f64], den: &Denominator) -> Vec<bool> {
        match den {
            Denominator::Fixed(m) => m.clone(),
            Denominator::TopK(k) => {
                let mut mask = self.in_s.clone();
                let mut rest = self.sc.clone();
                rest.sort_by(|&a, &b| d[b].abs().total_cmp(&d[a].abs()).then(a.cmp(&b)));
                for &j in rest.iter().take(*k) {
                    mask[j] = true;
                }
                mask
            }
            Denominator::BestGroup(groups) => {
                let mut best = (f64::NEG_INFINITY, 0);
                for (i, g) in groups.iter().enumerate() {
                    let v: f64 = g.iter().map(|&j| d[j] * d[j]).sum();
                    if v > best.0 {
                        best = (v, i);
                    }
                }
                let mut mask = vec![false; self.p()];
                for &j in &groups[best.1] {
                    mask[j] = true;
                }
                mask
            }
        }
    }

    fn solve(&self, masks: Vec<Vec<bool>>, den: Denominator, opts: &ReOptions) -> Result<ReEstimate, ReError> {
        let exact = match opts.mode {
            ModeRequest::Exact if self.p() > EXACT_MAX_P => {
                return Err(ReError::TooLargeForExact { p: self.p() })
            }
            ModeRequest::Exact => true,
            ModeRequest::Auto => self.p() <= EXACT_MAX_P,
            ModeRequest::Heuristic => false,
        };
        let best = if exact {
            masks
                .par_iter()
                .enumerate()
                .map(|(i, m)| self.minimize_fixed(m, opts, i as u64))
                .collect::<Vec<_>>()
                .into_iter()
                .flatten()
                .fold(None::<(f64, Vec<f64>)>, |acc, (f, x)| match acc {
                    Some((bf, bx)) if bf <= f => Some((bf, bx)),
                    _ => Some((f, x)),
                })
        } else {
            self.minimize_alternating(&den, opts)
        };
        let Some((_, delta)) = best else {
            return Err(ReError::InvalidQuery("no feasible direction found".into()));
        };
        let certified = self.ratio(&delta, &den);
        Ok(ReEstimate {
            value: certified,
            certified_upper: certified,
            mode: if exact { ReMode::ExactSmall } else { ReMode::Heuristic },
            delta,
        })
    }
}

/// Coordinate descent on `(1/2) vᵀAv + bᵀv + μ‖v‖₁`, warm-started from `v`.
fn qp_descent(a: &DMatrix<f64>, b: &[f64], mu: f64, v: &mut [f64]) {
    let k = v.len();
    let mut grad: Vec<f64> = (0..k).map(|i| b[i] + (0..k).map(|j| a[(i, j)] * v[j]).sum::<f64>()).collect();
    for _ in 0..QP_MAX_SWEEPS {
        let mut moved = 0.0f64;
        let mut scale = 0.0f64;
        for i in 0..k {
            let aii = a[(i, i)];
            if aii <= 0.0 {
                continue;
            }
            let z = v[i] - grad[i] / aii;
            let next = if z > mu / aii {
                z - mu / aii
            } else if z < -mu / aii {
                z + mu / aii
            } else {
                0.0
            };
            let step = next - v[i];
            if step != 0.0 {
                for j in 0..k {
                    grad[j] += a[(j, i)] * step;
                }
                v[i] = next;
                moved = moved.max(step.abs());
            }
            scale = scale.max(v[i].abs());
        }
        if moved <= 1e-15 * scale.max(1.0) {
            break;
        }
    }
}

/// Euclidean projection onto `{b : ‖b‖₁ ≤ radius}`.
pub fn project_l1_ball(b: &mut [f64], radius: f64) {
    let l1: f64 = b.iter().map(|v| v.abs()).sum();
    if l1 <= radius {
        return;
    }
    if radius <= 0.0 {
        b.iter_mut().for_each(|v| *v = 0.0);
        return;
    }
    let mut u: Vec<f64> = b.iter().map(|v| v.abs()).collect();
    u.sort_unstable_by(|a, c| c.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        cum += ui;
        let t = (cum - radius) / (i + 1) as f64;
        if ui > t {
            theta = t;
        } else {
            break;
        }
    }
    for v in b.iter_mut() {
        *v = v.signum() * (v.abs() - theta).max(0.0);
    }
}

fn subsets(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(items: &[usize], k: usize, from: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in from..items.len() {
            if items.len() - i < k - cur.len() {
                break;
            }
            cur.push(items[i]);
            rec(items, k, i + 1, cur, out);
            cur.pop();
        }
    }
    rec(items, k, 0, &mut cur, &mut out);
    out
}

/// `φ²(L, S, m)`.
pub fn re_statistic(data: &Dataset, q: &ReQuery) -> Result<ReEstimate, ReError> {
    re_statistic_with(data, q, &ReOptions::default())
}

pub fn re_statistic_with(data: &Dataset, q: &ReQuery, opts: &ReOptions) -> Result<ReEstimate, ReError> {
    let prob = Problem::new(data, &q.s, q.l)?;
    let m = q.m.unwrap_or(prob.s.len());
    if m < prob.s.len() {
        return Err(ReError::InvalidQuery(format!("m = {m} is smaller than |S| = {}", prob.s.len())));
    }
    let k = m.min(prob.p()) - prob.s.len();
    let masks = if opts.mode == ModeRequest::Heuristic || (opts.mode == ModeRequest::Auto && prob.p() > EXACT_MAX_P) {
        Vec::new()
    } else {
        subsets(&prob.sc, k)
            .into_iter()
            .map(|extra| {
                let mut mask = prob.in_s.clone();
                for j in extra {
                    mask[j] = true;
                }
                mask
            })
            .collect()
    };
    prob.solve(masks, Denominator::TopK(k), opts)
}

/// `φ²_G(L, S)`: the normalizing set ranges over the groups.
pub fn group_re_statistic(data: &Dataset, q: &ReQuery) -> Result<ReEstimate, ReError> {
    group_re_statistic_with(data, q, &ReOptions::default())
}

pub fn group_re_statistic_with(data: &Dataset, q: &ReQuery, opts: &ReOptions) -> Result<ReEstimate, ReError> {
    let groups = q
        .groups
        .as_ref()
        .ok_or_else(|| ReError::InvalidQuery("group statistic needs a group structure".into()))?;
    if groups.p() != data.p() {
        return Err(DataError::DimensionMismatch {
            what: "group structure",
            expected: data.p(),
            found: groups.p(),
        }
        .into());
    }
    let prob = Problem::new(data, &q.s, q.l)?;
    let masks = groups
        .groups()
        .iter()
        .map(|g| {
            let mut mask = vec![false; prob.p()];
            for &j in g {
                mask[j] = true;
            }
            mask
        })
        .collect();
    prob.solve(masks, Denominator::BestGroup(groups.groups().to_vec()), opts)
}

/// Greedy cover of `S` by groups; returns group indices.
pub fn greedy_cover(groups: &GroupStructure, s: &[usize]) -> Result<Vec<usize>, ReError> {
    let p = groups.p();
    if let Some(&j) = s.iter().find(|&&j| j >= p) {
        return Err(DataError::IndexOutOfRange { index: j, p }.into());
    }
    let mut uncovered = vec![false; p];
    for &j in s {
        uncovered[j] = true;
    }
    let mut left = uncovered.iter().filter(|&&u| u).count();
    let mut cover = Vec::new();
    while left > 0 {
        let (k, gain) = groups
            .groups()
            .iter()
            .enumerate()
            .map(|(k, g)| (k, g.iter().filter(|&&j| uncovered[j]).count()))
            .fold((0, 0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if gain == 0 {
            return Err(ReError::InvalidQuery("S is not covered by the groups".into()));
        }
        for &j in groups.group(k) {
            if uncovered[j] {
                uncovered[j] = false;
                left -= 1;
            }
        }
        cover.push(k);
    }
    Ok(cover)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaChain {
    pub cover_size: usize,
    /// `φ²(L, S)`
    pub phi2: f64,
    /// `φ²_G(L, S)`
    pub phi2_group: f64,
    /// `min_G φ²(L, S, |S| + |G|)`
    pub phi2_min_extended: f64,
    /// `φ²(L, S) / (1 + L²|S|)`
    pub phi2_deflated: f64,
    pub holds: [bool; 3],
}

impl LemmaChain {
    pub fn passed(&self) -> bool {
        self.holds.iter().all(|&h| h)
    }
}

fn at_least(a: f64, b: f64) -> bool {
    a * (1.0 + CHAIN_SLACK) + CHAIN_ABS_SLACK >= b
}

/// Evaluates the four quantities of the restricted-eigenvalue inequality chain.
pub fn check_lemma_chain(
    data: &Dataset,
    groups: &GroupStructure,
    s: &[usize],
    l: f64,
) -> Result<LemmaChain, ReError> {
    check_lemma_chain_with(data, groups, s, l, &ReOptions { mode: ModeRequest::Exact, ..ReOptions::default() })
}

pub fn check_lemma_chain_with(
    data: &Dataset,
    groups: &GroupStructure,
    s: &[usize],
    l: f64,
    opts: &ReOptions,
) -> Result<LemmaChain, ReError> {
    let cover_size = greedy_cover(groups, s)?.len();
    let base = ReQuery::new(l, s);
    let s_len = {
        let mut v = s.to_vec();
        v.sort_unstable();
        v.dedup();
        v.len()
    };
    let plain = re_statistic_with(data, &base, opts)?;
    let grouped = group_re_statistic_with(data, &base.clone().with_groups(groups.clone()), opts)?;
    let mut sizes: Vec<usize> = groups.groups().iter().map(Vec::len).collect();
    sizes.sort_unstable();
    sizes.dedup();
    let mut extended = Vec::with_capacity(sizes.len());
    for &g in &sizes {
        extended.push(re_statistic_with(data, &base.clone().with_m(s_len + g), opts)?);
    }
    // All four problems share the cone, so every minimizer found is a feasible
    // point for the others.
    let prob = Problem::new(data, s, l)?;
    let candidates: Vec<&[f64]> = std::iter::once(&plain)
        .chain(std::iter::once(&grouped))
        .chain(&extended)
        .map(|e| e.delta.as_slice())
        .collect();
    let best = |den: &Denominator, start: f64| {
        candidates.iter().map(|d| prob.ratio(d, den)).filter(|v| v.is_finite()).fold(start, f64::min)
    };
    let phi2 = best(&Denominator::TopK(0), plain.value);
    let phi2_group = best(&Denominator::BestGroup(groups.groups().to_vec()), grouped.value);
    let mut phi2_min_extended = f64::INFINITY;
    for (g, e) in sizes.iter().zip(&extended) {
        phi2_min_extended = phi2_min_extended.min(best(&Denominator::TopK((s_len + g).min(data.p()) - s_len), e.value));
    }
    let phi2_deflated = phi2 / (1.0 + l * l * s_len as f64);
    let holds = [
        at_least(cover_size as f64 * phi2, phi2_group),
        at_least(phi2_group, phi2_min_extended),
        at_least(phi2_min_extended, phi2_deflated),
    ];
    Ok(LemmaChain {
        cover_size,
        phi2,
        phi2_group,
        phi2_min_extended,
        phi2_deflated,
        holds,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    /// `φ²(3, S)`
    pub phi2: f64,
    /// `φ²_G(3, S)`
    pub phi2_group: f64,
    pub mode: ReMode,
    /// `None` when every denominator is zero.
    pub b2_ratio: Option<f64>,
    pub b2_infinite: bool,
    /// `None` when every group meets `S`.
    pub l1_zero: Option<f64>,
    /// Largest `(‖β_H‖/√|H|) / (‖β_G‖/√|G|)` over `G` meeting `S` and `H` meeting `S̃ \ T`.
    pub c2_ratio: Option<f64>,
}

pub struct ConditionInputs<'a> {
    pub groups: &'a GroupStructure,
    pub s: &'a [usize],
    pub beta: &'a [f64],
    pub sigma: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub t: Option<&'a [usize]>,
}

pub fn condition_report(data: &Dataset, inp: &ConditionInputs<'_>, opts: &ReOptions) -> Result<ConditionReport, ReError> {
    let groups = inp.groups;
    let p = data.p();
    if inp.beta.len() != p {
        return Err(DataError::DimensionMismatch { what: "beta", expected: p, found: inp.beta.len() }.into());
    }
    let q = ReQuery::new(3.0, inp.s);
    let phi = re_statistic_with(data, &q, opts)?;
    let phi_g = group_re_statistic_with(data, &q.clone().with_groups(groups.clone()), opts)?;

    let meets_s = groups.intersecting(inp.s)?;
    let norms: Vec<f64> = groups
        .groups()
        .iter()
        .map(|g| g.iter().map(|&j| inp.beta[j] * inp.beta[j]).sum::<f64>())
        .collect();
    let min_h = meets_s.iter().map(|&k| norms[k]).fold(f64::INFINITY, f64::min);
    let n = data.n() as f64;
    let s_len = inp.s.len() as f64;
    let mut b2 = 0.0f64;
    for (k, g) in groups.groups().iter().enumerate() {
        let den = n * norms[k].max(if min_h.is_finite() { min_h } else { 0.0 });
        let num = inp.sigma * inp.sigma * s_len * (p as f64).ln() * (g.len() as f64).powf(inp.gamma1);
        b2 = b2.max(if den > 0.0 { num / den } else { f64::INFINITY });
    }

    let mut l1 = None::<f64>;
    for &k in &meets_s {
        for h in (0..groups.len()).filter(|h| !meets_s.contains(h)) {
            let gs = groups.group(k).len() as f64;
            let hs = groups.group(h).len() as f64;
            let v = (gs / (hs.powf(1.0 + inp.gamma1) * n.powf(inp.gamma2))).sqrt();
            l1 = Some(l1.map_or(v, |c| c.max(v)));
        }
    }

    let c2 = match inp.t {
        None => None,
        Some(t) => {
            let stilde = crate::data::s_tilde(groups, inp.s)?;
            let rest: Vec<usize> = stilde.into_iter().filter(|j| !t.contains(j)).collect();
            let meets_rest = groups.intersecting(&rest)?;
            let mut best = None::<f64>;
            for &g in &meets_s {
                for &h in &meets_rest {
                    let num = norms[h].sqrt() / (groups.group(h).len() as f64).sqrt();
                    let den = norms[g].sqrt() / (groups.group(g).len() as f64).sqrt();
                    let v = if den > 0.0 { num / den } else { f64::INFINITY };
                    best = Some(best.map_or(v, |c| c.max(v)));
                }
            }
            best
        }
    };

    Ok(ConditionReport {
        phi2: phi.value,
        phi2_group: phi_g.value,
        mode: phi.mode,
        b2_ratio: b2.is_finite().then_some(b2),
        b2_infinite: !b2.is_finite(),
        l1_zero: l1,
        c2_ratio: c2.filter(|v| v.is_finite()),
    })
}
