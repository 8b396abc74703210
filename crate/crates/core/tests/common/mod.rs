#![allow(dead_code)]

use coadaptive::{Dataset, GroupStructure};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, n: usize, p: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Gaussian design with a sparse linear signal plus unit noise.
pub fn random_data(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Dataset {
    let x = gaussian(rng, n, p);
    let k = p.min(3);
    let mut y = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    for _ in 0..k {
        let c: f64 = rng.gen_range(-2.0..2.0);
        y.axpy(c, &x.column(rng.gen_range(0..p)), 1.0);
    }
    Dataset::standardize(&x, &y).unwrap()
}

/// Columns that are centered, mutually orthogonal and have `‖x_j‖²/n = 1`.
///
/// Needs `n > p`: the columns are taken from the orthogonal complement of the
/// constant vector, so standardization leaves them unchanged.
pub fn orthonormal_design(rng: &mut ChaCha8Rng, n: usize, p: usize) -> DMatrix<f64> {
    assert!(n > p);
    let mut a = gaussian(rng, n, p + 1);
    a.column_mut(0).fill(1.0);
    let q = a.qr().q();
    let scale = (n as f64).sqrt();
    DMatrix::from_fn(n, p, |i, j| q[(i, j + 1)] * scale)
}

pub fn x_t_y_over_n(d: &Dataset) -> Vec<f64> {
    let n = d.n() as f64;
    (0..d.p())
        .map(|j| d.column(j).iter().zip(d.y().iter()).map(|(a, b)| a * b).sum::<f64>() / n)
        .collect()
}

fn spectral_norm_sq(x: &DMatrix<f64>) -> f64 {
    let n = x.nrows() as f64;
    let g = x.tr_mul(x) / n;
    g.symmetric_eigenvalues().max()
}

/// Accelerated proximal gradient with adaptive restart on
/// `(1/2n)‖y - Xβ‖² + Σ prox-penalty`, stopped when an iterate moves by less than `tol`.
fn fista(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    prox: impl Fn(&mut DVector<f64>, f64),
    tol: f64,
    max_iter: usize,
) -> DVector<f64> {
    let n = x.nrows() as f64;
    let step = 1.0 / spectral_norm_sq(x);
    let mut beta = DVector::zeros(x.ncols());
    let mut z = beta.clone();
    let mut t = 1.0f64;
    for _ in 0..max_iter {
        let grad = x.tr_mul(&(x * &z - y)) / n;
        let mut next = &z - grad * step;
        prox(&mut next, step);
        let delta = &next - &beta;
        let moved = delta.amax();
        // restart momentum when it points uphill
        if (&z - &next).dot(&delta) > 0.0 {
            t = 1.0;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        z = &next + delta * ((t - 1.0) / t_next);
        beta = next;
        t = t_next;
        if moved < tol {
            break;
        }
    }
    beta
}

/// Reference weighted Lasso solution; infinite weights pin coordinates to zero.
pub fn prox_lasso(d: &Dataset, weights: &[f64], lambda: f64, tol: f64) -> Vec<f64> {
    let prox = |v: &mut DVector<f64>, step: f64| {
        for (j, b) in v.iter_mut().enumerate() {
            let thr = step * lambda * weights[j];
            *b = if thr.is_infinite() {
                0.0
            } else if *b > thr {
                *b - thr
            } else if *b < -thr {
                *b + thr
            } else {
                0.0
            };
        }
    };
    fista(d.x(), d.y(), prox, tol, 2_000_000).as_slice().to_vec()
}

/// Reference latent Group Lasso: each group owns a copy of its columns, penalty `λ Σ √|G| ‖v_G‖`.
/// Returns the summed coefficient vector.
pub fn prox_group_lasso(d: &Dataset, groups: &GroupStructure, lambda: f64, tol: f64) -> Vec<f64> {
    let cols: Vec<usize> = groups.groups().iter().flatten().copied().collect();
    let xl = DMatrix::from_fn(d.n(), cols.len(), |i, k| d.x()[(i, cols[k])]);
    let mut offsets = vec![0];
    for g in groups.groups() {
        offsets.push(offsets.last().unwrap() + g.len());
    }
    let prox = |v: &mut DVector<f64>, step: f64| {
        for (k, g) in groups.groups().iter().enumerate() {
            let thr = step * lambda * (g.len() as f64).sqrt();
            let mut block = v.rows_mut(offsets[k], g.len());
            let nrm = block.norm();
            if nrm <= thr {
                block.fill(0.0);
            } else {
                block *= 1.0 - thr / nrm;
            }
        }
    };
    let latent = fista(&xl, d.y(), prox, tol, 2_000_000);
    let mut beta = vec![0.0; d.p()];
    for (k, &j) in cols.iter().enumerate() {
        beta[j] += latent[k];
    }
    beta
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
