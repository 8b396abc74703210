mod common;

use coadaptive::{
    compute_weights, estimation_error, group_norms, s_tilde, Dataset, GroupStructure, WeightScheme,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

#[test]
fn single_column_standardization() {
    let x = DMatrix::from_column_slice(3, 1, &[2.0, 4.0, 6.0]);
    let d = Dataset::standardize(&x, &DVector::from_column_slice(&[1.0, 2.0, 3.0])).unwrap();
    // centered (-2, 0, 2) has mean square 8/3
    let scale = (8.0f64 / 3.0).sqrt();
    assert!((d.column_scales()[0] - scale).abs() < 1e-12);
    assert!((d.x()[(0, 0)] + 2.0 / scale).abs() < 1e-12);
    assert_eq!(d.x()[(1, 0)], 0.0);
    assert!((d.x()[(2, 0)] - 2.0 / scale).abs() < 1e-12);
}

#[test]
fn overlapping_min_weights_by_hand() {
    let g = GroupStructure::new(vec![vec![0, 1], vec![1, 2]], 3).unwrap();
    let w = compute_weights(&[0.0, 0.0, 3.0], &g, WeightScheme::CoadaptiveMin).unwrap();
    let w = w.as_slice();
    assert!(w[0].is_infinite());
    assert!((w[1] - 2f64.sqrt() / 3.0).abs() < 1e-15);
    assert!((w[2] - 2f64.sqrt() / 3.0).abs() < 1e-15);
    assert_eq!(group_norms(&[1.0, 1.0, 1.0], &g), vec![2f64.sqrt(); 2]);
    assert_eq!(s_tilde(&g, &[2]).unwrap(), vec![1, 2]);
}

fn design() -> impl Strategy<Value = (usize, usize, Vec<f64>, Vec<f64>)> {
    (2usize..15, 1usize..8).prop_flat_map(|(n, p)| {
        (
            Just(n),
            Just(p),
            proptest::collection::vec(-50.0..50.0f64, n * p),
            proptest::collection::vec(-5.0..5.0f64, n),
        )
    })
}

fn groups() -> impl Strategy<Value = (GroupStructure, Vec<f64>)> {
    (2usize..12).prop_flat_map(|p| {
        (
            proptest::collection::vec(proptest::collection::btree_set(0..p, 1..4), 1..6),
            proptest::collection::vec(prop_oneof![Just(0.0), -3.0..3.0f64], p),
        )
            .prop_map(move |(sets, beta)| {
                let mut gs: Vec<Vec<usize>> = sets.into_iter().map(|s| s.into_iter().collect()).collect();
                let covered: std::collections::BTreeSet<usize> = gs.iter().flatten().copied().collect();
                let rest: Vec<usize> = (0..p).filter(|j| !covered.contains(j)).collect();
                if !rest.is_empty() {
                    gs.push(rest);
                }
                (GroupStructure::new(gs, p).unwrap(), beta)
            })
    })
}

proptest! {
    #[test]
    fn standardized_columns_are_centered_unit_and_invertible((n, p, xs, ys) in design()) {
        let x = DMatrix::from_column_slice(n, p, &xs);
        let y = DVector::from_column_slice(&ys);
        let d = Dataset::standardize(&x, &y).unwrap();
        for j in 0..p {
            let col = d.column(j);
            prop_assert!(col.iter().sum::<f64>().abs() < 1e-9);
            if !d.is_constant(j) {
                prop_assert!((col.iter().map(|v| v * v).sum::<f64>() / n as f64 - 1.0).abs() < 1e-12);
            }
        }
        // raw-scale coefficients reproduce the fitted values on the raw design
        let beta: Vec<f64> = (0..p).map(|j| if d.is_constant(j) { 0.0 } else { j as f64 - 1.5 }).collect();
        let (raw, intercept) = d.to_raw(&beta);
        let fit = d.fitted(&beta);
        for i in 0..n {
            let raw_pred: f64 = intercept + (0..p).map(|j| x[(i, j)] * raw[j]).sum::<f64>();
            prop_assert!((raw_pred - (fit[i] + d.y_mean())).abs() < 1e-8 * (1.0 + raw_pred.abs()));
        }
    }

    #[test]
    fn estimation_error_matches_naive_loop(a in proptest::collection::vec(-10.0..10.0f64, 1..40), shift in -1.0..1.0f64) {
        let b: Vec<f64> = a.iter().enumerate().map(|(i, v)| v + shift * i as f64).collect();
        let mut naive = 0.0;
        for i in 0..a.len() {
            naive += (a[i] - b[i]) * (a[i] - b[i]);
        }
        prop_assert!((estimation_error(&a, &b).unwrap() - naive).abs() <= 1e-12 * naive.max(1.0));
    }

    #[test]
    fn min_weights_match_per_covariate_loop((g, beta) in groups()) {
        let w = compute_weights(&beta, &g, WeightScheme::CoadaptiveMin).unwrap();
        for j in 0..beta.len() {
            let mut best = f64::INFINITY;
            for grp in g.groups() {
                if grp.contains(&j) {
                    let nrm = grp.iter().map(|&k| beta[k] * beta[k]).sum::<f64>().sqrt();
                    let v = if nrm == 0.0 { f64::INFINITY } else { (grp.len() as f64).sqrt() / nrm };
                    best = best.min(v);
                }
            }
            let got = w.as_slice()[j];
            prop_assert!(got == best || (got - best).abs() <= 1e-12 * best);
        }
    }

    #[test]
    fn s_tilde_is_union_of_touched_groups((g, beta) in groups()) {
        let s: Vec<usize> = (0..beta.len()).filter(|&j| beta[j] != 0.0).collect();
        let st = s_tilde(&g, &s).unwrap();
        for j in 0..beta.len() {
            let expect = g.groups().iter().any(|grp| grp.contains(&j) && grp.iter().any(|k| s.contains(k)));
            prop_assert_eq!(st.contains(&j), expect);
        }
    }
}
