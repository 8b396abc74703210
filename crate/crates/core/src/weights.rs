//! Adaptive and co-adaptive penalty weights from a first-stage estimate.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{GroupStructure, SparsityPattern};
use crate::solver::WeightVector;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WeightError {
    #[error("scheme {scheme} cannot be used with {reason}")]
    SchemeGroupMismatch { scheme: String, reason: String },
    #[error("coefficient vector has length {found}, groups cover {expected} columns")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("unknown weight scheme {0:?}")]
    UnknownScheme(String),
}

/// How the first-stage coefficients are pooled into per-covariate weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightScheme {
    /// `w_j = 1/|β_j|`: the co-adaptive rule on singleton groups.
    Adaptive,
    /// `w_j = √|G| / ‖β_G‖` for the unique group containing `j`.
    CoadaptiveNonoverlap,
    /// `w_j = min_{G∋j} √|G| / ‖β_G‖`.
    CoadaptiveMin,
    /// `w_j = Σ_{G∋j} √|G| / ‖β_G‖`.
    CoadaptiveSum,
    /// As [`WeightScheme::CoadaptiveMin`], with `‖β_G‖²` replaced by the sum of the
    /// largest `⌈(1 - trim_fraction)|G|⌉` squared entries of `β_G`.
    CoadaptiveTrimmed { trim_fraction: f64 },
}

impl WeightScheme {
    pub fn name(&self) -> &'static str {
        match self {
            WeightScheme::Adaptive => "adaptive",
            WeightScheme::CoadaptiveNonoverlap => "coadaptive",
            WeightScheme::CoadaptiveMin => "coadaptive-min",
            WeightScheme::CoadaptiveSum => "coadaptive-sum",
            WeightScheme::CoadaptiveTrimmed { .. } => "coadaptive-trimmed",
        }
    }

    /// Builds a scheme from its CLI name; `trim_fraction` is required for the trimmed kind only.
    pub fn parse(name: &str, trim_fraction: Option<f64>) -> Result<Self, WeightError> {
        let scheme = match (name, trim_fraction) {
            ("coadaptive-trimmed" | "trimmed", Some(f)) => {
                if !(0.0..0.5).contains(&f) {
                    return Err(WeightError::UnknownScheme(format!(
                        "trim fraction {f} outside [0, 0.5)"
                    )));
                }
                WeightScheme::CoadaptiveTrimmed { trim_fraction: f }
            }
            ("coadaptive-trimmed" | "trimmed", None) => {
                return Err(WeightError::UnknownScheme(
                    "trimmed scheme needs a trim fraction".to_string(),
                ))
            }
            (_, Some(_)) => {
                return Err(WeightError::UnknownScheme(format!(
                    "trim fraction only applies to the trimmed scheme, not {name}"
                )))
            }
            (other, None) => other.parse()?,
        };
        Ok(scheme)
    }

    pub fn check_groups(&self, groups: &GroupStructure) -> Result<(), WeightError> {
        if matches!(self, WeightScheme::CoadaptiveNonoverlap) && groups.is_overlapping() {
            return Err(WeightError::SchemeGroupMismatch {
                scheme: self.name().to_string(),
                reason: "overlapping groups".to_string(),
            });
        }
        if let WeightScheme::CoadaptiveTrimmed { trim_fraction } = *self {
            if !(0.0..0.5).contains(&trim_fraction) {
                return Err(WeightError::SchemeGroupMismatch {
                    scheme: self.name().to_string(),
                    reason: format!("trim fraction {trim_fraction}"),
                });
            }
        }
        Ok(())
    }
}

impl fmt::Display for WeightScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightScheme::CoadaptiveTrimmed { trim_fraction } => {
                write!(f, "{}({trim_fraction})", self.name())
            }
            _ => f.write_str(self.name()),
        }
    }
}

impl FromStr for WeightScheme {
    type Err = WeightError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "adaptive" => Ok(WeightScheme::Adaptive),
            "coadaptive" | "coadaptive-nonoverlap" | "nonoverlap" => {
                Ok(WeightScheme::CoadaptiveNonoverlap)
            }
            "coadaptive-min" | "min" => Ok(WeightScheme::CoadaptiveMin),
            "coadaptive-sum" | "sum" => Ok(WeightScheme::CoadaptiveSum),
            other => Err(WeightError::UnknownScheme(other.to_string())),
        }
    }
}

/// Euclidean norm of `beta` on each group.
pub fn group_norms(beta: &[f64], groups: &GroupStructure) -> Vec<f64> {
    groups
        .groups()
        .iter()
        .map(|g| g.iter().map(|&j| beta[j] * beta[j]).sum::<f64>().sqrt())
        .collect()
}

fn trimmed_norms(beta: &[f64], groups: &GroupStructure, trim_fraction: f64) -> Vec<f64> {
    groups
        .groups()
        .iter()
        .map(|g| {
            let keep = ((1.0 - trim_fraction) * g.len() as f64).ceil() as usize;
            let mut sq: Vec<f64> = g.iter().map(|&j| beta[j] * beta[j]).collect();
            sq.sort_unstable_by(|a, b| b.total_cmp(a));
            sq.iter().take(keep.max(1)).sum::<f64>().sqrt()
        })
        .collect()
}

/// Per-covariate weights from `beta_initial`; a zero group norm gives `+∞`.
pub fn compute_weights(
    beta_initial: &[f64],
    groups: &GroupStructure,
    scheme: WeightScheme,
) -> Result<WeightVector, WeightError> {
    let p = beta_initial.len();
    if scheme == WeightScheme::Adaptive {
        return compute_weights(
            beta_initial,
            &GroupStructure::singletons(p),
            WeightScheme::CoadaptiveNonoverlap,
        );
    }
    if groups.p() != p {
        return Err(WeightError::DimensionMismatch {
            expected: groups.p(),
            found: p,
        });
    }
    scheme.check_groups(groups)?;

    let norms = match scheme {
        WeightScheme::CoadaptiveTrimmed { trim_fraction } => {
            trimmed_norms(beta_initial, groups, trim_fraction)
        }
        _ => group_norms(beta_initial, groups),
    };
    let per_group: Vec<f64> = groups
        .groups()
        .iter()
        .zip(&norms)
        .map(|(g, &nrm)| (g.len() as f64).sqrt() / nrm)
        .collect();

    let w = (0..p)
        .map(|j| {
            let it = groups.groups_of(j).iter().map(|&k| per_group[k]);
            match scheme {
                WeightScheme::CoadaptiveSum => it.sum(),
                _ => it.fold(f64::INFINITY, f64::min),
            }
        })
        .collect();
    Ok(WeightVector::new(w).expect("group weights are non-negative"))
}

/// Weight extremes over the index sets that drive the second-stage bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightSeparation {
    /// Max weight over `T` (0 if `T` is empty).
    pub w_plus_t: f64,
    /// Min weight outside `S̃` (`+∞` if that set is empty).
    pub w_minus_stilde_c: f64,
    /// Min weight over `S̃ \ T` (`+∞` if empty).
    pub w_minus_stilde_minus_t: f64,
    pub t_empty: bool,
    pub stilde_c_empty: bool,
    pub stilde_minus_t_empty: bool,
}

pub fn weight_separation_stats(
    weights: &WeightVector,
    pattern: &SparsityPattern,
    t: &[usize],
) -> WeightSeparation {
    let w = weights.as_slice();
    let p = w.len();
    let mut in_t = vec![false; p];
    t.iter().filter(|&&j| j < p).for_each(|&j| in_t[j] = true);
    let mut in_st = vec![false; p];
    pattern
        .s_tilde
        .iter()
        .filter(|&&j| j < p)
        .for_each(|&j| in_st[j] = true);

    let t_idx: Vec<usize> = (0..p).filter(|&j| in_t[j]).collect();
    let stc: Vec<usize> = (0..p).filter(|&j| !in_st[j]).collect();
    let st_minus_t: Vec<usize> = (0..p).filter(|&j| in_st[j] && !in_t[j]).collect();

    WeightSeparation {
        w_plus_t: t_idx.iter().map(|&j| w[j]).fold(0.0, f64::max),
        w_minus_stilde_c: stc.iter().map(|&j| w[j]).fold(f64::INFINITY, f64::min),
        w_minus_stilde_minus_t: st_minus_t
            .iter()
            .map(|&j| w[j])
            .fold(f64::INFINITY, f64::min),
        t_empty: t_idx.is_empty(),
        stilde_c_empty: stc.is_empty(),
        stilde_minus_t_empty: st_minus_t.is_empty(),
    }
}
