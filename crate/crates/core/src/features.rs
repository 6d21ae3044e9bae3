//! Robust reduction of a per-window similarity series to one pair weight.
//!
//! The series is split into two clusters by one-dimensional 2-means. When a
//! Welch two-sample t-test says the clusters differ, the mean of the larger
//! cluster is kept; otherwise the mean of all points.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    pub significance_alpha: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self { significance_alpha: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinedFeature {
    pub mean_value: f64,
    pub used_count: usize,
    pub total_count: usize,
    pub single_cluster: bool,
    /// Welch p-value, when the test was applicable.
    pub p_value: Option<f64>,
}

#[derive(Debug, Clone, Copy)]
struct Stats {
    n: usize,
    mean: f64,
    var: f64,
}

fn stats(x: &[f64]) -> Stats {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let var = if n > 1 {
        x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    Stats { n, mean, var }
}

/// One-dimensional 2-means seeded at the extremes. Returns `true` for members of the upper cluster.
fn two_means(x: &[f64]) -> Vec<bool> {
    let lo = x.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let (mut c0, mut c1) = (lo, hi);
    let mut upper: Vec<bool> = vec![false; x.len()];
    for _ in 0..100 {
        let next: Vec<bool> = x.iter().map(|v| (v - c1).abs() < (v - c0).abs()).collect();
        let (mut s0, mut n0, mut s1, mut n1) = (0.0, 0, 0.0, 0);
        for (v, u) in x.iter().zip(&next) {
            if *u {
                s1 += v;
                n1 += 1;
            } else {
                s0 += v;
                n0 += 1;
            }
        }
        if n0 > 0 {
            c0 = s0 / n0 as f64;
        }
        if n1 > 0 {
            c1 = s1 / n1 as f64;
        }
        let done = next == upper;
        upper = next;
        if done {
            break;
        }
    }
    upper
}

/// Two-sided Welch p-value; `None` when the test is undefined.
fn welch_p(a: Stats, b: Stats) -> Option<f64> {
    let (va, vb) = (a.var / a.n as f64, b.var / b.n as f64);
    let se2 = va + vb;
    if se2 == 0.0 {
        return if a.mean == b.mean { None } else { Some(0.0) };
    }
    let term = |v: f64, n: usize| if v == 0.0 { 0.0 } else { v * v / (n - 1) as f64 };
    let df = se2 * se2 / (term(va, a.n) + term(vb, b.n));
    let t = (a.mean - b.mean).abs() / se2.sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).ok()?;
    Some((2.0 * (1.0 - dist.cdf(t))).clamp(0.0, 1.0))
}

/// Refines a similarity series into a single representative value.
pub fn feature_construct(series: &[f64], cfg: &FeatureConfig) -> Result<RefinedFeature> {
    if series.is_empty() {
        return Err(Error::InsufficientData("empty feature series".into()));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::param("feature series contains non-finite values"));
    }
    let total = series.len();
    let all = stats(series);
    let single = |p| RefinedFeature {
        mean_value: all.mean,
        used_count: total,
        total_count: total,
        single_cluster: true,
        p_value: p,
    };

    let upper = two_means(series);
    let hi: Vec<f64> = series.iter().zip(&upper).filter(|(_, u)| **u).map(|(v, _)| *v).collect();
    let lo: Vec<f64> = series.iter().zip(&upper).filter(|(_, u)| !**u).map(|(v, _)| *v).collect();
    if hi.is_empty() || lo.is_empty() {
        return Ok(single(None));
    }
    let (sh, sl) = (stats(&hi), stats(&lo));
    if (sh.n == 1 || sl.n == 1) && total < 4 {
        return Ok(single(None));
    }
    let p = match welch_p(sh, sl) {
        Some(p) if p < cfg.significance_alpha => p,
        other => return Ok(single(other)),
    };
    let major = if sh.n >= sl.n { sh } else { sl };
    Ok(RefinedFeature {
        mean_value: major.mean,
        used_count: major.n,
        total_count: total,
        single_cluster: false,
        p_value: Some(p),
    })
}
