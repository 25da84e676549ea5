//! Goodness-of-fit and two-sample statistics used by the tests and the
//! experiment harness.

use std::collections::HashMap;
use std::hash::Hash;

use rand::seq::SliceRandom;
use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("empty sample")]
    Empty,
    #[error("weights must be finite, non-negative and not all zero")]
    InvalidWeights,
    #[error("expected count {0} in cell {1} must be positive")]
    ZeroExpected(f64, usize),
}

/// Total variation distance between two probability vectors on the same
/// cells.
pub fn total_variation(p: &[f64], q: &[f64]) -> Result<f64, StatsError> {
    if p.len() != q.len() {
        return Err(StatsError::LengthMismatch(p.len(), q.len()));
    }
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// Total variation between the empirical law of `samples` and `law`.
/// Sampled values outside the support of `law` count in full.
pub fn empirical_tv<K: Eq + Hash>(
    samples: impl IntoIterator<Item = K>,
    law: &[(K, f64)],
) -> Result<f64, StatsError> {
    let mut counts: HashMap<K, usize> = HashMap::new();
    let mut n = 0usize;
    for x in samples {
        *counts.entry(x).or_default() += 1;
        n += 1;
    }
    if n == 0 {
        return Err(StatsError::Empty);
    }
    let mut tv = 0.0;
    let mut covered = 0usize;
    for (k, p) in law {
        let c = counts.get(k).copied().unwrap_or(0);
        covered += c;
        tv += (c as f64 / n as f64 - p).abs();
    }
    tv += (n - covered) as f64 / n as f64;
    Ok(0.5 * tv)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Pearson chi-square test with `cells - 1 - fitted` degrees of freedom.
pub fn chi_square(
    observed: &[f64],
    expected: &[f64],
    fitted: usize,
) -> Result<TestResult, StatsError> {
    if observed.len() != expected.len() {
        return Err(StatsError::LengthMismatch(observed.len(), expected.len()));
    }
    if let Some(i) = expected.iter().position(|&e| e.is_nan() || e <= 0.0) {
        return Err(StatsError::ZeroExpected(expected[i], i));
    }
    let statistic: f64 = observed
        .iter()
        .zip(expected)
        .map(|(o, e)| (o - e).powi(2) / e)
        .sum();
    let dof = observed.len().saturating_sub(1 + fitted).max(1);
    let dist = ChiSquared::new(dof as f64).expect("positive degrees of freedom");
    Ok(TestResult {
        statistic,
        p_value: dist.sf(statistic),
    })
}

/// `P(K > x)` for the Kolmogorov distribution.
pub fn kolmogorov_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * x * x).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample Kolmogorov–Smirnov test against a continuous CDF, with the
/// asymptotic p-value (Stephens' small-sample correction).
pub fn ks_one_sample(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<TestResult, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::Empty);
    }
    let mut x = samples.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &xi) in x.iter().enumerate() {
        let f = cdf(xi);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    let sn = n.sqrt();
    Ok(TestResult {
        statistic: d,
        p_value: kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d),
    })
}

fn normalized(w: &[f64]) -> Result<Vec<f64>, StatsError> {
    let total: f64 = w.iter().sum();
    if w.iter().any(|&x| !x.is_finite() || x < 0.0) || !(total > 0.0) {
        return Err(StatsError::InvalidWeights);
    }
    Ok(w.iter().map(|&x| x / total).collect())
}

/// Weighted two-sample Kolmogorov–Smirnov statistic
/// `sup_t |F_x(t) - F_y(t)|` with self-normalised weights.
pub fn ks_two_sample_weighted(
    x: &[f64],
    wx: &[f64],
    y: &[f64],
    wy: &[f64],
) -> Result<f64, StatsError> {
    if x.len() != wx.len() {
        return Err(StatsError::LengthMismatch(x.len(), wx.len()));
    }
    if y.len() != wy.len() {
        return Err(StatsError::LengthMismatch(y.len(), wy.len()));
    }
    if x.is_empty() || y.is_empty() {
        return Err(StatsError::Empty);
    }
    let (wx, wy) = (normalized(wx)?, normalized(wy)?);
    let mut events: Vec<(f64, f64)> = x
        .iter()
        .zip(&wx)
        .map(|(&v, &w)| (v, w))
        .chain(y.iter().zip(&wy).map(|(&v, &w)| (v, -w)))
        .collect();
    events.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (mut diff, mut best): (f64, f64) = (0.0, 0.0);
    let mut i = 0;
    while i < events.len() {
        let t = events[i].0;
        while i < events.len() && events[i].0 == t {
            diff += events[i].1;
            i += 1;
        }
        best = best.max(diff.abs());
    }
    Ok(best)
}

pub fn ks_two_sample(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    ks_two_sample_weighted(x, &vec![1.0; x.len()], y, &vec![1.0; y.len()])
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt()
}

fn check_points(x: &[Vec<f64>], w: &[f64]) -> Result<(), StatsError> {
    if x.len() != w.len() {
        return Err(StatsError::LengthMismatch(x.len(), w.len()));
    }
    if x.is_empty() {
        return Err(StatsError::Empty);
    }
    Ok(())
}

fn weighted_mean_distance(x: &[Vec<f64>], wx: &[f64], y: &[Vec<f64>], wy: &[f64]) -> f64 {
    let mut total = 0.0;
    for (a, &wa) in x.iter().zip(wx) {
        let mut inner = 0.0;
        for (b, &wb) in y.iter().zip(wy) {
            inner += wb * euclid(a, b);
        }
        total += wa * inner;
    }
    total
}

/// Energy distance `2E|X-Y| - E|X-X'| - E|Y-Y'|` between two weighted
/// samples of points in `R^d` (V-statistic, weights self-normalised).
pub fn energy_distance_weighted(
    x: &[Vec<f64>],
    wx: &[f64],
    y: &[Vec<f64>],
    wy: &[f64],
) -> Result<f64, StatsError> {
    check_points(x, wx)?;
    check_points(y, wy)?;
    let (wx, wy) = (normalized(wx)?, normalized(wy)?);
    let xy = weighted_mean_distance(x, &wx, y, &wy);
    let xx = weighted_mean_distance(x, &wx, x, &wx);
    let yy = weighted_mean_distance(y, &wy, y, &wy);
    Ok(2.0 * xy - xx - yy)
}

pub fn energy_distance(x: &[Vec<f64>], y: &[Vec<f64>]) -> Result<f64, StatsError> {
    energy_distance_weighted(x, &vec![1.0; x.len()], y, &vec![1.0; y.len()])
}

/// Permutation p-value of the weighted energy distance: pooled
/// (point, weight) pairs are reshuffled into groups of the original sizes.
pub fn energy_permutation_test<R: Rng + ?Sized>(
    x: &[Vec<f64>],
    wx: &[f64],
    y: &[Vec<f64>],
    wy: &[f64],
    n_perm: usize,
    rng: &mut R,
) -> Result<TestResult, StatsError> {
    check_points(x, wx)?;
    check_points(y, wy)?;
    let pooled: Vec<&[f64]> = x.iter().chain(y).map(|v| v.as_slice()).collect();
    let weights: Vec<f64> = wx.iter().chain(wy).copied().collect();
    let n = pooled.len();
    let dist: Vec<f64> = (0..n * n)
        .map(|ij| euclid(pooled[ij / n], pooled[ij % n]))
        .collect();
    let stat = |idx: &[usize]| -> f64 {
        let (a, b) = idx.split_at(x.len());
        let sa: f64 = a.iter().map(|&i| weights[i]).sum();
        let sb: f64 = b.iter().map(|&i| weights[i]).sum();
        let mean = |p: &[usize], sp: f64, q: &[usize], sq: f64| -> f64 {
            let mut t = 0.0;
            for &i in p {
                let row = &dist[i * n..(i + 1) * n];
                let inner: f64 = q.iter().map(|&j| weights[j] * row[j]).sum();
                t += weights[i] * inner;
            }
            t / (sp * sq)
        };
        2.0 * mean(a, sa, b, sb) - mean(a, sa, a, sa) - mean(b, sb, b, sb)
    };
    let mut idx: Vec<usize> = (0..n).collect();
    let observed = stat(&idx);
    let mut exceed = 0usize;
    for _ in 0..n_perm {
        idx.shuffle(rng);
        if stat(&idx) >= observed {
            exceed += 1;
        }
    }
    Ok(TestResult {
        statistic: observed,
        p_value: (exceed + 1) as f64 / (n_perm + 1) as f64,
    })
}

/// Sample mean and its standard error.
pub fn mean_and_se(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    if x.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = x.iter().sum::<f64>() / n;
    if x.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
