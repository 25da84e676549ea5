//! Parameter spaces: degree sequences, probability vectors and theta vectors.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance used for the normalization of `PVector` and `ThetaVector`.
pub const NORM_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("degree sum {sum} does not match the required {expected} for {kind}")]
    SumMismatch {
        sum: i64,
        expected: i64,
        kind: SequenceKind,
    },
    #[error("degree sequence is not sorted non-increasingly at index {0}")]
    NotSorted(usize),
    #[error("negative degree {value} at index {index}")]
    NegativeEntry { index: usize, value: i64 },
    #[error("half-edge sequence has odd sum {0}")]
    OddSum(i64),
    #[error("empty degree sequence")]
    Empty,
    #[error("probability vector is invalid: {0}")]
    InvalidP(String),
    #[error("theta vector is invalid: {0}")]
    InvalidTheta(String),
    #[error("malformed parameter file: {0}")]
    Parse(String),
}

/// Which parameter space a raw integer list is validated against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SequenceKind {
    /// `sum d_i = s - 2`; vertex `V_i` has degree `d_i + 1`.
    Tree,
    /// `sum d_i = s + 2k - 2`; vertex `V_i` has degree `d_i + 1`.
    Surplus { k: usize },
    /// Plain vertex degrees of a configuration model; even sum.
    HalfEdge,
}

impl std::fmt::Display for SequenceKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SequenceKind::Tree => write!(f, "tree"),
            SequenceKind::Surplus { k } => write!(f, "surplus({k})"),
            SequenceKind::HalfEdge => write!(f, "half-edge"),
        }
    }
}

/// What to do with a sequence that is not sorted non-increasingly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SortPolicy {
    /// Keep the given order; vertex labels follow input positions.
    #[default]
    Preserve,
    /// Reject with `NotSorted`.
    Require,
    /// Sort non-increasingly before validating.
    Sort,
}

/// A validated degree sequence `D = (d_1, ..., d_s)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DegreeSequence {
    degrees: Vec<usize>,
    kind: SequenceKind,
}

/// Derived statistics of a degree sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DegreeStats {
    pub s: usize,
    pub sigma: f64,
    pub lambda: f64,
    /// `#{i : d_i = 0} - 2`, the leaf offset (may be negative).
    pub n: i64,
    pub s_1: usize,
    pub s_geq2: usize,
}

impl DegreeSequence {
    pub fn validate(raw: &[i64], kind: SequenceKind) -> Result<Self, ParamError> {
        Self::validate_with(raw, kind, SortPolicy::Preserve)
    }

    pub fn validate_with(
        raw: &[i64],
        kind: SequenceKind,
        policy: SortPolicy,
    ) -> Result<Self, ParamError> {
        if raw.is_empty() {
            return Err(ParamError::Empty);
        }
        if let Some((index, &value)) = raw.iter().enumerate().find(|(_, &v)| v < 0) {
            return Err(ParamError::NegativeEntry { index, value });
        }
        let mut degrees: Vec<usize> = raw.iter().map(|&v| v as usize).collect();
        match policy {
            SortPolicy::Preserve => {}
            SortPolicy::Require => {
                if let Some(i) = degrees.windows(2).position(|w| w[0] < w[1]) {
                    return Err(ParamError::NotSorted(i + 1));
                }
            }
            SortPolicy::Sort => degrees.sort_unstable_by(|a, b| b.cmp(a)),
        }
        let s = degrees.len() as i64;
        let sum: i64 = raw.iter().sum();
        let expected = match kind {
            SequenceKind::Tree => Some(s - 2),
            SequenceKind::Surplus { k } => Some(s + 2 * k as i64 - 2),
            SequenceKind::HalfEdge => None,
        };
        match expected {
            Some(expected) if expected != sum => {
                return Err(ParamError::SumMismatch {
                    sum,
                    expected,
                    kind,
                })
            }
            None if sum % 2 != 0 => return Err(ParamError::OddSum(sum)),
            _ => {}
        }
        Ok(Self { degrees, kind })
    }

    pub fn tree(raw: &[i64]) -> Result<Self, ParamError> {
        Self::validate(raw, SequenceKind::Tree)
    }

    pub fn surplus(raw: &[i64], k: usize) -> Result<Self, ParamError> {
        Self::validate(raw, SequenceKind::Surplus { k })
    }

    pub fn half_edge(raw: &[i64]) -> Result<Self, ParamError> {
        Self::validate(raw, SequenceKind::HalfEdge)
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn kind(&self) -> SequenceKind {
        self.kind
    }

    pub fn s(&self) -> usize {
        self.degrees.len()
    }

    pub fn sum(&self) -> usize {
        self.degrees.iter().sum()
    }

    pub fn zeros(&self) -> usize {
        self.degrees.iter().filter(|&&d| d == 0).count()
    }

    pub fn is_sorted(&self) -> bool {
        self.degrees.windows(2).all(|w| w[0] >= w[1])
    }

    pub fn stats(&self) -> DegreeStats {
        let s = self.s();
        let sigma2: usize = self.degrees.iter().map(|&d| d * d.saturating_sub(1)).sum();
        let sigma = (sigma2 as f64).sqrt();
        DegreeStats {
            s,
            sigma,
            lambda: sigma / s as f64,
            n: self.zeros() as i64 - 2,
            s_1: self.degrees.iter().filter(|&&d| d == 1).count(),
            s_geq2: self.degrees.iter().filter(|&&d| d >= 2).count(),
        }
    }

    /// Appends `2k` zeros to a surplus-`k` sequence, giving a tree sequence.
    pub fn extend_to_tree(&self) -> Self {
        let k = match self.kind {
            SequenceKind::Surplus { k } => k,
            _ => 0,
        };
        let mut degrees = self.degrees.clone();
        degrees.extend(std::iter::repeat_n(0, 2 * k));
        Self {
            degrees,
            kind: SequenceKind::Tree,
        }
    }

    /// Shifted sequence `(d_1 - 1, ..., d_s - 1)` of a half-edge sequence,
    /// as a surplus sequence with the surplus implied by the degree sum.
    /// Returns `None` if some vertex has no half-edge or the implied surplus
    /// is negative.
    pub fn shifted(&self) -> Option<(Self, usize)> {
        if self.kind != SequenceKind::HalfEdge || self.degrees.contains(&0) {
            return None;
        }
        let edges = self.sum() / 2;
        let k = (edges + 1).checked_sub(self.s())?;
        let degrees = self.degrees.iter().map(|d| d - 1).collect();
        Some((
            Self {
                degrees,
                kind: SequenceKind::Surplus { k },
            },
            k,
        ))
    }

    /// Removes the `d_i = 1` entries, returning the reduced sequence together
    /// with the original (1-based) labels of the kept entries.
    pub fn nabla(&self) -> (Self, Vec<usize>) {
        let keep: Vec<usize> = (0..self.s()).filter(|&i| self.degrees[i] != 1).collect();
        let degrees = keep.iter().map(|&i| self.degrees[i]).collect();
        (
            Self {
                degrees,
                kind: self.kind,
            },
            keep.into_iter().map(|i| i + 1).collect(),
        )
    }

    pub fn to_raw(&self) -> Vec<i64> {
        self.degrees.iter().map(|&d| d as i64).collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct DegreeFile {
    kind: String,
    #[serde(default)]
    k: usize,
    degrees: Vec<i64>,
}

impl Serialize for DegreeSequence {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        let (kind, k) = match self.kind {
            SequenceKind::Tree => ("tree", 0),
            SequenceKind::Surplus { k } => ("surplus", k),
            SequenceKind::HalfEdge => ("half-edge", 0),
        };
        DegreeFile {
            kind: kind.to_string(),
            k,
            degrees: self.to_raw(),
        }
        .serialize(ser)
    }
}

impl<'de> Deserialize<'de> for DegreeSequence {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let file = DegreeFile::deserialize(de)?;
        let kind = match file.kind.as_str() {
            "tree" => SequenceKind::Tree,
            "surplus" => SequenceKind::Surplus { k: file.k },
            "half-edge" => SequenceKind::HalfEdge,
            other => {
                return Err(serde::de::Error::custom(format!(
                    "unknown sequence kind {other:?}"
                )))
            }
        };
        Self::validate(&file.degrees, kind).map_err(serde::de::Error::custom)
    }
}

/// Probability vector `P = (p_1 >= p_2 >= ...)` with remainder mass `p_inf`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PVector {
    p: Vec<f64>,
    p_inf: f64,
}

impl PVector {
    pub fn new(p: Vec<f64>, p_inf: f64) -> Result<Self, ParamError> {
        let bad = |m: &str| Err(ParamError::InvalidP(m.to_string()));
        if p.iter().any(|x| !x.is_finite() || *x <= 0.0) {
            return bad("entries must be positive");
        }
        if !p_inf.is_finite() || p_inf < 0.0 {
            return bad("p_inf must be non-negative");
        }
        if p.windows(2).any(|w| w[0] < w[1]) {
            return bad("entries must be non-increasing");
        }
        if p.is_empty() && p_inf == 0.0 {
            return bad("no mass");
        }
        let total: f64 = p.iter().sum::<f64>() + p_inf;
        if (total - 1.0).abs() > NORM_TOL {
            return bad(&format!("total mass {total} != 1"));
        }
        Ok(Self { p, p_inf })
    }

    /// Keeps the first `m` atoms and folds the rest into `p_inf`.
    pub fn truncate(&self, m: usize) -> Self {
        if m >= self.p.len() {
            return self.clone();
        }
        let folded: f64 = self.p[m..].iter().sum();
        Self {
            p: self.p[..m].to_vec(),
            p_inf: self.p_inf + folded,
        }
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn p_inf(&self) -> f64 {
        self.p_inf
    }

    /// `sigma^P = sqrt(sum p_i^2)`.
    pub fn sigma(&self) -> f64 {
        self.p.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

impl<'de> Deserialize<'de> for PVector {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            p: Vec<f64>,
            #[serde(default)]
            p_inf: f64,
        }
        let raw = Raw::deserialize(de)?;
        Self::new(raw.p, raw.p_inf).map_err(serde::de::Error::custom)
    }
}

/// `Theta = (theta_0; theta_1 >= theta_2 >= ...)` with `sum theta_i^2 = 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThetaVector {
    theta0: f64,
    theta: Vec<f64>,
}

impl ThetaVector {
    pub fn new(theta0: f64, theta: Vec<f64>) -> Result<Self, ParamError> {
        let bad = |m: &str| Err(ParamError::InvalidTheta(m.to_string()));
        if !theta0.is_finite() || theta0 < 0.0 {
            return bad("theta0 must be non-negative");
        }
        if theta.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return bad("entries must be non-negative");
        }
        if theta.windows(2).any(|w| w[0] < w[1]) {
            return bad("entries must be non-increasing");
        }
        let total = theta0 * theta0 + theta.iter().map(|x| x * x).sum::<f64>();
        if (total - 1.0).abs() > NORM_TOL {
            return bad(&format!("sum of squares {total} != 1"));
        }
        Ok(Self { theta0, theta })
    }

    /// The Brownian case `theta_0 = 1`.
    pub fn brownian() -> Self {
        Self {
            theta0: 1.0,
            theta: Vec::new(),
        }
    }

    /// Keeps the first `m` atoms and folds their squared mass into `theta_0`.
    pub fn truncate(&self, m: usize) -> Self {
        if m >= self.theta.len() {
            return self.clone();
        }
        let folded: f64 = self.theta[m..].iter().map(|x| x * x).sum();
        Self {
            theta0: (self.theta0 * self.theta0 + folded).sqrt(),
            theta: self.theta[..m].to_vec(),
        }
    }

    pub fn theta0(&self) -> f64 {
        self.theta0
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// Whether the mass measure `mu` is infinite. With finite support this
    /// reduces to `theta_0 > 0`.
    pub fn mu_infinite(&self) -> bool {
        self.theta0 > 0.0
    }
}

impl<'de> Deserialize<'de> for ThetaVector {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            #[serde(default)]
            theta0: f64,
            #[serde(default)]
            theta: Vec<f64>,
        }
        let raw = Raw::deserialize(de)?;
        Self::new(raw.theta0, raw.theta).map_err(serde::de::Error::custom)
    }
}

/// Target of a regime diagnostic.
#[derive(Debug, Clone, Copy)]
pub enum Target<'a> {
    P(&'a PVector),
    Theta(&'a ThetaVector),
}

/// Default threshold above which `d_1 / s` is flagged as not small.
pub const D1_OVER_S_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeGap {
    /// `|d_i/s - p_i|` or `|d_i/sigma - theta_i|`.
    pub gaps: Vec<f64>,
    pub max_gap: f64,
    pub s: usize,
    pub sigma: f64,
    pub d1_over_s: f64,
    /// Set for Theta targets when `d_1/s` exceeds the threshold.
    pub d1_over_s_large: bool,
}

/// Per-index gaps between the normalized sequence and the target.
pub fn regime_gap(d: &DegreeSequence, target: Target<'_>) -> RegimeGap {
    regime_gap_with(d, target, D1_OVER_S_THRESHOLD)
}

pub fn regime_gap_with(d: &DegreeSequence, target: Target<'_>, threshold: f64) -> RegimeGap {
    let mut sorted = d.degrees().to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let st = d.stats();
    let positive = sorted.iter().take_while(|&&x| x > 0).count();
    let (scale, reference): (f64, &[f64]) = match target {
        Target::P(p) => (st.s as f64, p.p()),
        Target::Theta(t) => (st.sigma, t.theta()),
    };
    let len = positive.max(reference.len());
    let gaps: Vec<f64> = (0..len)
        .map(|i| {
            let di = sorted.get(i).copied().unwrap_or(0) as f64;
            let ratio = if scale > 0.0 { di / scale } else { 0.0 };
            (ratio - reference.get(i).copied().unwrap_or(0.0)).abs()
        })
        .collect();
    let d1_over_s = sorted.first().copied().unwrap_or(0) as f64 / st.s as f64;
    RegimeGap {
        max_gap: gaps.iter().copied().fold(0.0, f64::max),
        gaps,
        s: st.s,
        sigma: st.sigma,
        d1_over_s,
        d1_over_s_large: matches!(target, Target::Theta(_)) && d1_over_s > threshold,
    }
}
