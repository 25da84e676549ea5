use rand::Rng;

use super::{core_measure, metric_glue, ContinuumError, GluedSpace, Horizon, IcrtRealization};
use super::icrt::sample_icrt;
use crate::params::ThetaVector;

/// A glued ICRT with its importance weight `1 / prod_{n<=k} core_n`.
#[derive(Debug, Clone)]
pub struct WeightedSample {
    pub space: GluedSpace,
    pub realization: IcrtRealization,
    pub squares: Vec<f64>,
    pub weight: f64,
}

/// Rejection bookkeeping for the capped mode.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CapDiagnostic {
    pub attempts: u64,
    /// Proposals whose weight exceeded the cap.
    pub truncated: u64,
}

/// Samples the ICRT with at least `2k` points (and at least the horizon),
/// glues marks `(2b, 2b+1)` for `b < k` and weights by
/// `1 / prod_{n<=k} core_measure(T, n)`.
pub fn sample_icrg_weighted<R: Rng + ?Sized>(
    theta: &ThetaVector,
    k: usize,
    horizon: Horizon,
    rng: &mut R,
) -> Result<WeightedSample, ContinuumError> {
    let (mut real, mut process) = sample_icrt(theta, horizon, rng);
    real.extend_to(&mut process, 2 * k.max(1), rng);
    let tree = real.tree()?;
    let mut squares = Vec::with_capacity(k);
    let mut weight = 1.0;
    for n in 1..=k {
        let sq = core_measure(&tree, n)?;
        if !(sq > 0.0) {
            return Err(ContinuumError::DegenerateCore(n));
        }
        squares.push(sq);
        weight /= sq;
    }
    assert!(weight.is_finite() && weight > 0.0, "weight {weight}");
    let pairs: Vec<(usize, usize)> = (0..k).map(|b| (2 * b, 2 * b + 1)).collect();
    Ok(WeightedSample {
        space: metric_glue(tree, &pairs)?,
        realization: real,
        squares,
        weight,
    })
}

/// Rejection sampling with envelope `cap`: a proposal of weight `w` is kept
/// with probability `min(w, cap) / cap`. Exact only when no weight exceeds
/// the cap; the diagnostic counts those that did.
pub fn sample_icrg_capped<R: Rng + ?Sized>(
    theta: &ThetaVector,
    k: usize,
    horizon: Horizon,
    cap: f64,
    diag: &mut CapDiagnostic,
    rng: &mut R,
) -> Result<WeightedSample, ContinuumError> {
    if !(cap > 0.0 && cap.is_finite()) {
        return Err(ContinuumError::BadCap(cap));
    }
    loop {
        diag.attempts += 1;
        let mut s = sample_icrg_weighted(theta, k, horizon, rng)?;
        if s.weight > cap {
            diag.truncated += 1;
        }
        if rng.random::<f64>() * cap < s.weight.min(cap) {
            s.weight = 1.0;
            return Ok(s);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn zero_surplus_is_unweighted() {
        let mut rng = stream(51, 0);
        let s = sample_icrg_weighted(&ThetaVector::brownian(), 0, Horizon::Points(3), &mut rng).unwrap();
        assert_eq!(s.weight, 1.0);
        assert!(s.space.pairs().is_empty());
        assert_eq!(s.realization.len(), 3);
    }

    #[test]
    fn weights_are_inverse_core_products() {
        let mut rng = stream(52, 0);
        let theta = ThetaVector::new(0.8, vec![0.6]).unwrap();
        for k in 1..=3 {
            for _ in 0..200 {
                let s = sample_icrg_weighted(&theta, k, Horizon::Points(1), &mut rng).unwrap();
                assert!(s.realization.len() >= 2 * k);
                assert!(s.squares.windows(2).all(|w| w[0] <= w[1]));
                let prod: f64 = s.squares.iter().product();
                assert!((s.weight * prod - 1.0).abs() < 1e-12);
                let m = s.space.mark_distance_matrix(&[0, 1]).unwrap();
                assert_eq!(m[0][1], 0.0);
            }
        }
    }

    #[test]
    fn capped_mode_reports_truncation() {
        let mut rng = stream(53, 0);
        let mut diag = CapDiagnostic::default();
        for _ in 0..100 {
            let s = sample_icrg_capped(&ThetaVector::brownian(), 1, Horizon::Points(3), 1.0, &mut diag, &mut rng)
                .unwrap();
            assert_eq!(s.weight, 1.0);
        }
        assert!(diag.attempts >= 100);
        assert!(diag.truncated > 0);
        assert!(sample_icrg_capped(&ThetaVector::brownian(), 1, Horizon::Points(3), 0.0, &mut diag, &mut rng).is_err());
    }
}
