use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::Serialize;

use super::{sb_build, ContinuumError, MetricTree};
use crate::params::ThetaVector;

/// How much of the point process to realise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon {
    /// The first `n` points in `y` order.
    Points(usize),
    /// Every point with `y <= y_max`.
    YMax(f64),
}

/// Which part of `mu` produced a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Source {
    Continuous,
    Atom(usize),
}

/// The Poisson process of intensity `dy x dmu` on `{z <= y}`, generated
/// lazily in increasing `y`.
#[derive(Debug, Clone)]
pub struct IcrtProcess {
    theta0: f64,
    rates: Vec<f64>,
    /// Branch times `X_i ~ Exp(theta_i)`.
    atoms: Vec<f64>,
    /// Next `y` of each atom's process (infinite for zero rates).
    next_atom: Vec<f64>,
    /// Running `sum Exp(1)` of the continuous part.
    gamma: f64,
    next_cont: f64,
}

impl IcrtProcess {
    pub fn new<R: Rng + ?Sized>(theta: &ThetaVector, rng: &mut R) -> Self {
        let rates = theta.theta().to_vec();
        let mut atoms = Vec::with_capacity(rates.len());
        let mut next_atom = Vec::with_capacity(rates.len());
        for &r in &rates {
            if r > 0.0 {
                let e1: f64 = Exp1.sample(rng);
                let e2: f64 = Exp1.sample(rng);
                let x = e1 / r;
                atoms.push(x);
                next_atom.push(x + e2 / r);
            } else {
                atoms.push(f64::INFINITY);
                next_atom.push(f64::INFINITY);
            }
        }
        let mut p = Self {
            theta0: theta.theta0(),
            rates,
            atoms,
            next_atom,
            gamma: 0.0,
            next_cont: f64::INFINITY,
        };
        p.advance_continuous(rng);
        p
    }

    fn advance_continuous<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        if self.theta0 > 0.0 {
            let e: f64 = Exp1.sample(rng);
            self.gamma += e;
            self.next_cont = (2.0 * self.gamma).sqrt() / self.theta0;
        }
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    /// `y` of the next point without consuming it.
    pub fn peek(&self) -> f64 {
        self.next_atom
            .iter()
            .copied()
            .fold(self.next_cont, f64::min)
    }

    /// The next point `(y, z, source)`.
    pub fn next_point<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<(f64, f64, Source)> {
        let (mut best, mut y) = (None, self.next_cont);
        for (i, &t) in self.next_atom.iter().enumerate() {
            if t < y {
                best = Some(i);
                y = t;
            }
        }
        if !y.is_finite() {
            return None;
        }
        match best {
            None => {
                let z = rng.random::<f64>() * y;
                self.advance_continuous(rng);
                Some((y, z, Source::Continuous))
            }
            Some(i) => {
                let e: f64 = Exp1.sample(rng);
                self.next_atom[i] += e / self.rates[i];
                Some((y, self.atoms[i], Source::Atom(i)))
            }
        }
    }
}

/// A finite realisation: branch times and the points `(Y_i, Z_i)` sorted
/// by `Y`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IcrtRealization {
    pub atoms: Vec<f64>,
    pub cuts: Vec<f64>,
    pub anchors: Vec<f64>,
    pub sources: Vec<Source>,
    pub mu_infinite: bool,
}

impl IcrtRealization {
    pub fn len(&self) -> usize {
        self.cuts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cuts.is_empty()
    }

    /// Appends points until at least `n` exist.
    pub fn extend_to<R: Rng + ?Sized>(&mut self, process: &mut IcrtProcess, n: usize, rng: &mut R) {
        while self.cuts.len() < n {
            let Some((y, z, src)) = process.next_point(rng) else {
                break;
            };
            self.cuts.push(y);
            self.anchors.push(z);
            self.sources.push(src);
        }
    }

    /// The stick-breaking tree of the realised points.
    pub fn tree(&self) -> Result<MetricTree, ContinuumError> {
        sb_build(&self.cuts, &self.anchors)
    }

    /// `{"cuts":[..],"anchors":[..],"atoms":[{"i":..,"X":..}]}`.
    pub fn to_json(&self) -> String {
        let atoms: Vec<_> = self
            .atoms
            .iter()
            .enumerate()
            .filter(|(_, x)| x.is_finite())
            .map(|(i, &x)| serde_json::json!({"i": i + 1, "X": x}))
            .collect();
        serde_json::json!({"cuts": self.cuts, "anchors": self.anchors, "atoms": atoms}).to_string()
    }
}

/// Samples the Θ-ICRT point process up to `horizon`.
pub fn sample_icrt<R: Rng + ?Sized>(
    theta: &ThetaVector,
    horizon: Horizon,
    rng: &mut R,
) -> (IcrtRealization, IcrtProcess) {
    let mut process = IcrtProcess::new(theta, rng);
    let mut real = IcrtRealization {
        atoms: process.atoms().to_vec(),
        cuts: Vec::new(),
        anchors: Vec::new(),
        sources: Vec::new(),
        mu_infinite: theta.mu_infinite(),
    };
    match horizon {
        Horizon::Points(n) => real.extend_to(&mut process, n, rng),
        Horizon::YMax(t) => {
            while process.peek() <= t {
                real.extend_to(&mut process, real.len() + 1, rng);
            }
        }
    }
    (real, process)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::stats::{chi_square, ks_one_sample};
    use statrs::distribution::{Discrete, Poisson};

    #[test]
    fn first_cut_is_rayleigh() {
        let mut rng = stream(31, 0);
        let theta = ThetaVector::brownian();
        let y1: Vec<f64> = (0..20_000)
            .map(|_| sample_icrt(&theta, Horizon::Points(1), &mut rng).0.cuts[0])
            .collect();
        let r = ks_one_sample(&y1, |y| 1.0 - (-y * y / 2.0).exp()).unwrap();
        assert!(r.p_value > 0.001, "{r:?}");
    }

    #[test]
    fn cut_count_is_poisson() {
        let mut rng = stream(32, 0);
        let theta = ThetaVector::brownian();
        let n = 20_000;
        let mut counts = vec![0.0; 9];
        for _ in 0..n {
            let c = sample_icrt(&theta, Horizon::YMax(2.0), &mut rng).0.len();
            counts[c.min(8)] += 1.0;
        }
        let law = Poisson::new(2.0).unwrap();
        let mut expected: Vec<f64> = (0..8).map(|c| n as f64 * law.pmf(c)).collect();
        expected.push(n as f64 - expected.iter().sum::<f64>());
        let r = chi_square(&counts, &expected, 0).unwrap();
        assert!(r.p_value > 0.001, "{r:?}");
    }

    #[test]
    fn single_atom_anchors_at_branch_time() {
        let mut rng = stream(33, 0);
        let theta = ThetaVector::new(0.0, vec![1.0]).unwrap();
        let mut xs = Vec::new();
        for _ in 0..5000 {
            let (r, _) = sample_icrt(&theta, Horizon::Points(5), &mut rng);
            assert!(r.anchors.iter().all(|&z| z == r.atoms[0]));
            assert!(r.cuts.iter().all(|&y| y >= r.atoms[0]));
            xs.push(r.atoms[0]);
        }
        let ks = ks_one_sample(&xs, |x| 1.0 - (-x).exp()).unwrap();
        assert!(ks.p_value > 0.001);
    }

    #[test]
    fn mixed_realisations_are_consistent() {
        let mut rng = stream(34, 0);
        let theta = ThetaVector::new(0.6, vec![0.64, 0.48]).unwrap();
        for _ in 0..500 {
            let (mut r, mut p) = sample_icrt(&theta, Horizon::Points(6), &mut rng);
            r.extend_to(&mut p, 12, &mut rng);
            assert_eq!(r.len(), 12);
            assert!(r.cuts.windows(2).all(|w| w[0] < w[1]));
            assert!(r.cuts.iter().zip(&r.anchors).all(|(y, z)| z <= y));
            let t = r.tree().unwrap();
            assert_eq!(t.marks().len(), 12);
            assert!(r.to_json().contains("\"atoms\""));
        }
    }
}
