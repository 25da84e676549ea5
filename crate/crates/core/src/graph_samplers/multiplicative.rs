use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::SamplerError;
use crate::discrete_trees::VertexId;
use crate::multigraph::Multigraph;

/// Rate `lambda` and vertex weights `p_i` of a multiplicative graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplicativeParams {
    pub lambda: f64,
    pub weights: Vec<f64>,
}

impl MultiplicativeParams {
    pub fn new(lambda: f64, weights: Vec<f64>) -> Result<Self, SamplerError> {
        let params = Self { lambda, weights };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), SamplerError> {
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(SamplerError::InvalidWeights("lambda must be >= 0".into()));
        }
        if self.weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(SamplerError::InvalidWeights("weights must be > 0".into()));
        }
        Ok(())
    }

    /// Mean number of copies of `{V_i, V_j}` in the multigraph (0-based).
    pub fn mean(&self, i: usize, j: usize) -> f64 {
        let m = self.lambda * self.weights[i] * self.weights[j];
        if i == j {
            m / 2.0
        } else {
            m
        }
    }

    fn empty_graph(&self) -> Multigraph {
        let mut g = Multigraph::new();
        for i in 1..=self.weights.len() as u32 {
            g.add_vertex(VertexId::Internal(i));
        }
        g
    }
}

/// Poisson variate; inversion for small means.
fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    if mean > 30.0 {
        return Poisson::new(mean).expect("positive mean").sample(rng) as usize;
    }
    let u: f64 = rng.random();
    let mut p = (-mean).exp();
    let mut cdf = p;
    let mut n = 0;
    while u > cdf && p > 0.0 {
        n += 1;
        p *= mean / n as f64;
        cdf += p;
    }
    n
}

/// Simple graph with independent edges of probability `1 - exp(-lambda p_i p_j)`.
pub fn sample_multiplicative_graph<R: Rng + ?Sized>(
    w: &MultiplicativeParams,
    rng: &mut R,
) -> Result<Multigraph, SamplerError> {
    w.validate()?;
    let mut g = w.empty_graph();
    let s = w.weights.len();
    for i in 0..s {
        for j in i + 1..s {
            if rng.random::<f64>() < -(-w.mean(i, j)).exp_m1() {
                g.add_edge(VertexId::Internal(i as u32 + 1), VertexId::Internal(j as u32 + 1));
            }
        }
    }
    Ok(g)
}

/// Multigraph with independent Poisson multiplicities (`lambda p_i^2 / 2`
/// for loops).
pub fn sample_multiplicative_multigraph<R: Rng + ?Sized>(
    w: &MultiplicativeParams,
    rng: &mut R,
) -> Result<Multigraph, SamplerError> {
    w.validate()?;
    let mut g = w.empty_graph();
    let s = w.weights.len();
    for i in 0..s {
        for j in i..s {
            let m = poisson(w.mean(i, j), rng);
            g.add_edges(
                VertexId::Internal(i as u32 + 1),
                VertexId::Internal(j as u32 + 1),
                m,
            );
        }
    }
    Ok(g)
}

/// The multigraph and the simple graph in which `{i, j}` is present iff the
/// multigraph has at least one copy of it.
pub fn sample_coupled_multiplicative<R: Rng + ?Sized>(
    w: &MultiplicativeParams,
    rng: &mut R,
) -> Result<(Multigraph, Multigraph), SamplerError> {
    let multi = sample_multiplicative_multigraph(w, rng)?;
    let mut simple = w.empty_graph();
    for ((a, b), _) in multi.edges() {
        if a != b {
            simple.add_edge(a, b);
        }
    }
    Ok((simple, multi))
}
