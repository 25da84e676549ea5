use num_bigint::BigUint;
use rand::Rng;

use super::SamplerError;
use crate::discrete_trees::{PTreeGrower, VertexId};
use crate::multigraph::{bias_bound, dense_bias, BiasScratch, GraphError, Multigraph};
use crate::params::PVector;

/// Rejection sampler for prefixes of (P,k)-graphs.
#[derive(Debug, Clone)]
pub struct PkSampler {
    k: usize,
    grower: PTreeGrower,
    fathers: Vec<u32>,
    scratch: BiasScratch,
    bound: f64,
    attempts: u64,
}

impl PkSampler {
    pub fn new(p: &PVector, k: usize) -> Result<Self, SamplerError> {
        if k > 0 && p.p().is_empty() {
            return Err(SamplerError::NoAtoms);
        }
        Ok(Self {
            k,
            grower: PTreeGrower::new(p),
            fathers: Vec::with_capacity(2 * k),
            scratch: BiasScratch::default(),
            bound: bias_bound(k),
            attempts: 0,
        })
    }

    pub fn attempts(&self) -> u64 {
        self.attempts
    }

    /// Grows the P-tree until `★_{2k}` exists, accepts with probability
    /// `bias / ((k+1)! 2^k)` (restarting otherwise), continues to `n_steps`
    /// steps, glues the first `k` star pairs and drops the remaining stars.
    pub fn sample<R: Rng + ?Sized>(
        &mut self,
        n_steps: usize,
        rng: &mut R,
    ) -> Result<Multigraph, SamplerError> {
        loop {
            self.attempts += 1;
            self.grower.restart();
            while self.grower.tree().star_count() < 2 * self.k + 1 || self.grower.steps() == 0 {
                self.grower.step(rng);
            }
            if self.k == 0 {
                break;
            }
            let tree = self.grower.tree();
            self.fathers.clear();
            for j in 1..=2 * self.k {
                self.fathers.push(tree.father_of_star(j));
            }
            let b = dense_bias(tree, &self.fathers, &mut self.scratch);
            if b > self.bound * (1.0 + 1e-12) {
                return Err(GraphError::BiasBoundExceeded {
                    bias: b,
                    bound: self.bound,
                }
                .into());
            }
            if rng.random::<f64>() * self.bound < b {
                break;
            }
        }
        while self.grower.steps() < n_steps {
            self.grower.step(rng);
        }
        let tree = self.grower.tree();
        let mut g = Multigraph::new();
        for v in 1..tree.node_count() {
            let (a, b) = (tree.ids[tree.parent[v] as usize], tree.ids[v]);
            if !b.is_star() {
                g.add_vertex(b);
            }
            if !a.is_star() && !b.is_star() {
                g.add_edge(a, b);
            }
        }
        for pair in self.fathers.chunks(2).take(self.k) {
            g.add_edge(tree.ids[pair[0] as usize], tree.ids[pair[1] as usize]);
        }
        Ok(g)
    }
}

pub fn sample_pk_graph_prefix<R: Rng + ?Sized>(
    p: &PVector,
    k: usize,
    n_steps: usize,
    rng: &mut R,
) -> Result<Multigraph, SamplerError> {
    PkSampler::new(p, k)?.sample(n_steps, rng)
}

fn binomial(n: usize, r: usize) -> BigUint {
    (0..r).fold(BigUint::from(1u32), |acc, i| acc * BigUint::from(n - i) / BigUint::from(i + 1))
}

/// Law of connected multigraphs on `V_1..V_s` with surplus `k`, proportional
/// to `prod_{i<=j} (p_i p_j)^{#ij}`.
pub fn pk_law_oracle(
    p: &PVector,
    k: usize,
    cap: u64,
) -> Result<Vec<(Multigraph, f64)>, SamplerError> {
    if p.p_inf() > 0.0 {
        return Err(SamplerError::NotFinite);
    }
    let s = p.p().len();
    let pairs: Vec<(usize, usize)> = (0..s).flat_map(|i| (i..s).map(move |j| (i, j))).collect();
    let n_edges = s - 1 + k;
    let count = binomial(pairs.len() + n_edges - 1, n_edges);
    if count > BigUint::from(cap) {
        return Err(SamplerError::TooLarge { count, cap });
    }
    let mut out = Vec::new();
    let mut chosen = Vec::with_capacity(n_edges);
    multisets(&pairs, n_edges, 0, &mut chosen, &mut |edges| {
        let mut g = Multigraph::new();
        for i in 1..=s as u32 {
            g.add_vertex(VertexId::Internal(i));
        }
        let mut w = 1.0;
        for &(i, j) in edges {
            g.add_edge(VertexId::Internal(i as u32 + 1), VertexId::Internal(j as u32 + 1));
            w *= p.p()[i] * p.p()[j];
        }
        if g.is_connected() {
            out.push((g, w));
        }
    });
    let total: f64 = out.iter().map(|(_, w)| w).sum();
    for (_, w) in &mut out {
        *w /= total;
    }
    out.sort_by_cached_key(|(g, _)| g.to_json());
    Ok(out)
}

fn multisets(
    items: &[(usize, usize)],
    left: usize,
    from: usize,
    chosen: &mut Vec<(usize, usize)>,
    visit: &mut impl FnMut(&[(usize, usize)]),
) {
    if left == 0 {
        visit(chosen);
        return;
    }
    for i in from..items.len() {
        chosen.push(items[i]);
        multisets(items, left - 1, i, chosen, visit);
        chosen.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn v(i: u32) -> VertexId {
        VertexId::Internal(i)
    }

    #[test]
    fn oracle_examples() {
        let p = PVector::new(vec![1.0], 0.0).unwrap();
        let law = pk_law_oracle(&p, 1, 1000).unwrap();
        assert_eq!(law.len(), 1);
        assert_eq!(law[0].0, Multigraph::from_edges(&[(v(1), v(1))]));

        let p = PVector::new(vec![0.5, 0.5], 0.0).unwrap();
        let law = pk_law_oracle(&p, 1, 1000).unwrap();
        assert_eq!(law.len(), 3);
        let loop1 = Multigraph::from_edges(&[(v(1), v(1)), (v(1), v(2))]);
        let loop2 = Multigraph::from_edges(&[(v(2), v(2)), (v(1), v(2))]);
        let find = |law: &[(Multigraph, f64)], g: &Multigraph| {
            law.iter().find(|(h, _)| h == g).unwrap().1
        };
        assert!((find(&law, &loop1) - find(&law, &loop2)).abs() < 1e-15);

        let p = PVector::new(vec![2.0 / 3.0, 1.0 / 3.0], 0.0).unwrap();
        let law = pk_law_oracle(&p, 1, 1000).unwrap();
        let double = Multigraph::from_edges(&[(v(1), v(2)), (v(1), v(2))]);
        // loop at V1 and edge vs double edge: (p1 p1)(p1 p2) / (p1 p2)^2 = p1 / p2
        let ratio = find(&law, &loop1) / find(&law, &double);
        assert!((ratio - 2.0).abs() < 1e-12);

        assert!(matches!(
            pk_law_oracle(&PVector::new(vec![0.5], 0.5).unwrap(), 1, 10),
            Err(SamplerError::NotFinite)
        ));
        let many = PVector::new(vec![0.25; 4], 0.0).unwrap();
        assert!(matches!(pk_law_oracle(&many, 3, 10), Err(SamplerError::TooLarge { .. })));
    }

    #[test]
    fn single_atom_gives_a_loop() {
        let p = PVector::new(vec![1.0], 0.0).unwrap();
        let mut rng = stream(1, 0);
        for n in [2, 5, 10] {
            let g = sample_pk_graph_prefix(&p, 1, n, &mut rng).unwrap();
            assert_eq!(g, Multigraph::from_edges(&[(v(1), v(1))]));
        }
    }

    #[test]
    fn zero_surplus_is_the_tree_prefix() {
        let p = PVector::new(vec![0.3, 0.2], 0.5).unwrap();
        let mut rng = stream(2, 0);
        for _ in 0..200 {
            let g = sample_pk_graph_prefix(&p, 0, 12, &mut rng).unwrap();
            assert_eq!(g.surplus().unwrap(), 0);
        }
        let none = PVector::new(vec![], 1.0).unwrap();
        assert_eq!(PkSampler::new(&none, 1).unwrap_err(), SamplerError::NoAtoms);
    }

    #[test]
    fn two_atom_law_matches_oracle() {
        let p = PVector::new(vec![2.0 / 3.0, 1.0 / 3.0], 0.0).unwrap();
        let law = pk_law_oracle(&p, 1, 1000).unwrap();
        let mut sampler = PkSampler::new(&p, 1).unwrap();
        let mut rng = stream(3, 0);
        let n = 20_000;
        let mut counts = vec![0usize; law.len()];
        for _ in 0..n {
            let g = sampler.sample(40, &mut rng).unwrap();
            let i = law.iter().position(|(h, _)| *h == g).expect("graph in support");
            counts[i] += 1;
        }
        for (i, (_, p)) in law.iter().enumerate() {
            let sd = (n as f64 * p * (1.0 - p)).sqrt();
            assert!((counts[i] as f64 - n as f64 * p).abs() < 4.0 * sd);
        }
    }
}
