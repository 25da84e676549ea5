use rand::Rng;

use super::SamplerError;
use crate::discrete_trees::{DTreeSampler, DenseTree, VertexId};
use crate::multigraph::{bias_bound, dense_bias, BiasScratch, GraphError, Multigraph};
use crate::params::{DegreeSequence, SequenceKind};

/// Rejection sampler for uniform (D,k)-graphs: a D-tree on the sequence
/// with `2k` extra zeros, accepted with probability `bias / ((k+1)! 2^k)`,
/// then glued along `(★_1, ★_2), ..., (★_{2k-1}, ★_{2k})`.
#[derive(Debug, Clone)]
pub struct DkSampler {
    k: usize,
    trees: DTreeSampler,
    /// Star labels playing `★_1, ..., ★_{2k}`.
    glue: Vec<usize>,
    fathers: Vec<u32>,
    scratch: BiasScratch,
    bound: f64,
    attempts: u64,
    last_bias: f64,
}

impl DkSampler {
    /// Accepts a surplus-`k` sequence, or a tree sequence that already
    /// carries the `2k` extra zeros.
    pub fn new(d: &DegreeSequence, k: usize) -> Result<Self, SamplerError> {
        let extended = match d.kind() {
            SequenceKind::Surplus { k: actual } if actual == k => d.extend_to_tree(),
            SequenceKind::Surplus { k: actual } => {
                return Err(SamplerError::SurplusMismatch {
                    expected: k,
                    actual,
                })
            }
            SequenceKind::Tree => d.clone(),
            other => return Err(SamplerError::WrongKind(other)),
        };
        let stars = extended.zeros();
        if stars < 2 * k || (k > 0 && stars < 2) {
            return Err(SamplerError::InsufficientLeaves { stars, k });
        }
        // with exactly 2k stars the root star stands in for ★_{2k}
        let glue = (1..=2 * k)
            .map(|j| if j == stars { 0 } else { j })
            .collect();
        Ok(Self {
            k,
            trees: DTreeSampler::new(&extended)?,
            glue,
            fathers: Vec::with_capacity(2 * k),
            scratch: BiasScratch::default(),
            bound: bias_bound(k),
            attempts: 0,
            last_bias: 1.0,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Trees proposed so far.
    pub fn attempts(&self) -> u64 {
        self.attempts
    }

    /// Bias of the last accepted tree.
    pub fn last_bias(&self) -> f64 {
        self.last_bias
    }

    /// One proposal: samples a tree and returns its bias and `□_1..□_k`.
    pub fn propose<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<(f64, &[usize]), SamplerError> {
        self.attempts += 1;
        let tree = self.trees.sample(rng);
        self.fathers.clear();
        for &j in &self.glue {
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
        Ok((b, self.scratch.squares()))
    }

    /// The accepted stick-breaking tree (before gluing).
    pub fn sample_tree<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<&DenseTree, SamplerError> {
        loop {
            let (b, _) = self.propose(rng)?;
            if self.k == 0 || rng.random::<f64>() * self.bound < b {
                self.last_bias = b;
                return Ok(self.trees.tree());
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Multigraph, SamplerError> {
        self.sample_tree(rng)?;
        Ok(self.glued())
    }

    /// The glued graph of the current tree.
    pub fn glued(&self) -> Multigraph {
        let tree = self.trees.tree();
        let glued_nodes: Vec<u32> = self.glue.iter().map(|&j| tree.stars[j]).collect();
        let mut g = Multigraph::new();
        for v in 1..tree.node_count() {
            let p = tree.parent[v];
            if glued_nodes.contains(&(v as u32)) || glued_nodes.contains(&p) {
                continue;
            }
            g.add_edge(tree.ids[p as usize], tree.ids[v]);
        }
        for pair in self.fathers.chunks(2) {
            g.add_edge(tree.ids[pair[0] as usize], tree.ids[pair[1] as usize]);
        }
        g
    }

    /// Nodes of the glued stars in glue order, with their fathers.
    pub(crate) fn glued_nodes(&self) -> (Vec<u32>, &[u32]) {
        let tree = self.trees.tree();
        (self.glue.iter().map(|&j| tree.stars[j]).collect(), &self.fathers)
    }

    /// Labels of the surviving star leaves.
    pub fn free_stars(&self) -> Vec<VertexId> {
        let tree = self.trees.tree();
        (0..tree.star_count())
            .filter(|j| !self.glue.contains(j))
            .map(|j| VertexId::Star(j as u32))
            .collect()
    }
}

/// A uniform connected multigraph with degrees `d_i + 1` and surplus `k`.
pub fn sample_dk_graph<R: Rng + ?Sized>(
    d: &DegreeSequence,
    k: usize,
    rng: &mut R,
) -> Result<Multigraph, SamplerError> {
    DkSampler::new(d, k)?.sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use proptest::prelude::*;

    fn v(i: u32) -> VertexId {
        VertexId::Internal(i)
    }

    #[test]
    fn double_edge_is_the_only_output() {
        let d = DegreeSequence::surplus(&[1, 1], 1).unwrap();
        let mut rng = stream(1, 0);
        let expected = Multigraph::from_edges(&[(v(1), v(2)), (v(1), v(2))]);
        for _ in 0..200 {
            assert_eq!(sample_dk_graph(&d, 1, &mut rng).unwrap(), expected);
        }
        let d = DegreeSequence::surplus(&[1], 1).unwrap();
        assert_eq!(
            sample_dk_graph(&d, 1, &mut rng).unwrap(),
            Multigraph::from_edges(&[(v(1), v(1))])
        );
    }

    #[test]
    fn argument_errors() {
        let d = DegreeSequence::surplus(&[1, 1], 1).unwrap();
        assert!(matches!(
            DkSampler::new(&d, 2),
            Err(SamplerError::SurplusMismatch { .. })
        ));
        let t = DegreeSequence::tree(&[1, 1, 0, 0]).unwrap();
        assert!(matches!(
            DkSampler::new(&t, 2),
            Err(SamplerError::InsufficientLeaves { stars: 2, k: 2 })
        ));
        let h = DegreeSequence::half_edge(&[2, 2]).unwrap();
        assert!(matches!(DkSampler::new(&h, 1), Err(SamplerError::WrongKind(_))));
    }

    fn surplus_sequence() -> impl Strategy<Value = (DegreeSequence, usize)> {
        (prop::collection::vec(1i64..4, 1..6), 0usize..3, 0usize..3).prop_map(|(mut raw, k, z)| {
            raw.extend(std::iter::repeat_n(0, z));
            // fix the sum to s + 2k - 2 by padding zeros or bumping d_1
            let target = |r: &Vec<i64>| r.len() as i64 + 2 * k as i64 - 2;
            while raw.iter().sum::<i64>() > target(&raw) {
                raw.push(0);
            }
            let deficit = target(&raw) - raw.iter().sum::<i64>();
            raw[0] += deficit;
            (DegreeSequence::surplus(&raw, k).unwrap(), k)
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn outputs_are_connected_with_right_degrees((d, k) in surplus_sequence(), seed in any::<u64>()) {
            let mut sampler = DkSampler::new(&d, k).unwrap();
            let mut rng = stream(seed, 0);
            for _ in 0..50 {
                let g = sampler.sample(&mut rng).unwrap();
                prop_assert_eq!(g.surplus().unwrap(), k);
                for (i, &di) in d.degrees().iter().enumerate() {
                    if di > 0 {
                        prop_assert_eq!(g.degree(v(i as u32 + 1)), di + 1);
                    }
                }
                let stars: Vec<_> = g.vertices().iter().filter(|x| x.is_star()).copied().collect();
                prop_assert_eq!(stars.len(), d.zeros());
                prop_assert_eq!(&stars, &sampler.free_stars());
                for s in stars {
                    prop_assert_eq!(g.degree(s), 1);
                }
            }
        }
    }
}
