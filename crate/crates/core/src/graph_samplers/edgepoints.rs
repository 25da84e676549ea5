use std::collections::{BTreeMap, BTreeSet};

use rand::seq::{index, SliceRandom};
use rand::Rng;

use super::SamplerError;
use crate::discrete_trees::{DTreeSampler, LabeledTree, VertexId};
use crate::params::{DegreeSequence, SequenceKind};

/// Contracts every degree-2 vertex, joining its two neighbours.
pub fn shortcut_edgepoints(t: &LabeledTree) -> LabeledTree {
    let deg = |v: VertexId| t.degree(v).unwrap_or(0);
    let survivors: Vec<VertexId> = t.vertices().iter().copied().filter(|&v| deg(v) != 2).collect();
    if survivors.len() == t.len() {
        return t.clone();
    }
    let mut edges = Vec::new();
    for &u in &survivors {
        for start in t.neighbors(u).expect("vertex of t") {
            let (mut prev, mut cur) = (u, start);
            while deg(cur) == 2 {
                let next = t
                    .neighbors(cur)
                    .expect("vertex of t")
                    .into_iter()
                    .find(|&w| w != prev)
                    .expect("degree two");
                (prev, cur) = (cur, next);
            }
            if u < cur {
                edges.push((u, cur));
            }
        }
    }
    LabeledTree::from_edges(&edges).expect("contraction of a tree is a tree")
}

/// Subdivides the `i`-th edge of `t.edges()` (oriented from the smaller to
/// the larger endpoint) by `partition[i]`, in order. An empty partition
/// leaves `t` unchanged.
pub fn insert_edgepoints(
    t: &LabeledTree,
    partition: &[Vec<VertexId>],
) -> Result<LabeledTree, SamplerError> {
    let tree_edges = t.edges();
    if partition.is_empty() {
        return Ok(t.clone());
    }
    if partition.len() != tree_edges.len() {
        return Err(SamplerError::PartitionSize {
            expected: tree_edges.len(),
            got: partition.len(),
        });
    }
    let mut seen: BTreeSet<VertexId> = t.vertices().iter().copied().collect();
    let mut edges = Vec::new();
    for (&(u, v), list) in tree_edges.iter().zip(partition) {
        let mut prev = u;
        for &w in list {
            if !seen.insert(w) {
                return Err(SamplerError::VertexCollision(w));
            }
            edges.push((prev, w));
            prev = w;
        }
        edges.push((prev, v));
    }
    if edges.is_empty() {
        return Ok(t.clone());
    }
    Ok(LabeledTree::from_edges(&edges)?)
}

/// A uniform assignment of `items` into `n_slots` ordered lists.
///
/// # Panics
/// If `n_slots == 0` while `items` is non-empty.
pub fn sample_ordered_partition<T: Clone, R: Rng + ?Sized>(
    items: &[T],
    n_slots: usize,
    rng: &mut R,
) -> Vec<Vec<T>> {
    let m = items.len();
    if n_slots == 0 {
        assert!(m == 0, "cannot place {m} items into zero slots");
        return Vec::new();
    }
    let mut order = items.to_vec();
    order.shuffle(rng);
    // stars and bars: n_slots - 1 bars among m + n_slots - 1 positions
    let mut bars = index::sample(rng, m + n_slots - 1, n_slots - 1).into_vec();
    bars.sort_unstable();
    let mut out = Vec::with_capacity(n_slots);
    let mut it = order.into_iter();
    let mut last = 0;
    for (j, &b) in bars.iter().enumerate() {
        // items before bar j: b - j
        let size = b - j - last;
        out.push(it.by_ref().take(size).collect());
        last += size;
    }
    out.push(it.collect());
    out
}

/// A uniform D-tree obtained as `Δ(∇D-tree, W)` with `W` a uniform ordered
/// partition of the degree-one vertices.
pub fn sample_delta_tree<R: Rng + ?Sized>(
    d: &DegreeSequence,
    rng: &mut R,
) -> Result<LabeledTree, SamplerError> {
    if d.kind() != SequenceKind::Tree {
        return Err(SamplerError::WrongKind(d.kind()));
    }
    let (reduced, labels) = d.nabla();
    let mut sampler = DTreeSampler::new(&reduced)?;
    let base = sampler.sample(rng).to_labeled();
    let relabel: BTreeMap<u32, u32> = labels
        .iter()
        .enumerate()
        .map(|(j, &orig)| (j as u32 + 1, orig as u32))
        .collect();
    let base = base.relabel(|v| match v {
        VertexId::Internal(j) => VertexId::Internal(relabel[&j]),
        other => other,
    })?;
    let items: Vec<VertexId> = (0..d.s())
        .filter(|&i| d.degrees()[i] == 1)
        .map(|i| VertexId::Internal(i as u32 + 1))
        .collect();
    let partition = sample_ordered_partition(&items, base.edges().len(), rng);
    insert_edgepoints(&base, &partition)
}
