//! Labelled trees with star leaves: stick-breaking samplers for D-trees and
//! P-tree prefixes, and a Prüfer enumeration oracle.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::params::{DegreeSequence, PVector, SequenceKind};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TreeError {
    #[error("tuple multiplicities disagree with the degree sequence at V{0}")]
    TupleMismatch(usize),
    #[error("expected a tree-kind degree sequence, got {0}")]
    WrongKind(SequenceKind),
    #[error("{count} trees exceed the enumeration cap {cap}")]
    TooLarge { count: BigUint, cap: u64 },
    #[error("unknown vertex {0}")]
    UnknownVertex(VertexId),
    #[error("edge list does not form a tree: {0}")]
    NotATree(String),
    #[error("bad vertex label {0:?}")]
    BadLabel(String),
    #[error("malformed tree JSON: {0}")]
    Json(String),
}

/// A vertex label: `V_i`, a star leaf `★_j`, or an overflow vertex `V_{∞,i}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VertexId {
    Internal(u32),
    Star(u32),
    Overflow(u32),
}

impl VertexId {
    pub fn is_star(self) -> bool {
        matches!(self, VertexId::Star(_))
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VertexId::Internal(i) => write!(f, "V{i}"),
            VertexId::Star(j) => write!(f, "S{j}"),
            VertexId::Overflow(i) => write!(f, "Vinf{i}"),
        }
    }
}

impl FromStr for VertexId {
    type Err = TreeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || TreeError::BadLabel(s.to_string());
        let num = |t: &str| t.parse::<u32>().map_err(|_| bad());
        if let Some(rest) = s.strip_prefix("Vinf") {
            Ok(VertexId::Overflow(num(rest)?))
        } else if let Some(rest) = s.strip_prefix('V') {
            Ok(VertexId::Internal(num(rest)?))
        } else if let Some(rest) = s.strip_prefix('S') {
            Ok(VertexId::Star(num(rest)?))
        } else {
            Err(bad())
        }
    }
}

impl Serialize for VertexId {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        ser.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for VertexId {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// An unrooted labelled tree. Vertices are kept sorted and adjacency lists
/// are sorted, so structural equality is labelled-tree equality.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabeledTree {
    vertices: Vec<VertexId>,
    adj: Vec<Vec<u32>>,
}

#[derive(Serialize, Deserialize)]
struct TreeJson {
    edges: Vec<(VertexId, VertexId)>,
}

impl LabeledTree {
    pub fn from_edges(edges: &[(VertexId, VertexId)]) -> Result<Self, TreeError> {
        if edges.is_empty() {
            return Err(TreeError::NotATree("no edges".into()));
        }
        let vertices: Vec<VertexId> = edges
            .iter()
            .flat_map(|&(u, v)| [u, v])
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if edges.len() + 1 != vertices.len() {
            return Err(TreeError::NotATree(format!(
                "{} edges on {} vertices",
                edges.len(),
                vertices.len()
            )));
        }
        let idx = |v: VertexId| vertices.binary_search(&v).unwrap() as u32;
        let mut adj = vec![Vec::new(); vertices.len()];
        let mut uf = crate::union_find::UnionFind::new(vertices.len());
        for &(u, v) in edges {
            let (a, b) = (idx(u), idx(v));
            if !uf.union(a as usize, b as usize) {
                return Err(TreeError::NotATree(format!("cycle through {u}-{v}")));
            }
            adj[a as usize].push(b);
            adj[b as usize].push(a);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Ok(Self { vertices, adj })
    }

    /// The one-vertex tree.
    pub fn singleton(v: VertexId) -> Self {
        Self {
            vertices: vec![v],
            adj: vec![Vec::new()],
        }
    }

    pub fn vertices(&self) -> &[VertexId] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn index_of(&self, v: VertexId) -> Option<usize> {
        self.vertices.binary_search(&v).ok()
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.index_of(v).is_some()
    }

    pub fn degree(&self, v: VertexId) -> Option<usize> {
        self.index_of(v).map(|i| self.adj[i].len())
    }

    pub fn neighbors(&self, v: VertexId) -> Result<Vec<VertexId>, TreeError> {
        let i = self.index_of(v).ok_or(TreeError::UnknownVertex(v))?;
        Ok(self.adj[i].iter().map(|&j| self.vertices[j as usize]).collect())
    }

    /// Edges as `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> Vec<(VertexId, VertexId)> {
        let mut out = Vec::with_capacity(self.vertices.len().saturating_sub(1));
        for (i, list) in self.adj.iter().enumerate() {
            for &j in list {
                if (j as usize) > i {
                    out.push((self.vertices[i], self.vertices[j as usize]));
                }
            }
        }
        out
    }

    pub fn stars(&self) -> Vec<VertexId> {
        self.vertices.iter().copied().filter(|v| v.is_star()).collect()
    }

    pub fn leaves(&self) -> Vec<VertexId> {
        (0..self.len())
            .filter(|&i| self.adj[i].len() == 1)
            .map(|i| self.vertices[i])
            .collect()
    }

    /// The unique neighbour of a leaf.
    pub fn father(&self, leaf: VertexId) -> Option<VertexId> {
        let i = self.index_of(leaf)?;
        match self.adj[i].as_slice() {
            [j] => Some(self.vertices[*j as usize]),
            _ => None,
        }
    }

    /// Applies a label map to every vertex.
    pub fn relabel(&self, f: impl Fn(VertexId) -> VertexId) -> Result<Self, TreeError> {
        let edges: Vec<_> = self.edges().into_iter().map(|(u, v)| (f(u), f(v))).collect();
        Self::from_edges(&edges)
    }

    fn bfs(&self, source: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.len()];
        dist[source] = 0;
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            for &w in &self.adj[u] {
                let w = w as usize;
                if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    pub fn distance(&self, a: VertexId, b: VertexId) -> Result<usize, TreeError> {
        let ia = self.index_of(a).ok_or(TreeError::UnknownVertex(a))?;
        let ib = self.index_of(b).ok_or(TreeError::UnknownVertex(b))?;
        Ok(self.bfs(ia)[ib])
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&TreeJson {
            edges: self.edges(),
        })
        .expect("tree serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, TreeError> {
        let parsed: TreeJson =
            serde_json::from_str(text).map_err(|e| TreeError::Json(e.to_string()))?;
        Self::from_edges(&parsed.edges)
    }
}

/// Graph distances between the given marks.
pub fn tree_distance_matrix(
    tree: &LabeledTree,
    marks: &[VertexId],
) -> Result<Vec<Vec<usize>>, TreeError> {
    let idx: Vec<usize> = marks
        .iter()
        .map(|&m| tree.index_of(m).ok_or(TreeError::UnknownVertex(m)))
        .collect::<Result<_, _>>()?;
    let mut cache: HashMap<usize, Vec<usize>> = HashMap::new();
    Ok(idx
        .iter()
        .map(|&a| {
            let dist = cache.entry(a).or_insert_with(|| tree.bfs(a));
            idx.iter().map(|&b| dist[b]).collect()
        })
        .collect())
}

pub(crate) const NONE: u32 = u32::MAX;

/// A tree grown by stick-breaking, stored as parent pointers from the root
/// `★_0`. This is the representation used in sampler hot loops.
#[derive(Debug, Clone, Default)]
pub struct DenseTree {
    pub(crate) ids: Vec<VertexId>,
    pub(crate) parent: Vec<u32>,
    pub(crate) depth: Vec<u32>,
    /// `stars[j]` is the node of `★_j`.
    pub(crate) stars: Vec<u32>,
}

impl DenseTree {
    pub(crate) fn reset(&mut self) {
        self.ids.clear();
        self.parent.clear();
        self.depth.clear();
        self.stars.clear();
        self.ids.push(VertexId::Star(0));
        self.parent.push(NONE);
        self.depth.push(0);
        self.stars.push(0);
    }

    pub(crate) fn add_child(&mut self, parent: u32, id: VertexId) -> u32 {
        let node = self.ids.len() as u32;
        self.ids.push(id);
        self.parent.push(parent);
        self.depth.push(self.depth[parent as usize] + 1);
        node
    }

    pub(crate) fn add_star(&mut self, parent: u32) -> u32 {
        let j = self.stars.len() as u32;
        let node = self.add_child(parent, VertexId::Star(j));
        self.stars.push(node);
        node
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn star_count(&self) -> usize {
        self.stars.len()
    }

    /// The unique neighbour of `★_j`.
    pub(crate) fn father_of_star(&self, j: usize) -> u32 {
        let node = self.stars[j];
        if node == 0 {
            // the root star's only neighbour is the first vertex added
            1
        } else {
            self.parent[node as usize]
        }
    }

    pub(crate) fn adjacent(&self, a: u32, b: u32) -> bool {
        self.parent[a as usize] == b || self.parent[b as usize] == a
    }

    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        (1..self.ids.len()).map(|v| (self.ids[self.parent[v] as usize], self.ids[v]))
    }

    pub fn to_labeled(&self) -> LabeledTree {
        let edges: Vec<_> = self.edges().collect();
        LabeledTree::from_edges(&edges).expect("stick-breaking yields a tree")
    }

    /// Edge distance between `★_a` and `★_b`.
    pub fn star_distance(&self, a: usize, b: usize) -> u32 {
        self.node_distance(self.stars[a], self.stars[b])
    }

    /// Edge distance between two nodes via parent pointers.
    pub fn node_distance(&self, mut a: u32, mut b: u32) -> u32 {
        let mut d = 0;
        while self.depth[a as usize] > self.depth[b as usize] {
            a = self.parent[a as usize];
            d += 1;
        }
        while self.depth[b as usize] > self.depth[a as usize] {
            b = self.parent[b as usize];
            d += 1;
        }
        while a != b {
            a = self.parent[a as usize];
            b = self.parent[b as usize];
            d += 2;
        }
        d
    }
}

/// Runs the stick-breaking construction on a tuple of internal labels.
fn stick_break_dense(tree: &mut DenseTree, tuple: &[u32], node_of: &mut [u32]) {
    tree.reset();
    node_of.fill(NONE);
    let Some((&first, rest)) = tuple.split_first() else {
        tree.add_star(0);
        return;
    };
    let mut prev = tree.add_child(0, VertexId::Internal(first));
    node_of[first as usize] = prev;
    for &a in rest {
        let seen = node_of[a as usize];
        if seen == NONE {
            prev = tree.add_child(prev, VertexId::Internal(a));
            node_of[a as usize] = prev;
        } else {
            tree.add_star(prev);
            prev = seen;
        }
    }
    tree.add_star(prev);
}

fn require_tree(d: &DegreeSequence) -> Result<(), TreeError> {
    match d.kind() {
        SequenceKind::Tree => Ok(()),
        other => Err(TreeError::WrongKind(other)),
    }
}

fn multiset(d: &DegreeSequence) -> Vec<u32> {
    d.degrees()
        .iter()
        .enumerate()
        .flat_map(|(i, &di)| std::iter::repeat_n(i as u32 + 1, di))
        .collect()
}

/// A uniform permutation of the multiset in which `V_i` appears `d_i` times.
pub fn sample_d_tuple<R: Rng + ?Sized>(
    d: &DegreeSequence,
    rng: &mut R,
) -> Result<Vec<VertexId>, TreeError> {
    require_tree(d)?;
    let mut tuple = multiset(d);
    tuple.shuffle(rng);
    Ok(tuple.into_iter().map(VertexId::Internal).collect())
}

/// Deterministic stick-breaking of a D-tuple into a D-tree.
pub fn stick_break_tree(d: &DegreeSequence, tuple: &[VertexId]) -> Result<LabeledTree, TreeError> {
    require_tree(d)?;
    let s = d.s();
    let mut counts = vec![0usize; s + 1];
    let mut raw = Vec::with_capacity(tuple.len());
    for &v in tuple {
        match v {
            VertexId::Internal(i) if (1..=s as u32).contains(&i) => {
                counts[i as usize] += 1;
                raw.push(i);
            }
            VertexId::Internal(i) => return Err(TreeError::TupleMismatch(i as usize)),
            other => return Err(TreeError::UnknownVertex(other)),
        }
    }
    if let Some(i) = (1..=s).find(|&i| counts[i] != d.degrees()[i - 1]) {
        return Err(TreeError::TupleMismatch(i));
    }
    let mut tree = DenseTree::default();
    let mut node_of = vec![NONE; s + 1];
    stick_break_dense(&mut tree, &raw, &mut node_of);
    Ok(tree.to_labeled())
}

/// Reusable sampler for uniform D-trees.
#[derive(Debug, Clone)]
pub struct DTreeSampler {
    tuple: Vec<u32>,
    node_of: Vec<u32>,
    tree: DenseTree,
}

impl DTreeSampler {
    pub fn new(d: &DegreeSequence) -> Result<Self, TreeError> {
        require_tree(d)?;
        Ok(Self {
            tuple: multiset(d),
            node_of: vec![NONE; d.s() + 1],
            tree: DenseTree::default(),
        })
    }

    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> &DenseTree {
        self.tuple.shuffle(rng);
        stick_break_dense(&mut self.tree, &self.tuple, &mut self.node_of);
        &self.tree
    }

    pub fn tree(&self) -> &DenseTree {
        &self.tree
    }
}

/// A uniform D-tree.
pub fn sample_d_tree<R: Rng + ?Sized>(
    d: &DegreeSequence,
    rng: &mut R,
) -> Result<LabeledTree, TreeError> {
    let mut sampler = DTreeSampler::new(d)?;
    Ok(sampler.sample(rng).to_labeled())
}

/// `(s-2)! / prod d_i!`, the number of D-trees.
pub fn count_d_trees(d: &DegreeSequence) -> BigUint {
    let fact = |n: usize| (1..=n).fold(BigUint::one(), |acc, i| acc * BigUint::from(i));
    let denom = d
        .degrees()
        .iter()
        .fold(BigUint::one(), |acc, &di| acc * fact(di));
    fact(d.sum()) / denom
}

/// Every D-tree exactly once, by Prüfer decoding of all multiset
/// permutations of the D-tuple.
pub fn enumerate_d_trees(
    d: &DegreeSequence,
    cap: u64,
) -> Result<impl Iterator<Item = LabeledTree>, TreeError> {
    require_tree(d)?;
    let count = count_d_trees(d);
    if count.to_u64().is_none_or(|c| c > cap) {
        return Err(TreeError::TooLarge { count, cap });
    }
    let mut vertices: Vec<VertexId> = (0..d.s())
        .filter(|&i| d.degrees()[i] > 0)
        .map(|i| VertexId::Internal(i as u32 + 1))
        .chain((0..d.zeros() as u32).map(VertexId::Star))
        .collect();
    vertices.sort();
    let index: HashMap<VertexId, usize> =
        vertices.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let seq: Vec<usize> = multiset(d)
        .into_iter()
        .map(|i| index[&VertexId::Internal(i)])
        .collect();
    let mut next = Some(seq);
    Ok(std::iter::from_fn(move || {
        let current = next.take()?;
        let tree = prufer_decode(&vertices, &current);
        let mut succ = current;
        if next_permutation(&mut succ) {
            next = Some(succ);
        }
        Some(tree)
    }))
}

fn prufer_decode(vertices: &[VertexId], seq: &[usize]) -> LabeledTree {
    let n = vertices.len();
    let mut degree = vec![1usize; n];
    for &x in seq {
        degree[x] += 1;
    }
    let mut edges = Vec::with_capacity(n - 1);
    for &x in seq {
        let leaf = (0..n).find(|&v| degree[v] == 1).expect("a leaf remains");
        edges.push((vertices[leaf], vertices[x]));
        degree[leaf] -= 1;
        degree[x] -= 1;
    }
    let rest: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
    edges.push((vertices[rest[0]], vertices[rest[1]]));
    LabeledTree::from_edges(&edges).expect("Prüfer decoding yields a tree")
}

/// Advances to the next lexicographic permutation; false at the last one.
fn next_permutation(v: &mut [usize]) -> bool {
    let Some(i) = v.windows(2).rposition(|w| w[0] < w[1]) else {
        return false;
    };
    let j = v.iter().rposition(|&x| x > v[i]).unwrap();
    v.swap(i, j);
    v[i + 1..].reverse();
    true
}

/// Grows a P-tree one stick-breaking step at a time.
#[derive(Debug, Clone)]
pub struct PTreeGrower {
    dist: WeightedIndex<f64>,
    atoms: usize,
    node_of_atom: Vec<u32>,
    tree: DenseTree,
    prev: u32,
    tuple: Vec<VertexId>,
}

impl PTreeGrower {
    pub fn new(p: &PVector) -> Self {
        let mut weights = p.p().to_vec();
        if p.p_inf() > 0.0 {
            weights.push(p.p_inf());
        }
        let mut tree = DenseTree::default();
        tree.reset();
        Self {
            dist: WeightedIndex::new(&weights).expect("validated probability vector"),
            atoms: p.p().len(),
            node_of_atom: vec![NONE; p.p().len()],
            tree,
            prev: 0,
            tuple: Vec::new(),
        }
    }

    pub fn restart(&mut self) {
        self.node_of_atom.fill(NONE);
        self.tree.reset();
        self.prev = 0;
        self.tuple.clear();
    }

    pub fn steps(&self) -> usize {
        self.tuple.len()
    }

    pub fn tree(&self) -> &DenseTree {
        &self.tree
    }

    pub fn tuple(&self) -> &[VertexId] {
        &self.tuple
    }

    /// Adds one edge.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let step = self.tuple.len() as u32 + 1;
        let a = self.dist.sample(rng);
        let (id, seen) = if a < self.atoms {
            (VertexId::Internal(a as u32 + 1), self.node_of_atom[a])
        } else {
            (VertexId::Overflow(step), NONE)
        };
        self.tuple.push(id);
        if seen == NONE || step == 1 {
            let node = self.tree.add_child(self.prev, id);
            if a < self.atoms {
                self.node_of_atom[a] = node;
            }
            self.prev = node;
        } else {
            self.tree.add_star(self.prev);
            self.prev = seen;
        }
    }
}

/// The tree after `n_steps` steps of the P-tree construction, with the raw
/// tuple of draws.
pub fn sample_p_tree_prefix<R: Rng + ?Sized>(
    p: &PVector,
    n_steps: usize,
    rng: &mut R,
) -> (LabeledTree, Vec<VertexId>) {
    let mut grower = PTreeGrower::new(p);
    for _ in 0..n_steps.max(1) {
        grower.step(rng);
    }
    (grower.tree().to_labeled(), grower.tuple().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use proptest::prelude::*;

    fn v(i: u32) -> VertexId {
        VertexId::Internal(i)
    }

    fn st(j: u32) -> VertexId {
        VertexId::Star(j)
    }

    fn mixed_trace() -> (DegreeSequence, Vec<VertexId>) {
        let d = DegreeSequence::tree(&[1, 2, 1, 3, 3, 0, 0, 0, 0, 0, 0, 0]).unwrap();
        let tuple = [4, 5, 2, 5, 3, 4, 5, 4, 1, 2].map(v).to_vec();
        (d, tuple)
    }

    #[test]
    fn labels_round_trip() {
        for id in [v(3), st(0), VertexId::Overflow(2)] {
            assert_eq!(id.to_string().parse::<VertexId>().unwrap(), id);
        }
        assert_eq!(v(3).to_string(), "V3");
        assert_eq!(VertexId::Overflow(2).to_string(), "Vinf2");
        assert!("X1".parse::<VertexId>().is_err());
    }

    #[test]
    fn mixed_sequence_trace() {
        let (d, tuple) = mixed_trace();
        let t = stick_break_tree(&d, &tuple).unwrap();
        let degrees: Vec<usize> = (1..=5).map(|i| t.degree(v(i)).unwrap()).collect();
        assert_eq!(degrees, vec![2, 3, 2, 4, 4]);
        let mut leaves = t.leaves();
        leaves.sort();
        assert_eq!(leaves, (0..7).map(st).collect::<Vec<_>>());
        let expected = [
            (st(0), v(4)),
            (v(4), v(5)),
            (v(5), v(2)),
            (v(2), st(1)),
            (v(5), v(3)),
            (v(3), st(2)),
            (v(4), st(3)),
            (v(5), st(4)),
            (v(4), v(1)),
            (v(1), st(5)),
            (v(2), st(6)),
        ];
        assert_eq!(t, LabeledTree::from_edges(&expected).unwrap());
        // ★0 - V4 - V5 - V2 - ★1
        assert_eq!(t.distance(st(0), st(1)).unwrap(), 4);
        let m = tree_distance_matrix(&t, &[st(0), st(1)]).unwrap();
        assert_eq!(m, vec![vec![0, 4], vec![4, 0]]);
    }

    #[test]
    fn small_traces() {
        let d = DegreeSequence::tree(&[2, 0, 0, 0]).unwrap();
        let t = stick_break_tree(&d, &[v(1), v(1)]).unwrap();
        assert_eq!(
            t,
            LabeledTree::from_edges(&[(st(0), v(1)), (v(1), st(1)), (v(1), st(2))]).unwrap()
        );
        let d = DegreeSequence::tree(&[1, 1, 0, 0]).unwrap();
        let t = stick_break_tree(&d, &[v(1), v(2)]).unwrap();
        assert_eq!(
            t,
            LabeledTree::from_edges(&[(st(0), v(1)), (v(1), v(2)), (v(2), st(1))]).unwrap()
        );
        let m = tree_distance_matrix(&t, &[st(0), st(1)]).unwrap();
        assert_eq!(m, vec![vec![0, 3], vec![3, 0]]);
        assert_eq!(
            tree_distance_matrix(&t, &[v(2), v(2)]).unwrap(),
            vec![vec![0, 0], vec![0, 0]]
        );
        assert!(matches!(
            tree_distance_matrix(&t, &[v(9)]),
            Err(TreeError::UnknownVertex(_))
        ));
        let d = DegreeSequence::tree(&[0, 0]).unwrap();
        let t = stick_break_tree(&d, &[]).unwrap();
        assert_eq!(t.edges(), vec![(st(0), st(1))]);
        let mut rng = stream(1, 0);
        assert!(sample_d_tuple(&d, &mut rng).unwrap().is_empty());
    }

    #[test]
    fn tuple_mismatch_is_rejected() {
        let d = DegreeSequence::tree(&[1, 1, 0, 0]).unwrap();
        assert!(matches!(
            stick_break_tree(&d, &[v(1), v(1)]),
            Err(TreeError::TupleMismatch(1))
        ));
        assert!(stick_break_tree(&d, &[v(1), v(5)]).is_err());
        let surplus = DegreeSequence::surplus(&[1, 1], 1).unwrap();
        assert!(matches!(
            sample_d_tuple(&surplus, &mut stream(0, 0)),
            Err(TreeError::WrongKind(_))
        ));
    }

    #[test]
    fn enumeration_counts() {
        let d = DegreeSequence::tree(&[0, 0]).unwrap();
        assert_eq!(enumerate_d_trees(&d, 10).unwrap().count(), 1);
        let d = DegreeSequence::tree(&[1, 1, 0, 0]).unwrap();
        let trees: BTreeSet<_> = enumerate_d_trees(&d, 10)
            .unwrap()
            .map(|t| t.edges())
            .collect();
        assert_eq!(trees.len(), 2);
        let (d, _) = mixed_trace();
        assert_eq!(count_d_trees(&d), BigUint::from(50400u32));
        assert!(matches!(
            enumerate_d_trees(&d, 5000),
            Err(TreeError::TooLarge { .. })
        ));
    }

    #[test]
    fn mixed_sequence_enumeration_is_exhaustive_and_distinct() {
        let (d, tuple) = mixed_trace();
        let trees: std::collections::HashSet<LabeledTree> =
            enumerate_d_trees(&d, 100_000).unwrap().collect();
        assert_eq!(trees.len(), 50400);
        assert!(trees.contains(&stick_break_tree(&d, &tuple).unwrap()));
        for t in trees.iter().take(500) {
            for i in 1..=5u32 {
                assert_eq!(t.degree(v(i)).unwrap(), d.degrees()[i as usize - 1] + 1);
            }
        }
    }

    #[test]
    fn tuple_frequencies_are_uniform() {
        let d = DegreeSequence::tree(&[1, 1, 0, 0]).unwrap();
        let mut rng = stream(3, 0);
        let n = 10_000;
        let first_v1 = (0..n)
            .filter(|_| sample_d_tuple(&d, &mut rng).unwrap()[0] == v(1))
            .count() as f64;
        let sd = (n as f64 * 0.25).sqrt();
        assert!((first_v1 - n as f64 / 2.0).abs() < 3.0 * sd);
        let d = DegreeSequence::tree(&[2, 0, 0, 0]).unwrap();
        assert_eq!(sample_d_tuple(&d, &mut rng).unwrap(), vec![v(1), v(1)]);
    }

    #[test]
    fn p_tree_prefixes() {
        let mut rng = stream(5, 0);
        let p = PVector::new(vec![1.0], 0.0).unwrap();
        let (t, tuple) = sample_p_tree_prefix(&p, 3, &mut rng);
        assert_eq!(tuple, vec![v(1); 3]);
        assert_eq!(
            t,
            LabeledTree::from_edges(&[(st(0), v(1)), (v(1), st(1)), (v(1), st(2))]).unwrap()
        );

        let p = PVector::new(vec![], 1.0).unwrap();
        let (t, _) = sample_p_tree_prefix(&p, 4, &mut rng);
        let path: Vec<_> = (1..=4).map(VertexId::Overflow).collect();
        let mut edges = vec![(st(0), path[0])];
        edges.extend(path.windows(2).map(|w| (w[0], w[1])));
        assert_eq!(t, LabeledTree::from_edges(&edges).unwrap());

        let p = PVector::new(vec![0.5, 0.5], 0.0).unwrap();
        let n = 10_000;
        let hits = (0..n)
            .filter(|_| {
                let (t, _) = sample_p_tree_prefix(&p, 2, &mut rng);
                t.father(st(0)) == Some(v(1))
            })
            .count() as f64;
        assert!((hits - 5000.0).abs() < 3.0 * 50.0);
    }

    /// Restricting an (n+m)-step tree to its first n steps has the law of an
    /// n-step tree. Checked exactly by enumerating all tuples of atoms.
    #[test]
    fn p_tree_prefix_consistency_by_tuple_enumeration() {
        let probs = [0.5, 0.3, 0.2];
        let law = |len: usize, cut: usize| {
            let mut out: HashMap<LabeledTree, f64> = HashMap::new();
            let total = probs.len().pow(len as u32);
            for code in 0..total {
                let mut c = code;
                let mut tuple = Vec::new();
                let mut w = 1.0;
                for _ in 0..len {
                    tuple.push(c % probs.len());
                    w *= probs[c % probs.len()];
                    c /= probs.len();
                }
                let mut tree = DenseTree::default();
                tree.reset();
                let mut node_of = [NONE; 3];
                let mut prev = 0;
                for (step, &a) in tuple.iter().enumerate() {
                    if step == cut {
                        break;
                    }
                    let id = v(a as u32 + 1);
                    if node_of[a] == NONE || step == 0 {
                        prev = tree.add_child(prev, id);
                        node_of[a] = prev;
                    } else {
                        tree.add_star(prev);
                        prev = node_of[a];
                    }
                }
                *out.entry(tree.to_labeled()).or_default() += w;
            }
            out
        };
        let short = law(3, 3);
        let long = law(5, 3);
        assert_eq!(short.len(), long.len());
        for (t, p) in &short {
            assert!((p - long[t]).abs() < 1e-12);
        }
    }

    #[test]
    fn json_round_trip() {
        let (d, tuple) = mixed_trace();
        let t = stick_break_tree(&d, &tuple).unwrap();
        let text = t.to_json();
        assert!(text.starts_with(r#"{"edges":[["V1","V4"]"#));
        assert_eq!(LabeledTree::from_json(&text).unwrap(), t);
        assert!(LabeledTree::from_json(r#"{"edges":[["V1","V2"],["V2","V1"]]}"#).is_err());
    }

    fn tree_sequence() -> impl Strategy<Value = DegreeSequence> {
        prop::collection::vec(1i64..4, 0..10).prop_map(|mut raw| {
            let sum: i64 = raw.iter().sum();
            while (raw.len() as i64) < sum + 2 {
                raw.push(0);
            }
            DegreeSequence::tree(&raw).unwrap()
        })
    }

    proptest! {
        #[test]
        fn sampled_trees_satisfy_degree_constraints(d in tree_sequence(), seed in any::<u64>()) {
            let t = sample_d_tree(&d, &mut stream(seed, 0)).unwrap();
            let stars = t.stars();
            prop_assert_eq!(stars.len(), d.zeros());
            for (j, &s) in stars.iter().enumerate() {
                prop_assert_eq!(s, st(j as u32));
                prop_assert_eq!(t.degree(s), Some(1));
            }
            for (i, &di) in d.degrees().iter().enumerate() {
                let deg = t.degree(v(i as u32 + 1));
                if di > 0 {
                    prop_assert_eq!(deg, Some(di + 1));
                } else {
                    prop_assert_eq!(deg, None);
                }
            }
        }
    }
}
