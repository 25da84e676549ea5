//! Multigraphs with loops: surplus, removable edges, the symmetry factor,
//! leaf gluing, cycle-breaking and the tree bias.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::discrete_trees::{DenseTree, LabeledTree, TreeError, VertexId};
use crate::union_find::UnionFind;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("multigraph is disconnected")]
    Disconnected,
    #[error("{0} is not a leaf")]
    NotALeaf(VertexId),
    #[error("label {0} appears twice")]
    DuplicateLabel(VertexId),
    #[error("leaves {0} and {1} are joined to each other")]
    AdjacentLeaves(VertexId, VertexId),
    #[error("surplus is {actual}, expected {expected}")]
    SurplusMismatch { expected: usize, actual: usize },
    #[error("vertex {0} clashes with a cycle-breaking star label")]
    NonInternalVertex(VertexId),
    #[error("tree does not have the shape of a cycle-breaking output: {0}")]
    ShapeMismatch(String),
    #[error("unknown vertex {0}")]
    UnknownVertex(VertexId),
    #[error("bias {bias} exceeds the bound {bound}")]
    BiasBoundExceeded { bias: f64, bound: f64 },
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error("malformed multigraph JSON: {0}")]
    Json(String),
}

fn key(u: VertexId, v: VertexId) -> (VertexId, VertexId) {
    if u <= v {
        (u, v)
    } else {
        (v, u)
    }
}

/// A finite multigraph. `mult[(u, v)]` with `u <= v` is the number of
/// copies of `{u, v}`; a loop `(v, v)` counts once per loop.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Multigraph {
    vertices: BTreeSet<VertexId>,
    mult: BTreeMap<(VertexId, VertexId), usize>,
}

#[derive(Serialize, Deserialize)]
struct EdgeJson {
    u: VertexId,
    v: VertexId,
    mult: usize,
}

#[derive(Serialize, Deserialize)]
struct GraphJson {
    vertices: Vec<VertexId>,
    edges: Vec<EdgeJson>,
}

impl Multigraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_edges(edges: &[(VertexId, VertexId)]) -> Self {
        let mut g = Self::new();
        for &(u, v) in edges {
            g.add_edge(u, v);
        }
        g
    }

    pub fn from_tree(t: &LabeledTree) -> Self {
        let mut g = Self::from_edges(&t.edges());
        for &v in t.vertices() {
            g.add_vertex(v);
        }
        g
    }

    pub fn add_vertex(&mut self, v: VertexId) {
        self.vertices.insert(v);
    }

    pub fn add_edge(&mut self, u: VertexId, v: VertexId) {
        self.add_edges(u, v, 1);
    }

    pub fn add_edges(&mut self, u: VertexId, v: VertexId, count: usize) {
        self.vertices.insert(u);
        self.vertices.insert(v);
        if count > 0 {
            *self.mult.entry(key(u, v)).or_default() += count;
        }
    }

    /// Removes one copy of `{u, v}`; false if there is none.
    pub fn remove_edge(&mut self, u: VertexId, v: VertexId) -> bool {
        let k = key(u, v);
        match self.mult.get_mut(&k) {
            Some(m) if *m > 1 => {
                *m -= 1;
                true
            }
            Some(_) => {
                self.mult.remove(&k);
                true
            }
            None => false,
        }
    }

    pub fn remove_vertex(&mut self, v: VertexId) {
        self.vertices.remove(&v);
        self.mult.retain(|&(a, b), _| a != v && b != v);
    }

    pub fn vertices(&self) -> &BTreeSet<VertexId> {
        &self.vertices
    }

    pub fn multiplicity(&self, u: VertexId, v: VertexId) -> usize {
        self.mult.get(&key(u, v)).copied().unwrap_or(0)
    }

    /// Distinct edges `(u, v)` with `u <= v` and their multiplicities.
    pub fn edges(&self) -> impl Iterator<Item = ((VertexId, VertexId), usize)> + '_ {
        self.mult.iter().map(|(&e, &m)| (e, m))
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.mult.values().sum()
    }

    /// Degree with loops counted twice.
    pub fn degree(&self, v: VertexId) -> usize {
        self.mult
            .iter()
            .map(|(&(a, b), &m)| match (a == v, b == v) {
                (true, true) => 2 * m,
                (true, false) | (false, true) => m,
                _ => 0,
            })
            .sum()
    }

    fn indexed(&self) -> (Vec<VertexId>, Vec<(usize, usize, usize)>) {
        let verts: Vec<VertexId> = self.vertices.iter().copied().collect();
        let idx = |v: VertexId| verts.binary_search(&v).unwrap();
        let edges = self
            .mult
            .iter()
            .map(|(&(a, b), &m)| (idx(a), idx(b), m))
            .collect();
        (verts, edges)
    }

    pub fn is_connected(&self) -> bool {
        let (verts, edges) = self.indexed();
        let mut uf = UnionFind::new(verts.len());
        for (a, b, _) in edges {
            uf.union(a, b);
        }
        uf.components() <= 1
    }

    /// `|E| - |V| + 1` of a connected multigraph.
    pub fn surplus(&self) -> Result<usize, GraphError> {
        if !self.is_connected() {
            return Err(GraphError::Disconnected);
        }
        Ok(self.edge_count() + 1 - self.vertex_count())
    }

    /// Edges whose removal (one copy at a time) keeps the graph connected,
    /// with the number of removable copies of each.
    pub fn cyc_edges(&self) -> Result<Vec<((VertexId, VertexId), usize)>, GraphError> {
        if !self.is_connected() {
            return Err(GraphError::Disconnected);
        }
        let (verts, edges) = self.indexed();
        let n = verts.len();
        let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        for (id, &(a, b, _)) in edges.iter().enumerate() {
            if a != b {
                adj[a].push((b, id));
                adj[b].push((a, id));
            }
        }
        let bridge = bridges(&adj, edges.len());
        Ok(edges
            .iter()
            .enumerate()
            .filter(|&(id, &(a, b, m))| a == b || m > 1 || !bridge[id])
            .map(|(_, &(a, b, m))| ((verts[a], verts[b]), m))
            .collect())
    }

    /// The number of removable edge copies.
    pub fn square(&self) -> Result<usize, GraphError> {
        Ok(self.cyc_edges()?.iter().map(|&(_, m)| m).sum())
    }

    /// `prod_v 2^{#vv} #vv! * prod_{u<v} #uv!`.
    pub fn circ(&self) -> BigUint {
        let mut out = BigUint::one();
        for (&(a, b), &m) in &self.mult {
            for i in 2..=m {
                out *= BigUint::from(i);
            }
            if a == b {
                out <<= m;
            }
        }
        out
    }

    /// Fuses each pair of leaves into a single edge between their fathers.
    pub fn glue_leaves(&self, pairs: &[(VertexId, VertexId)]) -> Result<Self, GraphError> {
        let mut seen = BTreeSet::new();
        for &(a, b) in pairs {
            for l in [a, b] {
                if !seen.insert(l) {
                    return Err(GraphError::DuplicateLabel(l));
                }
            }
        }
        let mut fathers = Vec::with_capacity(pairs.len());
        for &(a, b) in pairs {
            let fa = self.father(a)?;
            let fb = self.father(b)?;
            if fa == b {
                return Err(GraphError::AdjacentLeaves(a, b));
            }
            fathers.push((a, fa, b, fb));
        }
        let mut out = self.clone();
        for &(a, fa, b, fb) in &fathers {
            out.remove_vertex(a);
            out.remove_vertex(b);
            out.add_edge(fa, fb);
        }
        Ok(out)
    }

    /// The unique neighbour of a leaf.
    pub fn father(&self, leaf: VertexId) -> Result<VertexId, GraphError> {
        if !self.vertices.contains(&leaf) {
            return Err(GraphError::NotALeaf(leaf));
        }
        let mut incident = self
            .mult
            .iter()
            .filter(|(&(a, b), _)| a == leaf || b == leaf);
        match (incident.next(), incident.next()) {
            (Some((&(a, b), &1)), None) if a != b => Ok(if a == leaf { b } else { a }),
            _ => Err(GraphError::NotALeaf(leaf)),
        }
    }

    /// Breadth-first distances from `source`; `usize::MAX` if unreachable.
    pub fn distances_from(&self, source: VertexId) -> Result<Vec<usize>, GraphError> {
        let (verts, edges) = self.indexed();
        let s = verts
            .binary_search(&source)
            .map_err(|_| GraphError::UnknownVertex(source))?;
        let mut adj = vec![Vec::new(); verts.len()];
        for (a, b, _) in edges {
            if a != b {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        let mut dist = vec![usize::MAX; verts.len()];
        dist[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &w in &adj[u] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        Ok(dist)
    }

    /// Graph distances between marks.
    pub fn distance_matrix(&self, marks: &[VertexId]) -> Result<Vec<Vec<usize>>, GraphError> {
        let verts: Vec<VertexId> = self.vertices.iter().copied().collect();
        let mut rows = Vec::with_capacity(marks.len());
        let mut cache: BTreeMap<VertexId, Vec<usize>> = BTreeMap::new();
        for &a in marks {
            if !cache.contains_key(&a) {
                cache.insert(a, self.distances_from(a)?);
            }
            let dist = &cache[&a];
            let row = marks
                .iter()
                .map(|b| {
                    verts
                        .binary_search(b)
                        .map(|i| dist[i])
                        .map_err(|_| GraphError::UnknownVertex(*b))
                })
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(row);
        }
        Ok(rows)
    }

    pub fn to_json(&self) -> String {
        let json = GraphJson {
            vertices: self.vertices.iter().copied().collect(),
            edges: self
                .mult
                .iter()
                .map(|(&(u, v), &mult)| EdgeJson { u, v, mult })
                .collect(),
        };
        serde_json::to_string(&json).expect("multigraph serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, GraphError> {
        let parsed: GraphJson =
            serde_json::from_str(text).map_err(|e| GraphError::Json(e.to_string()))?;
        let mut g = Self::new();
        for v in parsed.vertices {
            g.add_vertex(v);
        }
        for e in parsed.edges {
            g.add_edges(e.u, e.v, e.mult);
        }
        Ok(g)
    }
}

/// Bridges of a simple graph given by adjacency lists of `(neighbour,
/// edge id)`. Iterative low-link search.
fn bridges(adj: &[Vec<(usize, usize)>], n_edges: usize) -> Vec<bool> {
    let n = adj.len();
    let mut is_bridge = vec![false; n_edges];
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut timer = 0;
    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        // (vertex, parent edge id, next adjacency position)
        let mut stack = vec![(root, usize::MAX, 0usize)];
        disc[root] = timer;
        low[root] = timer;
        timer += 1;
        while let Some(&mut (u, pe, ref mut pos)) = stack.last_mut() {
            if *pos < adj[u].len() {
                let (w, id) = adj[u][*pos];
                *pos += 1;
                if id == pe {
                    continue;
                }
                if disc[w] == usize::MAX {
                    disc[w] = timer;
                    low[w] = timer;
                    timer += 1;
                    stack.push((w, id, 0));
                } else {
                    low[u] = low[u].min(disc[w]);
                }
            } else {
                stack.pop();
                if let Some(&(p, _, _)) = stack.last() {
                    low[p] = low[p].min(low[u]);
                    if low[u] > disc[p] {
                        is_bridge[pe] = true;
                    }
                }
            }
        }
    }
    is_bridge
}

/// The pairs `(★_1, ★_2), ..., (★_{2k-1}, ★_{2k})`.
pub fn star_pairs(k: usize) -> Vec<(VertexId, VertexId)> {
    (1..=k as u32)
        .map(|b| (VertexId::Star(2 * b - 1), VertexId::Star(2 * b)))
        .collect()
}

/// Record of one cycle-breaking step: the oriented edge `(u, v)` removed.
pub type RemovalTrace = Vec<(VertexId, VertexId)>;

/// Removes `k` uniform oriented removable edges one at a time, attaching
/// `★_{2k-2i+2}` to `u` and `★_{2k-2i+1}` to `v` at step `i`.
pub fn cycle_break<R: Rng + ?Sized>(
    g: &Multigraph,
    k: usize,
    rng: &mut R,
) -> Result<(LabeledTree, RemovalTrace), GraphError> {
    let actual = g.surplus()?;
    let clash = |v: &&VertexId| matches!(v, VertexId::Star(j) if (1..=2 * k as u32).contains(j));
    if let Some(&v) = g.vertices().iter().find(clash) {
        return Err(GraphError::NonInternalVertex(v));
    }
    if actual != k {
        return Err(GraphError::SurplusMismatch {
            expected: k,
            actual,
        });
    }
    let mut cur = g.clone();
    let mut trace = Vec::with_capacity(k);
    for i in 1..=k {
        let cyc = cur.cyc_edges()?;
        let total: usize = cyc.iter().map(|&(_, m)| m).sum();
        let mut r = rng.random_range(0..total);
        let &((a, b), _) = cyc
            .iter()
            .find(|&&(_, m)| {
                if r < m {
                    true
                } else {
                    r -= m;
                    false
                }
            })
            .expect("index within total");
        let (u, v) = if rng.random::<bool>() { (a, b) } else { (b, a) };
        cur.remove_edge(u, v);
        cur.add_edge(u, VertexId::Star((2 * k - 2 * i + 2) as u32));
        cur.add_edge(v, VertexId::Star((2 * k - 2 * i + 1) as u32));
        trace.push((u, v));
    }
    let edges: Vec<_> = cur
        .edges()
        .map(|(e, m)| {
            debug_assert_eq!(m, 1);
            e
        })
        .collect();
    let tree = match edges.as_slice() {
        [] => LabeledTree::singleton(*cur.vertices().first().ok_or(GraphError::Disconnected)?),
        _ => LabeledTree::from_edges(&edges)?,
    };
    Ok((tree, trace))
}

/// `P(CB(G) = T)` as an exact rational, or zero when `T` has the right
/// shape but glues to a different multigraph.
pub fn cb_probability(g: &Multigraph, t: &LabeledTree) -> Result<BigRational, GraphError> {
    let k = g.surplus()?;
    let mut expected: BTreeSet<VertexId> = g.vertices().clone();
    expected.extend((1..=2 * k as u32).map(VertexId::Star));
    let actual: BTreeSet<VertexId> = t.vertices().iter().copied().collect();
    if actual != expected {
        return Err(GraphError::ShapeMismatch("vertex sets differ".into()));
    }
    for j in 1..=2 * k as u32 {
        if t.degree(VertexId::Star(j)) != Some(1) {
            return Err(GraphError::ShapeMismatch(format!("S{j} is not a leaf")));
        }
    }
    for &v in g.vertices() {
        if t.degree(v) != Some(g.degree(v)) {
            return Err(GraphError::ShapeMismatch(format!("degree of {v} differs")));
        }
    }
    let tree_graph = Multigraph::from_tree(t);
    let pairs = star_pairs(k);
    if tree_graph.glue_leaves(&pairs)? != *g {
        return Ok(BigRational::zero());
    }
    let (_, squares) = glue_sequence(&tree_graph, k)?;
    let denom: BigUint = squares
        .iter()
        .fold(BigUint::one() << k, |acc, &q| acc * BigUint::from(q));
    Ok(BigRational::new(g.circ().into(), denom.into()))
}

/// Glues the first `c` star pairs for `c = 1..=k`, returning the fully
/// glued graph and `(□_1, ..., □_k)`.
fn glue_sequence(tree: &Multigraph, k: usize) -> Result<(Multigraph, Vec<usize>), GraphError> {
    let pairs = star_pairs(k);
    let mut cur = tree.clone();
    let mut squares = Vec::with_capacity(k);
    for &pair in &pairs {
        cur = cur.glue_leaves(&[pair])?;
        squares.push(cur.square()?);
    }
    Ok((cur, squares))
}

/// `∘(glued graph) / prod_i □_i(T)` as an exact rational.
pub fn bias(t: &LabeledTree, k: usize) -> Result<BigRational, GraphError> {
    let (glued, squares) = glue_sequence(&Multigraph::from_tree(t), k)?;
    let denom = squares
        .iter()
        .fold(BigUint::one(), |acc, &q| acc * BigUint::from(q));
    Ok(BigRational::new(glued.circ().into(), denom.into()))
}

/// `(□_1(T), ..., □_k(T))`.
pub fn squares(t: &LabeledTree, k: usize) -> Result<Vec<usize>, GraphError> {
    Ok(glue_sequence(&Multigraph::from_tree(t), k)?.1)
}

/// `(k+1)! 2^k`.
pub fn bias_bound(k: usize) -> f64 {
    (1..=k + 1).map(|i| i as f64).product::<f64>() * 2f64.powi(k as i32)
}

/// Scratch space for [`dense_bias`].
#[derive(Debug, Clone, Default)]
pub struct BiasScratch {
    mark: Vec<u32>,
    epoch: u32,
    squares: Vec<usize>,
}

impl BiasScratch {
    /// `□_i` values of the last evaluation.
    pub fn squares(&self) -> &[usize] {
        &self.squares
    }
}

/// The bias of a stick-breaking tree whose glued stars have the given
/// fathers (`fathers[2b]`, `fathers[2b+1]` for pair `b`).
///
/// `□_c = c + |union of tree paths between the first c father pairs|`, and
/// the symmetry factor only involves glued edges (plus one tree edge when a
/// pair of fathers is adjacent).
pub(crate) fn dense_bias(tree: &DenseTree, fathers: &[u32], scratch: &mut BiasScratch) -> f64 {
    let k = fathers.len() / 2;
    let n = tree.node_count();
    if scratch.mark.len() < n {
        scratch.mark.resize(n, 0);
    }
    if scratch.epoch == u32::MAX {
        scratch.mark.fill(0);
        scratch.epoch = 0;
    }
    scratch.epoch += 1;
    let epoch = scratch.epoch;
    scratch.squares.clear();
    let mut union = 0usize;
    let mut denom = 1.0;
    for c in 0..k {
        let (mut a, mut b) = (fathers[2 * c], fathers[2 * c + 1]);
        let mut touch = |x: u32, union: &mut usize| {
            if scratch.mark[x as usize] != epoch {
                scratch.mark[x as usize] = epoch;
                *union += 1;
            }
        };
        while tree.depth[a as usize] > tree.depth[b as usize] {
            touch(a, &mut union);
            a = tree.parent[a as usize];
        }
        while tree.depth[b as usize] > tree.depth[a as usize] {
            touch(b, &mut union);
            b = tree.parent[b as usize];
        }
        while a != b {
            touch(a, &mut union);
            touch(b, &mut union);
            a = tree.parent[a as usize];
            b = tree.parent[b as usize];
        }
        let sq = c + 1 + union;
        scratch.squares.push(sq);
        denom *= sq as f64;
    }
    let mut circ = 1.0;
    for c in 0..k {
        let pair = norm(fathers[2 * c], fathers[2 * c + 1]);
        if (0..c).any(|e| norm(fathers[2 * e], fathers[2 * e + 1]) == pair) {
            continue;
        }
        let m = (c..k)
            .filter(|&e| norm(fathers[2 * e], fathers[2 * e + 1]) == pair)
            .count();
        if pair.0 == pair.1 {
            circ *= 2f64.powi(m as i32) * factorial(m);
        } else if tree.adjacent(pair.0, pair.1) {
            circ *= factorial(m + 1);
        } else {
            circ *= factorial(m);
        }
    }
    circ / denom
}

fn norm(a: u32, b: u32) -> (u32, u32) {
    (a.min(b), a.max(b))
}

fn factorial(m: usize) -> f64 {
    (2..=m).map(|i| i as f64).product()
}

/// Fast bias of a stick-breaking tree in which `★_{glue[0]}, ★_{glue[1]}`,
/// ... are glued in consecutive pairs. Returns the bias and `□_1..□_k`.
pub fn tree_bias_fast(tree: &DenseTree, glue: &[usize]) -> (f64, Vec<usize>) {
    let fathers: Vec<u32> = glue.iter().map(|&j| tree.father_of_star(j)).collect();
    let mut scratch = BiasScratch::default();
    let b = dense_bias(tree, &fathers, &mut scratch);
    (b, scratch.squares)
}

/// Converts an exact bias to a float, for reporting.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrete_trees::{enumerate_d_trees, stick_break_tree, DTreeSampler};
    use crate::params::DegreeSequence;
    use crate::rng::stream;
    use num_bigint::BigInt;
    use proptest::prelude::*;
    use std::collections::HashMap;
    use rand::Rng;

    fn v(i: u32) -> VertexId {
        VertexId::Internal(i)
    }

    fn st(j: u32) -> VertexId {
        VertexId::Star(j)
    }

    fn ratio(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    pub(crate) fn mixed_tree() -> LabeledTree {
        let d = DegreeSequence::tree(&[1, 2, 1, 3, 3, 0, 0, 0, 0, 0, 0, 0]).unwrap();
        let tuple = [4, 5, 2, 5, 3, 4, 5, 4, 1, 2].map(v);
        stick_break_tree(&d, &tuple).unwrap()
    }

    fn glued_mixed_graph() -> Multigraph {
        Multigraph::from_tree(&mixed_tree())
            .glue_leaves(&star_pairs(2))
            .unwrap()
    }

    fn glued_mixed_pair() -> (Multigraph, LabeledTree) {
        (glued_mixed_graph(), mixed_tree())
    }

    #[test]
    fn surplus_examples() {
        let tri = Multigraph::from_edges(&[(v(1), v(2)), (v(2), v(3)), (v(3), v(1))]);
        assert_eq!(tri.surplus().unwrap(), 1);
        assert_eq!(tri.square().unwrap(), 3);
        let double = Multigraph::from_edges(&[(v(1), v(2)), (v(1), v(2))]);
        assert_eq!(double.surplus().unwrap(), 1);
        assert_eq!(Multigraph::from_tree(&mixed_tree()).surplus().unwrap(), 0);
        let split = Multigraph::from_edges(&[(v(1), v(2)), (v(3), v(4))]);
        assert_eq!(split.surplus(), Err(GraphError::Disconnected));
        let loop1 = Multigraph::from_edges(&[(v(1), v(1))]);
        assert_eq!(loop1.square().unwrap(), 1);
        assert_eq!(loop1.degree(v(1)), 2);
    }

    #[test]
    fn circ_examples() {
        assert_eq!(
            Multigraph::from_edges(&[(v(1), v(2)), (v(2), v(3))]).circ(),
            BigUint::from(1u32)
        );
        assert_eq!(Multigraph::from_edges(&[(v(1), v(1))]).circ(), BigUint::from(2u32));
        assert_eq!(
            Multigraph::from_edges(&[(v(1), v(2)), (v(1), v(2))]).circ(),
            BigUint::from(2u32)
        );
        // two loops at one vertex: 2^2 * 2!
        assert_eq!(
            Multigraph::from_edges(&[(v(1), v(1)), (v(1), v(1))]).circ(),
            BigUint::from(8u32)
        );
    }

    #[test]
    fn glued_tree_example() {
        let g = glued_mixed_graph();
        assert_eq!(g.surplus().unwrap(), 2);
        assert_eq!(g.multiplicity(v(2), v(3)), 1);
        assert_eq!(g.multiplicity(v(4), v(5)), 2);
        assert_eq!(g.circ(), BigUint::from(2u32));
        assert_eq!(g.square().unwrap(), 5);
        let mut less = g.clone();
        less.remove_edge(v(4), v(5));
        assert_eq!(less.square().unwrap(), 3);

        let (g, t) = glued_mixed_pair();
        assert_eq!(cb_probability(&g, &t).unwrap(), ratio(1, 30));
        assert_eq!(bias(&mixed_tree(), 2).unwrap(), ratio(2, 15));
        assert_eq!(squares(&mixed_tree(), 2).unwrap(), vec![3, 5]);
    }

    #[test]
    fn gluing_examples() {
        let path = LabeledTree::from_edges(&[(st(1), v(1)), (v(1), st(2))]).unwrap();
        let g = Multigraph::from_tree(&path)
            .glue_leaves(&[(st(1), st(2))])
            .unwrap();
        assert_eq!(g, Multigraph::from_edges(&[(v(1), v(1))]));
        let path =
            LabeledTree::from_edges(&[(st(1), v(1)), (v(1), v(2)), (v(2), st(2))]).unwrap();
        let g = Multigraph::from_tree(&path)
            .glue_leaves(&[(st(1), st(2))])
            .unwrap();
        assert_eq!(g, Multigraph::from_edges(&[(v(1), v(2)), (v(1), v(2))]));
        let base = Multigraph::from_tree(&mixed_tree());
        assert_eq!(
            base.glue_leaves(&[(st(1), st(1))]),
            Err(GraphError::DuplicateLabel(st(1)))
        );
        assert_eq!(
            base.glue_leaves(&[(st(1), v(4))]),
            Err(GraphError::NotALeaf(v(4)))
        );
        let forward = base.glue_leaves(&[(st(1), st(2)), (st(3), st(4))]).unwrap();
        let backward = base.glue_leaves(&[(st(4), st(3)), (st(2), st(1))]).unwrap();
        assert_eq!(forward, backward);
    }

    #[test]
    fn small_bias_and_probability_cases() {
        let path = LabeledTree::from_edges(&[(st(1), v(1)), (v(1), st(2))]).unwrap();
        assert_eq!(bias(&path, 1).unwrap(), ratio(2, 1));
        assert_eq!(bias(&path, 0).unwrap(), ratio(1, 1));
        let loop1 = Multigraph::from_edges(&[(v(1), v(1))]);
        assert_eq!(cb_probability(&loop1, &path).unwrap(), ratio(1, 1));
        let bouquet = Multigraph::from_edges(&[(v(1), v(1)), (v(1), v(1))]);
        let star = LabeledTree::from_edges(&[
            (st(1), v(1)),
            (st(2), v(1)),
            (st(3), v(1)),
            (st(4), v(1)),
        ])
        .unwrap();
        assert_eq!(cb_probability(&bouquet, &star).unwrap(), ratio(1, 1));
        let wrong = LabeledTree::from_edges(&[(st(1), v(2)), (v(2), st(2))]).unwrap();
        assert!(matches!(
            cb_probability(&loop1, &wrong),
            Err(GraphError::ShapeMismatch(_))
        ));
    }

    #[test]
    fn cycle_break_examples() {
        let mut rng = stream(11, 0);
        let loop1 = Multigraph::from_edges(&[(v(1), v(1))]);
        let path = LabeledTree::from_edges(&[(st(1), v(1)), (v(1), st(2))]).unwrap();
        for _ in 0..20 {
            assert_eq!(cycle_break(&loop1, 1, &mut rng).unwrap().0, path);
        }
        let double = Multigraph::from_edges(&[(v(1), v(2)), (v(1), v(2))]);
        for _ in 0..20 {
            let (t, trace) = cycle_break(&double, 1, &mut rng).unwrap();
            assert_eq!(trace.len(), 1);
            let back = Multigraph::from_tree(&t).glue_leaves(&star_pairs(1)).unwrap();
            assert_eq!(back, double);
        }
        assert_eq!(
            cycle_break(&double, 2, &mut rng),
            Err(GraphError::SurplusMismatch {
                expected: 2,
                actual: 1
            })
        );
    }

    #[test]
    fn cycle_break_frequencies_on_glued_tree() {
        let (g, target) = glued_mixed_pair();
        let mut rng = stream(12, 0);
        let n = 20_000;
        let mut counts: HashMap<LabeledTree, usize> = HashMap::new();
        for _ in 0..n {
            let (t, _) = cycle_break(&g, 2, &mut rng).unwrap();
            assert_eq!(Multigraph::from_tree(&t).glue_leaves(&star_pairs(2)).unwrap(), g);
            *counts.entry(t).or_default() += 1;
        }
        let mut total = BigRational::zero();
        for (t, &c) in &counts {
            let p = cb_probability(&g, t).unwrap();
            total += p.clone();
            let pf = rational_to_f64(&p);
            let sd = (n as f64 * pf * (1.0 - pf)).sqrt();
            assert!((c as f64 - n as f64 * pf).abs() < 4.0 * sd + 1.0);
        }
        assert!(counts.contains_key(&target));
        // every reachable tree was seen, so the probabilities sum to one
        assert_eq!(total, BigRational::one());
    }

    /// Summing cb_probability over every tree of the right shape gives 1.
    #[test]
    fn cb_probabilities_sum_to_one_over_enumerated_trees() {
        let graphs = [
            Multigraph::from_edges(&[(v(1), v(2)), (v(2), v(3)), (v(3), v(1))]),
            Multigraph::from_edges(&[(v(1), v(1)), (v(1), v(2)), (v(2), v(2))]),
            Multigraph::from_edges(&[(v(1), v(2)), (v(1), v(2)), (v(1), v(2))]),
            Multigraph::from_edges(&[(v(1), v(2)), (v(1), v(2)), (v(2), v(3)), (v(3), v(3))]),
        ];
        for g in graphs {
            let k = g.surplus().unwrap();
            let verts: Vec<VertexId> = g.vertices().iter().copied().collect();
            let raw: Vec<i64> = verts
                .iter()
                .map(|&x| g.degree(x) as i64 - 1)
                .chain(std::iter::repeat_n(0, 2 * k))
                .collect();
            let d = DegreeSequence::tree(&raw).unwrap();
            let mut total = BigRational::zero();
            for t in enumerate_d_trees(&d, 100_000).unwrap() {
                // D-tree labels: V_i is the i-th vertex of g, stars shift up by one
                let t = t
                    .relabel(|x| match x {
                        VertexId::Internal(i) => verts[i as usize - 1],
                        VertexId::Star(j) => st(j + 1),
                        other => other,
                    })
                    .unwrap();
                total += cb_probability(&g, &t).unwrap();
            }
            assert_eq!(total, BigRational::one(), "graph {}", g.to_json());
        }
    }

    #[test]
    fn dense_bias_matches_exact_bias() {
        let mut rng = stream(13, 0);
        for raw in [
            vec![2i64, 2, 1, 0, 0, 0, 0],
            vec![3, 1, 1, 1, 0, 0, 0, 0],
            vec![4, 3, 1, 0, 0, 0, 0, 0, 0, 0],
            vec![2, 2, 2, 2, 1, 0, 0, 0, 0, 0, 0],
            vec![4, 0, 0, 0, 0, 0],
            vec![6, 0, 0, 0, 0, 0, 0, 0],
        ] {
            let d = DegreeSequence::tree(&raw).unwrap();
            let mut sampler = DTreeSampler::new(&d).unwrap();
            for _ in 0..300 {
                let dense = sampler.sample(&mut rng).clone();
                let t = dense.to_labeled();
                for k in 0..=(d.zeros() - 1) / 2 {
                    let glue: Vec<usize> = (1..=2 * k).collect();
                    let (fast, sq) = tree_bias_fast(&dense, &glue);
                    let exact = bias(&t, k).unwrap();
                    assert!((fast - rational_to_f64(&exact)).abs() < 1e-12);
                    assert_eq!(sq, squares(&t, k).unwrap());
                    assert!(fast <= bias_bound(k));
                }
            }
        }
    }

    #[test]
    fn json_round_trip() {
        let g = glued_mixed_graph();
        let text = g.to_json();
        assert!(text.contains(r#"{"u":"V4","v":"V5","mult":2}"#));
        assert_eq!(Multigraph::from_json(&text).unwrap(), g);
    }

    /// A random connected multigraph on up to 6 vertices with surplus <= 3.
    fn connected_multigraph() -> impl Strategy<Value = Multigraph> {
        (1usize..=6, 0usize..=3, any::<u64>()).prop_map(|(n, k, seed)| {
            let mut rng = stream(seed, 0);
            let mut g = Multigraph::new();
            g.add_vertex(v(1));
            for i in 2..=n as u32 {
                let j = rng.random_range(1..i);
                g.add_edge(v(i), v(j));
            }
            for _ in 0..k {
                let a = rng.random_range(1..=n as u32);
                let b = rng.random_range(1..=n as u32);
                g.add_edge(v(a), v(b));
            }
            g
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn cycle_break_round_trip(g in connected_multigraph(), seed in any::<u64>()) {
            let k = g.surplus().unwrap();
            let mut rng = stream(seed, 1);
            for _ in 0..1000 {
                let (t, trace) = cycle_break(&g, k, &mut rng).unwrap();
                prop_assert_eq!(trace.len(), k);
                for &x in g.vertices() {
                    prop_assert_eq!(t.degree(x), Some(g.degree(x)));
                }
                for j in 1..=2 * k as u32 {
                    prop_assert_eq!(t.degree(st(j)), Some(1));
                }
                let back = Multigraph::from_tree(&t).glue_leaves(&star_pairs(k)).unwrap();
                prop_assert_eq!(&back, &g);
            }
        }

        #[test]
        fn glue_is_order_independent(g in connected_multigraph(), seed in any::<u64>()) {
            let k = g.surplus().unwrap();
            let (t, _) = cycle_break(&g, k, &mut stream(seed, 2)).unwrap();
            let base = Multigraph::from_tree(&t);
            let mut pairs = star_pairs(k);
            let forward = base.glue_leaves(&pairs).unwrap();
            pairs.reverse();
            let reversed: Vec<_> = pairs.iter().map(|&(a, b)| (b, a)).collect();
            prop_assert_eq!(base.glue_leaves(&reversed).unwrap(), forward);
        }

        #[test]
        fn cyc_matches_connectivity_definition(g in connected_multigraph()) {
            let cyc: BTreeMap<_, _> = g.cyc_edges().unwrap().into_iter().collect();
            for ((a, b), _) in g.edges() {
                let mut h = g.clone();
                h.remove_edge(a, b);
                prop_assert_eq!(cyc.contains_key(&(a, b)), h.is_connected());
            }
        }
    }
}
