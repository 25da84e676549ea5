use super::ContinuumError;
use crate::union_find::UnionFind;
#[cfg(test)]
use rand::Rng;

/// A finite metric tree: nodes joined by segments of positive length, with
/// an ordered list of marked nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricTree {
    adj: Vec<Vec<(usize, f64)>>,
    marks: Vec<usize>,
}

impl Default for MetricTree {
    fn default() -> Self {
        Self::single()
    }
}

impl MetricTree {
    /// One node, no segments, no marks.
    pub fn single() -> Self {
        Self {
            adj: vec![Vec::new()],
            marks: Vec::new(),
        }
    }

    pub fn from_segments(
        n_nodes: usize,
        segments: &[(usize, usize, f64)],
        marks: &[usize],
    ) -> Result<Self, ContinuumError> {
        if n_nodes == 0 || segments.len() + 1 != n_nodes {
            return Err(ContinuumError::NotATree(n_nodes));
        }
        let mut uf = UnionFind::new(n_nodes);
        let mut adj = vec![Vec::new(); n_nodes];
        for &(a, b, len) in segments {
            if a >= n_nodes || b >= n_nodes {
                return Err(ContinuumError::UnknownNode(a.max(b)));
            }
            if !(len > 0.0 && len.is_finite()) {
                return Err(ContinuumError::BadLength(a, b, len));
            }
            if !uf.union(a, b) {
                return Err(ContinuumError::NotATree(n_nodes));
            }
            adj[a].push((b, len));
            adj[b].push((a, len));
        }
        if let Some(&m) = marks.iter().find(|&&m| m >= n_nodes) {
            return Err(ContinuumError::UnknownNode(m));
        }
        Ok(Self {
            adj,
            marks: marks.to_vec(),
        })
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adj[node].len()
    }

    pub fn neighbors(&self, node: usize) -> &[(usize, f64)] {
        &self.adj[node]
    }

    pub fn marks(&self) -> &[usize] {
        &self.marks
    }

    pub fn mark_node(&self, mark: usize) -> Result<usize, ContinuumError> {
        self.marks
            .get(mark)
            .copied()
            .ok_or(ContinuumError::UnknownMark(mark))
    }

    pub fn add_mark(&mut self, node: usize) -> usize {
        self.marks.push(node);
        self.marks.len() - 1
    }

    /// Segments as `(a, b, length)` with `a < b`.
    pub fn segments(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.adj.iter().enumerate().flat_map(|(a, nb)| {
            nb.iter()
                .filter(move |(b, _)| a < *b)
                .map(move |&(b, len)| (a, b, len))
        })
    }

    pub fn total_length(&self) -> f64 {
        self.segments().map(|(_, _, l)| l).sum()
    }

    pub(crate) fn add_node(&mut self) -> usize {
        self.adj.push(Vec::new());
        self.adj.len() - 1
    }

    pub(crate) fn add_segment(&mut self, a: usize, b: usize, len: f64) {
        self.adj[a].push((b, len));
        self.adj[b].push((a, len));
    }

    /// Inserts a node on segment `a-b` at distance `t` from `a`.
    pub(crate) fn split(&mut self, a: usize, b: usize, t: f64) -> usize {
        let len = self.adj[a]
            .iter()
            .find(|(v, _)| *v == b)
            .expect("segment exists")
            .1;
        let w = self.add_node();
        for (x, y, l) in [(a, b, t), (b, a, len - t)] {
            let slot = self.adj[x].iter_mut().find(|(v, _)| *v == y).unwrap();
            *slot = (w, l);
            self.adj[w].push((x, l));
        }
        w
    }

    /// Distances from `source` to every node, with the DFS parent of each.
    pub fn distances_from(&self, source: usize) -> (Vec<f64>, Vec<usize>) {
        let n = self.adj.len();
        let mut dist = vec![f64::NAN; n];
        let mut parent = vec![usize::MAX; n];
        dist[source] = 0.0;
        let mut stack = vec![source];
        while let Some(u) = stack.pop() {
            for &(v, len) in &self.adj[u] {
                if v != parent[u] {
                    dist[v] = dist[u] + len;
                    parent[v] = u;
                    stack.push(v);
                }
            }
        }
        (dist, parent)
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        self.distances_from(a).0[b]
    }

    /// Segments on the geodesic between two nodes.
    pub fn path(&self, a: usize, b: usize) -> Vec<(usize, usize, f64)> {
        let (dist, parent) = self.distances_from(a);
        let mut out = Vec::new();
        let mut v = b;
        while v != a {
            let p = parent[v];
            out.push((p.min(v), p.max(v), dist[v] - dist[p]));
            v = p;
        }
        out
    }

    pub fn node_distance_matrix(&self, nodes: &[usize]) -> Vec<Vec<f64>> {
        nodes
            .iter()
            .map(|&a| {
                let d = self.distances_from(a).0;
                nodes.iter().map(|&b| d[b]).collect()
            })
            .collect()
    }

    pub fn mark_distance_matrix(&self) -> Vec<Vec<f64>> {
        self.node_distance_matrix(&self.marks)
    }

    /// The same tree with every length multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            adj: self
                .adj
                .iter()
                .map(|nb| nb.iter().map(|&(v, l)| (v, l * factor)).collect())
                .collect(),
            marks: self.marks.clone(),
        }
    }
}

/// Stick-breaking R-tree from cuts `y_1 < ... < y_n` and anchors
/// `z_1, ..., z_{n-1}` with `0 <= z_i <= y_i`: the branch `(y_i, y_{i+1}]`
/// is attached at position `z_i` of the tree spanned by `[0, y_i]`. Node 0
/// is position 0 and mark `i` is the node at position `y_{i+1}`. A trailing
/// `z_n` is accepted and ignored.
pub fn sb_build(y: &[f64], z: &[f64]) -> Result<MetricTree, ContinuumError> {
    let n = y.len();
    if n == 0 {
        return Err(ContinuumError::NoCuts);
    }
    if z.len() + 1 != n && z.len() != n {
        return Err(ContinuumError::AnchorCount {
            cuts: n,
            needed: n - 1,
            got: z.len(),
        });
    }
    let mut prev = 0.0;
    for (index, &yi) in y.iter().enumerate() {
        if !(yi > prev && yi.is_finite()) {
            return Err(ContinuumError::CutsNotIncreasing { index });
        }
        prev = yi;
    }
    for (index, &zi) in z.iter().take(n - 1).enumerate() {
        if !(zi >= 0.0 && zi <= y[index]) {
            return Err(ContinuumError::AnchorOutOfRange {
                index,
                z: zi,
                y: y[index],
            });
        }
    }

    let mut tree = MetricTree::single();
    // pieces[p]: nodes of the branch ending at y[p], sorted by position
    let mut pieces: Vec<Vec<(f64, usize)>> = Vec::with_capacity(n);
    let first = tree.add_node();
    tree.add_segment(0, first, y[0]);
    tree.add_mark(first);
    pieces.push(vec![(0.0, 0), (y[0], first)]);
    for i in 1..n {
        let anchor = z[i - 1];
        let p = y[..i].partition_point(|&v| v < anchor);
        let piece = &mut pieces[p];
        let at = piece.partition_point(|&(pos, _)| pos < anchor);
        let node = if piece[at].0 == anchor {
            piece[at].1
        } else {
            let (pa, a) = piece[at - 1];
            let b = piece[at].1;
            let w = tree.split(a, b, anchor - pa);
            piece.insert(at, (anchor, w));
            w
        };
        let end = tree.add_node();
        tree.add_segment(node, end, y[i] - y[i - 1]);
        tree.add_mark(end);
        pieces.push(vec![(y[i - 1], node), (y[i], end)]);
    }
    Ok(tree)
}

/// Random cuts and anchors, some anchors landing exactly on earlier cuts.
#[cfg(test)]
pub(crate) fn random_cuts<R: Rng>(n: usize, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
    let mut y = Vec::with_capacity(n);
    let mut t = 0.0;
    for _ in 0..n {
        t += rng.random_range(0.1..1.0);
        y.push(t);
    }
    let z = (0..n - 1)
        .map(|i| {
            if rng.random_bool(0.2) && i > 0 {
                // reuse an earlier anchor or a cut to create hubs
                y[rng.random_range(0..i)]
            } else {
                rng.random_range(0.0..y[i])
            }
        })
        .collect();
    (y, z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use rand::Rng;

    /// Distance between positions by the three-case recursion.
    fn recursive_distance(y: &[f64], z: &[f64], a: f64, b: f64) -> f64 {
        let piece = |x: f64| y.partition_point(|&v| v < x);
        let (pa, pb) = (piece(a), piece(b));
        if pa == pb {
            (a - b).abs()
        } else if pa < pb {
            recursive_distance(y, z, a, z[pb - 1]) + (b - y[pb - 1])
        } else {
            recursive_distance(y, z, b, a)
        }
    }

    #[test]
    fn small_examples() {
        let t = sb_build(&[1.0], &[]).unwrap();
        assert_eq!(t.node_count(), 2);
        assert_eq!(t.mark_distance_matrix(), vec![vec![0.0]]);
        assert_eq!(t.distance(0, t.marks()[0]), 1.0);

        let t = sb_build(&[1.0, 2.0], &[0.5]).unwrap();
        assert_eq!(t.mark_distance_matrix()[0][1], 1.5);
        assert_eq!(t.total_length(), 2.0);
    }

    #[test]
    fn argument_errors() {
        assert_eq!(sb_build(&[], &[]).unwrap_err(), ContinuumError::NoCuts);
        assert_eq!(
            sb_build(&[1.0, 1.0], &[0.0]).unwrap_err(),
            ContinuumError::CutsNotIncreasing { index: 1 }
        );
        assert!(matches!(
            sb_build(&[1.0, 2.0], &[1.5]),
            Err(ContinuumError::AnchorOutOfRange { index: 0, .. })
        ));
        assert!(matches!(
            sb_build(&[1.0, 2.0, 3.0], &[]),
            Err(ContinuumError::AnchorCount { .. })
        ));
    }

    #[test]
    fn distances_follow_the_recursion() {
        let mut rng = stream(21, 0);
        for _ in 0..200 {
            let n = rng.random_range(1..15);
            let (y, z) = random_cuts(n, &mut rng);
            let t = sb_build(&y, &z).unwrap();
            assert_eq!(t.segments().count() + 1, t.node_count());
            assert!((t.total_length() - y[n - 1]).abs() < 1e-9);
            let m = t.mark_distance_matrix();
            for i in 0..n {
                assert!((t.distance(0, t.marks()[i]) - recursive_distance(&y, &z, 0.0, y[i])).abs() < 1e-9);
                for j in 0..n {
                    let r = recursive_distance(&y, &z, y[i], y[j]);
                    assert!((m[i][j] - r).abs() < 1e-9, "{} vs {r}", m[i][j]);
                }
            }
        }
    }

    #[test]
    fn four_point_condition_on_marks() {
        let mut rng = stream(22, 0);
        for _ in 0..50 {
            let (y, z) = random_cuts(8, &mut rng);
            let m = sb_build(&y, &z).unwrap().mark_distance_matrix();
            for a in 0..8 {
                for b in a + 1..8 {
                    for c in b + 1..8 {
                        for d in c + 1..8 {
                            let mut s = [m[a][b] + m[c][d], m[a][c] + m[b][d], m[a][d] + m[b][c]];
                            s.sort_by(f64::total_cmp);
                            assert!((s[2] - s[1]).abs() < 1e-9);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn from_segments_validates() {
        assert!(MetricTree::from_segments(2, &[(0, 1, 1.0)], &[1]).is_ok());
        assert!(matches!(
            MetricTree::from_segments(2, &[(0, 1, 0.0)], &[]),
            Err(ContinuumError::BadLength(..))
        ));
        assert!(matches!(
            MetricTree::from_segments(3, &[(0, 1, 1.0), (1, 0, 1.0)], &[]),
            Err(ContinuumError::NotATree(3))
        ));
        let t = MetricTree::from_segments(3, &[(0, 1, 1.0), (1, 2, 2.0)], &[0, 2]).unwrap();
        assert_eq!(t.path(0, 2).len(), 2);
        assert_eq!(t.scaled(0.5).mark_distance_matrix()[0][1], 1.5);
    }
}
