use std::collections::HashSet;

use super::{ContinuumError, MetricTree};

/// A metric tree with pairs of marks identified.
#[derive(Debug, Clone, PartialEq)]
pub struct GluedSpace {
    base: MetricTree,
    pairs: Vec<(usize, usize)>,
}

/// Identifies each pair of marks (given as mark indices).
pub fn metric_glue(
    base: MetricTree,
    pairs: &[(usize, usize)],
) -> Result<GluedSpace, ContinuumError> {
    for &(a, b) in pairs {
        base.mark_node(a)?;
        base.mark_node(b)?;
    }
    Ok(GluedSpace {
        base,
        pairs: pairs.to_vec(),
    })
}

impl GluedSpace {
    pub fn base(&self) -> &MetricTree {
        &self.base
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// Quotient distances between the given nodes: shortest paths in the
    /// tree augmented with zero-length links between glued marks.
    pub fn node_distance_matrix(&self, nodes: &[usize]) -> Result<Vec<Vec<f64>>, ContinuumError> {
        if let Some(&v) = nodes.iter().find(|&&v| v >= self.base.node_count()) {
            return Err(ContinuumError::UnknownNode(v));
        }
        let marks = self.base.marks();
        let mut key: Vec<usize> = nodes.to_vec();
        let first_glue = key.len();
        for &(a, b) in &self.pairs {
            key.push(marks[a]);
            key.push(marks[b]);
        }
        let mut d = self.base.node_distance_matrix(&key);
        for p in 0..self.pairs.len() {
            let (i, j) = (first_glue + 2 * p, first_glue + 2 * p + 1);
            d[i][j] = 0.0;
            d[j][i] = 0.0;
        }
        let n = key.len();
        for m in first_glue..n {
            for i in 0..n {
                let dim = d[i][m];
                for j in 0..n {
                    let via = dim + d[m][j];
                    if via < d[i][j] {
                        d[i][j] = via;
                    }
                }
            }
        }
        Ok(d[..first_glue]
            .iter()
            .map(|row| row[..first_glue].to_vec())
            .collect())
    }

    /// Quotient distances between marks.
    pub fn mark_distance_matrix(&self, marks: &[usize]) -> Result<Vec<Vec<f64>>, ContinuumError> {
        let nodes = marks
            .iter()
            .map(|&m| self.base.mark_node(m))
            .collect::<Result<Vec<_>, _>>()?;
        self.node_distance_matrix(&nodes)
    }
}

/// Pseudo-distance matrix of the given marks in a glued space.
pub fn sampled_distance_matrix(
    space: &GluedSpace,
    marks: &[usize],
) -> Result<Vec<Vec<f64>>, ContinuumError> {
    space.mark_distance_matrix(marks)
}

/// Length of the union of the geodesics between marks `(2b, 2b+1)` for
/// `b < c`.
pub fn core_measure(t: &MetricTree, c: usize) -> Result<f64, ContinuumError> {
    if t.marks().len() < 2 * c {
        return Err(ContinuumError::InsufficientMarks {
            needed: 2 * c,
            have: t.marks().len(),
        });
    }
    let mut seen = HashSet::new();
    let mut total = 0.0;
    for b in 0..c {
        for (u, v, len) in t.path(t.marks()[2 * b], t.marks()[2 * b + 1]) {
            if seen.insert((u, v)) {
                total += len;
            }
        }
    }
    Ok(total)
}
