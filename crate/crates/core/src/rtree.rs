//! Rebuilding a finite R-tree from a leaf distance matrix, and the core
//! measure as a function of the matrix alone.

use std::io::{Read, Write};

use thiserror::Error;

use crate::continuum::MetricTree;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RtreeError {
    #[error("matrix is empty")]
    Empty,
    #[error("row {row} has {len} entries, expected {n}")]
    NotSquare { row: usize, len: usize, n: usize },
    #[error("entry ({0}, {1}) is not finite and non-negative")]
    BadEntry(usize, usize),
    #[error("matrix is not symmetric at ({0}, {1})")]
    NotSymmetric(usize, usize),
    #[error("diagonal entry {0} is not zero")]
    NonZeroDiagonal(usize),
    #[error("points {0} and {1} are at distance zero")]
    ZeroDistance(usize, usize),
    #[error("index {index} out of range for {n} points")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("indices must be distinct, got {0:?}")]
    RepeatedIndex([usize; 3]),
    #[error("four-point condition fails on {quad:?} (gap {gap})")]
    FourPointViolation { quad: [usize; 4], gap: f64 },
    #[error("leaf {leaf} would hang at negative height {height}")]
    NegativeLength { leaf: usize, height: f64 },
    #[error("matrix size {0} is odd; pairs are needed")]
    OddSize(usize),
    #[error("csv: {0}")]
    Csv(String),
}

/// Absolute tolerance used for attachment snapping.
pub const SNAP_TOL: f64 = 1e-9;

fn scale_tol(m: &[Vec<f64>]) -> f64 {
    let max = m
        .iter()
        .flatten()
        .fold(0.0f64, |acc, &x| acc.max(x.abs()));
    1e-9 * max.max(1.0)
}

fn check_shape(m: &[Vec<f64>]) -> Result<usize, RtreeError> {
    let n = m.len();
    if n == 0 {
        return Err(RtreeError::Empty);
    }
    for (row, r) in m.iter().enumerate() {
        if r.len() != n {
            return Err(RtreeError::NotSquare { row, len: r.len(), n });
        }
    }
    Ok(n)
}

fn validate(m: &[Vec<f64>]) -> Result<usize, RtreeError> {
    let n = check_shape(m)?;
    let tol = scale_tol(m);
    for i in 0..n {
        for j in 0..n {
            if !m[i][j].is_finite() || m[i][j] < 0.0 {
                return Err(RtreeError::BadEntry(i, j));
            }
            if (m[i][j] - m[j][i]).abs() > tol {
                return Err(RtreeError::NotSymmetric(i, j));
            }
        }
        if m[i][i] != 0.0 {
            return Err(RtreeError::NonZeroDiagonal(i));
        }
    }
    Ok(n)
}

/// `(M_ab + M_ac - M_bc) / 2`, the distance from point `a` to the median of
/// `a, b, c`.
pub fn gromov_height(m: &[Vec<f64>], a: usize, b: usize, c: usize) -> Result<f64, RtreeError> {
    let n = check_shape(m)?;
    if let Some(&index) = [a, b, c].iter().find(|&&i| i >= n) {
        return Err(RtreeError::IndexOutOfRange { index, n });
    }
    if a == b || b == c || a == c {
        return Err(RtreeError::RepeatedIndex([a, b, c]));
    }
    Ok((m[a][b] + m[a][c] - m[b][c]) / 2.0)
}

/// Outcome of the four-point check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourPoint {
    pub holds: bool,
    /// The first failing quadruple and its gap between the two largest
    /// pairings.
    pub witness: Option<([usize; 4], f64)>,
}

/// Checks that for all quadruples the two largest of
/// `M_ab + M_cd`, `M_ac + M_bd`, `M_ad + M_bc` coincide, within
/// `1e-9 * max(1, max |M|)`.
pub fn check_four_point(m: &[Vec<f64>]) -> Result<FourPoint, RtreeError> {
    let n = check_shape(m)?;
    let tol = scale_tol(m);
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                for d in c + 1..n {
                    let mut s = [
                        m[a][b] + m[c][d],
                        m[a][c] + m[b][d],
                        m[a][d] + m[b][c],
                    ];
                    s.sort_by(f64::total_cmp);
                    let gap = s[2] - s[1];
                    if gap > tol {
                        return Ok(FourPoint {
                            holds: false,
                            witness: Some(([a, b, c, d], gap)),
                        });
                    }
                }
            }
        }
    }
    Ok(FourPoint {
        holds: true,
        witness: None,
    })
}

fn require_four_point(m: &[Vec<f64>]) -> Result<(), RtreeError> {
    match check_four_point(m)?.witness {
        Some((quad, gap)) => Err(RtreeError::FourPointViolation { quad, gap }),
        None => Ok(()),
    }
}

/// Node at distance `t` from `from` on the geodesic towards `to`,
/// splitting a segment if needed.
fn point_on_path(tree: &mut MetricTree, from: usize, to: usize, t: f64) -> usize {
    // segments listed from `from` towards `to`
    let path = tree.path(to, from);
    let mut node = from;
    let mut acc = 0.0;
    for (u, v, len) in path {
        let next = if u == node { v } else { u };
        if (t - acc).abs() <= SNAP_TOL {
            return node;
        }
        if t < acc + len - SNAP_TOL {
            return tree.split(node, next, t - acc);
        }
        acc += len;
        node = next;
    }
    node
}

/// Incremental reconstruction: leaf `m` is grafted at height
/// `h = min_{b<c} (M_mb + M_mc - M_bc) / 2` on the geodesic between the
/// lexicographically first minimising pair `(b, c)`, at distance
/// `(M_bm + M_bc - M_mc) / 2` from `b`. Mark `i` of the result is leaf `i`.
pub fn reconstruct(m: &[Vec<f64>]) -> Result<MetricTree, RtreeError> {
    let n = validate(m)?;
    for i in 0..n {
        for j in i + 1..n {
            if m[i][j] == 0.0 {
                return Err(RtreeError::ZeroDistance(i, j));
            }
        }
    }
    require_four_point(m)?;
    if n == 1 {
        let mut t = MetricTree::single();
        t.add_mark(0);
        return Ok(t);
    }
    let tol = scale_tol(m);
    let mut tree = MetricTree::from_segments(2, &[(0, 1, m[0][1])], &[0, 1])
        .expect("positive length");
    for leaf in 2..n {
        let mut best = (f64::INFINITY, 0, 0);
        for b in 0..leaf {
            for c in b + 1..leaf {
                let sum = m[leaf][b] + m[leaf][c] - m[b][c];
                if sum < best.0 {
                    best = (sum, b, c);
                }
            }
        }
        let (sum, b, c) = best;
        let height = sum / 2.0;
        if height < -tol {
            return Err(RtreeError::NegativeLength { leaf, height });
        }
        let t = ((m[b][leaf] + m[b][c] - m[leaf][c]) / 2.0).clamp(0.0, m[b][c]);
        let (nb, nc) = (tree.marks()[b], tree.marks()[c]);
        let w = point_on_path(&mut tree, nb, nc, t);
        if height <= SNAP_TOL {
            tree.add_mark(w);
        } else {
            let node = tree.add_node();
            tree.add_segment(w, node, height);
            tree.add_mark(node);
        }
    }
    Ok(tree)
}

/// Length of the union of the geodesics between points `(2b, 2b+1)`, from
/// the `2c x 2c` distance matrix alone.
pub fn core_measure_from_matrix(m: &[Vec<f64>]) -> Result<f64, RtreeError> {
    let n = validate(m)?;
    if n % 2 == 1 {
        return Err(RtreeError::OddSize(n));
    }
    require_four_point(m)?;
    let mut total = 0.0;
    for c in 0..n / 2 {
        let (a, p) = (2 * c, 2 * c + 1);
        let len = m[a][p];
        // overlap of [a, p] with the earlier geodesics, as intervals of
        // distance from a
        let proj = |u: usize| ((m[a][u] + len - m[u][p]) / 2.0).clamp(0.0, len);
        let mut intervals: Vec<(f64, f64)> = (0..c)
            .map(|b| {
                let (s, t) = (proj(2 * b), proj(2 * b + 1));
                (s.min(t), s.max(t))
            })
            .filter(|(s, t)| t > s)
            .collect();
        intervals.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut covered = 0.0;
        let mut reach = f64::NEG_INFINITY;
        for (s, t) in intervals {
            let start = s.max(reach);
            if t > start {
                covered += t - start;
            }
            reach = reach.max(t);
        }
        total += len - covered;
    }
    Ok(total)
}

/// Reads a dense matrix with a header row of point names.
pub fn read_matrix_csv<R: Read>(reader: R) -> Result<(Vec<String>, Vec<Vec<f64>>), RtreeError> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(reader);
    let names: Vec<String> = rdr
        .headers()
        .map_err(|e| RtreeError::Csv(e.to_string()))?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| RtreeError::Csv(e.to_string()))?;
        let row = rec
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| RtreeError::Csv(e.to_string()))?;
        rows.push(row);
    }
    Ok((names, rows))
}

pub fn write_matrix_csv<W: Write>(
    writer: W,
    names: &[String],
    m: &[Vec<f64>],
) -> Result<(), RtreeError> {
    let err = |e: csv::Error| RtreeError::Csv(e.to_string());
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(names).map_err(err)?;
    for row in m {
        w.write_record(row.iter().map(|x| format!("{x:?}"))).map_err(err)?;
    }
    w.flush().map_err(|e| RtreeError::Csv(e.to_string()))?;
    Ok(())
}
