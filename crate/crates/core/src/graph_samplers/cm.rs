use std::collections::HashMap;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::Rng;

use super::SamplerError;
use crate::discrete_trees::VertexId;
use crate::multigraph::Multigraph;
use crate::params::{DegreeSequence, SequenceKind};

/// Largest half-edge count the matching oracles will enumerate.
pub const CM_ORACLE_CAP: usize = 14;

fn require_half_edge(d: &DegreeSequence) -> Result<(), SamplerError> {
    match d.kind() {
        SequenceKind::HalfEdge => Ok(()),
        other => Err(SamplerError::WrongKind(other)),
    }
}

/// The multigraph of a uniform perfect matching of half-edges, on
/// `V_1, ..., V_s`.
pub fn sample_configuration_model<R: Rng + ?Sized>(
    d: &DegreeSequence,
    rng: &mut R,
) -> Result<Multigraph, SamplerError> {
    require_half_edge(d)?;
    let mut half: Vec<u32> = d
        .degrees()
        .iter()
        .enumerate()
        .flat_map(|(i, &di)| std::iter::repeat_n(i as u32 + 1, di))
        .collect();
    half.shuffle(rng);
    let mut g = Multigraph::new();
    for i in 1..=d.s() as u32 {
        g.add_vertex(VertexId::Internal(i));
    }
    for pair in half.chunks(2) {
        g.add_edge(VertexId::Internal(pair[0]), VertexId::Internal(pair[1]));
    }
    Ok(g)
}

fn double_factorial(n: usize) -> BigUint {
    (1..=n).rev().step_by(2).fold(BigUint::one(), |acc, i| acc * BigUint::from(i))
}

/// Exact law of the configuration-model multigraph, by enumerating every
/// perfect matching of the half-edges.
pub fn cm_matching_law(d: &DegreeSequence) -> Result<Vec<(Multigraph, BigRational)>, SamplerError> {
    require_half_edge(d)?;
    let total = d.sum();
    if total > CM_ORACLE_CAP {
        return Err(SamplerError::TooLarge {
            count: double_factorial(total.saturating_sub(1)),
            cap: CM_ORACLE_CAP as u64,
        });
    }
    let s = d.s();
    let owner: Vec<usize> = d
        .degrees()
        .iter()
        .enumerate()
        .flat_map(|(i, &di)| std::iter::repeat_n(i, di))
        .collect();
    let mut counts: HashMap<Vec<u8>, u64> = HashMap::new();
    let mut matrix = vec![0u8; s * s];
    let mut used = vec![false; total];
    enumerate_matchings(&owner, &mut used, &mut matrix, s, &mut counts);
    let n_matchings: u64 = counts.values().sum();
    let mut out: Vec<(Multigraph, BigRational)> = counts
        .into_iter()
        .map(|(m, c)| {
            let mut g = Multigraph::new();
            for i in 0..s {
                g.add_vertex(VertexId::Internal(i as u32 + 1));
                for j in i..s {
                    let mult = m[i * s + j] as usize;
                    g.add_edges(
                        VertexId::Internal(i as u32 + 1),
                        VertexId::Internal(j as u32 + 1),
                        mult,
                    );
                }
            }
            (g, BigRational::new(c.into(), n_matchings.into()))
        })
        .collect();
    sort_law(&mut out);
    Ok(out)
}

fn enumerate_matchings(
    owner: &[usize],
    used: &mut [bool],
    matrix: &mut [u8],
    s: usize,
    counts: &mut HashMap<Vec<u8>, u64>,
) {
    let Some(first) = used.iter().position(|&u| !u) else {
        *counts.entry(matrix.to_vec()).or_default() += 1;
        return;
    };
    used[first] = true;
    for other in first + 1..owner.len() {
        if used[other] {
            continue;
        }
        used[other] = true;
        let (a, b) = (owner[first].min(owner[other]), owner[first].max(owner[other]));
        matrix[a * s + b] += 1;
        enumerate_matchings(owner, used, matrix, s, counts);
        matrix[a * s + b] -= 1;
        used[other] = false;
    }
    used[first] = false;
}

/// Vertex labels used when a half-edge sequence is read as a shifted
/// surplus-`k` sequence: `V_i` for `d_i >= 2`, and the degree-one vertices
/// in order become `★_0, ★_{2k+1}, ★_{2k+2}, ...`.
pub fn half_edge_labels(d: &DegreeSequence, k: usize) -> Vec<VertexId> {
    let mut next_star = 0u32;
    d.degrees()
        .iter()
        .enumerate()
        .map(|(i, &di)| {
            if di == 1 {
                let j = next_star;
                next_star = if j == 0 { 2 * k as u32 + 1 } else { j + 1 };
                VertexId::Star(j)
            } else {
                VertexId::Internal(i as u32 + 1)
            }
        })
        .collect()
}

/// Exact law of the configuration model biased by the symmetry factor and
/// conditioned on being connected with surplus `k`, relabelled by
/// [`half_edge_labels`].
pub fn cm_conditioned_oracle(
    d: &DegreeSequence,
    k: usize,
) -> Result<Vec<(Multigraph, BigRational)>, SamplerError> {
    let labels = half_edge_labels(d, k);
    let mut weighted = Vec::new();
    let mut total = BigRational::zero();
    for (g, p) in cm_matching_law(d)? {
        if g.surplus().ok() != Some(k) {
            continue;
        }
        let w = p * BigRational::from(BigInt::from(g.circ()));
        total += w.clone();
        let mut h = Multigraph::new();
        for &v in g.vertices() {
            h.add_vertex(relabel(&labels, v));
        }
        for ((a, b), m) in g.edges() {
            h.add_edges(relabel(&labels, a), relabel(&labels, b), m);
        }
        weighted.push((h, w));
    }
    if total.is_zero() {
        return Ok(Vec::new());
    }
    let mut out: Vec<_> = weighted.into_iter().map(|(g, w)| (g, w / total.clone())).collect();
    sort_law(&mut out);
    Ok(out)
}

fn relabel(labels: &[VertexId], v: VertexId) -> VertexId {
    match v {
        VertexId::Internal(i) => labels[i as usize - 1],
        other => other,
    }
}

fn sort_law(law: &mut [(Multigraph, BigRational)]) {
    law.sort_by_cached_key(|(g, _)| g.to_json());
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn v(i: u32) -> VertexId {
        VertexId::Internal(i)
    }

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn prob(law: &[(Multigraph, BigRational)], g: &Multigraph) -> BigRational {
        law.iter()
            .find(|(h, _)| h == g)
            .map(|(_, p)| p.clone())
            .unwrap_or_else(BigRational::zero)
    }

    #[test]
    fn matching_law_examples() {
        let d = DegreeSequence::half_edge(&[2, 2]).unwrap();
        let law = cm_matching_law(&d).unwrap();
        let double = Multigraph::from_edges(&[(v(1), v(2)), (v(1), v(2))]);
        let loops = Multigraph::from_edges(&[(v(1), v(1)), (v(2), v(2))]);
        assert_eq!(law.len(), 2);
        assert_eq!(prob(&law, &double), r(2, 3));
        assert_eq!(prob(&law, &loops), r(1, 3));
        let cond = cm_conditioned_oracle(&d, 1).unwrap();
        assert_eq!(cond, vec![(double, r(1, 1))]);

        let d = DegreeSequence::half_edge(&[1, 1]).unwrap();
        let cond = cm_conditioned_oracle(&d, 0).unwrap();
        let edge = Multigraph::from_edges(&[(VertexId::Star(0), VertexId::Star(1))]);
        assert_eq!(cond, vec![(edge, r(1, 1))]);

        let d = DegreeSequence::half_edge(&[3, 3]).unwrap();
        let cond = cm_conditioned_oracle(&d, 2).unwrap();
        let total: BigRational = cond.iter().map(|(_, p)| p.clone()).sum();
        assert_eq!(total, r(1, 1));
        // triple edge and loop+edge+loop are equally likely after the bias
        assert_eq!(cond.len(), 2);
        assert_eq!(cond[0].1, r(1, 2));

        let big = DegreeSequence::half_edge(&[4, 4, 4, 4]).unwrap();
        assert!(matches!(cm_matching_law(&big), Err(SamplerError::TooLarge { .. })));
    }

    #[test]
    fn labels_for_degree_one_vertices() {
        let d = DegreeSequence::half_edge(&[3, 1, 1, 1]).unwrap();
        assert_eq!(
            half_edge_labels(&d, 1),
            vec![v(1), VertexId::Star(0), VertexId::Star(3), VertexId::Star(4)]
        );
    }

    #[test]
    fn sampler_frequencies() {
        let mut rng = stream(21, 0);
        let d = DegreeSequence::half_edge(&[2, 2]).unwrap();
        let double = Multigraph::from_edges(&[(v(1), v(2)), (v(1), v(2))]);
        let n = 100_000;
        let hits = (0..n)
            .filter(|_| sample_configuration_model(&d, &mut rng).unwrap() == double)
            .count() as f64;
        let sd = (n as f64 * 2.0 / 9.0).sqrt();
        assert!((hits - n as f64 * 2.0 / 3.0).abs() < 3.0 * sd);

        let d = DegreeSequence::half_edge(&[1, 1]).unwrap();
        assert_eq!(
            sample_configuration_model(&d, &mut rng).unwrap(),
            Multigraph::from_edges(&[(v(1), v(2))])
        );
        let d = DegreeSequence::half_edge(&[2]).unwrap();
        assert_eq!(
            sample_configuration_model(&d, &mut rng).unwrap(),
            Multigraph::from_edges(&[(v(1), v(1))])
        );
    }
}
