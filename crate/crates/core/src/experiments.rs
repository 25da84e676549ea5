//! Experiment harness: sampled distance matrices, discrepancy to a limit
//! object along a ladder of parameters, the bias-tail study, and result
//! persistence.

use std::collections::VecDeque;
use std::fmt::Write as _;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::continuum::{sample_icrg_weighted, sampled_distance_matrix, ContinuumError, Horizon};
use crate::discrete_trees::{DTreeSampler, DenseTree, PTreeGrower, VertexId};
use crate::graph_samplers::{DkSampler, PkSampler, SamplerError};
use crate::multigraph::{GraphError, Multigraph};
use crate::params::{DegreeSequence, PVector, ThetaVector};
use crate::rng::{block_stream, stream};
use crate::stats::{energy_distance_weighted, energy_permutation_test, ks_two_sample_weighted, mean_and_se, StatsError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Continuum(#[from] ContinuumError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("invalid measure: {0}")]
    Measure(String),
    #[error("experiment needs at least one point and one repetition")]
    Empty,
    #[error("lambda is zero for this sequence, so bias / lambda^k is undefined")]
    ZeroLambda,
}

/// A probability measure on finitely many vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexMeasure {
    support: Vec<VertexId>,
    weights: Vec<f64>,
}

impl VertexMeasure {
    pub fn new(support: Vec<VertexId>, weights: Vec<f64>) -> Result<Self, ExperimentError> {
        if support.len() != weights.len() || support.is_empty() {
            return Err(ExperimentError::Measure("support and weights differ in length".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(ExperimentError::Measure("negative or non-finite weight".into()));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(ExperimentError::Measure("zero total mass".into()));
        }
        Ok(Self {
            support,
            weights: weights.iter().map(|w| w / total).collect(),
        })
    }

    pub fn uniform(support: Vec<VertexId>) -> Result<Self, ExperimentError> {
        let n = support.len();
        Self::new(support, vec![1.0; n])
    }

    pub fn support(&self) -> &[VertexId] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `n` i.i.d. points.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<VertexId> {
        let dist = WeightedIndex::new(&self.weights).expect("validated weights");
        (0..n).map(|_| self.support[dist.sample(rng)]).collect()
    }
}

/// The random object of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    DTree(DegreeSequence),
    DkGraph { d: DegreeSequence, k: usize },
    PTree { p: PVector, n_steps: usize },
    PkGraph { p: PVector, k: usize, n_steps: usize },
    Icrt(ThetaVector),
    Icrg { theta: ThetaVector, k: usize },
}

impl Model {
    /// Distance rescaling: `lambda^D` for degree sequences, `sigma^P` for
    /// probability vectors, 1 for continuum objects.
    pub fn scaling(&self) -> f64 {
        match self {
            Model::DTree(d) | Model::DkGraph { d, .. } => d.stats().lambda,
            Model::PTree { p, .. } | Model::PkGraph { p, .. } => p.sigma(),
            Model::Icrt(_) | Model::Icrg { .. } => 1.0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Model::DTree(_) => "d-tree",
            Model::DkGraph { .. } => "dk-graph",
            Model::PTree { .. } => "p-tree",
            Model::PkGraph { .. } => "pk-graph",
            Model::Icrt(_) => "icrt",
            Model::Icrg { .. } => "icrg",
        }
    }

    /// Size parameter reported in tables (`s`, atoms, or 0).
    pub fn size(&self) -> usize {
        match self {
            Model::DTree(d) | Model::DkGraph { d, .. } => d.s(),
            Model::PTree { p, .. } | Model::PkGraph { p, .. } => p.p().len(),
            _ => 0,
        }
    }
}

/// A rescaled distance matrix with its importance weight.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatrixSample {
    pub matrix: Vec<Vec<f64>>,
    pub weight: f64,
}

impl MatrixSample {
    /// Entries above the diagonal, row by row.
    pub fn upper(&self) -> Vec<f64> {
        let n = self.matrix.len();
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| self.matrix[i][j])
            .collect()
    }
}

/// Adjacency of a stick-breaking tree with some stars removed and extra
/// edges added.
fn dense_adjacency(tree: &DenseTree, removed: &[u32], extra: &[(u32, u32)]) -> Vec<Vec<u32>> {
    let mut adj = vec![Vec::new(); tree.node_count()];
    for v in 1..tree.node_count() {
        let p = tree.parent[v];
        if removed.contains(&(v as u32)) || removed.contains(&p) {
            continue;
        }
        adj[v].push(p);
        adj[p as usize].push(v as u32);
    }
    for &(a, b) in extra {
        if a != b {
            adj[a as usize].push(b);
            adj[b as usize].push(a);
        }
    }
    adj
}

fn bfs(adj: &[Vec<u32>], source: u32) -> Vec<u32> {
    let mut dist = vec![u32::MAX; adj.len()];
    dist[source as usize] = 0;
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        for &w in &adj[u as usize] {
            if dist[w as usize] == u32::MAX {
                dist[w as usize] = dist[u as usize] + 1;
                queue.push_back(w);
            }
        }
    }
    dist
}

fn node_matrix(adj: &[Vec<u32>], nodes: &[u32], scale: f64) -> Vec<Vec<f64>> {
    let mut m = vec![vec![0.0; nodes.len()]; nodes.len()];
    for (i, &a) in nodes.iter().enumerate() {
        let d = bfs(adj, a);
        for (j, &b) in nodes.iter().enumerate() {
            m[i][j] = d[b as usize] as f64 * scale;
        }
    }
    m
}

fn graph_matrix(g: &Multigraph, points: &[VertexId], scale: f64) -> Result<Vec<Vec<f64>>, GraphError> {
    Ok(g.distance_matrix(points)?
        .into_iter()
        .map(|row| row.into_iter().map(|d| d as f64 * scale).collect())
        .collect())
}

/// `p`-weighted measure on the atoms present in a graph; uniform on the
/// vertices when no atom is present.
fn atom_measure(p: &PVector, vertices: &[VertexId]) -> Result<VertexMeasure, ExperimentError> {
    let atoms: Vec<VertexId> = vertices
        .iter()
        .copied()
        .filter(|v| matches!(v, VertexId::Internal(_)))
        .collect();
    if atoms.is_empty() {
        return VertexMeasure::uniform(vertices.to_vec());
    }
    let w = atoms
        .iter()
        .map(|v| match v {
            VertexId::Internal(i) => p.p()[*i as usize - 1],
            _ => 0.0,
        })
        .collect();
    VertexMeasure::new(atoms, w)
}

enum Worker {
    DTree(DTreeSampler),
    Dk(DkSampler),
    PTree(PTreeGrower),
    Pk(PkSampler),
    Continuum,
}

impl Worker {
    fn new(model: &Model) -> Result<Self, ExperimentError> {
        Ok(match model {
            Model::DTree(d) => Worker::DTree(DTreeSampler::new(d).map_err(SamplerError::from)?),
            Model::DkGraph { d, k } => Worker::Dk(DkSampler::new(d, *k)?),
            Model::PTree { p, .. } => Worker::PTree(PTreeGrower::new(p)),
            Model::PkGraph { p, k, .. } => Worker::Pk(PkSampler::new(p, *k)?),
            Model::Icrt(_) | Model::Icrg { .. } => Worker::Continuum,
        })
    }

    fn sample<R: Rng + ?Sized>(
        &mut self,
        model: &Model,
        n_points: usize,
        scale: f64,
        rng: &mut R,
    ) -> Result<MatrixSample, ExperimentError> {
        let matrix = match (self, model) {
            (Worker::DTree(sampler), _) => {
                let tree = sampler.sample(rng);
                let stars: Vec<u32> = tree.stars.clone();
                let picks: Vec<u32> = (0..n_points)
                    .map(|_| stars[rng.random_range(0..stars.len())])
                    .collect();
                let mut m = vec![vec![0.0; n_points]; n_points];
                for i in 0..n_points {
                    for j in i + 1..n_points {
                        let d = tree.node_distance(picks[i], picks[j]) as f64 * scale;
                        m[i][j] = d;
                        m[j][i] = d;
                    }
                }
                m
            }
            (Worker::Dk(sampler), Model::DkGraph { k, .. }) => {
                let k = *k;
                let tree = sampler.sample_tree(rng)?.clone();
                let (removed, fathers) = sampler.glued_nodes();
                let extra: Vec<(u32, u32)> = fathers.chunks(2).take(k).map(|c| (c[0], c[1])).collect();
                let adj = dense_adjacency(&tree, &removed, &extra);
                let free: Vec<u32> = tree
                    .stars
                    .iter()
                    .copied()
                    .filter(|n| !removed.contains(n))
                    .collect();
                // with every star glued, fall back to the vertices
                let support: Vec<u32> = if free.is_empty() {
                    (0..tree.node_count() as u32)
                        .filter(|n| !tree.ids[*n as usize].is_star())
                        .collect()
                } else {
                    free
                };
                let picks: Vec<u32> = (0..n_points)
                    .map(|_| support[rng.random_range(0..support.len())])
                    .collect();
                node_matrix(&adj, &picks, scale)
            }
            (Worker::PTree(grower), Model::PTree { p, n_steps }) => {
                grower.restart();
                for _ in 0..(*n_steps).max(1) {
                    grower.step(rng);
                }
                let t = grower.tree().to_labeled();
                let g = Multigraph::from_tree(&t);
                let verts: Vec<VertexId> = g.vertices().iter().copied().collect();
                let points = atom_measure(p, &verts)?.sample(n_points, rng);
                graph_matrix(&g, &points, scale)?
            }
            (Worker::Pk(sampler), Model::PkGraph { p, n_steps, .. }) => {
                let g = sampler.sample(*n_steps, rng)?;
                let verts: Vec<VertexId> = g.vertices().iter().copied().collect();
                let points = atom_measure(p, &verts)?.sample(n_points, rng);
                graph_matrix(&g, &points, scale)?
            }
            (Worker::Continuum, Model::Icrt(theta)) => {
                let s = sample_icrg_weighted(theta, 0, Horizon::Points(n_points), rng)?;
                let marks: Vec<usize> = (0..n_points).collect();
                sampled_distance_matrix(&s.space, &marks)?
            }
            (Worker::Continuum, Model::Icrg { theta, k }) => {
                let s = sample_icrg_weighted(theta, *k, Horizon::Points(2 * k + n_points), rng)?;
                let marks: Vec<usize> = (2 * k..2 * k + n_points).collect();
                let m = sampled_distance_matrix(&s.space, &marks)?;
                return Ok(MatrixSample {
                    matrix: m,
                    weight: s.weight,
                });
            }
            _ => unreachable!("worker built from the same model"),
        };
        Ok(MatrixSample { matrix, weight: 1.0 })
    }
}

/// `n_reps` rescaled distance matrices of `n_points` points. Repetition
/// `r` uses stream `block_stream(block, r)` of `seed`, so the output does
/// not depend on the thread count.
pub fn gp_matrix_sample(
    model: &Model,
    n_points: usize,
    n_reps: usize,
    seed: u64,
    block: u64,
) -> Result<Vec<MatrixSample>, ExperimentError> {
    gp_matrix_sample_scaled(model, model.scaling(), n_points, n_reps, seed, block)
}

/// As [`gp_matrix_sample`] with an explicit distance factor.
pub fn gp_matrix_sample_scaled(
    model: &Model,
    scale: f64,
    n_points: usize,
    n_reps: usize,
    seed: u64,
    block: u64,
) -> Result<Vec<MatrixSample>, ExperimentError> {
    if n_points == 0 {
        return Err(ExperimentError::Empty);
    }
    Worker::new(model)?;
    (0..n_reps)
        .into_par_iter()
        .map_init(
            || Worker::new(model).expect("checked above"),
            |worker, rep| {
                let mut rng = stream(seed, block_stream(block, rep as u64));
                worker.sample(model, n_points, scale, &mut rng)
            },
        )
        .collect()
}

/// `(2 x n, 0 x (n+2))` for `k = 0`, `(2 x n, 0 x n)` with surplus 1 for
/// `k = 1`, and generally `(2 x n, 0 x (n + 2 - 2k))` with surplus `k`.
pub fn binary_ladder(n: usize, k: usize) -> DegreeSequence {
    let mut raw = vec![2i64; n];
    raw.extend(std::iter::repeat_n(0, n + 2 - 2 * k));
    if k == 0 {
        DegreeSequence::tree(&raw).expect("binary tree sequence")
    } else {
        DegreeSequence::surplus(&raw, k).expect("binary surplus sequence")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergeConfig {
    pub family: Vec<Model>,
    pub target: Model,
    pub n_points: usize,
    pub n_reps: usize,
    pub target_reps: usize,
    pub seed: u64,
    /// Permutations for the test at the last family member.
    pub n_perm: usize,
    /// Samples per side used by the permutation test.
    pub perm_reps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergeRow {
    pub model: String,
    pub size: usize,
    pub scaling: f64,
    pub energy: f64,
    /// KS statistic per upper-triangle entry.
    pub ks: Vec<f64>,
    pub mean_entry: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergeReport {
    pub rows: Vec<ConvergeRow>,
    pub target_mean_entry: f64,
    pub target_ess: f64,
    pub strictly_decreasing: bool,
    pub perm_statistic: f64,
    pub perm_p_value: f64,
}

fn weighted_mean(points: &[Vec<f64>], w: &[f64]) -> f64 {
    let total: f64 = w.iter().sum();
    points
        .iter()
        .zip(w)
        .map(|(p, wi)| wi * p.iter().sum::<f64>() / p.len().max(1) as f64)
        .sum::<f64>()
        / total
}

/// Discrepancy between each family member's matrix law and the target's:
/// energy distance on upper triangles plus per-entry KS, with the target's
/// importance weights self-normalised. The permutation test compares the
/// last family member to the target.
pub fn converge_experiment(cfg: &ConvergeConfig) -> Result<ConvergeReport, ExperimentError> {
    if cfg.n_points < 2 || cfg.n_reps == 0 || cfg.target_reps == 0 {
        return Err(ExperimentError::Empty);
    }
    let target = gp_matrix_sample(&cfg.target, cfg.n_points, cfg.target_reps, cfg.seed, 0)?;
    let ty: Vec<Vec<f64>> = target.iter().map(MatrixSample::upper).collect();
    let tw: Vec<f64> = target.iter().map(|s| s.weight).collect();
    let ess = tw.iter().sum::<f64>().powi(2) / tw.iter().map(|w| w * w).sum::<f64>();
    let dims = ty[0].len();
    let mut rows = Vec::with_capacity(cfg.family.len());
    let mut last = None;
    for (i, model) in cfg.family.iter().enumerate() {
        let sample = gp_matrix_sample(model, cfg.n_points, cfg.n_reps, cfg.seed, i as u64 + 1)?;
        let x: Vec<Vec<f64>> = sample.iter().map(MatrixSample::upper).collect();
        let w: Vec<f64> = sample.iter().map(|s| s.weight).collect();
        let energy = energy_distance_weighted(&x, &w, &ty, &tw)?;
        let ks = (0..dims)
            .map(|e| {
                let xe: Vec<f64> = x.iter().map(|v| v[e]).collect();
                let ye: Vec<f64> = ty.iter().map(|v| v[e]).collect();
                ks_two_sample_weighted(&xe, &w, &ye, &tw)
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(ConvergeRow {
            model: model.name().to_string(),
            size: model.size(),
            scaling: model.scaling(),
            energy,
            ks,
            mean_entry: weighted_mean(&x, &w),
        });
        last = Some((x, w));
    }
    let strictly_decreasing = rows.windows(2).all(|r| r[1].energy < r[0].energy);
    let (perm_statistic, perm_p_value) = match last {
        Some((x, w)) if cfg.n_perm > 0 => {
            let m = cfg.perm_reps.min(x.len()).min(ty.len()).max(1);
            let mut rng = stream(cfg.seed, block_stream(u64::from(u32::MAX), 0));
            let r = energy_permutation_test(&x[..m], &w[..m], &ty[..m], &tw[..m], cfg.n_perm, &mut rng)?;
            (r.statistic, r.p_value)
        }
        _ => (f64::NAN, f64::NAN),
    };
    Ok(ConvergeReport {
        rows,
        target_mean_entry: weighted_mean(&ty, &tw),
        target_ess: ess,
        strictly_decreasing,
        perm_statistic,
        perm_p_value,
    })
}

/// `x 1{x >= m}`.
pub fn h(m: f64, x: f64) -> f64 {
    if x >= m {
        x
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BiasTailRow {
    pub m: f64,
    pub mean: f64,
    pub se: f64,
}

/// Monte Carlo estimates of `E[h_m(bias / lambda^k)]` over uniform D-trees
/// (no rejection), for each `m`.
pub fn bias_tail_experiment(
    d: &DegreeSequence,
    k: usize,
    m_grid: &[f64],
    n_reps: usize,
    seed: u64,
) -> Result<Vec<BiasTailRow>, ExperimentError> {
    if n_reps == 0 {
        return Err(ExperimentError::Empty);
    }
    let lambda_k = d.stats().lambda.powi(k as i32);
    if lambda_k <= 0.0 {
        return Err(ExperimentError::ZeroLambda);
    }
    DkSampler::new(d, k)?;
    let chunk = 1024;
    let values: Vec<f64> = (0..n_reps.div_ceil(chunk))
        .into_par_iter()
        .map(|c| -> Result<Vec<f64>, ExperimentError> {
            let mut sampler = DkSampler::new(d, k)?;
            let mut rng = stream(seed, block_stream(c as u64, 0));
            let reps = chunk.min(n_reps - c * chunk);
            (0..reps)
                .map(|_| Ok(sampler.propose(&mut rng)?.0 / lambda_k))
                .collect()
        })
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .flatten()
        .collect();
    Ok(m_grid
        .iter()
        .map(|&m| {
            let hv: Vec<f64> = values.iter().map(|&x| h(m, x)).collect();
            let (mean, se) = mean_and_se(&hv);
            BiasTailRow { m, mean, se }
        })
        .collect())
}

/// CSV table with `#`-prefixed metadata lines.
pub fn render_table(meta: &[(&str, String)], header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    for (k, v) in meta {
        let _ = writeln!(out, "# {k}: {v}");
    }
    let _ = writeln!(out, "{}", header.join(","));
    for r in rows {
        let _ = writeln!(out, "{}", r.join(","));
    }
    out
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamFileHash {
    pub path: String,
    pub sha256: String,
}

/// Everything needed to re-run an experiment; contains no timestamps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentManifest {
    pub experiment: String,
    /// Command-line arguments without the output directory.
    pub args: Vec<String>,
    pub params: Vec<ParamFileHash>,
    pub seed: u64,
    pub reps: usize,
    /// Stream blocks used, as `(block, description)`.
    pub streams: Vec<(u64, String)>,
    pub outputs: Vec<ParamFileHash>,
    pub tool_version: String,
}

impl ExperimentManifest {
    pub fn new(experiment: &str, seed: u64, reps: usize) -> Self {
        Self {
            experiment: experiment.to_string(),
            args: Vec::new(),
            params: Vec::new(),
            seed,
            reps,
            streams: Vec::new(),
            outputs: Vec::new(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serialises")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_matrices_are_zero() {
        let d = DegreeSequence::tree(&[1, 1, 0, 0]).unwrap();
        for s in gp_matrix_sample(&Model::DTree(d), 1, 5, 1, 0).unwrap() {
            assert_eq!(s.matrix, vec![vec![0.0]]);
        }
        let s = gp_matrix_sample(&Model::Icrt(ThetaVector::brownian()), 1, 3, 1, 0).unwrap();
        assert!(s.iter().all(|m| m.matrix == vec![vec![0.0]]));
    }

    #[test]
    fn small_tree_distances_and_frequencies() {
        // the two trees of (1,1,0,0) are paths S0-Vi-Vj-S1; two stars at distance 3
        // (sigma = 0 here, so distances are left unscaled)
        let d = DegreeSequence::tree(&[1, 1, 0, 0]).unwrap();
        assert_eq!(d.stats().lambda, 0.0);
        let n = 20_000;
        let samples = gp_matrix_sample_scaled(&Model::DTree(d), 1.0, 2, n, 2, 0).unwrap();
        let mut far = 0;
        for s in &samples {
            let x = s.matrix[0][1];
            assert!(x == 0.0 || (x - 3.0).abs() < 1e-12);
            if x > 0.0 {
                far += 1;
            }
        }
        // distinct stars with probability 1/2
        let p = far as f64 / n as f64;
        assert!((p - 0.5).abs() < 4.0 * (0.25 / n as f64).sqrt());
    }

    #[test]
    fn double_edge_distances() {
        let d = DegreeSequence::surplus(&[1, 1], 1).unwrap();
        let model = Model::DkGraph { d, k: 1 };
        for s in gp_matrix_sample_scaled(&model, 1.0, 3, 50, 3, 0).unwrap() {
            assert!(s.upper().iter().all(|&x| x <= 1.0));
        }
    }

    #[test]
    fn matrices_are_deterministic_and_rescaled() {
        let d = binary_ladder(16, 1);
        let model = Model::DkGraph { d: d.clone(), k: 1 };
        let a = gp_matrix_sample(&model, 3, 40, 9, 4).unwrap();
        let b = gp_matrix_sample(&model, 3, 40, 9, 4).unwrap();
        assert_eq!(a, b);
        let lambda = d.stats().lambda;
        for s in &a {
            for &x in &s.upper() {
                let raw = x / lambda;
                assert!((raw - raw.round()).abs() < 1e-9);
            }
        }
        let p = PVector::new(vec![0.5, 0.3], 0.2).unwrap();
        let m = gp_matrix_sample(&Model::PkGraph { p: p.clone(), k: 1, n_steps: 20 }, 3, 30, 9, 0).unwrap();
        assert_eq!(m.len(), 30);
        let t = gp_matrix_sample(&Model::PTree { p, n_steps: 20 }, 3, 30, 9, 0).unwrap();
        assert_eq!(t.len(), 30);
    }

    #[test]
    fn ladder_sequences_are_valid() {
        for n in [4, 32, 128] {
            assert_eq!(binary_ladder(n, 0).s(), 2 * n + 2);
            assert_eq!(binary_ladder(n, 1).s(), 2 * n);
        }
    }

    #[test]
    fn duplicated_target_is_indistinguishable() {
        let theta = ThetaVector::brownian();
        let cfg = ConvergeConfig {
            family: vec![Model::Icrt(theta.clone())],
            target: Model::Icrt(theta),
            n_points: 3,
            n_reps: 600,
            target_reps: 600,
            seed: 17,
            n_perm: 199,
            perm_reps: 600,
        };
        let r = converge_experiment(&cfg).unwrap();
        assert!(r.perm_p_value >= 0.05, "{r:?}");
    }

    #[test]
    fn bias_tail_trivial_cases() {
        let d = binary_ladder(8, 0);
        let rows = bias_tail_experiment(&d, 0, &[0.0, 2.0], 100, 1).unwrap();
        assert_eq!(rows[0].mean, 1.0);
        assert_eq!(rows[1].mean, 0.0);
        let d = binary_ladder(8, 1);
        let rows = bias_tail_experiment(&d, 1, &[0.0], 500, 1).unwrap();
        assert!(rows[0].mean > 0.0);
    }

    #[test]
    fn vertex_measure_validation() {
        assert!(VertexMeasure::new(vec![VertexId::Star(0)], vec![-1.0]).is_err());
        let m = VertexMeasure::new(vec![VertexId::Star(0), VertexId::Star(1)], vec![1.0, 3.0]).unwrap();
        assert_eq!(m.weights(), &[0.25, 0.75]);
    }

    #[test]
    fn manifest_has_no_timestamps() {
        let m = ExperimentManifest::new("x", 1, 2);
        assert_eq!(m.to_json(), ExperimentManifest::new("x", 1, 2).to_json());
        assert_eq!(sha256_hex(b"").len(), 64);
    }
}
