//! Finite truncations of stick-breaking R-trees, the Θ-ICRT, metric gluing
//! and the weighted (Θ,k)-ICRG.

use thiserror::Error;

mod glue;
mod icrg;
mod icrt;
mod tree;

pub use glue::{core_measure, metric_glue, sampled_distance_matrix, GluedSpace};
pub use icrg::{sample_icrg_capped, sample_icrg_weighted, CapDiagnostic, WeightedSample};
pub use icrt::{sample_icrt, Horizon, IcrtProcess, IcrtRealization, Source};
pub use tree::{sb_build, MetricTree};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ContinuumError {
    #[error("cut {index} is not strictly above the previous cut (or not positive)")]
    CutsNotIncreasing { index: usize },
    #[error("anchor z[{index}] = {z} is outside [0, {y}]")]
    AnchorOutOfRange { index: usize, z: f64, y: f64 },
    #[error("{cuts} cuts need {needed} anchors, got {got}")]
    AnchorCount { cuts: usize, needed: usize, got: usize },
    #[error("no cuts given")]
    NoCuts,
    #[error("segment {0}-{1} has non-positive or non-finite length {2}")]
    BadLength(usize, usize, f64),
    #[error("segments do not form a tree on {0} nodes")]
    NotATree(usize),
    #[error("node {0} does not exist")]
    UnknownNode(usize),
    #[error("mark {0} does not exist")]
    UnknownMark(usize),
    #[error("{needed} marks needed, tree has {have}")]
    InsufficientMarks { needed: usize, have: usize },
    #[error("core measure of the first {0} pairs vanished")]
    DegenerateCore(usize),
    #[error("rejection cap must be positive and finite, got {0}")]
    BadCap(f64),
}
