//! Sampling laboratory for uniform connected multigraphs with a fixed degree
//! sequence and fixed surplus, their tree encodings, and the continuum
//! objects (inhomogeneous continuum random trees and graphs) they approach.
//!
//! Every sampler in the crate comes with a small-instance exact oracle so
//! that its law can be checked directly:
//!
//! * [`discrete_trees`]: stick-breaking sampler for trees with a fixed degree
//!   sequence, P-tree prefixes, and a Prüfer enumeration oracle.
//! * [`multigraph`]: multigraph algebra, leaf gluing, cycle-breaking and the
//!   exact tree bias.
//! * [`graph_samplers`]: (D,k)-graphs, (P,k)-graph prefixes, configuration
//!   model, multiplicative (multi)graphs and edgepoint transforms.
//! * [`continuum`]: stick-breaking R-trees, ICRT point processes, metric
//!   gluing, core measures and importance-weighted ICRG samples.
//! * [`rtree`]: R-tree reconstruction from a leaf distance matrix.
//! * [`experiments`] and [`cli`]: distance-matrix experiments and the
//!   `mglab` command line.

#![forbid(unsafe_code)]

pub mod cli;
pub mod continuum;
pub mod discrete_trees;
pub mod experiments;
pub mod graph_samplers;
pub mod multigraph;
pub mod params;
pub mod rng;
pub mod rtree;
pub mod stats;
mod union_find;

pub use discrete_trees::{LabeledTree, VertexId};
pub use multigraph::Multigraph;
pub use params::{DegreeSequence, PVector, SequenceKind, ThetaVector};
