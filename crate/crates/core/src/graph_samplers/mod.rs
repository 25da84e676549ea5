//! Samplers for (D,k)-graphs, (P,k)-graph prefixes, the configuration
//! model, multiplicative (multi)graphs and edgepoint transforms, each with a
//! small-instance oracle.

use num_bigint::BigUint;
use thiserror::Error;

use crate::discrete_trees::{TreeError, VertexId};
use crate::multigraph::GraphError;
use crate::params::{ParamError, SequenceKind};

mod cm;
mod dk;
mod edgepoints;
mod multiplicative;
mod pk;

pub use cm::{
    cm_conditioned_oracle, cm_matching_law, half_edge_labels, sample_configuration_model,
    CM_ORACLE_CAP,
};
pub use dk::{sample_dk_graph, DkSampler};
pub use edgepoints::{
    insert_edgepoints, sample_delta_tree, sample_ordered_partition, shortcut_edgepoints,
};
pub use multiplicative::{
    sample_coupled_multiplicative, sample_multiplicative_graph,
    sample_multiplicative_multigraph, MultiplicativeParams,
};
pub use pk::{pk_law_oracle, sample_pk_graph_prefix, PkSampler};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplerError {
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("{stars} star leaves cannot provide {k} glued pairs")]
    InsufficientLeaves { stars: usize, k: usize },
    #[error("sequence has surplus {actual}, sampler asked for {expected}")]
    SurplusMismatch { expected: usize, actual: usize },
    #[error("sampler does not accept a {0} sequence")]
    WrongKind(SequenceKind),
    #[error("{count} configurations exceed the oracle cap {cap}")]
    TooLarge { count: BigUint, cap: u64 },
    #[error("the probability vector has no atoms, so no repeat can occur")]
    NoAtoms,
    #[error("oracle needs a finite probability vector (p_inf = 0)")]
    NotFinite,
    #[error("vertex {0} is already present")]
    VertexCollision(VertexId),
    #[error("partition has {got} slots but the tree has {expected} edges")]
    PartitionSize { expected: usize, got: usize },
    #[error("invalid multiplicative parameters: {0}")]
    InvalidWeights(String),
}
