//! Exact and Monte-Carlo machinery for the Ising spin glass on sparse
//! Erdős–Rényi graphs: exact Gibbs enumeration, heat-bath Glauber dynamics,
//! vertex weights and block partitions, self-avoiding-walk trees, spectral
//! certificates and threshold harnesses.

pub mod block_partition;
pub mod cli;
pub mod error;
pub mod gibbs_exact;
pub mod glauber;
pub mod linalg;
pub mod random_graph;
pub mod rng;
pub mod spectral;
pub mod thresholds;
pub mod verification;
pub mod walk_trees;
pub mod weights;

pub use error::{Error, Result};
