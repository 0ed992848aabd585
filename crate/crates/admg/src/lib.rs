//! Exact nested Markov models on acyclic directed mixed graphs.
//!
//! Graphs are [`MixedGraph`] values over a named vertex universe, vertex sets are
//! [`NodeSet`] bitmasks over that universe, and distributions are [`Kernel`]
//! tables of exact rationals.

pub mod causal;
pub mod error;
pub mod fixing;
pub mod functional;
pub mod graph;
pub mod io;
pub mod kernel;
pub mod nested;
pub mod oracle;
pub mod projection;
pub mod separation;
pub mod set;

pub use error::{Error, Result};
pub use fixing::{FixingSequence, IntrinsicSet, ReachableSet};
pub use graph::{GraphBuilder, MixedGraph};
pub use kernel::{Kernel, StateSpace};
pub use set::NodeSet;

/// Caps for the exponential enumerations and dense tables.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    /// Largest random-vertex count for which reachable/intrinsic sets are enumerated.
    pub max_vertices: usize,
    /// Largest number of cells in any kernel table.
    pub max_cells: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_vertices: 12,
            max_cells: 1 << 20,
        }
    }
}
