//! Posterior sampling of Bayesian-network structures.
//!
//! The crate is organised bottom-up: node sets and DAGs, BDeu local scores,
//! ε-pruned score tables, a sum-tree, the single-arc Markov chains (a
//! rejection-free engine and a classical Metropolis-Hastings baseline), the
//! parent-set REV and MBR moves, an exact enumerator for small networks and
//! the experiment harness.

pub mod chain;
pub mod error;
pub mod graph;
pub mod harness;
pub mod io;
pub mod logspace;
pub mod nodeset;
pub mod oracle;
pub mod pruning;
pub mod rng;
pub mod scoring;
pub mod sumtree;

pub use chain::{ChainConfig, ChainState, Engine, MoveMix};
pub use error::{Error, Result};
pub use graph::{AncestorMatrix, Dag, Move, MoveKind};
pub use nodeset::NodeSet;
pub use oracle::{exact_posterior, ExactPosterior};
pub use pruning::{PruneMode, PrunedScoreTable, ScoreTables};
pub use scoring::{Dataset, LocalScores, ScoreConfig};
pub use sumtree::SumTree;
