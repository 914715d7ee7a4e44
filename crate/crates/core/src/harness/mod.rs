//! Data generation, metrics, and the sampling pipeline.

pub mod metrics;
pub mod network;
pub mod run;

pub use metrics::{compute_mad, frequencies};
pub use network::{forward_sample, NetworkSpec, Variable};
pub use run::{drive, run, run_chain, run_chains, ChainSummary, ChainTrace, RunConfig, RunOutput, RunSummary, ScoreSource, TraceRecord};
