//! Explain graph-classification decisions of a small GCN by scoring graph
//! communities, plus everything needed to exercise the pipeline end to end:
//! motif-planted synthetic datasets, from-scratch GCN training with Adam,
//! Clauset-Newman-Moore community detection, and fidelity/accuracy metrics
//! against ground-truth node masks.
//!
//! The crate is organized along the pipeline stages:
//!
//! - [`graph`]: graph, node-mask, and dataset types with JSON persistence
//! - [`synthgen`]: ER/BA base graphs with one planted motif per graph
//! - [`gnn`]: three-layer GCN classifier (forward, backprop, Adam)
//! - [`community`]: greedy modularity maximization and a brute-force oracle
//! - [`explain`]: the community-scoring explainer (GECo) and a random baseline
//! - [`metrics`]: fidelity, characterization, Jaccard, and explanation accuracy
//! - [`harness`]: repeated random splits, CSV results, and markdown reports

pub mod community;
pub mod error;
pub mod explain;
pub mod gnn;
pub mod graph;
pub mod harness;
pub mod metrics;
pub mod synthgen;

pub(crate) mod seed;

pub use error::{Error, Result};
