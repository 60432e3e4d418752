//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("self-loop on node {0} is not allowed")]
    SelfLoop(usize),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("edge endpoint {endpoint} out of range for graph with {num_nodes} nodes")]
    EdgeOutOfRange { endpoint: usize, num_nodes: usize },
    #[error("feature matrix has {rows} rows but the graph has {num_nodes} nodes")]
    FeatureRows { rows: usize, num_nodes: usize },
    #[error("node index {node} out of range for graph with {num_nodes} nodes")]
    NodeOutOfRange { node: usize, num_nodes: usize },
    #[error("mask length {mask_len} does not match graph with {num_nodes} nodes")]
    MaskLength { mask_len: usize, num_nodes: usize },
    #[error("mask lengths {0} and {1} differ")]
    MaskLengthPair(usize, usize),
    #[error("graph {index}: label {label} not below num_classes {num_classes}")]
    LabelOutOfRange {
        index: usize,
        label: usize,
        num_classes: usize,
    },
    #[error("graph {0} has no label")]
    MissingLabel(usize),
    #[error("graph {index}: feature dim {got} differs from dataset feature dim {expected}")]
    FeatureDimMismatch {
        index: usize,
        got: usize,
        expected: usize,
    },
    #[error("ground-truth list length {got} does not match {expected} graphs")]
    GroundTruthCount { got: usize, expected: usize },
    #[error("recipe lists motif {0:?} more than once")]
    DuplicateMotif(crate::synthgen::MotifKind),
    #[error("invalid recipe: {0}")]
    InvalidRecipe(String),
    #[error("graph feature dim {got} does not match model input dim {expected}")]
    InputDimMismatch { got: usize, expected: usize },
    #[error("invalid training config: {0}")]
    InvalidTrainConfig(String),
    #[error("loss became non-finite at epoch {epoch}, batch {batch} (loss {loss})")]
    NonFiniteLoss { epoch: usize, batch: usize, loss: f64 },
    #[error("parameters became non-finite at epoch {epoch}, batch {batch}")]
    NonFiniteParams { epoch: usize, batch: usize },
    #[error("partition covers {partition_len} nodes but graph has {num_nodes}")]
    PartitionLength {
        partition_len: usize,
        num_nodes: usize,
    },
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("graph with {0} nodes too large for exhaustive partition search (max 10)")]
    GraphTooLarge(usize),
    #[error("cannot explain an empty graph")]
    EmptyGraph,
    #[error("aligned collections have mismatched lengths: {0} vs {1}")]
    CollectionLength(usize, usize),
    #[error("metrics need at least one graph")]
    EmptyTestSet,
    #[error("invalid characterization weights: {0}")]
    InvalidWeights(String),
    #[error("invalid experiment config: {0}")]
    InvalidExperimentConfig(String),
    #[error("unknown method {0:?} (expected \"geco\" or \"random\")")]
    UnknownMethod(String),
    #[error("unknown threshold mode {0:?} (expected \"mean\" or \"median\")")]
    UnknownThresholdMode(String),
    #[error("unknown motif {0:?}")]
    UnknownMotif(String),
    #[error("unknown dataset recipe {0:?}")]
    UnknownRecipe(String),
    #[error("malformed results csv: {0}")]
    MalformedCsv(String),
    #[error("model file: {0}")]
    MalformedModel(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
