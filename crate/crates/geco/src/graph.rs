//! Graph, node-mask, and dataset types shared by the whole pipeline.
//!
//! Graphs are undirected, unweighted, and immutable after construction.
//! Each node carries a dense feature row; a graph may carry a class label.
//! Node masks are the unit of explanation: a boolean vector over the nodes
//! of one graph.

use std::fs;
use std::path::Path;

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type NodeId = usize;

/// Undirected unweighted graph with per-node features and an optional label.
///
/// Invariants enforced at construction: no self-loops, no duplicate edges,
/// endpoints in range, one feature row per node. Edges are normalized to
/// `(u, v)` with `u < v` and kept sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    num_nodes: usize,
    edges: Vec<(NodeId, NodeId)>,
    adjacency: Vec<Vec<NodeId>>,
    features: Array2<f64>,
    label: Option<usize>,
}

impl Graph {
    pub fn new(
        num_nodes: usize,
        edges: Vec<(NodeId, NodeId)>,
        features: Array2<f64>,
        label: Option<usize>,
    ) -> Result<Self> {
        if features.nrows() != num_nodes {
            return Err(Error::FeatureRows {
                rows: features.nrows(),
                num_nodes,
            });
        }
        let mut normalized = Vec::with_capacity(edges.len());
        for (a, b) in edges {
            if a == b {
                return Err(Error::SelfLoop(a));
            }
            let endpoint = a.max(b);
            if endpoint >= num_nodes {
                return Err(Error::EdgeOutOfRange {
                    endpoint,
                    num_nodes,
                });
            }
            normalized.push((a.min(b), a.max(b)));
        }
        normalized.sort_unstable();
        if let Some(w) = normalized.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateEdge(w[0].0, w[0].1));
        }
        let mut adjacency = vec![Vec::new(); num_nodes];
        for &(u, v) in &normalized {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for nbrs in &mut adjacency {
            nbrs.sort_unstable();
        }
        Ok(Self {
            num_nodes,
            edges: normalized,
            adjacency,
            features,
            label,
        })
    }

    /// Graph with the given structure and zero-width feature rows.
    pub fn from_edges(num_nodes: usize, edges: Vec<(NodeId, NodeId)>) -> Result<Self> {
        Self::new(num_nodes, edges, Array2::zeros((num_nodes, 0)), None)
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Sorted `(u, v)` pairs with `u < v`.
    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.adjacency[v]
    }

    /// Number of incident edges.
    pub fn degree(&self, v: NodeId) -> usize {
        self.adjacency[v].len()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn feature_row(&self, v: NodeId) -> ArrayView1<'_, f64> {
        self.features.row(v)
    }

    pub fn label(&self) -> Option<usize> {
        self.label
    }

    /// Same structure with the feature matrix replaced.
    pub fn with_features(&self, features: Array2<f64>) -> Result<Self> {
        Self::new(self.num_nodes, self.edges.clone(), features, self.label)
    }

    pub fn with_label(&self, label: usize) -> Self {
        let mut g = self.clone();
        g.label = Some(label);
        g
    }
}

/// Boolean selection over the nodes of one graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeMask {
    bits: Vec<bool>,
}

impl NodeMask {
    /// All-false mask of the given length.
    pub fn new(len: usize) -> Self {
        Self {
            bits: vec![false; len],
        }
    }

    pub fn all(len: usize) -> Self {
        Self {
            bits: vec![true; len],
        }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn from_indices(len: usize, indices: &[usize]) -> Result<Self> {
        let mut mask = Self::new(len);
        for &i in indices {
            if i >= len {
                return Err(Error::NodeOutOfRange {
                    node: i,
                    num_nodes: len,
                });
            }
            mask.bits[i] = true;
        }
        Ok(mask)
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn is_selected(&self, v: usize) -> bool {
        self.bits[v]
    }

    pub fn set(&mut self, v: usize, on: bool) {
        self.bits[v] = on;
    }

    /// Number of selected nodes.
    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Selected node indices in ascending order.
    pub fn indices(&self) -> Vec<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }

    pub fn complement(&self) -> Self {
        Self {
            bits: self.bits.iter().map(|&b| !b).collect(),
        }
    }

    pub fn union(&self, other: &Self) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::MaskLengthPair(self.len(), other.len()));
        }
        Ok(Self {
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(&a, &b)| a | b)
                .collect(),
        })
    }

    pub fn intersection_count(&self, other: &Self) -> Result<usize> {
        if self.len() != other.len() {
            return Err(Error::MaskLengthPair(self.len(), other.len()));
        }
        Ok(self
            .bits
            .iter()
            .zip(&other.bits)
            .filter(|&(&a, &b)| a && b)
            .count())
    }
}

/// Result of a node-selection operation: the densely reindexed graph plus
/// the old-index -> new-index mapping (`None` for dropped nodes), so masks
/// can be translated between the two index spaces.
#[derive(Debug, Clone)]
pub struct Subgraph {
    pub graph: Graph,
    pub node_map: Vec<Option<usize>>,
}

impl Subgraph {
    /// Original index of each subgraph node, ascending in the new index.
    pub fn original_indices(&self) -> Vec<usize> {
        let mut out = vec![0; self.graph.num_nodes()];
        for (old, new) in self.node_map.iter().enumerate() {
            if let Some(new) = new {
                out[*new] = old;
            }
        }
        out
    }
}

/// Subgraph induced by the selected nodes: keeps exactly the selected nodes
/// (reindexed densely, preserving the original order), all edges with both
/// endpoints selected, and the selected nodes' original feature rows.
/// An empty selection yields the empty graph.
pub fn induced_subgraph(g: &Graph, nodes: &NodeMask) -> Result<Subgraph> {
    if nodes.len() != g.num_nodes() {
        return Err(Error::MaskLength {
            mask_len: nodes.len(),
            num_nodes: g.num_nodes(),
        });
    }
    let mut node_map = vec![None; g.num_nodes()];
    let mut kept = Vec::new();
    for (v, slot) in node_map.iter_mut().enumerate() {
        if nodes.is_selected(v) {
            *slot = Some(kept.len());
            kept.push(v);
        }
    }
    let edges = g
        .edges()
        .iter()
        .filter_map(|&(u, v)| Some((node_map[u]?, node_map[v]?)))
        .collect();
    let mut features = Array2::zeros((kept.len(), g.feature_dim()));
    for (new, &old) in kept.iter().enumerate() {
        features.row_mut(new).assign(&g.feature_row(old));
    }
    let graph = Graph::new(kept.len(), edges, features, g.label())?;
    Ok(Subgraph { graph, node_map })
}

/// Complement of [`induced_subgraph`]: the graph with the selected nodes
/// removed. Removing every node yields the empty graph.
pub fn remove_nodes(g: &Graph, nodes: &NodeMask) -> Result<Subgraph> {
    if nodes.len() != g.num_nodes() {
        return Err(Error::MaskLength {
            mask_len: nodes.len(),
            num_nodes: g.num_nodes(),
        });
    }
    induced_subgraph(g, &nodes.complement())
}

/// A labeled graph collection with per-graph ground-truth explanation masks.
///
/// `ground_truth[i]` may be empty: no explanation exists for that graph.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub graphs: Vec<Graph>,
    pub ground_truth: Vec<Vec<NodeMask>>,
    pub num_classes: usize,
    pub feature_dim: usize,
}

impl Dataset {
    pub fn new(
        graphs: Vec<Graph>,
        ground_truth: Vec<Vec<NodeMask>>,
        num_classes: usize,
    ) -> Result<Self> {
        if ground_truth.len() != graphs.len() {
            return Err(Error::GroundTruthCount {
                got: ground_truth.len(),
                expected: graphs.len(),
            });
        }
        let feature_dim = graphs.first().map_or(0, Graph::feature_dim);
        for (i, g) in graphs.iter().enumerate() {
            match g.label() {
                None => return Err(Error::MissingLabel(i)),
                Some(label) if label >= num_classes => {
                    return Err(Error::LabelOutOfRange {
                        index: i,
                        label,
                        num_classes,
                    })
                }
                Some(_) => {}
            }
            if g.feature_dim() != feature_dim {
                return Err(Error::FeatureDimMismatch {
                    index: i,
                    got: g.feature_dim(),
                    expected: feature_dim,
                });
            }
            for mask in &ground_truth[i] {
                if mask.len() != g.num_nodes() {
                    return Err(Error::MaskLength {
                        mask_len: mask.len(),
                        num_nodes: g.num_nodes(),
                    });
                }
            }
        }
        Ok(Self {
            graphs,
            ground_truth,
            num_classes,
            feature_dim,
        })
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn to_json_string(&self) -> Result<String> {
        let file = DatasetFile {
            num_classes: self.num_classes,
            feature_dim: self.feature_dim,
            graphs: self
                .graphs
                .iter()
                .zip(&self.ground_truth)
                .map(|(g, gts)| GraphRecord {
                    num_nodes: g.num_nodes(),
                    edges: g.edges().to_vec(),
                    features: g
                        .features()
                        .rows()
                        .into_iter()
                        .map(|r| r.to_vec())
                        .collect(),
                    label: g.label().expect("dataset graphs are labeled"),
                    ground_truth: gts.iter().map(NodeMask::indices).collect(),
                })
                .collect(),
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: DatasetFile = serde_json::from_str(text)?;
        let mut graphs = Vec::with_capacity(file.graphs.len());
        let mut ground_truth = Vec::with_capacity(file.graphs.len());
        for record in file.graphs {
            let rows = record.features.len();
            let flat: Vec<f64> = record.features.into_iter().flatten().collect();
            if rows != record.num_nodes || flat.len() != rows * file.feature_dim {
                return Err(Error::FeatureRows {
                    rows,
                    num_nodes: record.num_nodes,
                });
            }
            let features = Array2::from_shape_vec((rows, file.feature_dim), flat)
                .expect("row-major feature buffer matches shape");
            let graph = Graph::new(
                record.num_nodes,
                record.edges,
                features,
                Some(record.label),
            )?;
            let masks = record
                .ground_truth
                .iter()
                .map(|ids| NodeMask::from_indices(record.num_nodes, ids))
                .collect::<Result<Vec<_>>>()?;
            graphs.push(graph);
            ground_truth.push(masks);
        }
        Self::new(graphs, ground_truth, file.num_classes)
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json_string()?)?;
        Ok(())
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&fs::read_to_string(path)?)
    }
}

/// On-disk dataset document. Edges appear once per undirected pair with
/// `u < v`; ground truth is a list of masks, each a list of node indices.
#[derive(Serialize, Deserialize)]
struct DatasetFile {
    num_classes: usize,
    feature_dim: usize,
    graphs: Vec<GraphRecord>,
}

#[derive(Serialize, Deserialize)]
struct GraphRecord {
    num_nodes: usize,
    edges: Vec<(usize, usize)>,
    features: Vec<Vec<f64>>,
    label: usize,
    ground_truth: Vec<Vec<usize>>,
}
