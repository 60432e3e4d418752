//! Community-scoring explainer (GECo) and the Bernoulli random baseline.
//!
//! The explainer classifies the whole graph, partitions it into communities,
//! classifies every community subgraph on its own, thresholds the resulting
//! predicted-class probabilities at their mean (or median), and returns the
//! union of the above-threshold communities as the explanation mask.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::community::{community_subgraphs, greedy_modularity_communities};
use crate::error::{Error, Result};
use crate::gnn::{forward, predict, GcnModel};
use crate::graph::{induced_subgraph, Graph, NodeMask};
use crate::synthgen::encode_degree_features;

/// How the selection threshold is derived from the community probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ThresholdMode {
    Mean,
    Median,
}

impl ThresholdMode {
    pub fn name(self) -> &'static str {
        match self {
            ThresholdMode::Mean => "mean",
            ThresholdMode::Median => "median",
        }
    }
}

impl std::str::FromStr for ThresholdMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(ThresholdMode::Mean),
            "median" => Ok(ThresholdMode::Median),
            other => Err(Error::UnknownThresholdMode(other.to_string())),
        }
    }
}

/// Features given to community subgraphs. Node features are data attached
/// to nodes, so the default keeps the original rows; recomputing degree
/// one-hots from subgraph structure is available for ablation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SubgraphFeatures {
    #[default]
    Original,
    RecomputeDegree,
}

/// Output of the explainer for one graph.
#[derive(Debug, Clone)]
pub struct Explanation {
    pub predicted_class: usize,
    /// Probability of the predicted class on each community subgraph,
    /// indexed by community id.
    pub community_probs: Vec<f64>,
    pub tau: f64,
    pub selected_communities: Vec<usize>,
    pub mask: NodeMask,
    /// Set when no community beat the threshold strictly and the argmax
    /// community was selected instead (single community, equal values, ...).
    pub fallback_used: bool,
}

fn threshold(values: &[f64], mode: ThresholdMode) -> f64 {
    match mode {
        ThresholdMode::Mean => values.iter().sum::<f64>() / values.len() as f64,
        ThresholdMode::Median => {
            let mut sorted = values.to_vec();
            sorted.sort_by(|a, b| a.partial_cmp(b).expect("probabilities are finite"));
            let n = sorted.len();
            if n % 2 == 1 {
                sorted[n / 2]
            } else {
                (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
            }
        }
    }
}

fn community_features(
    g: &Graph,
    sub: Graph,
    features: SubgraphFeatures,
) -> Result<Graph> {
    match features {
        SubgraphFeatures::Original => Ok(sub),
        SubgraphFeatures::RecomputeDegree => {
            let max_degree = g.feature_dim().saturating_sub(1).max(1);
            let encoded = encode_degree_features(&sub, max_degree);
            sub.with_features(encoded)
        }
    }
}

/// Explain `predict(model, g)` with the default original-feature subgraphs.
pub fn geco_explain(model: &GcnModel, g: &Graph, mode: ThresholdMode) -> Result<Explanation> {
    geco_explain_with(model, g, mode, SubgraphFeatures::Original)
}

/// Full pipeline: predict, detect communities, score each community
/// subgraph at the predicted class, threshold, select. The mask is never
/// empty: when strict selection comes up empty the argmax community is
/// taken and `fallback_used` is set.
pub fn geco_explain_with(
    model: &GcnModel,
    g: &Graph,
    mode: ThresholdMode,
    features: SubgraphFeatures,
) -> Result<Explanation> {
    if g.num_nodes() == 0 {
        return Err(Error::EmptyGraph);
    }
    let (predicted_class, _) = predict(model, g)?;
    let partition = greedy_modularity_communities(g);
    let subgraphs = community_subgraphs(g, &partition)?;
    let mut community_probs = Vec::with_capacity(subgraphs.len());
    let mut masks = Vec::with_capacity(subgraphs.len());
    for (sub, mask) in subgraphs {
        let sub = community_features(g, sub, features)?;
        let (probs, _) = forward(model, &sub)?;
        community_probs.push(probs.get(predicted_class));
        masks.push(mask);
    }
    let tau = threshold(&community_probs, mode);
    let mut selected_communities: Vec<usize> = community_probs
        .iter()
        .enumerate()
        .filter_map(|(c, &p)| (p > tau).then_some(c))
        .collect();
    let mut fallback_used = false;
    if selected_communities.is_empty() {
        let argmax = community_probs
            .iter()
            .enumerate()
            .fold(0, |best, (c, &p)| {
                if p > community_probs[best] {
                    c
                } else {
                    best
                }
            });
        selected_communities.push(argmax);
        fallback_used = true;
    }
    let mut mask = NodeMask::new(g.num_nodes());
    for &c in &selected_communities {
        mask = mask.union(&masks[c])?;
    }
    Ok(Explanation {
        predicted_class,
        community_probs,
        tau,
        selected_communities,
        mask,
        fallback_used,
    })
}

/// Probability of `target` when the model sees only the masked subgraph
/// (original feature rows).
pub fn community_probability(
    model: &GcnModel,
    g: &Graph,
    community_mask: &NodeMask,
    target: usize,
) -> Result<f64> {
    let sub = induced_subgraph(g, community_mask)?;
    let (probs, _) = forward(model, &sub.graph)?;
    Ok(probs.get(target))
}

/// Seeded RNG for baseline masks, one independent stream per graph index.
pub fn baseline_rng(seed: u64, graph_index: usize) -> impl Rng {
    crate::seed::rng(
        seed,
        crate::seed::Role::RandomMask,
        &[graph_index as u64],
    )
}

/// Baseline mask: every node selected independently with probability 0.5.
pub fn random_explain(g: &Graph, rng: &mut impl Rng) -> NodeMask {
    let mut mask = NodeMask::new(g.num_nodes());
    for v in 0..g.num_nodes() {
        mask.set(v, rng.gen_bool(0.5));
    }
    mask
}

/// Graphviz DOT rendering of a graph with the masked nodes filled red.
pub fn dot_export(g: &Graph, mask: &NodeMask) -> Result<String> {
    if mask.len() != g.num_nodes() {
        return Err(Error::MaskLength {
            mask_len: mask.len(),
            num_nodes: g.num_nodes(),
        });
    }
    let mut out = String::from("graph explanation {\n");
    out.push_str("  node [style=filled, fillcolor=white];\n");
    for v in 0..g.num_nodes() {
        if mask.is_selected(v) {
            out.push_str(&format!("  {v} [fillcolor=red];\n"));
        } else {
            out.push_str(&format!("  {v};\n"));
        }
    }
    for &(u, v) in g.edges() {
        out.push_str(&format!("  {u} -- {v};\n"));
    }
    out.push_str("}\n");
    Ok(out)
}
