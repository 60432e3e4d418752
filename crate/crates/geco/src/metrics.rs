//! Explanation quality metrics: necessity (Fid+), sufficiency (Fid-),
//! their weighted harmonic combination, Jaccard overlap with ground truth,
//! and graph explanation accuracy (GEA).

use crate::error::{Error, Result};
use crate::gnn::{predict, GcnModel};
use crate::graph::{induced_subgraph, remove_nodes, Graph, NodeMask};

/// Denominator guard for degenerate Jaccard inputs; added unconditionally
/// so the computation stays branch-free (it shifts results by < 1e-9).
pub const JACCARD_EPS: f64 = 1e-9;

/// Weights for the harmonic combination; both in [0, 1], summing to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharactWeights {
    w_plus: f64,
    w_minus: f64,
}

impl CharactWeights {
    pub fn new(w_plus: f64, w_minus: f64) -> Result<Self> {
        let in_range = (0.0..=1.0).contains(&w_plus) && (0.0..=1.0).contains(&w_minus);
        if !in_range || (w_plus + w_minus - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidWeights(format!(
                "w_plus {w_plus}, w_minus {w_minus}"
            )));
        }
        Ok(Self { w_plus, w_minus })
    }

    pub fn equal() -> Self {
        Self {
            w_plus: 0.5,
            w_minus: 0.5,
        }
    }

    pub fn w_plus(&self) -> f64 {
        self.w_plus
    }

    pub fn w_minus(&self) -> f64 {
        self.w_minus
    }
}

impl Default for CharactWeights {
    fn default() -> Self {
        Self::equal()
    }
}

/// Aggregate metrics over one test split.
#[derive(Debug, Clone, PartialEq)]
pub struct FidelityReport {
    pub fid_plus: f64,
    pub fid_minus: f64,
    pub charact: f64,
    pub gea: f64,
    pub n: usize,
}

/// 1 when the two classes agree, else 0.
pub fn indicator(y: usize, yhat: usize) -> f64 {
    if y == yhat {
        1.0
    } else {
        0.0
    }
}

/// Summation with pairwise splitting, so parallel-friendly reductions and
/// the sequential loop agree well inside 1e-9.
pub(crate) fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => pairwise_sum(&values[..n / 2]) + pairwise_sum(&values[n / 2..]),
    }
}

/// Shared fidelity formula: mean |g(yhat_i, y_i) - g(yhat'_i, y_i)| where
/// yhat' is the prediction on the perturbed graph.
pub fn fidelity_from_predictions(
    pred_full: &[usize],
    pred_perturbed: &[usize],
    labels: &[usize],
) -> Result<f64> {
    if pred_full.len() != labels.len() {
        return Err(Error::CollectionLength(pred_full.len(), labels.len()));
    }
    if pred_perturbed.len() != labels.len() {
        return Err(Error::CollectionLength(pred_perturbed.len(), labels.len()));
    }
    if labels.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    let terms: Vec<f64> = pred_full
        .iter()
        .zip(pred_perturbed)
        .zip(labels)
        .map(|((&a, &b), &y)| (indicator(a, y) - indicator(b, y)).abs())
        .collect();
    Ok(pairwise_sum(&terms) / terms.len() as f64)
}

fn perturbed_predictions(
    model: &GcnModel,
    graphs: &[Graph],
    masks: &[NodeMask],
    keep_mask: bool,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut full = Vec::with_capacity(graphs.len());
    let mut perturbed = Vec::with_capacity(graphs.len());
    for (g, mask) in graphs.iter().zip(masks) {
        full.push(predict(model, g)?.0);
        let sub = if keep_mask {
            induced_subgraph(g, mask)?
        } else {
            remove_nodes(g, mask)?
        };
        perturbed.push(predict(model, &sub.graph)?.0);
    }
    Ok((full, perturbed))
}

/// Necessity: how often prediction correctness flips once the masked nodes
/// are removed. An emptied graph uses the model's empty-graph prediction.
pub fn fidelity_plus(
    model: &GcnModel,
    graphs: &[Graph],
    labels: &[usize],
    masks: &[NodeMask],
) -> Result<f64> {
    if graphs.len() != masks.len() {
        return Err(Error::CollectionLength(graphs.len(), masks.len()));
    }
    let (full, removed) = perturbed_predictions(model, graphs, masks, false)?;
    fidelity_from_predictions(&full, &removed, labels)
}

/// Sufficiency: how often prediction correctness flips when only the masked
/// nodes are kept. Low values mean the mask alone reproduces the decision.
pub fn fidelity_minus(
    model: &GcnModel,
    graphs: &[Graph],
    labels: &[usize],
    masks: &[NodeMask],
) -> Result<f64> {
    if graphs.len() != masks.len() {
        return Err(Error::CollectionLength(graphs.len(), masks.len()));
    }
    let (full, kept) = perturbed_predictions(model, graphs, masks, true)?;
    fidelity_from_predictions(&full, &kept, labels)
}

/// Weighted harmonic mean of Fid+ and 1 - Fid-; 0 at the degenerate points
/// Fid+ = 0 and Fid- = 1 (the harmonic-mean zero limit).
pub fn characterization(fid_plus: f64, fid_minus: f64, w: CharactWeights) -> f64 {
    if fid_plus == 0.0 || fid_minus == 1.0 {
        return 0.0;
    }
    (w.w_plus + w.w_minus) / (w.w_plus / fid_plus + w.w_minus / (1.0 - fid_minus))
}

/// Jaccard overlap TP / (TP + FP + FN + eps) between a ground-truth mask
/// and a predicted mask.
pub fn jaccard(mg: &NodeMask, mp: &NodeMask) -> Result<f64> {
    if mg.len() != mp.len() {
        return Err(Error::MaskLengthPair(mg.len(), mp.len()));
    }
    let tp = mg.intersection_count(mp)? as f64;
    let fp = (mp.count_ones() as f64) - tp;
    let fn_ = (mg.count_ones() as f64) - tp;
    Ok(tp / (tp + fp + fn_ + JACCARD_EPS))
}

/// Best Jaccard overlap between the prediction and any ground-truth mask.
/// An empty ground-truth set means "no explanation exists" and is treated
/// as the empty mask, so any nonempty prediction scores 0.
pub fn gea(ground_truths: &[NodeMask], mp: &NodeMask) -> Result<f64> {
    if ground_truths.is_empty() {
        return jaccard(&NodeMask::new(mp.len()), mp);
    }
    let mut best = 0.0f64;
    for mg in ground_truths {
        best = best.max(jaccard(mg, mp)?);
    }
    Ok(best)
}

/// All four metrics over one test split: fidelities from the model, the
/// characterization of the two, and the mean GEA over graphs.
pub fn evaluate(
    model: &GcnModel,
    graphs: &[Graph],
    explanations: &[NodeMask],
    ground_truths: &[Vec<NodeMask>],
    w: CharactWeights,
) -> Result<FidelityReport> {
    if graphs.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    if graphs.len() != explanations.len() {
        return Err(Error::CollectionLength(graphs.len(), explanations.len()));
    }
    if graphs.len() != ground_truths.len() {
        return Err(Error::CollectionLength(graphs.len(), ground_truths.len()));
    }
    let labels: Vec<usize> = graphs
        .iter()
        .enumerate()
        .map(|(i, g)| g.label().ok_or(Error::MissingLabel(i)))
        .collect::<Result<_>>()?;
    let fid_plus = fidelity_plus(model, graphs, &labels, explanations)?;
    let fid_minus = fidelity_minus(model, graphs, &labels, explanations)?;
    let gea_terms: Vec<f64> = ground_truths
        .iter()
        .zip(explanations)
        .map(|(gts, mp)| gea(gts, mp))
        .collect::<Result<_>>()?;
    Ok(FidelityReport {
        fid_plus,
        fid_minus,
        charact: characterization(fid_plus, fid_minus, w),
        gea: pairwise_sum(&gea_terms) / gea_terms.len() as f64,
        n: graphs.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gnn::GcnModel;
    use approx::assert_abs_diff_eq;
    use ndarray::Array2;

    fn mask(len: usize, on: &[usize]) -> NodeMask {
        NodeMask::from_indices(len, on).unwrap()
    }

    #[test]
    fn indicator_cases() {
        assert_eq!(indicator(1, 1), 1.0);
        assert_eq!(indicator(0, 1), 0.0);
        assert_eq!(indicator(2, 5), indicator(5, 2));
    }

    #[test]
    fn fidelity_arithmetic() {
        // One flip on a correct prediction out of one graph.
        let f = fidelity_from_predictions(&[0], &[1], &[0]).unwrap();
        assert_abs_diff_eq!(f, 1.0);
        // One flip, one hold, both correct originally.
        let f = fidelity_from_predictions(&[0, 1], &[1, 1], &[0, 1]).unwrap();
        assert_abs_diff_eq!(f, 0.5);
        // Perturbation changes nothing.
        let f = fidelity_from_predictions(&[0, 1], &[0, 1], &[0, 0]).unwrap();
        assert_abs_diff_eq!(f, 0.0);
    }

    #[test]
    fn fidelity_checks_lengths() {
        assert!(matches!(
            fidelity_from_predictions(&[0], &[0, 1], &[0]),
            Err(Error::CollectionLength(2, 1))
        ));
        assert!(matches!(
            fidelity_from_predictions(&[], &[], &[]),
            Err(Error::EmptyTestSet)
        ));
    }

    #[test]
    fn model_fidelities_on_trivial_masks() {
        let model = GcnModel::init(2, 4, 2, 41);
        let graphs: Vec<Graph> = (0..3)
            .map(|i| {
                let features = Array2::from_shape_fn((4, 2), |(v, j)| ((v + j + i) % 2) as f64);
                Graph::new(4, vec![(0, 1), (1, 2), (2, 3)], features, Some(i % 2)).unwrap()
            })
            .collect();
        let labels: Vec<usize> = graphs.iter().map(|g| g.label().unwrap()).collect();

        // Empty masks: removal changes nothing.
        let empties: Vec<NodeMask> = graphs.iter().map(|g| NodeMask::new(g.num_nodes())).collect();
        let fp = fidelity_plus(&model, &graphs, &labels, &empties).unwrap();
        assert_abs_diff_eq!(fp, 0.0);

        // Full masks: the kept subgraph is the original.
        let fulls: Vec<NodeMask> = graphs.iter().map(|g| NodeMask::all(g.num_nodes())).collect();
        let fm = fidelity_minus(&model, &graphs, &labels, &fulls).unwrap();
        assert_abs_diff_eq!(fm, 0.0);
    }

    #[test]
    fn characterization_examples() {
        let w = CharactWeights::equal();
        assert_abs_diff_eq!(characterization(1.0, 0.0, w), 1.0);
        assert_abs_diff_eq!(characterization(0.5, 0.5, w), 0.5);
        assert_eq!(characterization(0.0, 0.3, w), 0.0);
        assert_eq!(characterization(0.4, 1.0, w), 0.0);
    }

    #[test]
    fn characterization_weight_symmetry() {
        // Swapping (fid+, w+) with (1 - fid-, w-) leaves the value fixed.
        let w = CharactWeights::new(0.3, 0.7).unwrap();
        let swapped = CharactWeights::new(0.7, 0.3).unwrap();
        let a = characterization(0.8, 0.4, w);
        let b = characterization(0.6, 1.0 - 0.8, swapped);
        assert_abs_diff_eq!(a, b, epsilon = 1e-12);
    }

    #[test]
    fn weights_are_validated() {
        assert!(CharactWeights::new(0.6, 0.6).is_err());
        assert!(CharactWeights::new(-0.1, 1.1).is_err());
        assert!(CharactWeights::new(0.25, 0.75).is_ok());
    }

    #[test]
    fn jaccard_examples() {
        let a = mask(6, &[0, 2, 4]);
        assert!(jaccard(&a, &a).unwrap() > 1.0 - 1e-8);
        let b = mask(6, &[1, 3, 5]);
        assert_abs_diff_eq!(jaccard(&a, &b).unwrap(), 0.0);
        // TP = 2, FP = 1, FN = 1.
        let mg = mask(6, &[0, 1, 2]);
        let mp = mask(6, &[0, 1, 3]);
        assert_abs_diff_eq!(jaccard(&mg, &mp).unwrap(), 0.5, epsilon = 1e-9);
        // Both empty: guarded denominator, zero score.
        assert_eq!(jaccard(&NodeMask::new(4), &NodeMask::new(4)).unwrap(), 0.0);
        assert!(matches!(
            jaccard(&NodeMask::new(4), &NodeMask::new(5)),
            Err(Error::MaskLengthPair(4, 5))
        ));
    }

    #[test]
    fn jaccard_is_symmetric_and_bounded() {
        let a = mask(8, &[0, 1, 5]);
        let b = mask(8, &[1, 5, 6, 7]);
        let ab = jaccard(&a, &b).unwrap();
        assert_eq!(ab, jaccard(&b, &a).unwrap());
        assert!((0.0..=1.0).contains(&ab));
    }

    #[test]
    fn gea_examples() {
        let mp = mask(6, &[1, 2]);
        assert!(gea(std::slice::from_ref(&mp), &mp).unwrap() > 1.0 - 1e-8);
        // No ground truth: nonempty prediction scores 0.
        assert_abs_diff_eq!(gea(&[], &mp).unwrap(), 0.0);
        // Max picks the matching mask.
        let other = mask(6, &[0, 3, 4]);
        let score = gea(&[other.clone(), mp.clone()], &mp).unwrap();
        assert!(score > 1.0 - 1e-8);
        assert!(score >= jaccard(&other, &mp).unwrap());
    }

    #[test]
    fn gea_dominates_each_member() {
        let mp = mask(5, &[0, 1]);
        let gts = vec![mask(5, &[0]), mask(5, &[1, 2]), mask(5, &[0, 1, 2, 3])];
        let g = gea(&gts, &mp).unwrap();
        for mg in &gts {
            assert!(g >= jaccard(mg, &mp).unwrap());
        }
    }

    #[test]
    fn adding_true_positive_never_decreases_jaccard() {
        let mg = mask(6, &[0, 2, 4]);
        let mp = mask(6, &[0, 5]);
        let before = jaccard(&mg, &mp).unwrap();
        let mut better = mp.clone();
        better.set(2, true);
        assert!(jaccard(&mg, &better).unwrap() >= before);
    }

    #[test]
    fn evaluate_with_ground_truth_masks() {
        // Perfect explanations: Fid- and GEA are by construction 0-ish / 1-ish
        // when masks equal ground truth and the model is fixed.
        let model = GcnModel::init(2, 4, 2, 42);
        let graphs: Vec<Graph> = (0..4)
            .map(|i| {
                let features = Array2::from_shape_fn((5, 2), |(v, j)| ((v * 2 + j + i) % 3) as f64);
                Graph::new(5, vec![(0, 1), (1, 2), (2, 3), (3, 4)], features, Some(i % 2))
                    .unwrap()
            })
            .collect();
        let gts: Vec<Vec<NodeMask>> = graphs.iter().map(|_| vec![mask(5, &[0, 1, 2, 3, 4])]).collect();
        let explanations: Vec<NodeMask> = gts.iter().map(|m| m[0].clone()).collect();
        let report = evaluate(&model, &graphs, &explanations, &gts, CharactWeights::equal())
            .unwrap();
        assert_eq!(report.n, 4);
        assert_abs_diff_eq!(report.fid_minus, 0.0);
        assert!(report.gea > 1.0 - 1e-8);
        for value in [report.fid_plus, report.fid_minus, report.charact, report.gea] {
            assert!((0.0..=1.0).contains(&value));
        }
    }

    #[test]
    fn pairwise_sum_matches_naive() {
        let values: Vec<f64> = (0..1000).map(|i| (i as f64).sin()).collect();
        let naive: f64 = values.iter().sum();
        assert_abs_diff_eq!(pairwise_sum(&values), naive, epsilon = 1e-9);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }
}
