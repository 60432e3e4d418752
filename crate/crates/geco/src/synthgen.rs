//! Synthetic motif-planted datasets: ER or BA base graphs, one motif
//! attached per graph by a single bridge edge, motif nodes as ground truth.

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Dataset, Graph, NodeMask};
use crate::seed::{self, Role};

/// Degree one-hots are clamped at this degree by default, giving 11 feature
/// columns; covers BA hubs at 25-node bases.
pub const DEFAULT_MAX_DEGREE: usize = 10;
/// Default ER edge probability for 25-node bases.
pub const DEFAULT_ER_P: f64 = 0.15;
/// Default BA attachment count for 25-node bases.
pub const DEFAULT_BA_M: usize = 2;
/// Per-class graph count used by the full-size named recipes.
pub const FULL_GRAPHS_PER_CLASS: usize = 500;

/// The five planted motifs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MotifKind {
    House,
    Cycle5,
    Cycle6,
    Wheel,
    Grid3x3,
}

impl MotifKind {
    pub const ALL: [MotifKind; 5] = [
        MotifKind::House,
        MotifKind::Cycle5,
        MotifKind::Cycle6,
        MotifKind::Wheel,
        MotifKind::Grid3x3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MotifKind::House => "house",
            MotifKind::Cycle5 => "cycle5",
            MotifKind::Cycle6 => "cycle6",
            MotifKind::Wheel => "wheel",
            MotifKind::Grid3x3 => "grid3x3",
        }
    }

    /// Node count of the motif graph.
    pub fn size(self) -> usize {
        match self {
            MotifKind::House => 5,
            MotifKind::Cycle5 => 5,
            MotifKind::Cycle6 => 6,
            MotifKind::Wheel => 6,
            MotifKind::Grid3x3 => 9,
        }
    }
}

impl std::str::FromStr for MotifKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MotifKind::ALL
            .iter()
            .copied()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::UnknownMotif(s.to_string()))
    }
}

/// Base random-graph family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BaseModel {
    Er,
    Ba,
}

/// Everything needed to regenerate a dataset deterministically.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetRecipe {
    pub name: String,
    pub base: BaseModel,
    pub n_base_nodes: usize,
    /// One motif per class; class label = index in this list.
    pub motif_classes: Vec<MotifKind>,
    pub graphs_per_class: usize,
    pub er_p: f64,
    pub ba_m: usize,
    pub seed: u64,
}

impl DatasetRecipe {
    /// The six built-in recipes, at full per-class size and seed 0.
    /// Callers usually override `graphs_per_class` and `seed`.
    pub fn builtin(name: &str) -> Result<Self> {
        let (base, motifs) = match name {
            "ba_house_cycle" => (BaseModel::Ba, vec![MotifKind::House, MotifKind::Cycle6]),
            "er_house_cycle" => (BaseModel::Er, vec![MotifKind::House, MotifKind::Cycle6]),
            "ba_cycle_wheel" => (BaseModel::Ba, vec![MotifKind::Cycle5, MotifKind::Wheel]),
            "er_cycle_wheel" => (BaseModel::Er, vec![MotifKind::Cycle5, MotifKind::Wheel]),
            "ba_cycle_wheel_grid" => (
                BaseModel::Ba,
                vec![MotifKind::Cycle5, MotifKind::Wheel, MotifKind::Grid3x3],
            ),
            "er_cycle_wheel_grid" => (
                BaseModel::Er,
                vec![MotifKind::Cycle5, MotifKind::Wheel, MotifKind::Grid3x3],
            ),
            other => return Err(Error::UnknownRecipe(other.to_string())),
        };
        Ok(Self {
            name: name.to_string(),
            base,
            n_base_nodes: 25,
            motif_classes: motifs,
            graphs_per_class: FULL_GRAPHS_PER_CLASS,
            er_p: DEFAULT_ER_P,
            ba_m: DEFAULT_BA_M,
            seed: 0,
        })
    }

    pub fn builtin_names() -> [&'static str; 6] {
        [
            "ba_house_cycle",
            "er_house_cycle",
            "ba_cycle_wheel",
            "er_cycle_wheel",
            "ba_cycle_wheel_grid",
            "er_cycle_wheel_grid",
        ]
    }

    pub fn num_classes(&self) -> usize {
        self.motif_classes.len()
    }

    fn validate(&self) -> Result<()> {
        for (i, m) in self.motif_classes.iter().enumerate() {
            if self.motif_classes[i + 1..].contains(m) {
                return Err(Error::DuplicateMotif(*m));
            }
        }
        if self.motif_classes.is_empty() {
            return Err(Error::InvalidRecipe("no motif classes".into()));
        }
        if self.graphs_per_class == 0 {
            return Err(Error::InvalidRecipe("graphs_per_class must be >= 1".into()));
        }
        if self.n_base_nodes == 0 {
            return Err(Error::InvalidRecipe("base graphs need >= 1 node".into()));
        }
        if !(self.er_p > 0.0 && self.er_p < 1.0) {
            return Err(Error::InvalidRecipe(format!(
                "er_p {} outside (0, 1)",
                self.er_p
            )));
        }
        if self.ba_m == 0 || self.ba_m >= self.n_base_nodes {
            return Err(Error::InvalidRecipe(format!(
                "ba_m {} outside [1, n_base_nodes)",
                self.ba_m
            )));
        }
        Ok(())
    }
}

/// G(n, p): each of the n(n-1)/2 candidate edges is included independently
/// with probability `p`. No connectivity repair.
pub fn gen_er(n: usize, p: f64, rng: &mut impl Rng) -> Graph {
    assert!(n >= 1 && (0.0..=1.0).contains(&p));
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.gen::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(n, edges).expect("generated edges are valid")
}

/// Preferential attachment: `m` isolated seed nodes, then each arriving node
/// attaches `m` edges to distinct existing nodes chosen with probability
/// proportional to current degree (degree-zero nodes weighted as 1, so the
/// first arrival connects to every seed). Yields exactly (n - m) * m edges
/// and a connected graph.
pub fn gen_ba(n: usize, m: usize, rng: &mut impl Rng) -> Graph {
    assert!(m >= 1 && m < n);
    let mut degree = vec![0usize; n];
    let mut edges = Vec::with_capacity((n - m) * m);
    for v in m..n {
        let mut targets: Vec<usize> = Vec::with_capacity(m);
        while targets.len() < m {
            let total: usize = degree[..v]
                .iter()
                .enumerate()
                .filter(|(u, _)| !targets.contains(u))
                .map(|(_, &d)| d.max(1))
                .sum();
            let mut ticket = rng.gen_range(0..total);
            for (u, &d) in degree[..v].iter().enumerate() {
                if targets.contains(&u) {
                    continue;
                }
                let w = d.max(1);
                if ticket < w {
                    targets.push(u);
                    break;
                }
                ticket -= w;
            }
        }
        for u in targets {
            degree[u] += 1;
            degree[v] += 1;
            edges.push((u, v));
        }
    }
    Graph::from_edges(n, edges).expect("generated edges are valid")
}

/// Canonical motif graphs. Edge sets are pinned here and by the tests:
/// house = square 0-1-2-3 plus roof node 4 joined to 0 and 1; wheel = hub 0
/// with spokes to a 5-cycle on 1..=5; grid = 3x3 lattice with 4-neighbor
/// connectivity; cycles are simple cycles.
pub fn motif(kind: MotifKind) -> Graph {
    let (n, edges): (usize, Vec<(usize, usize)>) = match kind {
        MotifKind::House => (5, vec![(0, 1), (1, 2), (2, 3), (3, 0), (4, 0), (4, 1)]),
        MotifKind::Cycle5 => (5, cycle_edges(5)),
        MotifKind::Cycle6 => (6, cycle_edges(6)),
        MotifKind::Wheel => {
            let mut edges = vec![(1, 2), (2, 3), (3, 4), (4, 5), (5, 1)];
            edges.extend((1..=5).map(|v| (0, v)));
            (6, edges)
        }
        MotifKind::Grid3x3 => {
            let mut edges = Vec::new();
            for r in 0..3 {
                for c in 0..3 {
                    let v = 3 * r + c;
                    if c + 1 < 3 {
                        edges.push((v, v + 1));
                    }
                    if r + 1 < 3 {
                        edges.push((v, v + 3));
                    }
                }
            }
            (9, edges)
        }
    };
    Graph::from_edges(n, edges).expect("motif edge sets are valid")
}

fn cycle_edges(n: usize) -> Vec<(usize, usize)> {
    (0..n).map(|v| (v, (v + 1) % n)).collect()
}

/// Disjoint union of `base` and the motif plus exactly one bridge edge from
/// a uniformly random base node to a uniformly random motif node. The mask
/// marks the motif nodes only; the bridge endpoint in the base is not marked.
pub fn attach_motif(base: &Graph, kind: MotifKind, rng: &mut impl Rng) -> (Graph, NodeMask) {
    assert!(base.num_nodes() >= 1);
    let offset = base.num_nodes();
    let motif = motif(kind);
    let mut edges = base.edges().to_vec();
    edges.extend(motif.edges().iter().map(|&(u, v)| (u + offset, v + offset)));
    let bridge_base = rng.gen_range(0..offset);
    let bridge_motif = offset + rng.gen_range(0..motif.num_nodes());
    edges.push((bridge_base, bridge_motif));
    let total = offset + motif.num_nodes();
    let graph = Graph::from_edges(total, edges).expect("attachment preserves validity");
    let mut mask = NodeMask::new(total);
    for v in offset..total {
        mask.set(v, true);
    }
    (graph, mask)
}

/// One-hot degree features: row `v` is one-hot at `min(degree(v), max_degree)`,
/// so the feature dimension is `max_degree + 1`.
pub fn encode_degree_features(g: &Graph, max_degree: usize) -> Array2<f64> {
    assert!(max_degree >= 1);
    let mut features = Array2::zeros((g.num_nodes(), max_degree + 1));
    for v in 0..g.num_nodes() {
        features[(v, g.degree(v).min(max_degree))] = 1.0;
    }
    features
}

/// Generate the full dataset for a recipe: `graphs_per_class` graphs per
/// motif class, class label = motif index, one ground-truth mask per graph,
/// degree one-hot node features. Bit-deterministic given the recipe seed;
/// each graph draws from its own derived RNG stream.
pub fn build_dataset(recipe: &DatasetRecipe) -> Result<Dataset> {
    recipe.validate()?;
    let mut graphs = Vec::with_capacity(recipe.num_classes() * recipe.graphs_per_class);
    let mut ground_truth = Vec::with_capacity(graphs.capacity());
    for (class, &kind) in recipe.motif_classes.iter().enumerate() {
        for index in 0..recipe.graphs_per_class {
            let mut rng = seed::rng(
                recipe.seed,
                Role::DatasetGraph,
                &[class as u64, index as u64],
            );
            let base = match recipe.base {
                BaseModel::Er => gen_er(recipe.n_base_nodes, recipe.er_p, &mut rng),
                BaseModel::Ba => gen_ba(recipe.n_base_nodes, recipe.ba_m, &mut rng),
            };
            let (planted, mask) = attach_motif(&base, kind, &mut rng);
            let features = encode_degree_features(&planted, DEFAULT_MAX_DEGREE);
            let graph = planted.with_features(features)?.with_label(class);
            graphs.push(graph);
            ground_truth.push(vec![mask]);
        }
    }
    Dataset::new(graphs, ground_truth, recipe.num_classes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    fn rng(s: u64) -> rand_chacha::ChaCha8Rng {
        seed::rng(s, Role::DatasetGraph, &[])
    }

    #[test]
    fn er_extremes() {
        let g = gen_er(5, 0.0, &mut rng(1));
        assert_eq!((g.num_nodes(), g.num_edges()), (5, 0));
        let g = gen_er(5, 1.0, &mut rng(1));
        assert_eq!((g.num_nodes(), g.num_edges()), (5, 10));
    }

    #[test]
    fn er_mean_edge_count_matches_binomial() {
        // 300 candidate pairs at p = 0.15: expect mean 45, sigma ~6.19 per
        // sample; the sample mean over 1000 draws sits well inside 3 sigma.
        let mut total = 0usize;
        for i in 0..1000 {
            total += gen_er(25, 0.15, &mut rng(i)).num_edges();
        }
        let mean = total as f64 / 1000.0;
        let sigma = (300.0_f64 * 0.15 * 0.85).sqrt();
        assert!(
            (mean - 45.0).abs() < 3.0 * sigma,
            "mean {mean} too far from 45"
        );
    }

    #[test]
    fn ba_edge_count_and_tree_case() {
        let g = gen_ba(5, 1, &mut rng(2));
        assert_eq!(g.num_edges(), 4);
        let g = gen_ba(25, 2, &mut rng(3));
        assert_eq!(g.num_edges(), 46);
    }

    #[test]
    fn ba_is_connected() {
        for s in 0..20 {
            let g = gen_ba(25, 2, &mut rng(s));
            let mut seen = [false; 25];
            let mut stack = vec![0usize];
            seen[0] = true;
            while let Some(v) = stack.pop() {
                for &u in g.neighbors(v) {
                    if !seen[u] {
                        seen[u] = true;
                        stack.push(u);
                    }
                }
            }
            assert!(seen.iter().all(|&s| s));
        }
    }

    #[test]
    fn ba_grows_hubs() {
        // Scale-free check: the max-degree node dominates the median degree.
        let mut max_sum = 0.0;
        let mut median_sum = 0.0;
        for s in 0..1000 {
            let g = gen_ba(100, 2, &mut rng(s));
            let mut degrees: Vec<usize> = (0..100).map(|v| g.degree(v)).collect();
            degrees.sort_unstable();
            max_sum += degrees[99] as f64;
            median_sum += (degrees[49] + degrees[50]) as f64 / 2.0;
        }
        assert!(
            max_sum >= 3.0 * median_sum,
            "mean max degree {} vs mean median {}",
            max_sum / 1000.0,
            median_sum / 1000.0
        );
    }

    #[test]
    fn motif_shapes() {
        let c5 = motif(MotifKind::Cycle5);
        assert_eq!((c5.num_nodes(), c5.num_edges()), (5, 5));
        assert!((0..5).all(|v| c5.degree(v) == 2));

        let grid = motif(MotifKind::Grid3x3);
        assert_eq!((grid.num_nodes(), grid.num_edges()), (9, 12));

        let house = motif(MotifKind::House);
        assert_eq!((house.num_nodes(), house.num_edges()), (5, 6));
        let mut degrees: Vec<usize> = (0..5).map(|v| house.degree(v)).collect();
        degrees.sort_unstable();
        assert_eq!(degrees, vec![2, 2, 2, 3, 3]);

        let wheel = motif(MotifKind::Wheel);
        assert_eq!((wheel.num_nodes(), wheel.num_edges()), (6, 10));
        assert_eq!(wheel.degree(0), 5);

        let c6 = motif(MotifKind::Cycle6);
        assert_eq!((c6.num_nodes(), c6.num_edges()), (6, 6));
    }

    #[test]
    fn attach_motif_accounting() {
        let k1 = Graph::from_edges(1, vec![]).unwrap();
        let (g, mask) = attach_motif(&k1, MotifKind::Cycle5, &mut rng(4));
        assert_eq!((g.num_nodes(), g.num_edges()), (6, 6));
        assert_eq!(mask.count_ones(), 5);
        assert!(!mask.is_selected(0));

        let base = gen_ba(25, 2, &mut rng(5));
        let (g, mask) = attach_motif(&base, MotifKind::House, &mut rng(6));
        assert_eq!(g.num_nodes(), 30);
        assert_eq!(g.num_edges(), base.num_edges() + 6 + 1);
        assert_eq!(mask.count_ones(), 5);

        for kind in MotifKind::ALL {
            let (_, mask) = attach_motif(&base, kind, &mut rng(7));
            assert_eq!(mask.count_ones(), kind.size());
        }
    }

    #[test]
    fn degree_features_one_hot() {
        let g = Graph::from_edges(1, vec![]).unwrap();
        let f = encode_degree_features(&g, 10);
        assert_eq!(f[(0, 0)], 1.0);
        assert_eq!(f.row(0).sum(), 1.0);

        let star = Graph::from_edges(16, (1..16).map(|v| (0, v)).collect()).unwrap();
        let f = encode_degree_features(&star, 10);
        assert_eq!(f[(0, 10)], 1.0, "degree 15 clamps to the last bucket");
        assert_eq!(f[(1, 1)], 1.0);
        assert_eq!(f.ncols(), 11);
    }

    #[test]
    fn build_dataset_counts_and_labels() {
        let mut recipe = DatasetRecipe::builtin("ba_house_cycle").unwrap();
        recipe.graphs_per_class = 10;
        recipe.seed = 42;
        let data = build_dataset(&recipe).unwrap();
        assert_eq!(data.len(), 20);
        assert_eq!(data.num_classes, 2);
        assert_eq!(data.feature_dim, DEFAULT_MAX_DEGREE + 1);
        for class in 0..2 {
            let count = data
                .graphs
                .iter()
                .filter(|g| g.label() == Some(class))
                .count();
            assert_eq!(count, 10);
        }
        for (g, gts) in data.graphs.iter().zip(&data.ground_truth) {
            assert_eq!(gts.len(), 1);
            let kind = recipe.motif_classes[g.label().unwrap()];
            assert_eq!(gts[0].count_ones(), kind.size());
            assert_eq!(g.num_nodes(), 25 + kind.size());
        }
    }

    #[test]
    fn build_dataset_three_class_recipe() {
        let mut recipe = DatasetRecipe::builtin("er_cycle_wheel_grid").unwrap();
        recipe.graphs_per_class = 5;
        let data = build_dataset(&recipe).unwrap();
        assert_eq!(data.len(), 15);
        assert_eq!(data.num_classes, 3);
    }

    #[test]
    fn builtin_recipes_match_published_sizes() {
        for name in DatasetRecipe::builtin_names() {
            let r = DatasetRecipe::builtin(name).unwrap();
            assert_eq!(r.graphs_per_class, 500);
            assert_eq!(r.n_base_nodes, 25);
            let expected_classes = if name.ends_with("grid") { 3 } else { 2 };
            assert_eq!(r.num_classes(), expected_classes, "{name}");
        }
        // Full-size totals: 1000 graphs for two-class, 1500 for three-class.
        let two = DatasetRecipe::builtin("ba_house_cycle").unwrap();
        assert_eq!(two.num_classes() * two.graphs_per_class, 1000);
        let three = DatasetRecipe::builtin("er_cycle_wheel_grid").unwrap();
        assert_eq!(three.num_classes() * three.graphs_per_class, 1500);
    }

    #[test]
    fn build_dataset_is_deterministic() {
        let mut recipe = DatasetRecipe::builtin("er_house_cycle").unwrap();
        recipe.graphs_per_class = 6;
        recipe.seed = 9;
        let a = build_dataset(&recipe).unwrap().to_json_string().unwrap();
        let b = build_dataset(&recipe).unwrap().to_json_string().unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn build_dataset_rejects_duplicate_motifs() {
        let recipe = DatasetRecipe {
            name: "bad".into(),
            base: BaseModel::Ba,
            n_base_nodes: 25,
            motif_classes: vec![MotifKind::House, MotifKind::House],
            graphs_per_class: 2,
            er_p: DEFAULT_ER_P,
            ba_m: DEFAULT_BA_M,
            seed: 0,
        };
        assert!(matches!(
            build_dataset(&recipe),
            Err(Error::DuplicateMotif(MotifKind::House))
        ));
    }
}
