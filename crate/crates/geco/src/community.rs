//! Community detection by greedy modularity maximization (the
//! Clauset-Newman-Moore agglomerative scheme) plus an exhaustive
//! maximum-modularity search usable as a test oracle on tiny graphs.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use crate::error::{Error, Result};
use crate::graph::{induced_subgraph, Graph, NodeMask};

/// Assignment of every node to exactly one community. Community ids are
/// dense `0..num_communities`, ordered by each community's smallest member.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    community_of: Vec<usize>,
    num_communities: usize,
}

impl Partition {
    /// Build from a raw assignment vector; ids may be arbitrary but every
    /// value in `0..max_id+1` must be used (communities are nonempty).
    pub fn from_assignments(community_of: Vec<usize>) -> Result<Self> {
        let num_communities = community_of.iter().copied().max().map_or(0, |m| m + 1);
        let mut seen = vec![false; num_communities];
        for &c in &community_of {
            seen[c] = true;
        }
        if seen.iter().any(|&s| !s) {
            return Err(Error::InvalidPartition(
                "community ids are not dense".into(),
            ));
        }
        Ok(Self {
            community_of,
            num_communities,
        })
    }

    /// Relabel communities canonically: by smallest member node, ascending.
    pub fn canonicalize(&self) -> Self {
        let mut remap: Vec<Option<usize>> = vec![None; self.num_communities];
        let mut next = 0;
        let mut community_of = vec![0; self.community_of.len()];
        for (v, &c) in self.community_of.iter().enumerate() {
            let id = *remap[c].get_or_insert_with(|| {
                let id = next;
                next += 1;
                id
            });
            community_of[v] = id;
        }
        Self {
            community_of,
            num_communities: next,
        }
    }

    pub fn singletons(n: usize) -> Self {
        Self {
            community_of: (0..n).collect(),
            num_communities: n,
        }
    }

    /// Every node in one community (empty partition for the empty graph).
    pub fn single(n: usize) -> Self {
        Self {
            community_of: vec![0; n],
            num_communities: if n == 0 { 0 } else { 1 },
        }
    }

    pub fn len(&self) -> usize {
        self.community_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.community_of.is_empty()
    }

    pub fn community_of(&self, v: usize) -> usize {
        self.community_of[v]
    }

    pub fn num_communities(&self) -> usize {
        self.num_communities
    }

    pub fn assignments(&self) -> &[usize] {
        &self.community_of
    }

    /// Member nodes of community `c`, ascending.
    pub fn members(&self, c: usize) -> Vec<usize> {
        self.community_of
            .iter()
            .enumerate()
            .filter_map(|(v, &cc)| (cc == c).then_some(v))
            .collect()
    }

    /// One node mask per community, indexed by community id.
    pub fn masks(&self) -> Vec<NodeMask> {
        let mut masks = vec![NodeMask::new(self.len()); self.num_communities];
        for (v, &c) in self.community_of.iter().enumerate() {
            masks[c].set(v, true);
        }
        masks
    }
}

/// Newman modularity Q of a partition: per community, the fraction of edges
/// inside minus the squared fraction of degree ends. Q is 0 for edgeless
/// graphs by convention.
pub fn modularity(g: &Graph, p: &Partition) -> Result<f64> {
    if p.len() != g.num_nodes() {
        return Err(Error::PartitionLength {
            partition_len: p.len(),
            num_nodes: g.num_nodes(),
        });
    }
    let m = g.num_edges() as f64;
    if g.num_edges() == 0 {
        return Ok(0.0);
    }
    let mut intra = vec![0.0f64; p.num_communities()];
    let mut degree_sum = vec![0.0f64; p.num_communities()];
    for &(u, v) in g.edges() {
        if p.community_of(u) == p.community_of(v) {
            intra[p.community_of(u)] += 1.0;
        }
        degree_sum[p.community_of(u)] += 1.0;
        degree_sum[p.community_of(v)] += 1.0;
    }
    let q = intra
        .iter()
        .zip(&degree_sum)
        .map(|(&lc, &dc)| lc / m - (dc / (2.0 * m)).powi(2))
        .sum();
    Ok(q)
}

/// One agglomeration step of the greedy merge loop, for diagnostics: the
/// partition after the merge and the incrementally tracked Q.
#[derive(Debug, Clone)]
pub struct MergeStep {
    pub partition: Partition,
    pub modularity: f64,
}

/// Candidate merge in the lazy max-heap. Ordering: larger gain first, then
/// the lexicographically smallest community pair.
#[derive(Debug)]
struct Candidate {
    gain: f64,
    pair: (usize, usize),
    stamps: (u64, u64),
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.gain == other.gain && self.pair == other.pair
    }
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.gain
            .partial_cmp(&other.gain)
            .expect("modularity gains are finite")
            .then_with(|| other.pair.cmp(&self.pair))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Community state during agglomeration, keyed by its smallest member node.
struct Cluster {
    /// Fraction of all edge ends attached to this community: sum(k_v) / 2m.
    degree_frac: f64,
    /// Fraction of ordered adjacencies to each neighboring community.
    links: BTreeMap<usize, f64>,
    members: Vec<usize>,
    stamp: u64,
}

struct CnmState {
    clusters: Vec<Option<Cluster>>,
    heap: BinaryHeap<Candidate>,
    modularity: f64,
}

impl CnmState {
    fn new(g: &Graph) -> Self {
        let n = g.num_nodes();
        let two_m = 2.0 * g.num_edges() as f64;
        let mut clusters: Vec<Option<Cluster>> = (0..n)
            .map(|v| {
                Some(Cluster {
                    degree_frac: g.degree(v) as f64 / two_m,
                    links: BTreeMap::new(),
                    members: vec![v],
                    stamp: 0,
                })
            })
            .collect();
        for &(u, v) in g.edges() {
            let w = 1.0 / two_m;
            *clusters[u].as_mut().unwrap().links.entry(v).or_insert(0.0) += w;
            *clusters[v].as_mut().unwrap().links.entry(u).or_insert(0.0) += w;
        }
        // Singletons have no intra edges, so Q starts at -sum(a_i^2).
        let modularity = -clusters
            .iter()
            .flatten()
            .map(|c| c.degree_frac * c.degree_frac)
            .sum::<f64>();
        let mut state = Self {
            clusters,
            heap: BinaryHeap::new(),
            modularity,
        };
        for i in 0..n {
            state.push_candidates_of(i);
        }
        state
    }

    fn gain(&self, i: usize, j: usize) -> f64 {
        let ci = self.clusters[i].as_ref().unwrap();
        let cj = self.clusters[j].as_ref().unwrap();
        let link = ci.links.get(&j).copied().unwrap_or(0.0);
        2.0 * (link - ci.degree_frac * cj.degree_frac)
    }

    /// Push fresh heap entries for every pair (i, neighbor).
    fn push_candidates_of(&mut self, i: usize) {
        let Some(ci) = self.clusters[i].as_ref() else {
            return;
        };
        let partners: Vec<usize> = ci.links.keys().copied().collect();
        for j in partners {
            let pair = (i.min(j), i.max(j));
            let gain = self.gain(pair.0, pair.1);
            let stamps = (
                self.clusters[pair.0].as_ref().unwrap().stamp,
                self.clusters[pair.1].as_ref().unwrap().stamp,
            );
            self.heap.push(Candidate { gain, pair, stamps });
        }
    }

    fn is_current(&self, c: &Candidate) -> bool {
        let (i, j) = c.pair;
        matches!(
            (&self.clusters[i], &self.clusters[j]),
            (Some(a), Some(b)) if (a.stamp, b.stamp) == c.stamps
        )
    }

    /// Merge community `j` into `i` (i < j), updating neighbor links and
    /// re-enqueueing every pair that involves the merged community.
    fn merge(&mut self, i: usize, j: usize, gain: f64) {
        let mut absorbed = self.clusters[j].take().expect("valid candidate");
        {
            let keep = self.clusters[i].as_mut().expect("valid candidate");
            keep.degree_frac += absorbed.degree_frac;
            keep.members.append(&mut absorbed.members);
            keep.links.remove(&j);
            keep.stamp += 1;
        }
        for (k, w) in absorbed.links {
            if k == i {
                continue;
            }
            *self.clusters[i]
                .as_mut()
                .unwrap()
                .links
                .entry(k)
                .or_insert(0.0) += w;
            let ck = self.clusters[k].as_mut().expect("linked community exists");
            ck.links.remove(&j);
            *ck.links.entry(i).or_insert(0.0) += w;
        }
        self.modularity += gain;
        self.push_candidates_of(i);
    }

    fn partition(&self) -> Partition {
        let n = self.clusters.iter().flatten().map(|c| c.members.len()).sum();
        let mut community_of = vec![0usize; n];
        let mut next = 0;
        for cluster in self.clusters.iter().flatten() {
            for &v in &cluster.members {
                community_of[v] = next;
            }
            next += 1;
        }
        Partition {
            community_of,
            num_communities: next,
        }
    }
}

/// Greedy modularity maximization: start from singletons and repeatedly
/// apply the adjacent-community merge with the largest modularity gain
/// (ties broken by the smallest community-id pair, ids being each
/// community's smallest member). Stops when no merge improves Q, which is
/// the peak of the merge path. Isolated nodes stay singletons; an edgeless
/// graph yields all singletons; the empty graph yields an empty partition.
pub fn greedy_modularity_communities(g: &Graph) -> Partition {
    greedy_modularity_with_trace(g).0
}

/// Same as [`greedy_modularity_communities`], also returning the partition
/// and incrementally tracked Q after every merge, so tests can audit the
/// incremental bookkeeping against direct recomputation.
pub fn greedy_modularity_with_trace(g: &Graph) -> (Partition, Vec<MergeStep>) {
    if g.num_edges() == 0 {
        return (Partition::singletons(g.num_nodes()), Vec::new());
    }
    let mut state = CnmState::new(g);
    let mut steps = Vec::new();
    while let Some(candidate) = state.heap.pop() {
        if !state.is_current(&candidate) {
            continue;
        }
        if candidate.gain <= 0.0 {
            break;
        }
        let (i, j) = candidate.pair;
        state.merge(i, j, candidate.gain);
        steps.push(MergeStep {
            partition: state.partition(),
            modularity: state.modularity,
        });
    }
    (state.partition(), steps)
}

/// Exact maximum-modularity partition by exhaustive enumeration of all set
/// partitions (restricted-growth strings). Ties resolve to the first
/// partition in enumeration order. Rejects graphs with more than 10 nodes.
pub fn brute_force_best_partition(g: &Graph) -> Result<(Partition, f64)> {
    let n = g.num_nodes();
    if n > 10 {
        return Err(Error::GraphTooLarge(n));
    }
    if n == 0 {
        return Ok((Partition::singletons(0), 0.0));
    }
    let mut best: Option<(Partition, f64)> = None;
    let mut assignment = vec![0usize; n];
    enumerate_partitions(&mut assignment, 1, g, &mut best)?;
    Ok(best.expect("at least one partition exists"))
}

fn enumerate_partitions(
    assignment: &mut Vec<usize>,
    depth: usize,
    g: &Graph,
    best: &mut Option<(Partition, f64)>,
) -> Result<()> {
    if depth == assignment.len() {
        let p = Partition::from_assignments(assignment.clone())?;
        let q = modularity(g, &p)?;
        if best.as_ref().is_none_or(|(_, bq)| q > *bq) {
            *best = Some((p, q));
        }
        return Ok(());
    }
    let max_used = assignment[..depth].iter().copied().max().unwrap_or(0);
    for c in 0..=max_used + 1 {
        assignment[depth] = c;
        enumerate_partitions(assignment, depth + 1, g, best)?;
    }
    assignment[depth] = 0;
    Ok(())
}

/// One induced subgraph per community, each paired with the mask of its
/// nodes in `g`, ordered by community id.
pub fn community_subgraphs(g: &Graph, p: &Partition) -> Result<Vec<(Graph, NodeMask)>> {
    if p.len() != g.num_nodes() {
        return Err(Error::PartitionLength {
            partition_len: p.len(),
            num_nodes: g.num_nodes(),
        });
    }
    p.masks()
        .into_iter()
        .map(|mask| Ok((induced_subgraph(g, &mask)?.graph, mask)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn two_triangles_bridge() -> Graph {
        Graph::from_edges(6, vec![(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)])
            .unwrap()
    }

    fn two_disjoint_triangles() -> Graph {
        Graph::from_edges(6, vec![(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]).unwrap()
    }

    /// Direct pairwise-sum evaluation of Q, independent of the
    /// per-community accumulation in `modularity`.
    fn modularity_pairwise(g: &Graph, p: &Partition) -> f64 {
        let m = g.num_edges() as f64;
        if m == 0.0 {
            return 0.0;
        }
        let n = g.num_nodes();
        let mut adj = vec![vec![0.0; n]; n];
        for &(u, v) in g.edges() {
            adj[u][v] = 1.0;
            adj[v][u] = 1.0;
        }
        let mut q = 0.0;
        for (u, row) in adj.iter().enumerate() {
            for (v, &a_uv) in row.iter().enumerate() {
                if p.community_of(u) == p.community_of(v) {
                    q += a_uv - (g.degree(u) as f64) * (g.degree(v) as f64) / (2.0 * m);
                }
            }
        }
        q / (2.0 * m)
    }

    #[test]
    fn modularity_single_community_is_zero() {
        let g = two_triangles_bridge();
        assert_abs_diff_eq!(
            modularity(&g, &Partition::single(6)).unwrap(),
            0.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn modularity_two_disjoint_triangles_is_half() {
        let g = two_disjoint_triangles();
        let p = Partition::from_assignments(vec![0, 0, 0, 1, 1, 1]).unwrap();
        assert_abs_diff_eq!(modularity(&g, &p).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(modularity_pairwise(&g, &p), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn modularity_edgeless_is_zero() {
        let g = Graph::from_edges(4, vec![]).unwrap();
        assert_eq!(modularity(&g, &Partition::singletons(4)).unwrap(), 0.0);
        assert_eq!(modularity(&g, &Partition::single(4)).unwrap(), 0.0);
    }

    #[test]
    fn modularity_matches_pairwise_formulation() {
        use rand::Rng;
        let mut rng = crate::seed::rng(21, crate::seed::Role::DatasetGraph, &[]);
        for _ in 0..30 {
            let n = rng.gen_range(2..9);
            let mut edges = Vec::new();
            for u in 0..n {
                for v in (u + 1)..n {
                    if rng.gen::<f64>() < 0.5 {
                        edges.push((u, v));
                    }
                }
            }
            let g = Graph::from_edges(n, edges).unwrap();
            let assignment: Vec<usize> = (0..n).map(|_| rng.gen_range(0..3.min(n))).collect();
            let p = Partition::from_assignments(assignment)
                .unwrap_or_else(|_| Partition::singletons(n))
                .canonicalize();
            assert_abs_diff_eq!(
                modularity(&g, &p).unwrap(),
                modularity_pairwise(&g, &p),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn modularity_is_invariant_under_relabeling() {
        let g = two_triangles_bridge();
        let p1 = Partition::from_assignments(vec![0, 0, 0, 1, 1, 1]).unwrap();
        let p2 = Partition::from_assignments(vec![1, 1, 1, 0, 0, 0]).unwrap();
        assert_eq!(
            modularity(&g, &p1).unwrap(),
            modularity(&g, &p2).unwrap()
        );
    }

    #[test]
    fn modularity_checks_length() {
        let g = two_disjoint_triangles();
        assert!(matches!(
            modularity(&g, &Partition::singletons(4)),
            Err(Error::PartitionLength { .. })
        ));
    }

    #[test]
    fn greedy_recovers_bridged_triangles() {
        let g = two_triangles_bridge();
        let p = greedy_modularity_communities(&g);
        assert_eq!(p.num_communities(), 2);
        assert_eq!(p.members(0), vec![0, 1, 2]);
        assert_eq!(p.members(1), vec![3, 4, 5]);
        let (best, best_q) = brute_force_best_partition(&g).unwrap();
        assert_eq!(p, best.canonicalize());
        assert_abs_diff_eq!(modularity(&g, &p).unwrap(), best_q, epsilon = 1e-12);
    }

    #[test]
    fn greedy_leaves_edgeless_graph_as_singletons() {
        let g = Graph::from_edges(4, vec![]).unwrap();
        let p = greedy_modularity_communities(&g);
        assert_eq!(p.num_communities(), 4);
    }

    #[test]
    fn greedy_handles_empty_graph() {
        let g = Graph::from_edges(0, vec![]).unwrap();
        let p = greedy_modularity_communities(&g);
        assert_eq!(p.num_communities(), 0);
        assert_eq!(p.len(), 0);
    }

    #[test]
    fn greedy_keeps_isolated_nodes_single() {
        let g = Graph::from_edges(5, vec![(0, 1), (1, 2), (0, 2)]).unwrap();
        let p = greedy_modularity_communities(&g);
        assert_eq!(p.num_communities(), 3);
        assert_eq!(p.members(p.community_of(3)), vec![3]);
        assert_eq!(p.members(p.community_of(4)), vec![4]);
    }

    #[test]
    fn greedy_beats_single_community_baseline() {
        use rand::Rng;
        let mut rng = crate::seed::rng(22, crate::seed::Role::DatasetGraph, &[]);
        for _ in 0..20 {
            let n = rng.gen_range(2..10);
            let mut edges = Vec::new();
            for u in 0..n {
                for v in (u + 1)..n {
                    if rng.gen::<f64>() < 0.4 {
                        edges.push((u, v));
                    }
                }
            }
            if edges.is_empty() {
                continue;
            }
            let g = Graph::from_edges(n, edges).unwrap();
            let p = greedy_modularity_communities(&g);
            let q = modularity(&g, &p).unwrap();
            let baseline = modularity(&g, &Partition::single(n)).unwrap();
            assert!(q >= baseline - 1e-12);
        }
    }

    #[test]
    fn greedy_is_deterministic() {
        let g = two_triangles_bridge();
        let p1 = greedy_modularity_communities(&g);
        let p2 = greedy_modularity_communities(&g);
        assert_eq!(p1, p2);
    }

    #[test]
    fn incremental_q_matches_direct_recomputation() {
        use rand::Rng;
        let mut rng = crate::seed::rng(23, crate::seed::Role::DatasetGraph, &[]);
        for _ in 0..25 {
            let n = rng.gen_range(3..12);
            let mut edges = Vec::new();
            for u in 0..n {
                for v in (u + 1)..n {
                    if rng.gen::<f64>() < 0.35 {
                        edges.push((u, v));
                    }
                }
            }
            let g = Graph::from_edges(n, edges).unwrap();
            let (_, steps) = greedy_modularity_with_trace(&g);
            for step in steps {
                let direct = modularity(&g, &step.partition).unwrap();
                assert!(
                    (direct - step.modularity).abs() <= 1e-9,
                    "incremental {} vs direct {}",
                    step.modularity,
                    direct
                );
            }
        }
    }

    #[test]
    fn brute_force_examples() {
        let triangle = Graph::from_edges(3, vec![(0, 1), (1, 2), (0, 2)]).unwrap();
        let (p, q) = brute_force_best_partition(&triangle).unwrap();
        assert_eq!(p.num_communities(), 1);
        assert_abs_diff_eq!(q, 0.0, epsilon = 1e-15);

        let (p, q) = brute_force_best_partition(&two_disjoint_triangles()).unwrap();
        assert_eq!(p.num_communities(), 2);
        assert_abs_diff_eq!(q, 0.5, epsilon = 1e-15);

        let edge = Graph::from_edges(2, vec![(0, 1)]).unwrap();
        let (p, q) = brute_force_best_partition(&edge).unwrap();
        assert_eq!(p.num_communities(), 1);
        assert_abs_diff_eq!(q, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn brute_force_rejects_large_graphs() {
        let g = Graph::from_edges(11, vec![(0, 1)]).unwrap();
        assert!(matches!(
            brute_force_best_partition(&g),
            Err(Error::GraphTooLarge(11))
        ));
    }

    #[test]
    fn community_subgraphs_cover_and_partition() {
        let g = two_triangles_bridge();
        let p = greedy_modularity_communities(&g);
        let subs = community_subgraphs(&g, &p).unwrap();
        assert_eq!(subs.len(), p.num_communities());
        let mut union = NodeMask::new(6);
        let mut total = 0;
        for (sub, mask) in &subs {
            assert_eq!(sub.num_nodes(), mask.count_ones());
            total += mask.count_ones();
            union = union.union(mask).unwrap();
        }
        assert_eq!(total, 6);
        assert_eq!(union, NodeMask::all(6));
    }

    #[test]
    fn community_subgraphs_trivial_partitions() {
        let g = two_disjoint_triangles();
        let single = community_subgraphs(&g, &Partition::single(6)).unwrap();
        assert_eq!(single.len(), 1);
        assert_eq!(single[0].0.edges(), g.edges());

        let singles = community_subgraphs(&g, &Partition::singletons(6)).unwrap();
        assert_eq!(singles.len(), 6);
        assert!(singles.iter().all(|(sub, _)| sub.num_nodes() == 1));
    }
}
