//! Cluster-induced edge adding and graph merging.
//!
//! Clusters become complete subgraphs whose edges carry hypergraph-walk
//! weights `1/delta_c` (cluster size). A threshold over the k-th largest
//! weight assigns add-probabilities, a Bernoulli mask samples the added
//! edges, and the result merges with the dropped graph by union or mix-up.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::STREAM_ADD;
use crate::sampler::{bernoulli_mask_stream, DropConfig};
use crate::sparse::SparseSymMatrix;
use crate::spectral::ClusterAssignment;

/// Which printed threshold rule to use for add-probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AddVariant {
    /// `epsilon` below the threshold, `rho` at/above it.
    TwoTier,
    /// `rho` below the threshold, certain keep at/above it.
    KeepHigh,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MergeRule {
    /// `sign(A^C + A^D)`: unweighted union of edge sets.
    Union,
    /// `eta * A^C + (1 - eta) * A^D`: weighted sum.
    Mixup,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AddConfig {
    /// Edge adding ratio selecting the k-th largest cluster-edge weight.
    pub beta: f64,
    /// Add probability below the threshold (TwoTier).
    pub epsilon: f64,
    /// Add probability at/above the threshold (TwoTier) or below (KeepHigh).
    pub rho: f64,
    pub variant: AddVariant,
    pub merge: MergeRule,
    /// Mix-up weight on the cluster side.
    pub eta: f64,
    pub seed: u64,
    pub epoch: u64,
}

impl AddConfig {
    pub fn two_tier(beta: f64, epsilon: f64, rho: f64, seed: u64) -> Self {
        Self {
            beta,
            epsilon,
            rho,
            variant: AddVariant::TwoTier,
            merge: MergeRule::Union,
            eta: 0.5,
            seed,
            epoch: 0,
        }
    }

    pub fn at_epoch(mut self, epoch: u64) -> Self {
        self.epoch = epoch;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("beta", self.beta),
            ("epsilon", self.epsilon),
            ("rho", self.rho),
            ("eta", self.eta),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} {v} outside [0, 1]")));
            }
        }
        if self.epsilon > self.rho {
            return Err(Error::Config(format!(
                "epsilon {} must not exceed rho {}",
                self.epsilon, self.rho
            )));
        }
        Ok(())
    }
}

/// `n x K` one-hot matrix with `B_ij = 1` iff node `i` is in cluster `j`.
pub fn incidence_matrix(assignment: &ClusterAssignment) -> Array2<f64> {
    let mut b = Array2::zeros((assignment.num_nodes(), assignment.k()));
    for (i, &c) in assignment.labels().iter().enumerate() {
        b[(i, c)] = 1.0;
    }
    b
}

fn validate_incidence(b: &Array2<f64>) -> Result<Vec<usize>> {
    let mut labels = Vec::with_capacity(b.nrows());
    for (i, row) in b.rows().into_iter().enumerate() {
        let mut hit = None;
        for (j, &v) in row.iter().enumerate() {
            if v == 1.0 {
                if hit.replace(j).is_some() {
                    return Err(Error::Config(format!("row {i} has more than one 1")));
                }
            } else if v != 0.0 {
                return Err(Error::Config(format!(
                    "incidence entry ({i}, {j}) = {v} is not 0/1"
                )));
            }
        }
        labels.push(hit.ok_or_else(|| Error::Config(format!("row {i} has no cluster")))?);
    }
    Ok(labels)
}

fn members_by_cluster(labels: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut members = vec![Vec::new(); k];
    for (i, &c) in labels.iter().enumerate() {
        members[c].push(i);
    }
    members
}

/// Cluster-induced adjacency `sign(B B^T)` with the diagonal removed: each
/// cluster becomes a complete subgraph.
pub fn cluster_graph(b: &Array2<f64>) -> Result<SparseSymMatrix> {
    let labels = validate_incidence(b)?;
    let mut out = SparseSymMatrix::new(b.nrows());
    for members in members_by_cluster(&labels, b.ncols()) {
        for (a, &i) in members.iter().enumerate() {
            for &j in &members[(a + 1)..] {
                out.set(i, j, 1.0);
            }
        }
    }
    Ok(out)
}

/// Hypergraph-walk weights `B D_e^{-1} B^T`: entry `1/delta_c` for every
/// pair sharing cluster `c`, diagonal included so rows sum to exactly 1.
/// Errors on an empty cluster column.
pub fn cluster_edge_weights(b: &Array2<f64>) -> Result<SparseSymMatrix> {
    let labels = validate_incidence(b)?;
    let members = members_by_cluster(&labels, b.ncols());
    if let Some(c) = members.iter().position(Vec::is_empty) {
        return Err(Error::EmptyCluster(c));
    }
    let mut out = SparseSymMatrix::new(b.nrows());
    for group in &members {
        let w = 1.0 / group.len() as f64;
        for (a, &i) in group.iter().enumerate() {
            out.set(i, i, w);
            for &j in &group[(a + 1)..] {
                out.set(i, j, w);
            }
        }
    }
    Ok(out)
}

/// Per-edge add probabilities from cluster-edge weights. The threshold is
/// the k-th largest weight with `k = floor(beta * |E^G|) + 1` (clamped).
/// Diagonal entries in the input are ignored.
pub fn add_probabilities(pg: &SparseSymMatrix, config: &AddConfig) -> Result<SparseSymMatrix> {
    config.validate()?;
    let off = pg.without_diagonal();
    if off.nnz() == 0 {
        return Ok(off);
    }
    let mut sorted: Vec<f64> = off.values().collect();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite weights"));
    let k = ((config.beta * sorted.len() as f64).floor() as usize + 1).min(sorted.len());
    let tau = sorted[k - 1];
    Ok(match config.variant {
        AddVariant::TwoTier => off.map_values(|w| if w < tau { config.epsilon } else { config.rho }),
        AddVariant::KeepHigh => off.map_values(|w| if w < tau { config.rho } else { 1.0 }),
    })
}

/// Sample the amended cluster-induced graph `G^C`: Bernoulli-selected
/// cluster edges over `g`'s node set, keeping `g`'s features and labels.
/// Draws use a stream tag distinct from edge dropping.
pub fn sample_cluster_edges(
    g: &Graph,
    assignment: &ClusterAssignment,
    config: &AddConfig,
) -> Result<Graph> {
    if assignment.num_nodes() != g.num_nodes() {
        return Err(Error::Shape(format!(
            "assignment covers {} nodes, graph has {}",
            assignment.num_nodes(),
            g.num_nodes()
        )));
    }
    let b = incidence_matrix(assignment);
    let pg = cluster_edge_weights(&b)?;
    let probs = add_probabilities(&pg, config)?;
    let mask = bernoulli_mask_stream(&probs, STREAM_ADD, config.seed, config.epoch)?;
    g.with_edge_set(
        mask.iter()
            .filter(|&(_, v)| v == 1.0)
            .map(|((i, j), _)| (i, j, 1.0)),
    )
}

/// `sign(A^C + A^D)`: binary union of the two edge sets.
pub fn merge_union(ac: &SparseSymMatrix, ad: &SparseSymMatrix) -> Result<SparseSymMatrix> {
    if ac.dim() != ad.dim() {
        return Err(Error::Shape(format!(
            "merge dims {} vs {}",
            ac.dim(),
            ad.dim()
        )));
    }
    let mut out = SparseSymMatrix::new(ac.dim());
    for ((i, j), v) in ac.iter().chain(ad.iter()) {
        if v != 0.0 {
            out.set(i, j, 1.0);
        }
    }
    Ok(out)
}

/// `eta * A^C + (1 - eta) * A^D` over the union support; exact-zero results
/// are pruned.
pub fn merge_mixup(
    ac: &SparseSymMatrix,
    ad: &SparseSymMatrix,
    eta: f64,
) -> Result<SparseSymMatrix> {
    if ac.dim() != ad.dim() {
        return Err(Error::Shape(format!(
            "merge dims {} vs {}",
            ac.dim(),
            ad.dim()
        )));
    }
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::Config(format!("eta {eta} outside [0, 1]")));
    }
    let mut out = SparseSymMatrix::new(ac.dim());
    for ((i, j), _) in ac.iter().chain(ad.iter()) {
        out.set(i, j, eta * ac.get(i, j) + (1.0 - eta) * ad.get(i, j));
    }
    Ok(out.pruned())
}

/// Two-step augmentation: low-weight edge dropping, then (optionally)
/// cluster-edge adding merged per the add config. Features, labels, and
/// node count pass through untouched.
pub fn augment(
    g: &Graph,
    drop: &DropConfig,
    add: Option<(&ClusterAssignment, &AddConfig)>,
) -> Result<Graph> {
    let dropped = crate::sampler::apply_drop(g, drop)?;
    let Some((assignment, add_cfg)) = add else {
        return Ok(dropped);
    };
    let cluster = sample_cluster_edges(g, assignment, add_cfg)?;
    let merged = match add_cfg.merge {
        MergeRule::Union => merge_union(&cluster.adjacency(), &dropped.adjacency())?,
        MergeRule::Mixup => merge_mixup(
            &cluster.adjacency(),
            &dropped.weighted_adjacency(),
            add_cfg.eta,
        )?,
    };
    g.with_edge_set(merged.iter().map(|((i, j), w)| (i, j, w)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn assignment(labels: &[usize], k: usize) -> ClusterAssignment {
        ClusterAssignment::new(labels.to_vec(), k).unwrap()
    }

    #[test]
    fn incidence_basics() {
        let b = incidence_matrix(&assignment(&[0, 0, 1, 1], 2));
        assert_eq!(b, ndarray::arr2(&[[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 1.0]]));

        let single = incidence_matrix(&assignment(&[0, 0, 0], 1));
        assert!(single.iter().all(|&v| v == 1.0));

        let perm = incidence_matrix(&assignment(&[2, 0, 1], 3));
        assert_eq!(perm[(0, 2)], 1.0);
        assert_eq!(perm[(1, 0)], 1.0);
        assert_eq!(perm[(2, 1)], 1.0);
    }

    #[test]
    fn cluster_graph_complete_subgraphs() {
        let pairs = cluster_graph(&incidence_matrix(&assignment(&[0, 0, 1, 1], 2))).unwrap();
        let edges: Vec<_> = pairs.iter().map(|(k, _)| k).collect();
        assert_eq!(edges, vec![(0, 1), (2, 3)]);

        let tri = cluster_graph(&incidence_matrix(&assignment(&[0, 0, 0], 1))).unwrap();
        assert_eq!(tri.nnz(), 3);

        let singletons = cluster_graph(&incidence_matrix(&assignment(&[0, 1, 2], 3))).unwrap();
        assert_eq!(singletons.nnz(), 0);
    }

    #[test]
    fn cluster_weights_and_row_sums() {
        let pg = cluster_edge_weights(&incidence_matrix(&assignment(&[0, 0, 1, 1], 2))).unwrap();
        assert_eq!(pg.get(0, 1), 0.5);
        assert_eq!(pg.get(0, 0), 0.5);
        assert_eq!(pg.get(0, 2), 0.0);

        let five = cluster_edge_weights(&incidence_matrix(&assignment(&[0; 5], 1))).unwrap();
        assert_eq!(five.get(1, 3), 0.2);

        for sum in pg.row_sums() {
            assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn cluster_weights_reject_empty_cluster() {
        // Column 1 never used.
        let b = incidence_matrix(&assignment(&[0, 0, 2], 3));
        assert!(matches!(
            cluster_edge_weights(&b),
            Err(Error::EmptyCluster(1))
        ));
    }

    #[test]
    fn add_probabilities_two_tier_split() {
        // Clusters of sizes 2 and 5: one edge at 1/2, ten at 1/5.
        let labels = [0, 0, 1, 1, 1, 1, 1];
        let pg = cluster_edge_weights(&incidence_matrix(&assignment(&labels, 2))).unwrap();
        let mut cfg = AddConfig::two_tier(0.05, 0.1, 0.9, 0);
        let probs = add_probabilities(&pg, &cfg).unwrap();
        assert_eq!(probs.get(0, 1), 0.9);
        assert_eq!(probs.get(2, 3), 0.1);
        assert_eq!(probs.nnz(), 11);

        // beta = 1: threshold is the minimum weight, everything >= tau.
        cfg.beta = 1.0;
        let all_rho = add_probabilities(&pg, &cfg).unwrap();
        assert!(all_rho.values().all(|v| v == 0.9));

        cfg.variant = AddVariant::KeepHigh;
        let all_one = add_probabilities(&pg, &cfg).unwrap();
        assert!(all_one.values().all(|v| v == 1.0));
    }

    #[test]
    fn keep_high_rho_zero_is_deterministic_top_slice() {
        let labels = [0, 0, 1, 1, 1, 1, 1];
        let g = Graph::from_unit_edges(7, &[], "t").unwrap();
        let mut cfg = AddConfig::two_tier(0.05, 0.0, 0.0, 3);
        cfg.variant = AddVariant::KeepHigh;
        for epoch in 0..50 {
            let gc = sample_cluster_edges(&g, &assignment(&labels, 2), &cfg.at_epoch(epoch)).unwrap();
            let edges: Vec<_> = gc.edges().collect();
            assert_eq!(edges, vec![(0, 1, 1.0)], "epoch {epoch}");
        }
    }

    #[test]
    fn sample_extremes() {
        let labels = [0, 0, 0, 1, 1];
        let g = Graph::from_unit_edges(5, &[(0, 4)], "t").unwrap();
        let all = AddConfig::two_tier(1.0, 1.0, 1.0, 0);
        let gc = sample_cluster_edges(&g, &assignment(&labels, 2), &all).unwrap();
        assert_eq!(gc.num_edges(), 4); // triangle + pair
        assert!(!gc.has_edge(0, 4), "original edges are not carried over");

        let none = AddConfig::two_tier(1.0, 0.0, 0.0, 0);
        let gc = sample_cluster_edges(&g, &assignment(&labels, 2), &none).unwrap();
        assert_eq!(gc.num_edges(), 0);
    }

    #[test]
    fn sampled_fraction_within_binomial_ci() {
        // One cluster of 21 nodes: 210 edges, all probability 0.5.
        let labels = vec![0usize; 21];
        let g = Graph::from_unit_edges(21, &[], "t").unwrap();
        let mut cfg = AddConfig::two_tier(1.0, 0.5, 0.5, 17);
        let epochs = 1000usize;
        let mut kept = 0usize;
        for epoch in 0..epochs {
            cfg = cfg.at_epoch(epoch as u64);
            kept += sample_cluster_edges(&g, &assignment(&labels, 1), &cfg)
                .unwrap()
                .num_edges();
        }
        let n = (210 * epochs) as f64;
        let z = (kept as f64 - 0.5 * n) / (0.25 * n).sqrt();
        assert!(z.abs() < 3.89, "z = {z}"); // 99.99% two-sided
    }

    #[test]
    fn union_merge_cases() {
        let mut ac = SparseSymMatrix::new(3);
        ac.set(0, 1, 1.0);
        let mut ad = SparseSymMatrix::new(3);
        ad.set(1, 2, 1.0);
        let u = merge_union(&ac, &ad).unwrap();
        assert_eq!(u.iter().map(|(k, _)| k).collect::<Vec<_>>(), vec![(0, 1), (1, 2)]);
        assert!(u.values().all(|v| v == 1.0));

        let same = merge_union(&ac, &ac).unwrap();
        assert_eq!(same.iter().map(|(k, _)| k).collect::<Vec<_>>(), vec![(0, 1)]);

        let empty = SparseSymMatrix::new(3);
        let id = merge_union(&ac, &empty).unwrap();
        assert_eq!(id.iter().map(|(k, _)| k).collect::<Vec<_>>(), vec![(0, 1)]);

        assert!(merge_union(&ac, &SparseSymMatrix::new(4)).is_err());
    }

    #[test]
    fn mixup_merge_cases() {
        let mut ac = SparseSymMatrix::new(3);
        ac.set(0, 1, 1.0);
        ac.set(1, 2, 1.0);
        let mut ad = SparseSymMatrix::new(3);
        ad.set(1, 2, 1.0);
        ad.set(0, 2, 1.0);

        assert_eq!(merge_mixup(&ac, &ad, 0.0).unwrap(), ad);
        assert_eq!(merge_mixup(&ac, &ad, 1.0).unwrap(), ac);

        let half = merge_mixup(&ac, &ad, 0.5).unwrap();
        assert_eq!(half.get(1, 2), 1.0);
        assert_eq!(half.get(0, 1), 0.5);
        assert_eq!(half.get(0, 2), 0.5);
    }

    #[test]
    fn augment_identity_when_both_steps_disabled() {
        let g = Graph::from_unit_edges(6, &[(0, 1), (1, 2), (2, 3), (4, 5)], "t")
            .unwrap()
            .with_labels(vec![0, 0, 0, 1, 1, 1])
            .unwrap();
        let drop = DropConfig::threshold(0.5, 1.0, 0);
        let add = AddConfig::two_tier(1.0, 0.0, 0.0, 0);
        let labels = assignment(&[0, 0, 0, 1, 1, 1], 2);
        let out = augment(&g, &drop, Some((&labels, &add))).unwrap();
        assert_eq!(out, g);
    }

    #[test]
    fn augment_deterministic_union_composition() {
        let g = Graph::from_unit_edges(6, &[(0, 1), (0, 2), (0, 3), (0, 4), (4, 5)], "t").unwrap();
        // Drop: alpha=1, rho=0 keeps only max-weight edges; add: everything.
        let drop = DropConfig::threshold(1.0, 0.0, 5);
        let add = AddConfig::two_tier(1.0, 1.0, 1.0, 5);
        let labels = assignment(&[0, 0, 0, 1, 1, 1], 2);
        let out = augment(&g, &drop, Some((&labels, &add))).unwrap();

        let p = crate::weights::edge_weight_matrix(&g);
        let max = p.values().fold(f64::MIN, f64::max);
        let mut expected: std::collections::BTreeSet<(usize, usize)> = p
            .iter()
            .filter(|&(_, w)| w == max)
            .map(|(k, _)| k)
            .collect();
        for e in [(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5)] {
            expected.insert(e);
        }
        let got: std::collections::BTreeSet<_> = out.edges().map(|(i, j, _)| (i, j)).collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn augment_never_touches_features_or_labels() {
        let g = Graph::from_unit_edges(4, &[(0, 1), (2, 3)], "t")
            .unwrap()
            .with_features(ndarray::arr2(&[[1.0], [2.0], [3.0], [4.0]]))
            .unwrap()
            .with_labels(vec![0, 1, 0, 1])
            .unwrap();
        let drop = DropConfig::threshold(0.5, 0.3, 2);
        let add = AddConfig::two_tier(0.5, 0.4, 0.8, 2);
        let labels = assignment(&[0, 1, 0, 1], 2);
        for epoch in 0..10 {
            let out = augment(
                &g,
                &drop.at_epoch(epoch),
                Some((&labels, &add.at_epoch(epoch))),
            )
            .unwrap();
            assert_eq!(out.features(), g.features());
            assert_eq!(out.labels(), g.labels());
            assert_eq!(out.num_nodes(), g.num_nodes());
        }
    }

    #[test]
    fn distinct_epochs_give_distinct_augmentations() {
        // 50-edge path: the 48 interior edges sit below the max weight, so
        // alpha = 1 with rho = 0.5 flips each of them per epoch.
        let edges: Vec<(usize, usize)> = (0..50).map(|i| (i, i + 1)).collect();
        let g = Graph::from_unit_edges(51, &edges, "t").unwrap();
        let drop = DropConfig::threshold(1.0, 0.5, 21);
        let mut seen = std::collections::BTreeSet::new();
        for epoch in 0..100 {
            let out = augment(&g, &drop.at_epoch(epoch), None).unwrap();
            let key: Vec<(usize, usize)> = out.edges().map(|(i, j, _)| (i, j)).collect();
            seen.insert(key);
        }
        assert!(seen.len() >= 99, "only {} distinct draws", seen.len());
    }
}
