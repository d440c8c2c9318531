//! Synthetic structure-OOD benchmark generator.
//!
//! Every domain draws node features from the same class-conditional
//! Gaussians (invariant feature/label distribution), while its adjacency
//! comes from a stochastic block model whose intra-/inter-class
//! probabilities are interpolated toward each other by the domain's jitter,
//! followed by random rewiring of a jitter-proportional fraction of edges.
//! The result is a family of graphs that agree on p(X, Y) and disagree on
//! structure, increasingly so with jitter.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::{
    unit_gaussian, unit_uniform, STREAM_SYNTH_CENTERS, STREAM_SYNTH_EDGES, STREAM_SYNTH_FEATURES,
    STREAM_SYNTH_REWIRE,
};

use super::DomainDataset;

/// Class centers are standard Gaussians scaled by this factor; node
/// features add unit-variance noise. The ratio fixes how separable the
/// classes are from raw features alone.
const CENTER_STD: f64 = 1.0;
const FEATURE_NOISE_STD: f64 = 1.0;
/// Fraction of edges rewired per unit of jitter.
const REWIRE_PER_JITTER: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub num_domains: usize,
    pub nodes_per_domain: usize,
    pub num_classes: usize,
    pub feature_dim: usize,
    /// Same-class edge probability before jitter.
    pub intra_p: f64,
    /// Cross-class edge probability before jitter.
    pub inter_p: f64,
    /// Per-domain structure shift in [0, 1]; 0 leaves the block model
    /// untouched, 1 swaps the intra/inter probabilities outright.
    pub structure_jitter: Vec<f64>,
    pub seed: u64,
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_domains == 0 || self.nodes_per_domain == 0 {
            return Err(Error::Config("need at least one domain and node".into()));
        }
        if self.num_classes == 0 || self.feature_dim == 0 {
            return Err(Error::Config(
                "need at least one class and feature dimension".into(),
            ));
        }
        for (name, p) in [("intra_p", self.intra_p), ("inter_p", self.inter_p)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} {p} outside [0, 1]")));
            }
        }
        if self.structure_jitter.len() != self.num_domains {
            return Err(Error::Shape(format!(
                "{} jitter values for {} domains",
                self.structure_jitter.len(),
                self.num_domains
            )));
        }
        if let Some(j) = self
            .structure_jitter
            .iter()
            .find(|j| !(0.0..=1.0).contains(*j))
        {
            return Err(Error::Config(format!("jitter {j} outside [0, 1]")));
        }
        Ok(())
    }
}

/// Canonical rank of the unordered pair `(u, v)`, `u < v`, among all pairs.
fn pair_rank(u: usize, v: usize, n: usize) -> u64 {
    debug_assert!(u < v && v < n);
    (u * n - u * (u + 1) / 2 + (v - u - 1)) as u64
}

/// Inverse of `pair_rank`.
fn unrank_pair(mut rank: u64, n: usize) -> (usize, usize) {
    let mut u = 0usize;
    loop {
        let row = (n - 1 - u) as u64;
        if rank < row {
            return (u, u + 1 + rank as usize);
        }
        rank -= row;
        u += 1;
    }
}

pub fn synthesize_ood_benchmark(config: &SynthConfig) -> Result<DomainDataset> {
    config.validate()?;
    let n = config.nodes_per_domain;
    let c = config.num_classes;
    let d = config.feature_dim;
    let seed = config.seed;

    let mut centers = Array2::zeros((c, d));
    for class in 0..c {
        for j in 0..d {
            centers[(class, j)] =
                CENTER_STD * unit_gaussian(seed, STREAM_SYNTH_CENTERS, class as u64, j as u64);
        }
    }

    let mut graphs = Vec::with_capacity(config.num_domains);
    for (domain, &jitter) in config.structure_jitter.iter().enumerate() {
        let labels: Vec<usize> = (0..n).map(|i| i % c).collect();

        let mut features = Array2::zeros((n, d));
        for i in 0..n {
            for j in 0..d {
                features[(i, j)] = centers[(labels[i], j)]
                    + FEATURE_NOISE_STD
                        * unit_gaussian(
                            seed,
                            STREAM_SYNTH_FEATURES,
                            domain as u64,
                            (i * d + j) as u64,
                        );
            }
        }

        // Block model with jitter-interpolated probabilities.
        let intra = (1.0 - jitter) * config.intra_p + jitter * config.inter_p;
        let inter = (1.0 - jitter) * config.inter_p + jitter * config.intra_p;
        let mut edges = std::collections::BTreeSet::new();
        for u in 0..n {
            for v in (u + 1)..n {
                let p = if labels[u] == labels[v] { intra } else { inter };
                if unit_uniform(seed, STREAM_SYNTH_EDGES, domain as u64, pair_rank(u, v, n)) < p {
                    edges.insert((u, v));
                }
            }
        }

        // Domain-specific rewiring: replace a jitter-proportional fraction
        // of edges with uniformly random pairs.
        let rewire_frac = REWIRE_PER_JITTER * jitter;
        if rewire_frac > 0.0 && n >= 2 {
            let num_pairs = (n * (n - 1) / 2) as u64;
            let snapshot: Vec<(usize, usize)> = edges.iter().copied().collect();
            for (rank, &(u, v)) in snapshot.iter().enumerate() {
                let r = unit_uniform(seed, STREAM_SYNTH_REWIRE, domain as u64, 2 * rank as u64);
                if r < rewire_frac {
                    edges.remove(&(u, v));
                    let draw = unit_uniform(
                        seed,
                        STREAM_SYNTH_REWIRE,
                        domain as u64,
                        2 * rank as u64 + 1,
                    );
                    let new_rank = ((draw * num_pairs as f64) as u64).min(num_pairs - 1);
                    edges.insert(unrank_pair(new_rank, n));
                }
            }
        }

        let graph = Graph::from_edges(
            n,
            edges.iter().map(|&(u, v)| (u, v, 1.0)),
            format!("domain{domain}"),
        )?
        .with_features(features)?
        .with_labels(labels)?;
        graphs.push(graph);
    }

    DomainDataset::new(graphs, c)
}
