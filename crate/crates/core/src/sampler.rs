//! Edge-dropping: per-edge keep probabilities plus Bernoulli masking.
//!
//! Three strategies turn the edge weight matrix `P` into a keep-probability
//! matrix `P^D`: a hard threshold at the k-th smallest weight, a division
//! normalization, and an empirical-CDF normalization. A symmetric Bernoulli
//! mask sampled from `P^D` then selects the surviving edges.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::{self, STREAM_DROP};
use crate::sparse::SparseSymMatrix;
use crate::weights::edge_weight_matrix;

/// Which keep-probability rule to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropStrategy {
    /// Keep weights at/above the threshold surely, the rest with `rho`.
    ThresholdCutoff,
    /// `P^D = 1 - (1 - P) * tau / (tau + P)`.
    DivisionNorm,
    /// `P^D = P + (1 - P) * cdf(P)` under the empirical weight CDF.
    CdfNorm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DropConfig {
    pub strategy: DropStrategy,
    /// Edge dropping ratio for the threshold strategy.
    pub alpha: f64,
    /// Default keep probability below the threshold.
    pub rho: f64,
    /// Division-normalization parameter.
    pub tau_param: f64,
    pub seed: u64,
    pub epoch: u64,
}

impl DropConfig {
    pub fn threshold(alpha: f64, rho: f64, seed: u64) -> Self {
        Self {
            strategy: DropStrategy::ThresholdCutoff,
            alpha,
            rho,
            tau_param: 1.0,
            seed,
            epoch: 0,
        }
    }

    pub fn at_epoch(mut self, epoch: u64) -> Self {
        self.epoch = epoch;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Config(format!(
                "alpha {} outside [0, 1]",
                self.alpha
            )));
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::Config(format!("rho {} outside [0, 1]", self.rho)));
        }
        if !(self.tau_param > 0.0) {
            return Err(Error::Config(format!(
                "tau {} must be positive",
                self.tau_param
            )));
        }
        Ok(())
    }
}

/// k-th smallest weight with `k = floor(alpha * |E|) + 1` (clamped to |E|),
/// so that under distinct weights exactly `floor(alpha * |E|)` edges fall
/// strictly below the returned threshold.
pub fn threshold_tau(weights: &[f64], alpha: f64) -> Result<f64> {
    if weights.is_empty() {
        return Err(Error::EmptyWeights);
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Config(format!("alpha {alpha} outside [0, 1]")));
    }
    let mut sorted = weights.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite weights"));
    let k = ((alpha * sorted.len() as f64).floor() as usize + 1).min(sorted.len());
    Ok(sorted[k - 1])
}

/// Threshold cutoff: `rho` strictly below `tau`, certain keep at/above.
pub fn drop_probabilities_threshold(p: &SparseSymMatrix, tau: f64, rho: f64) -> SparseSymMatrix {
    p.map_values(|w| if w < tau { rho } else { 1.0 })
}

/// Division normalization: `1 - (1 - P) * tau / (tau + P)`.
pub fn drop_probabilities_division(p: &SparseSymMatrix, tau_param: f64) -> Result<SparseSymMatrix> {
    if !(tau_param > 0.0) {
        return Err(Error::Config(format!("tau {tau_param} must be positive")));
    }
    Ok(p.map_values(|w| 1.0 - (1.0 - w) * tau_param / (tau_param + w)))
}

/// CDF normalization: `P + (1 - P) * f(P)` where `f` is the empirical CDF
/// (right-continuous, `<=`) of this graph's edge weights.
pub fn drop_probabilities_cdf(p: &SparseSymMatrix) -> SparseSymMatrix {
    let mut sorted: Vec<f64> = p.values().collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite weights"));
    let n = sorted.len() as f64;
    p.map_values(|w| {
        // #{weights <= w} via binary search for the first element > w.
        let count = sorted.partition_point(|&v| v <= w);
        w + (1.0 - w) * count as f64 / n
    })
}

/// One symmetric Bernoulli draw per unordered edge, keyed by
/// `(seed, epoch, canonical edge index)`.
pub fn bernoulli_mask(probs: &SparseSymMatrix, seed: u64, epoch: u64) -> Result<SparseSymMatrix> {
    bernoulli_mask_stream(probs, STREAM_DROP, seed, epoch)
}

pub(crate) fn bernoulli_mask_stream(
    probs: &SparseSymMatrix,
    stream: u64,
    seed: u64,
    epoch: u64,
) -> Result<SparseSymMatrix> {
    for v in probs.values() {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Probability(v));
        }
    }
    let mut mask = SparseSymMatrix::new(probs.dim());
    for (index, ((i, j), prob)) in probs.iter().enumerate() {
        let u = rng::unit_uniform(seed, stream, epoch, index as u64);
        mask.set(i, j, if u < prob { 1.0 } else { 0.0 });
    }
    Ok(mask)
}

/// Full low-weight edge dropping: weight the edges, apply the configured
/// strategy, draw the mask, and keep the surviving edges (original weights,
/// features, and labels untouched).
pub fn apply_drop(g: &Graph, config: &DropConfig) -> Result<Graph> {
    config.validate()?;
    let p = edge_weight_matrix(g);
    let probs = match config.strategy {
        DropStrategy::ThresholdCutoff => {
            let weights: Vec<f64> = p.values().collect();
            if weights.is_empty() {
                return g.with_edge_set(std::iter::empty());
            }
            let tau = threshold_tau(&weights, config.alpha)?;
            drop_probabilities_threshold(&p, tau, config.rho)
        }
        DropStrategy::DivisionNorm => drop_probabilities_division(&p, config.tau_param)?,
        DropStrategy::CdfNorm => drop_probabilities_cdf(&p),
    };
    let mask = bernoulli_mask(&probs, config.seed, config.epoch)?;
    filter_edges(g, &mask)
}

/// Uniform random edge dropping: every edge kept independently with
/// `keep_prob`. This is the random-dropping baseline the weighted
/// strategies are compared against.
pub fn apply_random_drop(g: &Graph, keep_prob: f64, seed: u64, epoch: u64) -> Result<Graph> {
    if !(0.0..=1.0).contains(&keep_prob) {
        return Err(Error::Probability(keep_prob));
    }
    let probs = g.adjacency().map_values(|_| keep_prob);
    let mask = bernoulli_mask(&probs, seed, epoch)?;
    filter_edges(g, &mask)
}

fn filter_edges(g: &Graph, mask: &SparseSymMatrix) -> Result<Graph> {
    g.with_edge_set(
        g.edges()
            .filter(|&(i, j, _)| mask.get(i, j) == 1.0)
            .collect::<Vec<_>>(),
    )
}
