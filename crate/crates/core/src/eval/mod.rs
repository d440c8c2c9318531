//! Evaluation harness: synthetic structure-OOD benchmark, a
//! propagation-plus-linear-classifier training loop with per-epoch
//! augmentation, F1 metrics, and the leave-one-domain-out protocol.

mod metrics;
mod model;
mod protocol;
mod synth;
mod train;

pub use metrics::{micro_macro_f1, F1Scores};
pub use model::{loss_and_gradient, predict, propagate_features, Batch, LinearModel};
pub use protocol::{
    leave_one_domain_out, leave_one_domain_out_seeds, MetricsReport, RunScores, TaskReport,
};
pub use synth::{synthesize_ood_benchmark, SynthConfig};
pub use train::{train, TrainOutcome};

use serde::{Deserialize, Serialize};

use crate::cluster::AddConfig;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::sampler::DropConfig;
use crate::spectral::AffinityConfig;

/// A multi-domain node classification dataset: one labeled graph per
/// domain, all sharing the feature dimension and class set.
#[derive(Debug, Clone)]
pub struct DomainDataset {
    pub graphs: Vec<Graph>,
    pub num_classes: usize,
    pub feature_dim: usize,
}

impl DomainDataset {
    pub fn new(graphs: Vec<Graph>, num_classes: usize) -> Result<Self> {
        let feature_dim = graphs.first().map_or(0, Graph::feature_dim);
        for g in &graphs {
            if g.feature_dim() != feature_dim {
                return Err(Error::Shape(format!(
                    "domain {} has feature dim {}, expected {feature_dim}",
                    g.domain_tag(),
                    g.feature_dim()
                )));
            }
            let labels = g.labels().ok_or_else(|| {
                Error::Config(format!("domain {} has no labels", g.domain_tag()))
            })?;
            if let Some(&bad) = labels.iter().find(|&&l| l >= num_classes) {
                return Err(Error::IndexOutOfRange {
                    index: bad,
                    num_nodes: num_classes,
                });
            }
        }
        Ok(Self {
            graphs,
            num_classes,
            feature_dim,
        })
    }

    pub fn num_domains(&self) -> usize {
        self.graphs.len()
    }
}

/// How to cluster node features for the edge-adding step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterSpec {
    pub k: usize,
    pub affinity: AffinityConfig,
    pub seed: u64,
}

impl ClusterSpec {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            affinity: AffinityConfig::default(),
            seed: 0,
        }
    }
}

/// Which augmenter (if any) rewrites each source graph at every epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum AugmentPlan {
    /// Uniform random edge dropping (the baseline the weighted strategies
    /// are measured against).
    RandomDrop { keep_prob: f64, seed: u64 },
    /// Low-weight edge dropping only.
    Drop { drop: DropConfig },
    /// Sampled cluster edges replace the original structure entirely.
    AddOnly { add: AddConfig, cluster: ClusterSpec },
    /// Original edges plus sampled cluster edges.
    KeepAdd { add: AddConfig, cluster: ClusterSpec },
    /// Low-weight dropping followed by cluster-edge adding.
    DropAdd {
        drop: DropConfig,
        add: AddConfig,
        cluster: ClusterSpec,
    },
}

impl AugmentPlan {
    pub fn cluster_spec(&self) -> Option<&ClusterSpec> {
        match self {
            AugmentPlan::AddOnly { cluster, .. }
            | AugmentPlan::KeepAdd { cluster, .. }
            | AugmentPlan::DropAdd { cluster, .. } => Some(cluster),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            AugmentPlan::RandomDrop { keep_prob, .. } => {
                if !(0.0..=1.0).contains(keep_prob) {
                    return Err(Error::Probability(*keep_prob));
                }
            }
            AugmentPlan::Drop { drop } => drop.validate()?,
            AugmentPlan::AddOnly { add, cluster } | AugmentPlan::KeepAdd { add, cluster } => {
                add.validate()?;
                cluster.affinity.validate()?;
                if cluster.k < 2 {
                    return Err(Error::Config(format!(
                        "cluster count {} must be > 1",
                        cluster.k
                    )));
                }
            }
            AugmentPlan::DropAdd { drop, add, cluster } => {
                drop.validate()?;
                add.validate()?;
                cluster.affinity.validate()?;
                if cluster.k < 2 {
                    return Err(Error::Config(format!(
                        "cluster count {} must be > 1",
                        cluster.k
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Training-loop configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Powers of the self-loop-normalized adjacency applied to features.
    pub propagation_k: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    /// L2 penalty coefficient on the weight matrix.
    pub l2: f64,
    pub augment: Option<AugmentPlan>,
    pub seed: u64,
    /// Fraction of nodes per source graph excluded from the training loss.
    #[serde(default)]
    pub holdout_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            propagation_k: 2,
            learning_rate: 0.001,
            epochs: 100,
            l2: 0.0,
            augment: None,
            seed: 0,
            holdout_fraction: 0.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::Config(format!(
                "learning_rate {} must be positive",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.holdout_fraction) {
            return Err(Error::Config(format!(
                "holdout_fraction {} outside [0, 1)",
                self.holdout_fraction
            )));
        }
        if self.l2 < 0.0 || !self.l2.is_finite() {
            return Err(Error::Config(format!("l2 {} must be nonnegative", self.l2)));
        }
        if let Some(plan) = &self.augment {
            plan.validate()?;
        }
        Ok(())
    }
}
