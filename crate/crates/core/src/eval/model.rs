//! Propagation-plus-linear classifier: features are smoothed by powers of
//! the self-loop-normalized adjacency, then scored by a single weight
//! matrix trained with multinomial logistic regression.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::graph::{normalized_adjacency, Graph};
use crate::sparse::SparseSymMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    /// `d x C` weight matrix.
    pub weight: Array2<f64>,
    /// Per-class bias.
    pub bias: Array1<f64>,
}

impl LinearModel {
    pub fn zeros(feature_dim: usize, num_classes: usize) -> Self {
        Self {
            weight: Array2::zeros((feature_dim, num_classes)),
            bias: Array1::zeros(num_classes),
        }
    }

    pub fn num_classes(&self) -> usize {
        self.weight.ncols()
    }

    pub fn feature_dim(&self) -> usize {
        self.weight.nrows()
    }

    /// `X W + b` for a feature matrix.
    pub fn scores(&self, features: &Array2<f64>) -> Result<Array2<f64>> {
        if features.ncols() != self.feature_dim() {
            return Err(Error::Shape(format!(
                "features have dim {}, model expects {}",
                features.ncols(),
                self.feature_dim()
            )));
        }
        Ok(features.dot(&self.weight) + &self.bias)
    }
}

fn spmm(a: &SparseSymMatrix, x: &Array2<f64>) -> Array2<f64> {
    let d = x.ncols();
    let mut out = Array2::zeros(x.dim());
    for ((i, j), v) in a.iter() {
        for c in 0..d {
            out[(i, c)] += v * x[(j, c)];
            if i != j {
                out[(j, c)] += v * x[(i, c)];
            }
        }
    }
    out
}

/// `A_hat^k X` with `A_hat` the self-loop-normalized adjacency; `k = 0`
/// returns the features untouched.
pub fn propagate_features(g: &Graph, k: usize) -> Array2<f64> {
    let mut x = g.features().clone();
    if k == 0 {
        return x;
    }
    let a_hat = normalized_adjacency(g, true);
    for _ in 0..k {
        x = spmm(&a_hat, &x);
    }
    x
}

/// One labeled feature matrix inside a loss evaluation. `mask` (when
/// present) selects the rows that contribute to the loss.
pub struct Batch<'a> {
    pub features: &'a Array2<f64>,
    pub labels: &'a [usize],
    pub mask: Option<&'a [bool]>,
}

/// Mean multinomial cross-entropy over the batches (uniform across
/// batches, mean over contributing rows within each), plus `l2 * ||W||_F^2`.
/// Returns the loss with its exact gradient.
pub fn loss_and_gradient(
    batches: &[Batch<'_>],
    model: &LinearModel,
    l2: f64,
) -> Result<(f64, Array2<f64>, Array1<f64>)> {
    if batches.is_empty() {
        return Err(Error::Config("no batches to evaluate".into()));
    }
    let c = model.num_classes();
    let mut total_loss = 0.0;
    let mut grad_w = Array2::zeros(model.weight.dim());
    let mut grad_b = Array1::zeros(c);
    let inv_batches = 1.0 / batches.len() as f64;

    for batch in batches {
        let n = batch.features.nrows();
        if batch.labels.len() != n {
            return Err(Error::Shape(format!(
                "{} labels for {} rows",
                batch.labels.len(),
                n
            )));
        }
        if let Some(&bad) = batch.labels.iter().find(|&&l| l >= c) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                num_nodes: c,
            });
        }
        let active = |i: usize| batch.mask.map_or(true, |m| m[i]);
        let n_active = (0..n).filter(|&i| active(i)).count();
        if n_active == 0 {
            return Err(Error::Config("batch has no active rows".into()));
        }
        let scores = model.scores(batch.features)?;
        let mut grad_z = Array2::zeros((n, c));
        let mut loss = 0.0;
        for i in 0..n {
            if !active(i) {
                continue;
            }
            let row = scores.row(i);
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + row.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
            loss -= row[batch.labels[i]] - lse;
            for j in 0..c {
                let p = (row[j] - lse).exp();
                grad_z[(i, j)] = p - if j == batch.labels[i] { 1.0 } else { 0.0 };
            }
        }
        let scale = inv_batches / n_active as f64;
        total_loss += loss * scale;
        grad_w += &(batch.features.t().dot(&grad_z) * scale);
        grad_b += &(grad_z.sum_axis(ndarray::Axis(0)) * scale);
    }

    if l2 > 0.0 {
        total_loss += l2 * model.weight.iter().map(|w| w * w).sum::<f64>();
        grad_w += &(&model.weight * (2.0 * l2));
    }
    Ok((total_loss, grad_w, grad_b))
}

/// Class predictions on a graph: propagate, score, argmax with ties going
/// to the lowest class id.
pub fn predict(model: &LinearModel, g: &Graph, propagation_k: usize) -> Result<Vec<usize>> {
    let x = propagate_features(g, propagation_k);
    let scores = model.scores(&x)?;
    Ok(scores
        .rows()
        .into_iter()
        .map(|row| {
            let mut best = 0;
            let mut best_score = f64::NEG_INFINITY;
            for (j, &s) in row.iter().enumerate() {
                if s > best_score {
                    best_score = s;
                    best = j;
                }
            }
            best
        })
        .collect())
}
