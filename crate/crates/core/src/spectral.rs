//! Spectral clustering of node features.
//!
//! Pipeline: RBF affinity -> normalized affinity Laplacian -> k smallest
//! eigenpairs -> row-normalized spectral embedding -> k-means.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::eigen::smallest_eigenpairs;
use crate::error::{Error, Result};
use crate::rng::{SeededStream, STREAM_KMEANS};
use crate::sparse::SparseSymMatrix;

/// RBF bandwidth: explicit, or the median pairwise distance heuristic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bandwidth {
    Median,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffinityConfig {
    pub zeta: Bandwidth,
    /// Keep only each node's strongest `knn` affinities (symmetrized).
    pub knn: Option<usize>,
    pub eig_tol: f64,
    pub eig_max_iter: usize,
    /// Normalize embedding rows to unit length before k-means.
    pub row_normalize: bool,
}

impl Default for AffinityConfig {
    fn default() -> Self {
        Self {
            zeta: Bandwidth::Median,
            knn: None,
            eig_tol: 1e-10,
            eig_max_iter: 100,
            row_normalize: true,
        }
    }
}

impl AffinityConfig {
    pub fn validate(&self) -> Result<()> {
        if let Bandwidth::Fixed(z) = self.zeta {
            if !(z > 0.0) || !z.is_finite() {
                return Err(Error::Config(format!("zeta {z} must be positive")));
            }
        }
        if let Some(k) = self.knn {
            if k == 0 {
                return Err(Error::Config("knn must be at least 1".into()));
            }
        }
        if !(self.eig_tol > 0.0) {
            return Err(Error::Config(format!(
                "eig_tol {} must be positive",
                self.eig_tol
            )));
        }
        Ok(())
    }
}

/// Per-node cluster labels in `{0..k-1}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    labels: Vec<usize>,
    k: usize,
}

impl ClusterAssignment {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
            return Err(Error::Config(format!("cluster id {bad} >= k = {k}")));
        }
        Ok(Self { labels, k })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn num_nodes(&self) -> usize {
        self.labels.len()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }
}

/// RBF affinity `S_ij = exp(-||x_i - x_j||^2 / (2 zeta^2))`; symmetric with
/// unit diagonal. Dense in general, stored per unordered pair.
pub fn rbf_affinity(features: &Array2<f64>, zeta: f64) -> Result<SparseSymMatrix> {
    if !(zeta > 0.0) || !zeta.is_finite() {
        return Err(Error::Config(format!("zeta {zeta} must be positive")));
    }
    if features.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config("non-finite feature value".into()));
    }
    let n = features.nrows();
    let denom = 2.0 * zeta * zeta;
    let mut s = SparseSymMatrix::new(n);
    for i in 0..n {
        s.set(i, i, 1.0);
        for j in (i + 1)..n {
            let d2: f64 = features
                .row(i)
                .iter()
                .zip(features.row(j).iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            s.set(i, j, (-d2 / denom).exp());
        }
    }
    Ok(s)
}

/// Median of pairwise Euclidean distances (the bandwidth heuristic). Rows
/// are strided down to at most 2000 points first. Falls back to 1 when all
/// points coincide.
pub fn median_bandwidth(features: &Array2<f64>) -> f64 {
    let n = features.nrows();
    if n < 2 {
        return 1.0;
    }
    let cap = 2000usize;
    let idx: Vec<usize> = if n <= cap {
        (0..n).collect()
    } else {
        (0..cap).map(|i| i * n / cap).collect()
    };
    let mut dists = Vec::with_capacity(idx.len() * (idx.len() - 1) / 2);
    for (a, &i) in idx.iter().enumerate() {
        for &j in &idx[(a + 1)..] {
            let d2: f64 = features
                .row(i)
                .iter()
                .zip(features.row(j).iter())
                .map(|(x, y)| (x - y) * (x - y))
                .sum();
            dists.push(d2.sqrt());
        }
    }
    dists.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
    let m = dists.len();
    let median = if m % 2 == 1 {
        dists[m / 2]
    } else {
        0.5 * (dists[m / 2 - 1] + dists[m / 2])
    };
    if median > 0.0 {
        median
    } else {
        1.0
    }
}

/// Keep each row's `knn` largest off-diagonal affinities (union over both
/// endpoints so the result stays symmetric). The diagonal always survives.
pub fn knn_sparsify(s: &SparseSymMatrix, knn: usize) -> SparseSymMatrix {
    let n = s.dim();
    let mut neighbors: Vec<Vec<(f64, usize)>> = vec![Vec::new(); n];
    for ((i, j), v) in s.iter() {
        if i != j {
            neighbors[i].push((v, j));
            neighbors[j].push((v, i));
        }
    }
    let mut keep = std::collections::BTreeSet::new();
    for (i, list) in neighbors.iter_mut().enumerate() {
        list.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite").then(a.1.cmp(&b.1)));
        for &(_, j) in list.iter().take(knn) {
            keep.insert((i.min(j), i.max(j)));
        }
    }
    let mut out = SparseSymMatrix::new(n);
    for ((i, j), v) in s.iter() {
        if i == j || keep.contains(&(i, j)) {
            out.set(i, j, v);
        }
    }
    out
}

/// Normalized affinity Laplacian `I - D_s^{-1/2} S D_s^{-1/2}` where
/// `D_s(i,i) = sum_j S_ij`. Errors on a zero row sum.
pub fn affinity_laplacian(s: &SparseSymMatrix) -> Result<SparseSymMatrix> {
    let sums = s.row_sums();
    if let Some(i) = sums.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::ZeroRowSum(i));
    }
    let n = s.dim();
    let mut l = SparseSymMatrix::new(n);
    for i in 0..n {
        l.set(i, i, 1.0 - s.get(i, i) / sums[i]);
    }
    for ((i, j), v) in s.iter() {
        if i != j {
            l.set(i, j, -v / (sums[i] * sums[j]).sqrt());
        }
    }
    Ok(l)
}

/// Lloyd's algorithm with k-means++ seeding. Deterministic given `seed`;
/// labels are canonicalized by first occurrence.
pub fn kmeans(rows: &Array2<f64>, k: usize, seed: u64) -> Result<ClusterAssignment> {
    let n = rows.nrows();
    if k == 0 || k > n {
        return Err(Error::Config(format!("k = {k} outside valid range 1..={n}")));
    }
    let mut stream = SeededStream::new(seed, STREAM_KMEANS);
    let mut centers = plus_plus_seeding(rows, k, &mut stream);
    let mut assign = vec![0usize; n];

    for _ in 0..300 {
        let new_assign: Vec<usize> = (0..n)
            .map(|i| nearest_center(&rows.row(i).to_vec(), &centers))
            .collect();
        let converged = new_assign == assign;
        assign = new_assign;
        // Update step: means of members; empty clusters are reseeded to the
        // point farthest from their stale centroid.
        let d = rows.ncols();
        let mut sums = vec![vec![0.0; d]; k];
        let mut counts = vec![0usize; k];
        for (i, &c) in assign.iter().enumerate() {
            counts[c] += 1;
            for (slot, &v) in sums[c].iter_mut().zip(rows.row(i).iter()) {
                *slot += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                for slot in &mut sums[c] {
                    *slot /= counts[c] as f64;
                }
                centers[c] = sums[c].clone();
            } else {
                let far = (0..n)
                    .max_by(|&a, &b| {
                        let da = sq_dist(&rows.row(a).to_vec(), &centers[c]);
                        let db = sq_dist(&rows.row(b).to_vec(), &centers[c]);
                        da.partial_cmp(&db).expect("finite").then(b.cmp(&a))
                    })
                    .expect("n > 0");
                centers[c] = rows.row(far).to_vec();
            }
        }
        if converged {
            break;
        }
    }

    Ok(canonicalize(assign, k))
}

/// Within-cluster sum of squared distances to cluster means.
pub fn kmeans_inertia(rows: &Array2<f64>, assignment: &ClusterAssignment) -> f64 {
    let n = rows.nrows();
    let d = rows.ncols();
    let k = assignment.k();
    let mut sums = vec![vec![0.0; d]; k];
    let mut counts = vec![0usize; k];
    for (i, &c) in assignment.labels().iter().enumerate() {
        counts[c] += 1;
        for (slot, &v) in sums[c].iter_mut().zip(rows.row(i).iter()) {
            *slot += v;
        }
    }
    for c in 0..k {
        if counts[c] > 0 {
            for slot in &mut sums[c] {
                *slot /= counts[c] as f64;
            }
        }
    }
    (0..n)
        .map(|i| sq_dist(&rows.row(i).to_vec(), &sums[assignment.labels()[i]]))
        .sum()
}

fn plus_plus_seeding(rows: &Array2<f64>, k: usize, stream: &mut SeededStream) -> Vec<Vec<f64>> {
    let n = rows.nrows();
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(k);
    centers.push(rows.row(stream.next_index(n)).to_vec());
    let mut d2: Vec<f64> = (0..n)
        .map(|i| sq_dist(&rows.row(i).to_vec(), &centers[0]))
        .collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut r = stream.next_uniform() * total;
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if r < w {
                    chosen = i;
                    break;
                }
                r -= w;
            }
            chosen
        } else {
            stream.next_index(n)
        };
        centers.push(rows.row(next).to_vec());
        for i in 0..n {
            let d = sq_dist(&rows.row(i).to_vec(), centers.last().expect("non-empty"));
            if d < d2[i] {
                d2[i] = d;
            }
        }
    }
    centers
}

fn nearest_center(point: &[f64], centers: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, center) in centers.iter().enumerate() {
        let d = sq_dist(point, center);
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    best
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn canonicalize(labels: Vec<usize>, k: usize) -> ClusterAssignment {
    let mut remap = vec![usize::MAX; k];
    let mut next = 0;
    let mut out = Vec::with_capacity(labels.len());
    for l in labels {
        if remap[l] == usize::MAX {
            remap[l] = next;
            next += 1;
        }
        out.push(remap[l]);
    }
    ClusterAssignment { labels: out, k }
}

/// Full spectral clustering of feature rows into `k >= 2` clusters.
pub fn spectral_cluster(
    features: &Array2<f64>,
    k: usize,
    config: &AffinityConfig,
    seed: u64,
) -> Result<ClusterAssignment> {
    if k < 2 {
        return Err(Error::Config(format!("cluster count {k} must be > 1")));
    }
    config.validate()?;
    let zeta = match config.zeta {
        Bandwidth::Fixed(z) => z,
        Bandwidth::Median => median_bandwidth(features),
    };
    let mut s = rbf_affinity(features, zeta)?;
    if let Some(knn) = config.knn {
        s = knn_sparsify(&s, knn);
    }
    let l = affinity_laplacian(&s)?;
    let (_, mut embedding) = smallest_eigenpairs(&l, k, config.eig_tol, config.eig_max_iter)?;
    if config.row_normalize {
        for mut row in embedding.rows_mut() {
            let norm: f64 = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                row.mapv_inplace(|v| v / norm);
            }
        }
    }
    kmeans(&embedding, k, seed)
}
