//! Symmetric sparse matrices over node pairs.
//!
//! One value is stored per unordered index pair, so symmetry holds by
//! construction. Entries iterate in ascending `(i, j)` lexicographic order,
//! which is the canonical order used for serialization and for indexing
//! per-edge random draws.

use std::collections::BTreeMap;

use ndarray::Array2;

use crate::error::{Error, Result};

/// Symmetric sparse matrix; keys are normalized to `i <= j`.
/// Diagonal entries are permitted.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymMatrix {
    dim: usize,
    entries: BTreeMap<(usize, usize), f64>,
}

impl SparseSymMatrix {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            entries: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of stored unordered entries.
    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// Store a value for the unordered pair `(i, j)`.
    ///
    /// Panics on out-of-range indices or non-finite values; those are
    /// programming errors, not data errors.
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        assert!(i < self.dim && j < self.dim, "index out of range");
        assert!(value.is_finite(), "matrix values must be finite");
        self.entries.insert(Self::key(i, j), value);
    }

    /// Value at `(i, j)`, or 0 when no entry is stored.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries.get(&Self::key(i, j)).copied().unwrap_or(0.0)
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.entries.contains_key(&Self::key(i, j))
    }

    /// Entries in canonical ascending order; each key has `i <= j`.
    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.entries.iter().map(|(&k, &v)| (k, v))
    }

    /// Stored values in canonical entry order.
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.values().copied()
    }

    /// Same support, values transformed by `f`.
    pub fn map_values(&self, mut f: impl FnMut(f64) -> f64) -> Self {
        let entries = self
            .entries
            .iter()
            .map(|(&k, &v)| {
                let w = f(v);
                assert!(w.is_finite(), "matrix values must be finite");
                (k, w)
            })
            .collect();
        Self {
            dim: self.dim,
            entries,
        }
    }

    /// Copy with any diagonal entries removed.
    pub fn without_diagonal(&self) -> Self {
        let entries = self
            .entries
            .iter()
            .filter(|((i, j), _)| i != j)
            .map(|(&k, &v)| (k, v))
            .collect();
        Self {
            dim: self.dim,
            entries,
        }
    }

    /// Copy without exact-zero entries.
    pub fn pruned(&self) -> Self {
        let entries = self
            .entries
            .iter()
            .filter(|(_, &v)| v != 0.0)
            .map(|(&k, &v)| (k, v))
            .collect();
        Self {
            dim: self.dim,
            entries,
        }
    }

    /// Symmetric matrix-vector product.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::Shape(format!(
                "vector length {} does not match matrix dim {}",
                x.len(),
                self.dim
            )));
        }
        let mut out = vec![0.0; self.dim];
        for (&(i, j), &v) in &self.entries {
            out[i] += v * x[j];
            if i != j {
                out[j] += v * x[i];
            }
        }
        Ok(out)
    }

    /// Row sums (each unordered off-diagonal entry contributes to both rows).
    pub fn row_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.dim];
        for (&(i, j), &v) in &self.entries {
            sums[i] += v;
            if i != j {
                sums[j] += v;
            }
        }
        sums
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut m = Array2::zeros((self.dim, self.dim));
        for (&(i, j), &v) in &self.entries {
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
        m
    }

    /// Build from the upper triangle (incl. diagonal) of a dense symmetric
    /// matrix, skipping exact zeros.
    pub fn from_dense(m: &Array2<f64>) -> Result<Self> {
        let (r, c) = m.dim();
        if r != c {
            return Err(Error::Shape(format!("dense matrix {r}x{c} is not square")));
        }
        let mut out = Self::new(r);
        for i in 0..r {
            for j in i..c {
                let v = m[(i, j)];
                if v != 0.0 {
                    out.set(i, j, v);
                }
            }
        }
        Ok(out)
    }

    #[inline]
    fn key(i: usize, j: usize) -> (usize, usize) {
        if i <= j {
            (i, j)
        } else {
            (j, i)
        }
    }
}
