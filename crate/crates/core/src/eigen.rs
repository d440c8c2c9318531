//! Symmetric eigensolvers: cyclic Jacobi for dense desk-scale matrices and
//! Lanczos with full reorthogonalization above that.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::rng::{self, STREAM_EIGEN};
use crate::sparse::SparseSymMatrix;

/// Matrices up to this order take the dense Jacobi path.
pub const DENSE_LIMIT: usize = 2000;

/// k smallest eigenpairs of a symmetric sparse matrix.
///
/// Values come back ascending; vectors are the matching orthonormal columns.
/// Every returned pair satisfies `||L u - lambda u|| <= tol * ||L||_F`, or
/// the call fails with the best residual reached.
pub fn smallest_eigenpairs(
    l: &SparseSymMatrix,
    k: usize,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, Array2<f64>)> {
    let n = l.dim();
    if k == 0 || k > n {
        return Err(Error::Config(format!(
            "k = {k} outside valid range 1..={n}"
        )));
    }
    let fro = frobenius(l);
    let (values, vectors) = if n <= DENSE_LIMIT {
        let (vals, vecs) = jacobi_eigen(&l.to_dense(), tol, max_iter)?;
        let vals = vals[..k].to_vec();
        let vecs = vecs.slice(ndarray::s![.., ..k]).to_owned();
        (vals, vecs)
    } else {
        lanczos_smallest(l, k, tol, max_iter, fro)?
    };
    // Enforce the residual contract regardless of path.
    let mut worst = 0.0f64;
    for (idx, &lam) in values.iter().enumerate() {
        let u: Vec<f64> = vectors.column(idx).to_vec();
        let lu = l.matvec(&u)?;
        let res: f64 = lu
            .iter()
            .zip(&u)
            .map(|(a, b)| (a - lam * b).powi(2))
            .sum::<f64>()
            .sqrt();
        worst = worst.max(res);
    }
    if worst > tol * fro + 1e-12 {
        return Err(Error::NoConvergence {
            iterations: max_iter,
            best_residual: worst,
        });
    }
    Ok((values, vectors))
}

fn frobenius(m: &SparseSymMatrix) -> f64 {
    let mut sum = 0.0;
    for ((i, j), v) in m.iter() {
        sum += if i == j { v * v } else { 2.0 * v * v };
    }
    sum.sqrt()
}

/// Full eigendecomposition of a dense symmetric matrix by cyclic Jacobi
/// rotations. Returns all eigenvalues ascending with eigenvector columns.
/// `max_sweeps` bounds the number of full upper-triangle sweeps.
pub fn jacobi_eigen(
    matrix: &Array2<f64>,
    tol: f64,
    max_sweeps: usize,
) -> Result<(Vec<f64>, Array2<f64>)> {
    let n = matrix.nrows();
    if n != matrix.ncols() {
        return Err(Error::Shape(format!(
            "matrix {}x{} is not square",
            n,
            matrix.ncols()
        )));
    }
    let mut a = matrix.clone();
    let mut v = Array2::eye(n);
    let fro: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let target = (tol * fro).max(f64::MIN_POSITIVE) * 0.1;

    let mut off = off_diagonal_norm(&a);
    let mut sweeps = 0;
    while off > target {
        if sweeps >= max_sweeps.max(1) {
            return Err(Error::NoConvergence {
                iterations: sweeps,
                best_residual: off,
            });
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
        sweeps += 1;
        off = off_diagonal_norm(&a);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].partial_cmp(&a[(j, j)]).expect("finite"));
    let values: Vec<f64> = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = Array2::zeros((n, n));
    for (col, &src) in order.iter().enumerate() {
        vectors.column_mut(col).assign(&v.column(src));
    }
    Ok((values, vectors))
}

fn off_diagonal_norm(a: &Array2<f64>) -> f64 {
    let n = a.nrows();
    let mut sum = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            sum += 2.0 * a[(i, j)] * a[(i, j)];
        }
    }
    sum.sqrt()
}

/// One two-sided Jacobi rotation annihilating `a[(p, q)]`.
fn rotate(a: &mut Array2<f64>, v: &mut Array2<f64>, p: usize, q: usize) {
    let apq = a[(p, q)];
    if apq == 0.0 {
        return;
    }
    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
    let t = if theta >= 0.0 {
        1.0 / (theta + (1.0 + theta * theta).sqrt())
    } else {
        1.0 / (theta - (1.0 + theta * theta).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    let n = a.nrows();
    let app = a[(p, p)];
    let aqq = a[(q, q)];
    a[(p, p)] = app - t * apq;
    a[(q, q)] = aqq + t * apq;
    a[(p, q)] = 0.0;
    a[(q, p)] = 0.0;
    for k in 0..n {
        if k != p && k != q {
            let akp = a[(k, p)];
            let akq = a[(k, q)];
            a[(k, p)] = c * akp - s * akq;
            a[(p, k)] = a[(k, p)];
            a[(k, q)] = s * akp + c * akq;
            a[(q, k)] = a[(k, q)];
        }
    }
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

/// Lanczos iteration with full reorthogonalization, returning the k
/// smallest Ritz pairs once their residual bounds drop below
/// `tol * fro_norm`. `max_iter` caps the Krylov dimension.
fn lanczos_smallest(
    l: &SparseSymMatrix,
    k: usize,
    tol: f64,
    max_iter: usize,
    fro_norm: f64,
) -> Result<(Vec<f64>, Array2<f64>)> {
    let n = l.dim();
    let m_cap = max_iter.max(2 * k + 10).min(n);
    let threshold = (tol * fro_norm).max(f64::MIN_POSITIVE);

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m_cap);
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();

    basis.push(seeded_unit_vector(n, 0, &basis));
    let mut best_residual = f64::INFINITY;

    for step in 0..m_cap {
        let q = basis[step].clone();
        let mut w = l.matvec(&q)?;
        let alpha = dot(&w, &q);
        alphas.push(alpha);
        axpy(&mut w, -alpha, &q);
        if step > 0 {
            axpy(&mut w, -betas[step - 1], &basis[step - 1]);
        }
        // Full reorthogonalization, twice for stability.
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&w, b);
                axpy(&mut w, -c, b);
            }
        }
        let beta = norm(&w);
        let breakdown = beta < 1e-13 * fro_norm.max(1.0);

        // Ritz convergence check. On a breakdown the Krylov space is
        // invariant and the bound beta * |s_mi| vanishes exactly.
        let m = alphas.len();
        if m >= k && (m == n || m == m_cap || breakdown || m % 10 == 0) {
            let (ritz_vals, ritz_vecs) = tridiag_eigen(&alphas, &betas[..m - 1])?;
            let beta_last = if m == n || breakdown { 0.0 } else { beta };
            let mut worst = 0.0f64;
            for i in 0..k {
                worst = worst.max((beta_last * ritz_vecs[(m - 1, i)]).abs());
            }
            best_residual = best_residual.min(worst);
            if worst <= threshold {
                let mut values = Vec::with_capacity(k);
                let mut vectors = Array2::zeros((n, k));
                for i in 0..k {
                    values.push(ritz_vals[i]);
                    for (row, b) in basis.iter().enumerate().take(m) {
                        let s = ritz_vecs[(row, i)];
                        for (idx, &bv) in b.iter().enumerate() {
                            vectors[(idx, i)] += s * bv;
                        }
                    }
                }
                return Ok((values, vectors));
            }
        }

        if step + 1 == m_cap {
            break;
        }
        if breakdown {
            if basis.len() >= n {
                break;
            }
            // Too few directions explored: restart with a fresh vector.
            w = seeded_unit_vector(n, basis.len() as u64 + 1, &basis);
            betas.push(0.0);
        } else {
            for x in &mut w {
                *x /= beta;
            }
            betas.push(beta);
        }
        basis.push(w);
    }

    Err(Error::NoConvergence {
        iterations: m_cap,
        best_residual,
    })
}

/// Eigendecomposition of a symmetric tridiagonal matrix given its diagonal
/// and off-diagonal, via Jacobi on the dense form (sizes stay small here).
fn tridiag_eigen(diag: &[f64], off: &[f64]) -> Result<(Vec<f64>, Array2<f64>)> {
    let m = diag.len();
    let mut t = Array2::zeros((m, m));
    for i in 0..m {
        t[(i, i)] = diag[i];
        if i + 1 < m {
            t[(i, i + 1)] = off[i];
            t[(i + 1, i)] = off[i];
        }
    }
    jacobi_eigen(&t, 1e-14, 100)
}

fn seeded_unit_vector(n: usize, tag: u64, orthogonal_to: &[Vec<f64>]) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n)
        .map(|i| rng::unit_uniform(0xeac5, STREAM_EIGEN, tag, i as u64) - 0.5)
        .collect();
    for b in orthogonal_to {
        let c = dot(&v, b);
        axpy(&mut v, -c, b);
    }
    let nv = norm(&v);
    for x in &mut v {
        *x /= nv;
    }
    v
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
