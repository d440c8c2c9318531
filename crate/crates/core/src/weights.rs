//! Symmetric-normalized edge weights and the total-variation quadratic form.
//!
//! The edge weight `P_ij = w_ij / sqrt(d_i d_j)` scores how much an edge
//! matters to the graph's key structure: edges incident to low-degree nodes
//! carry high weight. `P = D^{-1/2} A D^{-1/2}` is the off-diagonal part of
//! the normalized Laplacian `L = I - P`.

use crate::error::{Error, Result};
use crate::graph::{degree_vector, Graph};
use crate::sparse::SparseSymMatrix;

/// Normalized Laplacian `I - D^{-1/2} A D^{-1/2}`.
///
/// Diagonal entries are 1 for nodes with positive degree and absent
/// (i.e. 0) for isolated nodes.
pub fn laplacian(g: &Graph) -> SparseSymMatrix {
    let deg = degree_vector(g);
    let mut m = SparseSymMatrix::new(g.num_nodes());
    for (i, d) in deg.iter().enumerate() {
        if *d > 0.0 {
            m.set(i, i, 1.0);
        }
    }
    for (i, j, w) in g.edges() {
        if w > 0.0 {
            m.set(i, j, -w / (deg[i] * deg[j]).sqrt());
        }
    }
    m
}

/// Edge weight matrix `P = D^{-1/2} A D^{-1/2}`; support is exactly the
/// edge set and every value lies in (0, 1].
pub fn edge_weight_matrix(g: &Graph) -> SparseSymMatrix {
    let deg = degree_vector(g);
    let mut m = SparseSymMatrix::new(g.num_nodes());
    for (i, j, w) in g.edges() {
        if w > 0.0 {
            m.set(i, j, w / (deg[i] * deg[j]).sqrt());
        }
    }
    m
}

/// Total variation `x^T L x` of a signal, computed through the sparse
/// Laplacian.
pub fn total_variation(g: &Graph, x: &[f64]) -> Result<f64> {
    if x.len() != g.num_nodes() {
        return Err(Error::Shape(format!(
            "signal length {} does not match {} nodes",
            x.len(),
            g.num_nodes()
        )));
    }
    let lx = laplacian(g).matvec(x)?;
    Ok(x.iter().zip(&lx).map(|(a, b)| a * b).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn path3() -> Graph {
        Graph::from_unit_edges(3, &[(0, 1), (1, 2)], "t").unwrap()
    }

    #[test]
    fn laplacian_single_edge() {
        let g = Graph::from_unit_edges(2, &[(0, 1)], "t").unwrap();
        let l = laplacian(&g);
        assert_eq!(l.get(0, 0), 1.0);
        assert_eq!(l.get(1, 1), 1.0);
        assert_eq!(l.get(0, 1), -1.0);
    }

    #[test]
    fn laplacian_triangle_and_star() {
        let tri = Graph::from_unit_edges(3, &[(0, 1), (1, 2), (0, 2)], "t").unwrap();
        assert_eq!(laplacian(&tri).get(0, 1), -0.5);

        let star = Graph::from_unit_edges(4, &[(0, 1), (0, 2), (0, 3)], "t").unwrap();
        assert_abs_diff_eq!(
            laplacian(&star).get(0, 1),
            -1.0 / 3.0f64.sqrt(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn laplacian_isolated_node_has_zero_diagonal() {
        let g = Graph::from_unit_edges(3, &[(0, 1)], "t").unwrap();
        assert_eq!(laplacian(&g).get(2, 2), 0.0);
    }

    #[test]
    fn edge_weights_match_degrees() {
        let p = edge_weight_matrix(&path3());
        assert_abs_diff_eq!(p.get(0, 1), 1.0 / 2.0f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(p.get(1, 2), 1.0 / 2.0f64.sqrt(), epsilon = 1e-15);

        let star = Graph::from_unit_edges(4, &[(0, 1), (0, 2), (0, 3)], "t").unwrap();
        for (_, v) in edge_weight_matrix(&star).iter() {
            assert_abs_diff_eq!(v, 1.0 / 3.0f64.sqrt(), epsilon = 1e-15);
        }
    }

    #[test]
    fn edge_weight_support_is_edge_set() {
        let g = Graph::from_edges(4, [(0, 1, 2.0), (2, 3, 0.5)], "t").unwrap();
        let p = edge_weight_matrix(&g);
        assert_eq!(p.nnz(), 2);
        for (_, v) in p.iter() {
            assert!(v > 0.0 && v <= 1.0);
        }
    }

    #[test]
    fn total_variation_kernel_vector_is_zero() {
        let g = Graph::from_unit_edges(4, &[(0, 1), (1, 2), (2, 3), (0, 3)], "t").unwrap();
        let x: Vec<f64> = degree_vector(&g).iter().map(|d| d.sqrt()).collect();
        assert_abs_diff_eq!(total_variation(&g, &x).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn total_variation_path_constant_signal() {
        let tv = total_variation(&path3(), &[1.0, 1.0, 1.0]).unwrap();
        let expected = 2.0 * (1.0 - 1.0 / 2.0f64.sqrt()).powi(2);
        assert_abs_diff_eq!(tv, expected, epsilon = 1e-12);
    }

    #[test]
    fn total_variation_single_edge_antisymmetric() {
        let g = Graph::from_unit_edges(2, &[(0, 1)], "t").unwrap();
        assert_abs_diff_eq!(
            total_variation(&g, &[1.0, -1.0]).unwrap(),
            4.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn total_variation_rejects_shape_mismatch() {
        assert!(total_variation(&path3(), &[1.0]).is_err());
    }
}
