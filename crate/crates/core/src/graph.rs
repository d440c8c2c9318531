//! Graph representation shared by all other modules.
//!
//! Graphs are undirected and simple: edges are stored once per unordered
//! pair with `i < j`, self-loops are rejected, and duplicate insertions
//! keep the maximum weight. Instances are immutable after construction.

use std::collections::BTreeMap;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::sparse::SparseSymMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    num_nodes: usize,
    edges: BTreeMap<(usize, usize), f64>,
    features: Array2<f64>,
    labels: Option<Vec<usize>>,
    domain_tag: String,
}

impl Graph {
    /// Build a graph from weighted edges. Endpoints are canonicalized,
    /// duplicates keep the maximum weight, and self-loops are an error
    /// (loaders strip them before calling in here).
    pub fn from_edges(
        num_nodes: usize,
        edges: impl IntoIterator<Item = (usize, usize, f64)>,
        domain_tag: impl Into<String>,
    ) -> Result<Self> {
        let mut canonical = BTreeMap::new();
        for (u, v, w) in edges {
            if u == v {
                return Err(Error::Config(format!("self-loop at node {u}")));
            }
            let i = u.max(v);
            if i >= num_nodes {
                return Err(Error::IndexOutOfRange {
                    index: i,
                    num_nodes,
                });
            }
            if !w.is_finite() || w < 0.0 {
                return Err(Error::Config(format!(
                    "edge ({u}, {v}) has invalid weight {w}"
                )));
            }
            let key = (u.min(v), u.max(v));
            let slot = canonical.entry(key).or_insert(w);
            if w > *slot {
                *slot = w;
            }
        }
        Ok(Self {
            num_nodes,
            edges: canonical,
            features: Array2::zeros((num_nodes, 0)),
            labels: None,
            domain_tag: domain_tag.into(),
        })
    }

    /// Unit-weight convenience constructor.
    pub fn from_unit_edges(
        num_nodes: usize,
        edges: &[(usize, usize)],
        domain_tag: impl Into<String>,
    ) -> Result<Self> {
        Self::from_edges(
            num_nodes,
            edges.iter().map(|&(u, v)| (u, v, 1.0)),
            domain_tag,
        )
    }

    pub fn with_features(mut self, features: Array2<f64>) -> Result<Self> {
        if features.nrows() != self.num_nodes {
            return Err(Error::Shape(format!(
                "feature matrix has {} rows, graph has {} nodes",
                features.nrows(),
                self.num_nodes
            )));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("non-finite feature value".into()));
        }
        self.features = features;
        Ok(self)
    }

    pub fn with_labels(mut self, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != self.num_nodes {
            return Err(Error::Shape(format!(
                "label vector has {} entries, graph has {} nodes",
                labels.len(),
                self.num_nodes
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    /// Same nodes, features, labels and tag; different edge set.
    pub fn with_edge_set(
        &self,
        edges: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut g = Self::from_edges(self.num_nodes, edges, self.domain_tag.clone())?;
        g.features = self.features.clone();
        g.labels = self.labels.clone();
        Ok(g)
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Edges in canonical ascending `(i, j)` order with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.edges.iter().map(|(&(i, j), &w)| (i, j, w))
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.contains_key(&(u.min(v), u.max(v)))
    }

    pub fn edge_weight(&self, u: usize, v: usize) -> Option<f64> {
        self.edges.get(&(u.min(v), u.max(v))).copied()
    }

    pub fn total_edge_weight(&self) -> f64 {
        self.edges.values().sum()
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn feature_dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn domain_tag(&self) -> &str {
        &self.domain_tag
    }

    /// Edge set as a binary adjacency (value 1 per edge), for merges.
    pub fn adjacency(&self) -> SparseSymMatrix {
        let mut m = SparseSymMatrix::new(self.num_nodes);
        for (&(i, j), _) in &self.edges {
            m.set(i, j, 1.0);
        }
        m
    }

    /// Edge set with weights as a sparse matrix.
    pub fn weighted_adjacency(&self) -> SparseSymMatrix {
        let mut m = SparseSymMatrix::new(self.num_nodes);
        for (&(i, j), &w) in &self.edges {
            m.set(i, j, w);
        }
        m
    }
}

/// Weighted degree of every node (neighbor count on unit-weight graphs).
pub fn degree_vector(g: &Graph) -> Vec<f64> {
    let mut deg = vec![0.0; g.num_nodes()];
    for (i, j, w) in g.edges() {
        deg[i] += w;
        deg[j] += w;
    }
    deg
}

/// Symmetric-normalized adjacency.
///
/// With `add_self_loops` this is the propagation operator
/// `D~^{-1/2} (A + I) D~^{-1/2}`; without it, `D^{-1/2} A D^{-1/2}`.
/// Terms `1/sqrt(d)` with `d = 0` are defined as 0, so rows of nodes with
/// zero degree (no self-loop added) are empty.
pub fn normalized_adjacency(g: &Graph, add_self_loops: bool) -> SparseSymMatrix {
    let mut deg = degree_vector(g);
    let mut m = SparseSymMatrix::new(g.num_nodes());
    if add_self_loops {
        for d in &mut deg {
            *d += 1.0;
        }
        for (i, d) in deg.iter().enumerate() {
            m.set(i, i, 1.0 / d);
        }
    }
    for (i, j, w) in g.edges() {
        if w > 0.0 && deg[i] > 0.0 && deg[j] > 0.0 {
            m.set(i, j, w / (deg[i] * deg[j]).sqrt());
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr2;

    fn path3() -> Graph {
        Graph::from_unit_edges(3, &[(0, 1), (1, 2)], "test").unwrap()
    }

    #[test]
    fn canonicalizes_and_dedups_keeping_max() {
        let g = Graph::from_edges(3, [(1, 0, 0.5), (0, 1, 2.0), (2, 1, 1.0)], "t").unwrap();
        assert_eq!(g.num_edges(), 2);
        assert_eq!(g.edge_weight(0, 1), Some(2.0));
        assert_eq!(g.edge_weight(1, 2), Some(1.0));
    }

    #[test]
    fn rejects_self_loop_and_bad_endpoint() {
        assert!(Graph::from_edges(3, [(1, 1, 1.0)], "t").is_err());
        assert!(matches!(
            Graph::from_edges(3, [(0, 3, 1.0)], "t"),
            Err(Error::IndexOutOfRange { index: 3, .. })
        ));
    }

    #[test]
    fn degree_vector_path_triangle_isolated() {
        assert_eq!(degree_vector(&path3()), vec![1.0, 2.0, 1.0]);
        let tri = Graph::from_unit_edges(3, &[(0, 1), (1, 2), (0, 2)], "t").unwrap();
        assert_eq!(degree_vector(&tri), vec![2.0, 2.0, 2.0]);
        let iso = Graph::from_unit_edges(3, &[(0, 1)], "t").unwrap();
        assert_eq!(degree_vector(&iso)[2], 0.0);
    }

    #[test]
    fn degree_sum_is_twice_total_weight() {
        let g = Graph::from_edges(4, [(0, 1, 0.5), (1, 2, 2.0), (2, 3, 1.5)], "t").unwrap();
        let total: f64 = degree_vector(&g).iter().sum();
        assert_eq!(total, 2.0 * g.total_edge_weight());
    }

    #[test]
    fn normalized_adjacency_single_edge() {
        let g = Graph::from_unit_edges(2, &[(0, 1)], "t").unwrap();
        let plain = normalized_adjacency(&g, false);
        assert_eq!(plain.get(0, 1), 1.0);
        assert_eq!(plain.get(0, 0), 0.0);

        let looped = normalized_adjacency(&g, true);
        assert_eq!(looped.get(0, 0), 0.5);
        assert_eq!(looped.get(1, 1), 0.5);
        assert_eq!(looped.get(0, 1), 0.5);
    }

    #[test]
    fn normalized_adjacency_isolated_node() {
        let g = Graph::from_unit_edges(3, &[(0, 1)], "t").unwrap();
        let plain = normalized_adjacency(&g, false);
        for j in 0..3 {
            assert_eq!(plain.get(2, j), 0.0);
        }
        // With self-loops the isolated node keeps itself.
        let looped = normalized_adjacency(&g, true);
        assert_eq!(looped.get(2, 2), 1.0);
    }

    #[test]
    fn normalized_entries_within_unit_interval() {
        let g = Graph::from_edges(5, [(0, 1, 0.2), (1, 2, 3.0), (3, 4, 1.0)], "t").unwrap();
        for flag in [false, true] {
            for (_, v) in normalized_adjacency(&g, flag).iter() {
                assert!((0.0..=1.0).contains(&v), "entry {v} out of range");
            }
        }
    }

    #[test]
    fn feature_and_label_shape_checks() {
        let g = path3();
        assert!(g.clone().with_features(Array2::zeros((2, 4))).is_err());
        assert!(g.clone().with_labels(vec![0, 1]).is_err());
        let g = g
            .with_features(arr2(&[[1.0], [2.0], [3.0]]))
            .unwrap()
            .with_labels(vec![0, 1, 0])
            .unwrap();
        assert_eq!(g.feature_dim(), 1);
        assert_eq!(g.labels().unwrap(), &[0, 1, 0]);
    }
}
