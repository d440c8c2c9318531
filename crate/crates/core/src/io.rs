//! Text-file formats: edge lists, feature matrices, label vectors.
//!
//! Edge list: one `src<TAB>dst[<TAB>weight]` line per edge, 0-based ids,
//! `#`-prefixed comment lines ignored, and an optional `#nodes N` directive
//! declaring the node count (required to round-trip isolated nodes).
//! Feature file: one node per line, tab-separated decimals.
//! Label file: one integer class id per line.
//!
//! Whitespace-splitting is accepted on input; output always uses tabs.
//! Weights serialize via the shortest decimal form that parses back to the
//! same f64, so save/load round-trips are bit-exact.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::graph::Graph;

/// What load-time canonicalization had to clean up.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub self_loops_removed: usize,
    pub duplicates_merged: usize,
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        msg: msg.into(),
    }
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Raw edge-file contents before range checks: declared node count (if any)
/// plus every edge line as written, self-loops and duplicates included.
pub fn parse_edge_file(path: &Path) -> Result<(Option<usize>, Vec<(usize, usize, f64)>)> {
    let text = read_to_string(path)?;
    let mut declared = None;
    let mut raw = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("#nodes") {
            let n: usize = rest
                .trim()
                .parse()
                .map_err(|_| parse_err(path, lineno, format!("bad node count {rest:?}")))?;
            declared = Some(n);
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let src = fields
            .next()
            .ok_or_else(|| parse_err(path, lineno, "missing source id"))?;
        let dst = fields
            .next()
            .ok_or_else(|| parse_err(path, lineno, "missing destination id"))?;
        let src: usize = src
            .parse()
            .map_err(|_| parse_err(path, lineno, format!("bad node id {src:?}")))?;
        let dst: usize = dst
            .parse()
            .map_err(|_| parse_err(path, lineno, format!("bad node id {dst:?}")))?;
        let weight = match fields.next() {
            Some(w) => w
                .parse::<f64>()
                .map_err(|_| parse_err(path, lineno, format!("bad weight {w:?}")))?,
            None => 1.0,
        };
        if !weight.is_finite() || weight < 0.0 {
            return Err(parse_err(path, lineno, format!("invalid weight {weight}")));
        }
        if let Some(extra) = fields.next() {
            return Err(parse_err(
                path,
                lineno,
                format!("unexpected trailing field {extra:?}"),
            ));
        }
        raw.push((src, dst, weight));
    }
    Ok((declared, raw))
}

/// Feature matrix, one row per node.
pub fn load_features(path: &Path) -> Result<Array2<f64>> {
    let text = read_to_string(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut row = Vec::new();
        for field in line.split_whitespace() {
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(path, lineno, format!("bad real {field:?}")))?;
            if !v.is_finite() {
                return Err(parse_err(path, lineno, format!("non-finite value {v}")));
            }
            row.push(v);
        }
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::Shape(format!(
                    "{}:{lineno}: row has {} values, expected {}",
                    path.display(),
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    let n = rows.len();
    let d = rows.first().map_or(0, Vec::len);
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    Array2::from_shape_vec((n, d), flat).map_err(|e| Error::Shape(e.to_string()))
}

/// Label vector, one class id per line.
pub fn load_labels(path: &Path) -> Result<Vec<usize>> {
    let text = read_to_string(path)?;
    let mut labels = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: usize = line
            .parse()
            .map_err(|_| parse_err(path, idx + 1, format!("bad class id {line:?}")))?;
        labels.push(v);
    }
    Ok(labels)
}

/// Load and canonicalize a graph from an edge file plus a feature file
/// (whose row count fixes the node count) and an optional label file.
pub fn load_graph(
    edge_path: &Path,
    feature_path: &Path,
    label_path: Option<&Path>,
    domain_tag: &str,
) -> Result<(Graph, LoadReport)> {
    let features = load_features(feature_path)?;
    let num_nodes = features.nrows();
    let (declared, raw) = parse_edge_file(edge_path)?;
    if let Some(n) = declared {
        if n != num_nodes {
            return Err(Error::Shape(format!(
                "edge file declares {n} nodes but feature file has {num_nodes} rows"
            )));
        }
    }
    let (graph, report) = assemble(num_nodes, raw, domain_tag)?;
    let mut graph = graph.with_features(features)?;
    if let Some(lp) = label_path {
        let labels = load_labels(lp)?;
        graph = graph.with_labels(labels)?;
    }
    Ok((graph, report))
}

/// Load a graph from its edge file alone; the node count comes from the
/// `#nodes` directive or, failing that, the largest endpoint. Features are
/// empty (n x 0).
pub fn load_graph_structure(edge_path: &Path, domain_tag: &str) -> Result<(Graph, LoadReport)> {
    let (declared, raw) = parse_edge_file(edge_path)?;
    let num_nodes = match declared {
        Some(n) => n,
        None => raw
            .iter()
            .map(|&(u, v, _)| u.max(v) + 1)
            .max()
            .unwrap_or(0),
    };
    assemble(num_nodes, raw, domain_tag)
}

fn assemble(
    num_nodes: usize,
    raw: Vec<(usize, usize, f64)>,
    domain_tag: &str,
) -> Result<(Graph, LoadReport)> {
    let mut report = LoadReport::default();
    let mut seen = std::collections::BTreeMap::new();
    for (u, v, w) in raw {
        if u == v {
            report.self_loops_removed += 1;
            continue;
        }
        if u.max(v) >= num_nodes {
            return Err(Error::IndexOutOfRange {
                index: u.max(v),
                num_nodes,
            });
        }
        let key = (u.min(v), u.max(v));
        match seen.entry(key) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(w);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                report.duplicates_merged += 1;
                if w > *e.get() {
                    e.insert(w);
                }
            }
        }
    }
    let graph = Graph::from_edges(
        num_nodes,
        seen.into_iter().map(|((u, v), w)| (u, v, w)),
        domain_tag,
    )?;
    Ok((graph, report))
}

/// Canonical edge-list serialization. `comments` lines (without the leading
/// `#`) are written first, then the `#nodes` directive, then the edges in
/// ascending order. Unit weights omit the weight column.
pub fn save_graph_with_comments(g: &Graph, path: &Path, comments: &[String]) -> Result<()> {
    let mut out = String::new();
    for c in comments {
        let _ = writeln!(out, "# {c}");
    }
    let _ = writeln!(out, "#nodes {}", g.num_nodes());
    for (i, j, w) in g.edges() {
        if w == 1.0 {
            let _ = writeln!(out, "{i}\t{j}");
        } else {
            let _ = writeln!(out, "{i}\t{j}\t{w}");
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn save_graph(g: &Graph, path: &Path) -> Result<()> {
    save_graph_with_comments(g, path, &[])
}

/// Feature matrix serialization, one tab-separated row per node.
pub fn save_features(features: &Array2<f64>, path: &Path) -> Result<()> {
    let mut out = String::new();
    for row in features.rows() {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "{}", line.join("\t"));
    }
    fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn save_labels(labels: &[usize], path: &Path) -> Result<()> {
    let mut out = String::new();
    for l in labels {
        let _ = writeln!(out, "{l}");
    }
    fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}
