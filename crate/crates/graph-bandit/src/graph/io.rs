//! Edge-list and label-file ingestion, and connected-component extraction.
//!
//! The edge-list format is one `u v [w]` entry per line, whitespace or comma
//! separated, with a default weight of 1. Lines starting with `#` and blank
//! lines are skipped. Parallel and reciprocal entries for the same unordered
//! pair are symmetrized by summing their weights, and self-loops are dropped.
//!
//! Label files carry one `vertex_id value` pair per line with the same
//! lexical rules.

use super::{GraphError, WeightedGraph};
use std::path::Path;

fn tokens(line: &str) -> Vec<&str> {
    line.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .collect()
}

fn skip(line: &str) -> bool {
    let trimmed = line.trim();
    trimmed.is_empty() || trimmed.starts_with('#')
}

fn parse_err(origin: &str, line: usize, message: impl Into<String>) -> GraphError {
    GraphError::Parse {
        origin: origin.to_string(),
        line,
        message: message.into(),
    }
}

/// Parses edge-list text. `origin` names the source in error messages.
pub fn parse_edge_list(text: &str, origin: &str) -> Result<WeightedGraph, GraphError> {
    let mut entries = Vec::new();
    let mut max_vertex = None::<usize>;
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if skip(line) {
            continue;
        }
        let toks = tokens(line);
        if toks.len() != 2 && toks.len() != 3 {
            return Err(parse_err(
                origin,
                line_no,
                format!("expected `u v [w]`, found {} fields", toks.len()),
            ));
        }
        let u: usize = toks[0]
            .parse()
            .map_err(|_| parse_err(origin, line_no, format!("bad vertex id `{}`", toks[0])))?;
        let v: usize = toks[1]
            .parse()
            .map_err(|_| parse_err(origin, line_no, format!("bad vertex id `{}`", toks[1])))?;
        let w: f64 = match toks.get(2) {
            Some(t) => t
                .parse()
                .map_err(|_| parse_err(origin, line_no, format!("bad weight `{t}`")))?,
            None => 1.0,
        };
        if !(w.is_finite() && w >= 0.0) {
            return Err(parse_err(origin, line_no, format!("bad weight `{w}`")));
        }
        max_vertex = Some(max_vertex.map_or(u.max(v), |m: usize| m.max(u).max(v)));
        entries.push((u, v, w));
    }
    let n = match max_vertex {
        Some(m) => m + 1,
        None => return Err(GraphError::Empty),
    };
    WeightedGraph::accumulate(n, entries)
}

/// Loads an edge-list file.
pub fn load_edge_list(path: impl AsRef<Path>) -> Result<WeightedGraph, GraphError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| GraphError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_edge_list(&text, &path.display().to_string())
}

/// Writes a graph back out in the edge-list format (`u v w` per line).
pub fn write_edge_list(graph: &WeightedGraph, path: impl AsRef<Path>) -> Result<(), GraphError> {
    use std::fmt::Write as _;
    let path = path.as_ref();
    let mut out = String::new();
    for e in graph.edges() {
        writeln!(out, "{} {} {}", e.u, e.v, e.w).expect("string write");
    }
    std::fs::write(path, out).map_err(|source| GraphError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Parses label text: one `vertex_id value` pair per line. Returns a vector
/// indexed by vertex id; ids never mentioned stay `None`.
pub fn parse_labels(text: &str, origin: &str) -> Result<Vec<Option<f64>>, GraphError> {
    let mut pairs = Vec::new();
    let mut max_vertex = None::<usize>;
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if skip(line) {
            continue;
        }
        let toks = tokens(line);
        if toks.len() != 2 {
            return Err(parse_err(
                origin,
                line_no,
                format!("expected `vertex_id value`, found {} fields", toks.len()),
            ));
        }
        let id: usize = toks[0]
            .parse()
            .map_err(|_| parse_err(origin, line_no, format!("bad vertex id `{}`", toks[0])))?;
        let value: f64 = toks[1]
            .parse()
            .map_err(|_| parse_err(origin, line_no, format!("bad value `{}`", toks[1])))?;
        if !value.is_finite() {
            return Err(parse_err(origin, line_no, format!("bad value `{value}`")));
        }
        max_vertex = Some(max_vertex.map_or(id, |m: usize| m.max(id)));
        pairs.push((id, value));
    }
    let n = match max_vertex {
        Some(m) => m + 1,
        None => return Err(GraphError::Empty),
    };
    let mut labels = vec![None; n];
    for (id, value) in pairs {
        labels[id] = Some(value);
    }
    Ok(labels)
}

/// Loads a label file.
pub fn load_labels(path: impl AsRef<Path>) -> Result<Vec<Option<f64>>, GraphError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| GraphError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_labels(&text, &path.display().to_string())
}

/// A re-indexed subgraph along with the mapping back to original indices.
#[derive(Debug, Clone)]
pub struct ComponentMap {
    pub graph: WeightedGraph,
    /// `original_index[new] = old`: the original vertex id of each vertex in
    /// the extracted component, in ascending original order.
    pub original_index: Vec<usize>,
}

/// Extracts the largest connected component, re-indexing its vertices
/// contiguously. Ties on component size go to the component containing the
/// smallest original vertex id.
pub fn largest_connected_component(graph: &WeightedGraph) -> Result<ComponentMap, GraphError> {
    let n = graph.n_vertices();
    if n == 0 {
        return Err(GraphError::Empty);
    }
    let mut adj = vec![Vec::new(); n];
    for e in graph.edges() {
        adj[e.u].push(e.v);
        adj[e.v].push(e.u);
    }
    let mut component = vec![usize::MAX; n];
    let mut sizes = Vec::new();
    for start in 0..n {
        if component[start] != usize::MAX {
            continue;
        }
        let id = sizes.len();
        let mut stack = vec![start];
        component[start] = id;
        let mut size = 0usize;
        while let Some(v) = stack.pop() {
            size += 1;
            for &u in &adj[v] {
                if component[u] == usize::MAX {
                    component[u] = id;
                    stack.push(u);
                }
            }
        }
        sizes.push(size);
    }
    let best = sizes
        .iter()
        .enumerate()
        .max_by_key(|&(id, &size)| (size, std::cmp::Reverse(id)))
        .map(|(id, _)| id)
        .expect("at least one component");

    let original_index: Vec<usize> = (0..n).filter(|&v| component[v] == best).collect();
    let mut new_index = vec![usize::MAX; n];
    for (new, &old) in original_index.iter().enumerate() {
        new_index[old] = new;
    }
    let edges: Vec<(usize, usize, f64)> = graph
        .edges()
        .iter()
        .filter(|e| component[e.u] == best)
        .map(|e| (new_index[e.u], new_index[e.v], e.w))
        .collect();
    let graph = WeightedGraph::new(original_index.len(), edges)?;
    Ok(ComponentMap {
        graph,
        original_index,
    })
}
