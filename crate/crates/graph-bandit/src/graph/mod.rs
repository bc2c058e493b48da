//! Weighted graphs over bandit arms and the regularized Laplacian operator.
//!
//! Edges are stored once per unordered pair with canonical `u < v` ordering,
//! and the Laplacian is applied matrix-free from a degree vector plus a
//! neighbor sweep, keeping memory linear in the edge count. Dense
//! materialization exists only for verification-scale work.

mod gen;
mod io;

pub use gen::{
    gen_cliques, gen_sbm, gen_small_world, sbm_cross_probability, sbm_within_probability,
    smooth_signal, smooth_signal_raw,
};
pub use io::{
    largest_connected_component, load_edge_list, load_labels, parse_edge_list, parse_labels,
    write_edge_list, ComponentMap,
};

use crate::solver::SolverError;
use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("edge ({u}, {v}) endpoint out of range for {n} vertices")]
    EdgeOutOfRange { u: usize, v: usize, n: usize },
    #[error("self-loop at vertex {0} is not allowed")]
    SelfLoop(usize),
    #[error("duplicate edge ({u}, {v})")]
    DuplicateEdge { u: usize, v: usize },
    #[error("edge ({u}, {v}) has non-finite or negative weight {w}")]
    BadWeight { u: usize, v: usize, w: f64 },
    #[error("ridge parameter must be positive and finite, got {0}")]
    BadLambda(f64),
    #[error("block-model size must be even and at least 4, got {0}")]
    BadSbmSize(usize),
    #[error("ring degree must be even and less than the vertex count, got k_ring={k_ring} for n={n}")]
    BadRing { k_ring: usize, n: usize },
    #[error("clique layout must have at least one clique of at least one vertex, got {cliques} x {size}")]
    BadCliques { cliques: usize, size: usize },
    #[error("graph has no vertices")]
    Empty,
    #[error("signal synthesis produced a constant vector; cannot rescale")]
    DegenerateSignal,
    #[error("{origin}:{line}: {message}")]
    Parse {
        origin: String,
        line: usize,
        message: String,
    },
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// One undirected weighted edge in canonical `u < v` order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub w: f64,
}

/// An undirected weighted graph on vertices `0..n_vertices`.
///
/// Invariants: at most one edge per unordered pair, no self-loops, all
/// weights strictly positive and finite.
#[derive(Debug, Clone)]
pub struct WeightedGraph {
    n_vertices: usize,
    edges: Vec<Edge>,
}

impl WeightedGraph {
    /// Builds a graph from explicit edges. Rejects out-of-range endpoints,
    /// self-loops, duplicate pairs, and non-positive weights.
    pub fn new(
        n_vertices: usize,
        edges: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self, GraphError> {
        let mut canonical = Vec::new();
        for (u, v, w) in edges {
            if u >= n_vertices || v >= n_vertices {
                return Err(GraphError::EdgeOutOfRange { u, v, n: n_vertices });
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(GraphError::BadWeight { u, v, w });
            }
            let (u, v) = if u < v { (u, v) } else { (v, u) };
            canonical.push(Edge { u, v, w });
        }
        canonical.sort_by_key(|e| (e.u, e.v));
        if let Some(pair) = canonical.windows(2).find(|p| (p[0].u, p[0].v) == (p[1].u, p[1].v)) {
            return Err(GraphError::DuplicateEdge { u: pair[0].u, v: pair[0].v });
        }
        Ok(Self {
            n_vertices,
            edges: canonical,
        })
    }

    /// Builds a graph by accumulating raw entries: parallel and reciprocal
    /// entries for the same unordered pair are summed, self-loops are
    /// dropped, and pairs whose total weight is zero are absent. Negative or
    /// non-finite weights are rejected.
    pub fn accumulate(
        n_vertices: usize,
        entries: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self, GraphError> {
        use std::collections::BTreeMap;
        let mut totals: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (u, v, w) in entries {
            if u >= n_vertices || v >= n_vertices {
                return Err(GraphError::EdgeOutOfRange { u, v, n: n_vertices });
            }
            if !(w.is_finite() && w >= 0.0) {
                return Err(GraphError::BadWeight { u, v, w });
            }
            if u == v {
                continue;
            }
            let key = if u < v { (u, v) } else { (v, u) };
            *totals.entry(key).or_insert(0.0) += w;
        }
        let edges = totals
            .into_iter()
            .filter(|&(_, w)| w > 0.0)
            .map(|((u, v), w)| Edge { u, v, w })
            .collect();
        Ok(Self { n_vertices, edges })
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Weighted degree of each vertex.
    pub fn degrees(&self) -> Vec<f64> {
        let mut deg = vec![0.0; self.n_vertices];
        for e in &self.edges {
            deg[e.u] += e.w;
            deg[e.v] += e.w;
        }
        deg
    }
}

/// The regularized Laplacian `L_lambda = L + lambda I` of a graph, applied
/// matrix-free. Immutable after construction and safe to share across
/// threads.
#[derive(Debug, Clone)]
pub struct LaplacianOperator {
    n: usize,
    lambda: f64,
    /// Weighted degrees, summed in adjacency order so that `L 1 = 0` cancels
    /// exactly in floating point.
    degrees: Vec<f64>,
    offsets: Vec<usize>,
    neighbors: Vec<(usize, f64)>,
    edges: Vec<Edge>,
}

impl LaplacianOperator {
    pub fn new(graph: &WeightedGraph, lambda: f64) -> Result<Self, GraphError> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(GraphError::BadLambda(lambda));
        }
        Ok(Self::build(graph, lambda))
    }

    fn build(graph: &WeightedGraph, lambda: f64) -> Self {
        let n = graph.n_vertices();
        let mut counts = vec![0usize; n];
        for e in graph.edges() {
            counts[e.u] += 1;
            counts[e.v] += 1;
        }
        let mut offsets = vec![0usize; n + 1];
        for i in 0..n {
            offsets[i + 1] = offsets[i] + counts[i];
        }
        let mut neighbors = vec![(0usize, 0.0f64); offsets[n]];
        let mut fill = offsets.clone();
        for e in graph.edges() {
            neighbors[fill[e.u]] = (e.v, e.w);
            fill[e.u] += 1;
            neighbors[fill[e.v]] = (e.u, e.w);
            fill[e.v] += 1;
        }
        let mut degrees = vec![0.0; n];
        for i in 0..n {
            let mut d = 0.0;
            for &(_, w) in &neighbors[offsets[i]..offsets[i + 1]] {
                d += w;
            }
            degrees[i] = d;
        }
        Self {
            n,
            lambda,
            degrees,
            offsets,
            neighbors,
            edges: graph.edges().to_vec(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// `out = (L + lambda I) x`.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        self.apply_base(x, out);
        for (o, xi) in out.iter_mut().zip(x) {
            *o += self.lambda * xi;
        }
    }

    /// `out = L x`, without the ridge.
    pub fn apply_base(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(out.len(), self.n);
        for i in 0..self.n {
            let mut acc = 0.0;
            for &(j, w) in &self.neighbors[self.offsets[i]..self.offsets[i + 1]] {
                acc += w * x[j];
            }
            out[i] = self.degrees[i] * x[i] - acc;
        }
    }

    /// `x' L x` computed from the edge-sum identity
    /// `sum_{(u,v) in E} w_uv (x_u - x_v)^2`.
    pub fn base_quadratic_form(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.n);
        self.edges
            .iter()
            .map(|e| {
                let d = x[e.u] - x[e.v];
                e.w * d * d
            })
            .sum()
    }

    /// `x' L_lambda x = x' L x + lambda ||x||^2`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let sq: f64 = x.iter().map(|v| v * v).sum();
        self.base_quadratic_form(x) + self.lambda * sq
    }

    /// The smoothness norm `||x||_{L_lambda} = sqrt(x' L_lambda x)`.
    pub fn norm(&self, x: &[f64]) -> f64 {
        self.quadratic_form(x).max(0.0).sqrt()
    }

    /// Diagonal of `L_lambda`: weighted degree plus the ridge.
    pub fn diagonal(&self) -> Vec<f64> {
        self.degrees.iter().map(|d| d + self.lambda).collect()
    }

    /// Dense `L_lambda` for verification-scale work.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = self.to_dense_base();
        for i in 0..self.n {
            m[(i, i)] += self.lambda;
        }
        m
    }

    /// Dense `L` without the ridge.
    pub fn to_dense_base(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for e in &self.edges {
            m[(e.u, e.v)] -= e.w;
            m[(e.v, e.u)] -= e.w;
        }
        for i in 0..self.n {
            m[(i, i)] = self.degrees[i];
        }
        m
    }
}
