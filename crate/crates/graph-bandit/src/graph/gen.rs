//! Graph generators and smooth-signal synthesis.
//!
//! All generators are pure functions of their parameters and a 64-bit seed.

use super::{GraphError, LaplacianOperator, WeightedGraph};
use crate::solver::{solve_cg, CgParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Within-community edge probability of the two-block model:
/// `log(n/2) / (n/2)`.
pub fn sbm_within_probability(n: usize) -> f64 {
    let half = n as f64 / 2.0;
    half.ln() / half
}

/// Cross-community edge probability of the two-block model:
/// `log(n/2) / (n/2)^{3/2}`.
pub fn sbm_cross_probability(n: usize) -> f64 {
    let half = n as f64 / 2.0;
    half.ln() / half.powf(1.5)
}

/// Samples a two-community stochastic block model on `n` vertices (`n` even,
/// at least 4). Vertices `0..n/2` form the first community. Every
/// within-community pair is connected independently with probability
/// [`sbm_within_probability`], every cross pair with
/// [`sbm_cross_probability`]; all weights are 1.
pub fn gen_sbm(n: usize, seed: u64) -> Result<WeightedGraph, GraphError> {
    if n < 4 || !n.is_multiple_of(2) {
        return Err(GraphError::BadSbmSize(n));
    }
    let p_within = sbm_within_probability(n);
    let p_cross = sbm_cross_probability(n);
    let half = n / 2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            let p = if (u < half) == (v < half) {
                p_within
            } else {
                p_cross
            };
            if rng.gen::<f64>() < p {
                edges.push((u, v, 1.0));
            }
        }
    }
    WeightedGraph::new(n, edges)
}

/// Samples a Newman–Watts small-world graph: a ring lattice where every
/// vertex connects to its `k_ring` nearest neighbors (`k_ring/2` on each
/// side), plus one shortcut per ring edge with probability `p_new`, between
/// a uniformly random pair of distinct vertices. Shortcuts are only added,
/// never rewired; a shortcut that lands on an existing edge is dropped. All
/// weights are 1.
pub fn gen_small_world(
    n: usize,
    k_ring: usize,
    p_new: f64,
    seed: u64,
) -> Result<WeightedGraph, GraphError> {
    if !k_ring.is_multiple_of(2) || k_ring >= n {
        return Err(GraphError::BadRing { k_ring, n });
    }
    let reach = k_ring / 2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut present = std::collections::HashSet::new();
    let mut edges = Vec::new();
    // Each ring pair {u, (u + d) mod n} with d <= reach appears exactly once
    // here: a duplicate would need 2d = n, excluded by k_ring < n.
    for u in 0..n {
        for d in 1..=reach {
            let v = (u + d) % n;
            let key = (u.min(v), u.max(v));
            present.insert(key);
            edges.push((key.0, key.1, 1.0));
        }
    }
    let ring_edges = edges.len();
    for _ in 0..ring_edges {
        if rng.gen::<f64>() >= p_new {
            continue;
        }
        let a = rng.gen_range(0..n);
        let mut b = rng.gen_range(0..n);
        while b == a {
            b = rng.gen_range(0..n);
        }
        let key = (a.min(b), a.max(b));
        if present.insert(key) {
            edges.push((key.0, key.1, 1.0));
        }
    }
    WeightedGraph::new(n, edges)
}

/// Builds `cliques` disconnected cliques of `size` vertices each. Vertex `i`
/// belongs to clique `i / size`; all within-clique pairs have weight 1.
pub fn gen_cliques(cliques: usize, size: usize) -> Result<WeightedGraph, GraphError> {
    if cliques == 0 || size == 0 {
        return Err(GraphError::BadCliques { cliques, size });
    }
    let n = cliques * size;
    let mut edges = Vec::new();
    for c in 0..cliques {
        let base = c * size;
        for a in 0..size {
            for b in (a + 1)..size {
                edges.push((base + a, base + b, 1.0));
            }
        }
    }
    WeightedGraph::new(n, edges)
}

/// The smooth signal before clipping: draw `y` with i.i.d. standard normal
/// entries, solve `(L + I/N^2) mu0 = y`, shift to zero median (midpoint
/// convention for even lengths), rescale to population standard deviation
/// 0.2, and add 0.5.
pub fn smooth_signal_raw(graph: &WeightedGraph, seed: u64) -> Result<Vec<f64>, GraphError> {
    let n = graph.n_vertices();
    if n == 0 {
        return Err(GraphError::Empty);
    }
    let lambda = 1.0 / (n as f64 * n as f64);
    let op = LaplacianOperator::new(graph, lambda)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let y: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let zeros = vec![0.0; n];
    let mu0 = solve_cg(&op, &y, &zeros, CgParams::for_dim(n))?.x;

    let med = median(&mu0);
    let centered: Vec<f64> = mu0.iter().map(|v| v - med).collect();
    let variance: f64 = centered.iter().map(|v| v * v).sum::<f64>() / n as f64;
    let sd = variance.sqrt();
    if sd == 0.0 {
        return Err(GraphError::DegenerateSignal);
    }
    Ok(centered.iter().map(|v| 0.5 + 0.2 * v / sd).collect())
}

/// Synthesizes a graph-smooth mean vector in `[0, 1]`: the raw signal of
/// [`smooth_signal_raw`] clipped entrywise to `[0, 1]`. Deterministic given
/// the seed.
pub fn smooth_signal(graph: &WeightedGraph, seed: u64) -> Result<Vec<f64>, GraphError> {
    Ok(smooth_signal_raw(graph, seed)?
        .into_iter()
        .map(|v| v.clamp(0.0, 1.0))
        .collect())
}

fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len();
    if !n.is_multiple_of(2) {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}
