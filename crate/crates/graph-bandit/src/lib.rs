//! Superlevel-set identification over graph-structured bandit arms.
//!
//! Given `N` arms with unknown means `mu`, a threshold `tau`, and a weighted
//! similarity graph over the arms, the goal is to identify the superlevel set
//! `{i : mu_i >= tau}` from as few noisy pulls as possible. When the means
//! vary smoothly over the graph, regularizing the mean estimate by the graph
//! Laplacian lets every pull inform every connected arm, and an adaptive
//! sampling rule can focus pulls on the arms nearest the threshold.
//!
//! The crate is organized as:
//!
//! - [`graph`] — weighted graphs, the regularized Laplacian operator,
//!   generators (two-block SBM, Newman–Watts small world, disconnected
//!   cliques), smooth signal synthesis, and edge-list ingestion.
//! - [`solver`] — warm-started preconditioned conjugate gradient for the
//!   regularized least-squares system, the incremental estimator state built
//!   on it, and a dense inverse-diagonal tracker for verification work.
//! - [`env`](mod@env) — ground-truth problem instances, seeded reward
//!   sampling, and the loss / misclassification-error metrics.
//! - [`policy`] — the sampling policies: graph-adaptive thresholding (GrAPL),
//!   non-adaptive graph-regularized sampling, APT, and the oracle allocation.
//! - [`analysis`] — the complexity and bound calculus: hardness measures,
//!   smoothness norms, spectral effective dimension, error bound evaluators,
//!   the tuned regularization weight, and the critical iteration.
//! - [`harness`] — declarative multi-trial experiment runner with
//!   per-iteration error curves, quantile aggregation, and CSV emission.

pub mod analysis;
pub mod env;
pub mod graph;
pub mod harness;
pub mod policy;
pub mod solver;
