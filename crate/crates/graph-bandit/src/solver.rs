//! Incremental solution of the regularized least-squares system.
//!
//! Every graph-aware policy maintains the system
//!
//! ```text
//! V_t = L_lambda + (1/gamma) diag(n_t),    x_t = (1/gamma) sum_s obs_s e_{pi_s},
//! ```
//!
//! and re-solves `V_t mu_hat = x_t` after each pull with a Jacobi
//! preconditioned conjugate gradient warm-started from the previous solution.
//! A dense reference solver (Cholesky) and a dense inverse-diagonal tracker
//! back the verification suites; neither is used by the policies themselves.

use crate::graph::LaplacianOperator;
use nalgebra::{DMatrix, DVector};
use std::sync::Arc;
use thiserror::Error;

/// Dense tracker storage cap.
pub const TRACKER_DIM_CAP: usize = 512;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("conjugate gradient did not converge within {iterations} iterations (residual {residual:.3e}, target {target:.3e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        target: f64,
    },
    #[error("dimension mismatch: operator has dimension {expected}, vector has {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("operator is not positive definite")]
    NotPositiveDefinite,
    #[error("dense tracker supports at most {cap} vertices, got {n}")]
    TrackerTooLarge { n: usize, cap: usize },
    #[error("arm index {arm} out of range for {n} arms")]
    ArmOutOfRange { arm: usize, n: usize },
    #[error("regularization weight must be positive and finite, got {0}")]
    BadGamma(f64),
}

/// A symmetric positive definite operator applied matrix-free.
pub trait SpdOperator {
    fn dim(&self) -> usize;
    /// `out = A x`.
    fn apply(&self, x: &[f64], out: &mut [f64]);
    /// Diagonal of `A`, used for Jacobi preconditioning.
    fn diagonal(&self) -> Vec<f64>;
}

impl SpdOperator for LaplacianOperator {
    fn dim(&self) -> usize {
        self.n()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        LaplacianOperator::apply(self, x, out)
    }

    fn diagonal(&self) -> Vec<f64> {
        LaplacianOperator::diagonal(self)
    }
}

/// Stopping parameters for the conjugate gradient solver.
#[derive(Debug, Clone, Copy)]
pub struct CgParams {
    /// Relative residual target: stop once `||A x - b|| <= rel_tol ||b||`.
    pub rel_tol: f64,
    pub max_iters: usize,
}

impl CgParams {
    /// Defaults: `rel_tol = 1e-10`, `max_iters = 10 n`.
    pub fn for_dim(n: usize) -> Self {
        Self {
            rel_tol: 1e-10,
            max_iters: 10 * n.max(1),
        }
    }
}

/// A converged conjugate gradient solve.
#[derive(Debug, Clone)]
pub struct CgSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// True residual norm `||A x - b||` at exit.
    pub residual: f64,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `A x = b` for a symmetric positive definite operator with Jacobi
/// preconditioned conjugate gradient, starting from `warm_start`.
///
/// Convergence is declared on the recurrence residual and then confirmed
/// against the true residual `b - A x`; if the recurrence has drifted, the
/// iteration restarts from the true residual.
pub fn solve_cg(
    op: &impl SpdOperator,
    rhs: &[f64],
    warm_start: &[f64],
    params: CgParams,
) -> Result<CgSolution, SolverError> {
    let n = op.dim();
    if rhs.len() != n {
        return Err(SolverError::DimMismatch {
            expected: n,
            got: rhs.len(),
        });
    }
    if warm_start.len() != n {
        return Err(SolverError::DimMismatch {
            expected: n,
            got: warm_start.len(),
        });
    }
    let b_norm = norm(rhs);
    if b_norm == 0.0 {
        return Ok(CgSolution {
            x: vec![0.0; n],
            iterations: 0,
            residual: 0.0,
        });
    }
    let target = params.rel_tol * b_norm;
    let inv_diag: Vec<f64> = op
        .diagonal()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();

    let mut x = warm_start.to_vec();
    let mut r = vec![0.0; n];
    let mut ap = vec![0.0; n];
    op.apply(&x, &mut r);
    for i in 0..n {
        r[i] = rhs[i] - r[i];
    }
    let mut residual = norm(&r);
    if residual <= target {
        return Ok(CgSolution {
            x,
            iterations: 0,
            residual,
        });
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);

    for iter in 1..=params.max_iters {
        op.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 || pap.is_nan() {
            return Err(SolverError::NotPositiveDefinite);
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        residual = norm(&r);
        if residual <= target {
            // Confirm against the true residual; restart if drifted.
            op.apply(&x, &mut r);
            for i in 0..n {
                r[i] = rhs[i] - r[i];
            }
            residual = norm(&r);
            if residual <= target {
                return Ok(CgSolution {
                    x,
                    iterations: iter,
                    residual,
                });
            }
            for i in 0..n {
                z[i] = r[i] * inv_diag[i];
            }
            p.copy_from_slice(&z);
            rz = dot(&r, &z);
            continue;
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        rz = rz_next;
    }
    op.apply(&x, &mut r);
    for i in 0..n {
        r[i] = rhs[i] - r[i];
    }
    Err(SolverError::NonConvergence {
        iterations: params.max_iters,
        residual: norm(&r),
        target,
    })
}

/// The system operator `V_t = L_lambda + (1/gamma) diag(n_t)`.
pub struct SystemOperator<'a> {
    laplacian: &'a LaplacianOperator,
    gamma: f64,
    counts: &'a [u64],
}

impl SpdOperator for SystemOperator<'_> {
    fn dim(&self) -> usize {
        self.laplacian.n()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        self.laplacian.apply(x, out);
        for i in 0..x.len() {
            out[i] += self.counts[i] as f64 / self.gamma * x[i];
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        let mut d = self.laplacian.diagonal();
        for (di, &count) in d.iter_mut().zip(self.counts) {
            *di += count as f64 / self.gamma;
        }
        d
    }
}

/// Incremental state of the graph-regularized mean estimator.
///
/// Observations accumulate into `x_t` scaled by `1/gamma`, with an optional
/// reference offset subtracted first; reported means add the offset back, so
/// running with offset `tau` on raw observations is identical to running
/// without an offset on observations shifted by `-tau`.
#[derive(Debug, Clone)]
pub struct EstimatorState {
    laplacian: Arc<LaplacianOperator>,
    gamma: f64,
    offset: f64,
    params: CgParams,
    counts: Vec<u64>,
    weighted_obs: Vec<f64>,
    mu_raw: Vec<f64>,
    total_pulls: u64,
}

impl EstimatorState {
    pub fn new(
        laplacian: Arc<LaplacianOperator>,
        gamma: f64,
        offset: f64,
    ) -> Result<Self, SolverError> {
        let params = CgParams::for_dim(laplacian.n());
        Self::with_params(laplacian, gamma, offset, params)
    }

    pub fn with_params(
        laplacian: Arc<LaplacianOperator>,
        gamma: f64,
        offset: f64,
        params: CgParams,
    ) -> Result<Self, SolverError> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(SolverError::BadGamma(gamma));
        }
        let n = laplacian.n();
        Ok(Self {
            laplacian,
            gamma,
            offset,
            params,
            counts: vec![0; n],
            weighted_obs: vec![0.0; n],
            mu_raw: vec![0.0; n],
            total_pulls: 0,
        })
    }

    pub fn n_arms(&self) -> usize {
        self.counts.len()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn laplacian(&self) -> &LaplacianOperator {
        &self.laplacian
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total_pulls(&self) -> u64 {
        self.total_pulls
    }

    /// Records one observation of `arm` and re-solves the system, warm
    /// starting from the previous solution. On solver failure the pull is
    /// rolled back and the state is unchanged.
    pub fn record_pull(&mut self, arm: usize, observation: f64) -> Result<(), SolverError> {
        let n = self.counts.len();
        if arm >= n {
            return Err(SolverError::ArmOutOfRange { arm, n });
        }
        self.counts[arm] += 1;
        let delta = (observation - self.offset) / self.gamma;
        self.weighted_obs[arm] += delta;
        let op = SystemOperator {
            laplacian: &self.laplacian,
            gamma: self.gamma,
            counts: &self.counts,
        };
        match solve_cg(&op, &self.weighted_obs, &self.mu_raw, self.params) {
            Ok(solution) => {
                self.mu_raw = solution.x;
                self.total_pulls += 1;
                Ok(())
            }
            Err(e) => {
                self.counts[arm] -= 1;
                self.weighted_obs[arm] -= delta;
                Err(e)
            }
        }
    }

    /// Current mean estimate of one arm, offset included.
    pub fn mean(&self, arm: usize) -> f64 {
        self.mu_raw[arm] + self.offset
    }

    /// Current mean estimates, offset included.
    pub fn means(&self) -> Vec<f64> {
        self.mu_raw.iter().map(|v| v + self.offset).collect()
    }

    /// The raw solution of `V_t mu = x_t`, before the offset is added back.
    pub fn raw_means(&self) -> &[f64] {
        &self.mu_raw
    }

    /// Superlevel-set estimate `{i : mean_i >= tau}`, evaluated as
    /// `raw_i >= tau - offset` so that offset mode compares against zero
    /// exactly rather than through a round trip of the offset.
    pub fn superlevel_estimate(&self, tau: f64) -> Vec<bool> {
        let shift = tau - self.offset;
        self.mu_raw.iter().map(|&v| v >= shift).collect()
    }

    /// Dense `V_t` for verification against the incremental solve.
    pub fn dense_system(&self) -> DMatrix<f64> {
        let mut m = self.laplacian.to_dense();
        for i in 0..self.counts.len() {
            m[(i, i)] += self.counts[i] as f64 / self.gamma;
        }
        m
    }

    /// The accumulated right-hand side `x_t`.
    pub fn rhs(&self) -> &[f64] {
        &self.weighted_obs
    }
}

/// Solves a dense SPD system by Cholesky factorization.
pub fn solve_dense(matrix: &DMatrix<f64>, rhs: &[f64]) -> Result<Vec<f64>, SolverError> {
    if matrix.nrows() != rhs.len() {
        return Err(SolverError::DimMismatch {
            expected: matrix.nrows(),
            got: rhs.len(),
        });
    }
    let chol = matrix
        .clone()
        .cholesky()
        .ok_or(SolverError::NotPositiveDefinite)?;
    let x = chol.solve(&DVector::from_column_slice(rhs));
    Ok(x.iter().copied().collect())
}

/// Dense SPD inverse by Cholesky factorization.
pub fn dense_inverse(matrix: &DMatrix<f64>) -> Result<DMatrix<f64>, SolverError> {
    Ok(matrix
        .clone()
        .cholesky()
        .ok_or(SolverError::NotPositiveDefinite)?
        .inverse())
}

/// `log det` of a dense SPD matrix via Cholesky.
pub fn log_det(matrix: &DMatrix<f64>) -> Result<f64, SolverError> {
    let chol = matrix
        .clone()
        .cholesky()
        .ok_or(SolverError::NotPositiveDefinite)?;
    let l = chol.l();
    Ok(2.0 * (0..l.nrows()).map(|i| l[(i, i)].ln()).sum::<f64>())
}

/// Dense tracker of `V_t^{-1}` maintained by rank-one Sherman--Morrison
/// updates, exposing the per-arm deviations `sigma_i = sqrt((V_t^{-1})_ii)`
/// and the running `log(det V_t / det L_lambda)`.
///
/// Verification-scale only: storage is `n^2`, capped at
/// [`TRACKER_DIM_CAP`]. Policies never need it.
#[derive(Debug, Clone)]
pub struct DiagVarianceTracker {
    v_inv: DMatrix<f64>,
    gamma: f64,
    log_det_ratio: f64,
    pulls: u64,
}

impl DiagVarianceTracker {
    pub fn new(laplacian: &LaplacianOperator, gamma: f64) -> Result<Self, SolverError> {
        let n = laplacian.n();
        if n > TRACKER_DIM_CAP {
            return Err(SolverError::TrackerTooLarge {
                n,
                cap: TRACKER_DIM_CAP,
            });
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(SolverError::BadGamma(gamma));
        }
        let v_inv = dense_inverse(&laplacian.to_dense())?;
        Ok(Self {
            v_inv,
            gamma,
            log_det_ratio: 0.0,
            pulls: 0,
        })
    }

    pub fn pulls(&self) -> u64 {
        self.pulls
    }

    /// `sigma_i = sqrt((V_t^{-1})_ii)`.
    pub fn sigma(&self, arm: usize) -> f64 {
        self.v_inv[(arm, arm)].max(0.0).sqrt()
    }

    pub fn sigmas(&self) -> Vec<f64> {
        (0..self.v_inv.nrows()).map(|i| self.sigma(i)).collect()
    }

    /// Running `log(det V_t / det L_lambda)`, accumulated from the matrix
    /// determinant lemma at each pull.
    pub fn log_det_ratio(&self) -> f64 {
        self.log_det_ratio
    }

    pub fn v_inv(&self) -> &DMatrix<f64> {
        &self.v_inv
    }

    /// Applies the rank-one update for one pull of `arm`:
    /// `V_t = V_{t-1} + e e' / gamma`, so
    /// `V_t^{-1} = V^{-1} - (V^{-1} e)(V^{-1} e)' / (gamma + (sigma_arm)^2)`.
    pub fn record_pull(&mut self, arm: usize) -> Result<(), SolverError> {
        let n = self.v_inv.nrows();
        if arm >= n {
            return Err(SolverError::ArmOutOfRange { arm, n });
        }
        let sigma_sq = self.v_inv[(arm, arm)];
        let denom = self.gamma + sigma_sq;
        let col = self.v_inv.column(arm).clone_owned();
        for i in 0..n {
            let ci = col[i];
            if ci == 0.0 {
                continue;
            }
            for j in 0..n {
                self.v_inv[(i, j)] -= ci * col[j] / denom;
            }
        }
        self.log_det_ratio += (1.0 + sigma_sq / self.gamma).ln();
        self.pulls += 1;
        Ok(())
    }
}
