//! Sampling policies sharing one select/observe loop contract.
//!
//! Every policy pulls exactly one arm per iteration: the harness calls
//! [`Policy::select`], draws the reward, and feeds it back through
//! [`Policy::observe`]. Policies that need warm-up pulls outside the
//! iteration counter (APT) declare them through [`Policy::init_arms`].
//!
//! Ties in every selection rule break to the lowest arm index so that runs
//! are deterministic and regression-testable.

use crate::env::ProblemInstance;
use crate::solver::{EstimatorState, SolverError};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("alpha must be positive and finite, got {0}")]
    BadAlpha(f64),
    #[error("epsilon must be positive and finite, got {0}")]
    BadEpsilon(f64),
    #[error("permutation must visit every arm exactly once")]
    BadPermutation,
    #[error("allocation length {got} does not match {expected} arms")]
    BadAllocation { expected: usize, got: usize },
    #[error("no arm lies at least epsilon from the threshold; the oracle allocation is undefined")]
    NoSeparatedArm,
}

/// One sampling strategy's mutable state.
pub trait Policy: Send {
    fn n_arms(&self) -> usize;

    /// Arms to pull once each before the counted iterations begin, in order.
    fn init_arms(&self) -> Vec<usize> {
        Vec::new()
    }

    /// The arm to pull this iteration.
    fn select(&mut self) -> usize;

    /// Feeds back the observed reward for `arm`.
    fn observe(&mut self, arm: usize, value: f64) -> Result<(), PolicyError>;

    /// Current superlevel-set estimate.
    fn estimate(&self) -> Vec<bool>;

    /// Current mean estimates.
    fn means(&self) -> Vec<f64>;

    /// Pull counts, including any initialization pulls.
    fn counts(&self) -> &[u64];
}

fn argmin_lowest_index(values: impl Iterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_value = f64::INFINITY;
    for (i, v) in values.enumerate() {
        if v < best_value {
            best_value = v;
            best = i;
        }
    }
    best
}

/// Graph-adaptive thresholding: pull the arm minimizing the confidence proxy
/// `z_i = delta_hat_i sqrt(n_i + alpha)`, then refresh the gap estimates
/// `delta_hat_i = |mean_i - tau| + epsilon` from the graph-regularized means.
///
/// With a very small `alpha` (for example `1e-8`) every arm is sampled once
/// before any arm is sampled twice; with `alpha = 1` the proxy trusts the
/// graph estimate immediately.
pub struct Grapl {
    estimator: EstimatorState,
    delta_hat: Vec<f64>,
    alpha: f64,
    tau: f64,
    epsilon: f64,
}

impl Grapl {
    pub fn new(
        estimator: EstimatorState,
        alpha: f64,
        tau: f64,
        epsilon: f64,
    ) -> Result<Self, PolicyError> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(PolicyError::BadAlpha(alpha));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(PolicyError::BadEpsilon(epsilon));
        }
        let n = estimator.n_arms();
        Ok(Self {
            estimator,
            delta_hat: vec![epsilon; n],
            alpha,
            tau,
            epsilon,
        })
    }

    /// The selection proxies `z_i = delta_hat_i sqrt(n_i + alpha)`.
    pub fn proxies(&self) -> Vec<f64> {
        self.delta_hat
            .iter()
            .zip(self.estimator.counts())
            .map(|(d, &n)| d * (n as f64 + self.alpha).sqrt())
            .collect()
    }

    pub fn delta_hat(&self) -> &[f64] {
        &self.delta_hat
    }

    pub fn estimator(&self) -> &EstimatorState {
        &self.estimator
    }
}

impl Policy for Grapl {
    fn n_arms(&self) -> usize {
        self.estimator.n_arms()
    }

    fn select(&mut self) -> usize {
        argmin_lowest_index(self.proxies().into_iter())
    }

    fn observe(&mut self, arm: usize, value: f64) -> Result<(), PolicyError> {
        self.estimator.record_pull(arm, value)?;
        // |mean_i - tau| with the offset cancelled symbolically, so offset
        // mode and running on pre-shifted rewards stay bitwise identical.
        let shift = self.tau - self.estimator.offset();
        for (d, &raw) in self.delta_hat.iter_mut().zip(self.estimator.raw_means()) {
            *d = (raw - shift).abs() + self.epsilon;
        }
        Ok(())
    }

    fn estimate(&self) -> Vec<bool> {
        self.estimator.superlevel_estimate(self.tau)
    }

    fn means(&self) -> Vec<f64> {
        self.estimator.means()
    }

    fn counts(&self) -> &[u64] {
        self.estimator.counts()
    }
}

enum Schedule {
    RoundRobin {
        permutation: Vec<usize>,
        position: usize,
    },
    Random {
        rng: Box<ChaCha8Rng>,
    },
}

/// Non-adaptive sampling with the same graph-regularized estimator: either a
/// fixed permutation cycled so every block of `n` iterations pulls every arm
/// once, or uniform-random arms.
pub struct NonAdaptive {
    estimator: EstimatorState,
    tau: f64,
    schedule: Schedule,
}

impl NonAdaptive {
    pub fn round_robin(
        estimator: EstimatorState,
        tau: f64,
        permutation: Vec<usize>,
    ) -> Result<Self, PolicyError> {
        let n = estimator.n_arms();
        let mut seen = vec![false; n];
        if permutation.len() != n {
            return Err(PolicyError::BadPermutation);
        }
        for &arm in &permutation {
            if arm >= n || seen[arm] {
                return Err(PolicyError::BadPermutation);
            }
            seen[arm] = true;
        }
        Ok(Self {
            estimator,
            tau,
            schedule: Schedule::RoundRobin {
                permutation,
                position: 0,
            },
        })
    }

    pub fn uniform_random(estimator: EstimatorState, tau: f64, rng: ChaCha8Rng) -> Self {
        Self {
            estimator,
            tau,
            schedule: Schedule::Random { rng: Box::new(rng) },
        }
    }
}

impl Policy for NonAdaptive {
    fn n_arms(&self) -> usize {
        self.estimator.n_arms()
    }

    fn select(&mut self) -> usize {
        let n = self.estimator.n_arms();
        match &mut self.schedule {
            Schedule::RoundRobin {
                permutation,
                position,
            } => {
                let arm = permutation[*position % n];
                *position += 1;
                arm
            }
            Schedule::Random { rng } => rng.gen_range(0..n),
        }
    }

    fn observe(&mut self, arm: usize, value: f64) -> Result<(), PolicyError> {
        self.estimator.record_pull(arm, value)?;
        Ok(())
    }

    fn estimate(&self) -> Vec<bool> {
        self.estimator.superlevel_estimate(self.tau)
    }

    fn means(&self) -> Vec<f64> {
        self.estimator.means()
    }

    fn counts(&self) -> &[u64] {
        self.estimator.counts()
    }
}

/// The graph-oblivious anytime thresholding baseline: per-arm sample means
/// with proxy `(|mean_i - tau| + epsilon) sqrt(n_i)`.
///
/// Initialization pulls every arm exactly twice; those `2n` pulls are
/// reported through [`Policy::init_arms`] and are excluded from the caller's
/// iteration counter, which matches how this baseline is conventionally
/// accounted.
pub struct Apt {
    sums: Vec<f64>,
    counts: Vec<u64>,
    tau: f64,
    epsilon: f64,
}

impl Apt {
    /// Unlike the problem slack, the proxy's epsilon may be zero.
    pub fn new(n_arms: usize, tau: f64, epsilon: f64) -> Result<Self, PolicyError> {
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(PolicyError::BadEpsilon(epsilon));
        }
        Ok(Self {
            sums: vec![0.0; n_arms],
            counts: vec![0; n_arms],
            tau,
            epsilon,
        })
    }

    pub fn sample_mean(&self, arm: usize) -> f64 {
        if self.counts[arm] == 0 {
            0.0
        } else {
            self.sums[arm] / self.counts[arm] as f64
        }
    }

    /// The selection proxies `(|mean_i - tau| + epsilon) sqrt(n_i)`.
    pub fn proxies(&self) -> Vec<f64> {
        (0..self.sums.len())
            .map(|i| {
                ((self.sample_mean(i) - self.tau).abs() + self.epsilon)
                    * (self.counts[i] as f64).sqrt()
            })
            .collect()
    }
}

impl Policy for Apt {
    fn n_arms(&self) -> usize {
        self.sums.len()
    }

    fn init_arms(&self) -> Vec<usize> {
        let n = self.sums.len();
        (0..n).chain(0..n).collect()
    }

    fn select(&mut self) -> usize {
        argmin_lowest_index(self.proxies().into_iter())
    }

    fn observe(&mut self, arm: usize, value: f64) -> Result<(), PolicyError> {
        self.sums[arm] += value;
        self.counts[arm] += 1;
        Ok(())
    }

    fn estimate(&self) -> Vec<bool> {
        (0..self.sums.len())
            .map(|i| self.sample_mean(i) >= self.tau)
            .collect()
    }

    fn means(&self) -> Vec<f64> {
        (0..self.sums.len()).map(|i| self.sample_mean(i)).collect()
    }

    fn counts(&self) -> &[u64] {
        &self.counts
    }
}

/// The oracle's fractional sampling allocation: proportional to
/// `1 / |mu_i - tau|^2` over arms separated from the threshold by at least
/// `epsilon`, and zero inside the slack band.
pub fn oracle_allocation(instance: &ProblemInstance) -> Result<Vec<f64>, PolicyError> {
    let tau = instance.tau();
    let epsilon = instance.epsilon();
    let gaps: Vec<Option<f64>> = instance
        .mu()
        .iter()
        .map(|&m| {
            let gap = (m - tau).abs();
            (gap >= epsilon).then_some(gap)
        })
        .collect();
    let h_star: f64 = gaps.iter().flatten().map(|gap| 1.0 / (gap * gap)).sum();
    if h_star == 0.0 {
        return Err(PolicyError::NoSeparatedArm);
    }
    Ok(gaps
        .iter()
        .map(|gap| match gap {
            Some(g) => 1.0 / (h_star * g * g),
            None => 0.0,
        })
        .collect())
}

/// Rounds the fractional allocation `beta * horizon` to integer pull counts
/// summing exactly to `horizon`, by largest remainder (ties to the lowest
/// arm index). Every count lands within one pull of its fractional target.
pub fn oracle_schedule(beta: &[f64], horizon: u64) -> Vec<u64> {
    let mut counts: Vec<u64> = Vec::with_capacity(beta.len());
    let mut remainders: Vec<(usize, f64)> = Vec::with_capacity(beta.len());
    let mut assigned = 0u64;
    for (i, &b) in beta.iter().enumerate() {
        let target = b * horizon as f64;
        let floor = target.floor();
        counts.push(floor as u64);
        assigned += floor as u64;
        remainders.push((i, target - floor));
    }
    remainders.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut leftover = horizon.saturating_sub(assigned);
    for (i, _) in remainders {
        if leftover == 0 {
            break;
        }
        counts[i] += 1;
        leftover -= 1;
    }
    counts
}

/// A runnable integer-schedule oracle: knows the true gaps, samples along the
/// largest-remainder schedule for the configured horizon (largest running
/// deficit first), and estimates with the same graph-regularized estimator as
/// the adaptive policies.
pub struct OraclePolicy {
    estimator: EstimatorState,
    tau: f64,
    beta: Vec<f64>,
    schedule: Vec<u64>,
}

impl OraclePolicy {
    pub fn new(
        estimator: EstimatorState,
        tau: f64,
        beta: Vec<f64>,
        horizon: u64,
    ) -> Result<Self, PolicyError> {
        if beta.len() != estimator.n_arms() {
            return Err(PolicyError::BadAllocation {
                expected: estimator.n_arms(),
                got: beta.len(),
            });
        }
        let schedule = oracle_schedule(&beta, horizon);
        Ok(Self {
            estimator,
            tau,
            beta,
            schedule,
        })
    }

    pub fn schedule(&self) -> &[u64] {
        &self.schedule
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }
}

impl Policy for OraclePolicy {
    fn n_arms(&self) -> usize {
        self.estimator.n_arms()
    }

    fn select(&mut self) -> usize {
        let counts = self.estimator.counts();
        let t_next = (self.estimator.total_pulls() + 1) as f64;
        let mut best = None;
        let mut best_deficit = f64::NEG_INFINITY;
        for (i, &count) in counts.iter().enumerate() {
            if count >= self.schedule[i] {
                continue;
            }
            let deficit = self.beta[i] * t_next - count as f64;
            if deficit > best_deficit {
                best_deficit = deficit;
                best = Some(i);
            }
        }
        // Past the configured horizon every quota is filled; keep following
        // the fractional allocation.
        best.unwrap_or_else(|| {
            argmin_lowest_index(
                counts
                    .iter()
                    .zip(&self.beta)
                    .map(|(&n, &b)| n as f64 - b * t_next),
            )
        })
    }

    fn observe(&mut self, arm: usize, value: f64) -> Result<(), PolicyError> {
        self.estimator.record_pull(arm, value)?;
        Ok(())
    }

    fn estimate(&self) -> Vec<bool> {
        self.estimator.superlevel_estimate(self.tau)
    }

    fn means(&self) -> Vec<f64> {
        self.estimator.means()
    }

    fn counts(&self) -> &[u64] {
        self.estimator.counts()
    }
}
