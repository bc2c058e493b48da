//! Ground-truth problem instances and seeded reward sampling.
//!
//! A [`ProblemInstance`] owns the true arm means, the threshold, the slack,
//! and the noise model. Pulling an arm draws one independent sample from that
//! arm's distribution using a caller-supplied RNG stream, so trials can run
//! in parallel with reproducible, non-overlapping randomness.
//!
//! Randomness is always derived through [`stream_rng`]: a SplitMix64 chain
//! absorbs `(base_seed, path...)` into a 64-bit key for a ChaCha8 stream
//! cipher RNG. The construction is documented here precisely so that replays
//! are bit-identical across platforms and thread counts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("means must be non-empty and finite")]
    BadMeans,
    #[error("epsilon must be positive and finite, got {0}")]
    BadEpsilon(f64),
    #[error("threshold must be finite, got {0}")]
    BadThreshold(f64),
    #[error("Gaussian noise scale must be positive and finite, got {0}")]
    BadSigma(f64),
    #[error("Bernoulli arms require all means in [0, 1]; mean {value} at arm {arm} is outside")]
    BernoulliRange { arm: usize, value: f64 },
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a 64-bit stream key from a base seed and a path of stream ids.
///
/// The path is absorbed word by word into a SplitMix64 chain, so
/// `(base, [a, b])` and `(base, [b, a])` give unrelated keys.
pub fn stream_seed(base: u64, path: &[u64]) -> u64 {
    let mut state = base;
    let mut out = splitmix64(&mut state);
    for &word in path {
        state ^= out ^ word.wrapping_mul(0xA24B_AED4_963E_E407);
        out = splitmix64(&mut state);
    }
    out
}

/// A seeded ChaCha8 RNG for the stream identified by `(base, path)`.
pub fn stream_rng(base: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_seed(base, path))
}

/// Reward noise attached to every arm of an instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseModel {
    /// Additive Gaussian noise with standard deviation `sigma`.
    Gaussian { sigma: f64 },
    /// Each pull of arm `i` is a Bernoulli draw with success probability
    /// `mu_i`; requires all means in `[0, 1]`.
    Bernoulli,
    /// Every pull returns the exact mean.
    Deterministic,
}

impl NoiseModel {
    /// The sub-Gaussian scale of the noise: `sigma` for Gaussian arms, `1/2`
    /// for Bernoulli arms (bounded support of width 1), and `0` for
    /// deterministic arms. Bound evaluators are undefined at scale zero.
    pub fn sub_gaussian_r(&self) -> f64 {
        match self {
            NoiseModel::Gaussian { sigma } => *sigma,
            NoiseModel::Bernoulli => 0.5,
            NoiseModel::Deterministic => 0.0,
        }
    }
}

/// Ground truth for a thresholding problem: true means, threshold `tau`,
/// slack `epsilon`, and the reward noise model.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    mu: Vec<f64>,
    tau: f64,
    epsilon: f64,
    noise: NoiseModel,
}

impl ProblemInstance {
    pub fn new(mu: Vec<f64>, tau: f64, epsilon: f64, noise: NoiseModel) -> Result<Self, EnvError> {
        if mu.is_empty() || mu.iter().any(|m| !m.is_finite()) {
            return Err(EnvError::BadMeans);
        }
        if !tau.is_finite() {
            return Err(EnvError::BadThreshold(tau));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(EnvError::BadEpsilon(epsilon));
        }
        match noise {
            NoiseModel::Gaussian { sigma } if !(sigma > 0.0 && sigma.is_finite()) => {
                return Err(EnvError::BadSigma(sigma));
            }
            NoiseModel::Bernoulli => {
                if let Some((arm, &value)) = mu
                    .iter()
                    .enumerate()
                    .find(|(_, &m)| !(0.0..=1.0).contains(&m))
                {
                    return Err(EnvError::BernoulliRange { arm, value });
                }
            }
            _ => {}
        }
        Ok(Self {
            mu,
            tau,
            epsilon,
            noise,
        })
    }

    pub fn n_arms(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn noise(&self) -> NoiseModel {
        self.noise
    }

    pub fn sub_gaussian_r(&self) -> f64 {
        self.noise.sub_gaussian_r()
    }

    /// Draws one independent sample from the arm's distribution, advancing
    /// the RNG stream deterministically.
    pub fn pull(&self, arm: usize, rng: &mut ChaCha8Rng) -> f64 {
        let mean = self.mu[arm];
        match self.noise {
            NoiseModel::Deterministic => mean,
            NoiseModel::Gaussian { sigma } => {
                let normal = Normal::new(mean, sigma).expect("validated sigma");
                normal.sample(rng)
            }
            NoiseModel::Bernoulli => {
                if rng.gen::<f64>() < mean {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Membership mask of the superlevel set `{i : mu_i >= tau}`. Ties
    /// `mu_i = tau` count as inside.
    pub fn superlevel_set(&self) -> Vec<bool> {
        self.mu.iter().map(|&m| m >= self.tau).collect()
    }

    /// Separation status of an arm: `mu_i >= tau + epsilon` on the high
    /// side, `mu_i < tau - epsilon` on the low side. Arms inside the slack
    /// band are free to land on either side of the estimate.
    fn is_separated(&self, arm: usize) -> (bool, bool) {
        let m = self.mu[arm];
        (m >= self.tau + self.epsilon, m < self.tau - self.epsilon)
    }

    /// Number of separated arms the estimate puts on the wrong side.
    pub fn misclassified(&self, estimate: &[bool]) -> usize {
        assert_eq!(estimate.len(), self.mu.len(), "estimate length mismatch");
        (0..self.mu.len())
            .filter(|&i| {
                let (high, low) = self.is_separated(i);
                (high && !estimate[i]) || (low && estimate[i])
            })
            .count()
    }

    /// The 0/1 loss: 1 iff any separated arm is misclassified.
    pub fn loss(&self, estimate: &[bool]) -> bool {
        self.misclassified(estimate) > 0
    }

    /// Misclassification error: misclassified separated arms over all
    /// separated arms. Defined as 0 when no arm is separated, matching the
    /// loss (nothing can be misclassified).
    pub fn error_rate(&self, estimate: &[bool]) -> f64 {
        let denominator = (0..self.mu.len())
            .filter(|&i| {
                let (high, low) = self.is_separated(i);
                high || low
            })
            .count();
        if denominator == 0 {
            return 0.0;
        }
        self.misclassified(estimate) as f64 / denominator as f64
    }
}
