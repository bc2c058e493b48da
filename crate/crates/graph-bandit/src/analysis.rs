//! The complexity and bound calculus.
//!
//! Everything here is a pure function of a problem instance, a regularized
//! Laplacian, and run parameters: the hardness measures `H`, `H_tilde`, and
//! `H_star`, the smoothness norm, the spectral effective dimension, the
//! error-bound evaluators for the adaptive, non-adaptive, and oracle
//! samplers, the disconnected-cliques lower bound, the tuned regularization
//! weight `gamma_star`, and the critical iteration at which the bounds start
//! to decay.
//!
//! Bound evaluators never clamp: values above 1 are vacuous but still useful
//! for locating the critical iteration on a plot.

use crate::env::ProblemInstance;
use crate::graph::LaplacianOperator;
use thiserror::Error;

/// Dense eigensolve cap for spectrum computation.
pub const SPECTRUM_DIM_CAP: usize = 4096;

const GAMMA_STAR_MAX_ITERS: usize = 100;
const GAMMA_STAR_REL_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("dense spectrum computation is capped at {cap} vertices, got {n}")]
    SpectrumTooLarge { n: usize, cap: usize },
    #[error("no arm is separated from the threshold by epsilon; {0} is undefined")]
    UndefinedComplexity(&'static str),
    #[error("bound evaluation requires a positive sub-Gaussian scale")]
    ZeroNoise,
    #[error("the smoothness norm is zero; gamma_star is undefined")]
    ZeroSmoothness,
    #[error(
        "gamma_star fixed point did not converge after {iterations} iterations (last iterate {last})"
    )]
    FixedPointDiverged { iterations: usize, last: f64 },
}

/// The hardness measures of one instance, plus the smoothness norm of its
/// mean vector on the graph.
#[derive(Debug, Clone)]
pub struct ComplexityReport {
    /// `H = sum_i (|mu_i - tau| + epsilon)^{-2}` over all arms.
    pub h: f64,
    /// `H_tilde = N / min{ |mu_i - tau|^2 : |mu_i - tau| >= epsilon }`;
    /// `None` when no arm is separated.
    pub h_tilde: Option<f64>,
    /// `H_star = sum over separated arms of |mu_i - tau|^{-2}`; `None` when
    /// no arm is separated.
    pub h_star: Option<f64>,
    /// Number of arms strictly inside the epsilon band.
    pub n_small: usize,
    /// `||mu - offset 1||_{L_lambda}`.
    pub smoothness: f64,
    /// The reference offset the smoothness norm was taken against.
    pub offset: f64,
}

/// Computes all three hardness measures and the smoothness norm. `offset` is
/// the estimation reference (0 without offset mode, `tau` with it).
pub fn complexities(
    instance: &ProblemInstance,
    laplacian: &LaplacianOperator,
    offset: f64,
) -> ComplexityReport {
    let tau = instance.tau();
    let epsilon = instance.epsilon();
    let mut h = 0.0;
    let mut h_star_sum = 0.0;
    let mut n_small = 0usize;
    let mut min_sep_gap_sq: Option<f64> = None;
    for &m in instance.mu() {
        let gap = (m - tau).abs();
        let delta = gap + epsilon;
        h += 1.0 / (delta * delta);
        if gap >= epsilon {
            h_star_sum += 1.0 / (gap * gap);
            let gap_sq = gap * gap;
            min_sep_gap_sq = Some(min_sep_gap_sq.map_or(gap_sq, |m: f64| m.min(gap_sq)));
        } else {
            n_small += 1;
        }
    }
    let n = instance.n_arms() as f64;
    let shifted: Vec<f64> = instance.mu().iter().map(|m| m - offset).collect();
    ComplexityReport {
        h,
        h_tilde: min_sep_gap_sq.map(|g| n / g),
        h_star: min_sep_gap_sq.map(|_| h_star_sum),
        n_small,
        smoothness: laplacian.norm(&shifted),
        offset,
    }
}

/// The ordered spectrum of a regularized Laplacian, with the ridge that
/// produced it.
#[derive(Debug, Clone)]
pub struct SpectrumSummary {
    eigenvalues: Vec<f64>,
    lambda: f64,
}

impl SpectrumSummary {
    /// Full spectrum by dense symmetric eigensolve, capped at
    /// [`SPECTRUM_DIM_CAP`] vertices.
    pub fn compute(laplacian: &LaplacianOperator) -> Result<Self, AnalysisError> {
        let n = laplacian.n();
        if n > SPECTRUM_DIM_CAP {
            return Err(AnalysisError::SpectrumTooLarge {
                n,
                cap: SPECTRUM_DIM_CAP,
            });
        }
        let eigenvalues = laplacian.to_dense().symmetric_eigenvalues();
        Ok(Self::from_eigenvalues(
            eigenvalues.iter().copied().collect(),
            laplacian.lambda(),
        ))
    }

    /// Wraps an explicit eigenvalue list (sorted internally).
    pub fn from_eigenvalues(mut eigenvalues: Vec<f64>, lambda: f64) -> Self {
        eigenvalues.sort_by(|a, b| a.total_cmp(b));
        Self {
            eigenvalues,
            lambda,
        }
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    /// The effective dimension at horizon `t`: the largest `d` with
    ///
    /// ```text
    /// (d - 1) gamma lambda_d <= T' / log(1 + T' / (gamma lambda)),
    /// ```
    ///
    /// where `lambda_d` is the d-th smallest eigenvalue and `T' = min(t, N)`.
    pub fn effective_dimension(&self, t: u64, gamma: f64) -> usize {
        let n = self.eigenvalues.len();
        let t_eff = (t.max(1).min(n as u64)) as f64;
        let budget = t_eff / (1.0 + t_eff / (gamma * self.lambda)).ln();
        // (d - 1) lambda_d is non-decreasing in d, so the admissible set is a
        // prefix; take its last element.
        for d in (1..=n).rev() {
            if (d - 1) as f64 * gamma * self.eigenvalues[d - 1] <= budget {
                return d;
            }
        }
        1
    }
}

/// `M = max{ sqrt(alpha / (gamma lambda)), sqrt(1 + alpha) }`.
pub fn m_value(alpha: f64, gamma: f64, lambda: f64) -> f64 {
    (alpha / (gamma * lambda)).sqrt().max((1.0 + alpha).sqrt())
}

/// One evaluated error bound.
#[derive(Debug, Clone)]
pub struct BoundValue {
    /// `exp(exponent)`, returned as-is even when vacuous (above 1).
    pub value: f64,
    pub exponent: f64,
    /// Whether the bound's smoothness condition holds at this horizon.
    pub condition_met: bool,
    pub effective_dimension: usize,
}

fn exponential_bound(
    threshold: f64,
    smoothness: f64,
    d_t: usize,
    t: u64,
    gamma: f64,
    r: f64,
    lambda: f64,
) -> BoundValue {
    let gap = threshold - smoothness;
    let exponent = -gamma * gamma / (2.0 * r * r) * gap * gap
        + d_t as f64 * (1.0 + t as f64 / (gamma * lambda)).ln();
    BoundValue {
        value: exponent.exp(),
        exponent,
        condition_met: smoothness <= threshold,
        effective_dimension: d_t,
    }
}

/// Error bound of the adaptive sampler: condition
/// `||mu||_{L_lambda} <= sqrt(T / (gamma H)) / (3M + 1)`, value
/// `exp{ -gamma^2/(2R^2) (sqrt(T/(gamma H))/(3M+1) - ||mu||)^2
///       + d_T log(1 + T/(gamma lambda)) }`.
pub fn bound_adaptive(
    report: &ComplexityReport,
    spectrum: &SpectrumSummary,
    t: u64,
    gamma: f64,
    r: f64,
    alpha: f64,
) -> Result<BoundValue, AnalysisError> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(AnalysisError::ZeroNoise);
    }
    let lambda = spectrum.lambda();
    let m = m_value(alpha, gamma, lambda);
    let threshold = (t as f64 / (gamma * report.h)).sqrt() / (3.0 * m + 1.0);
    let d_t = spectrum.effective_dimension(t, gamma);
    Ok(exponential_bound(
        threshold,
        report.smoothness,
        d_t,
        t,
        gamma,
        r,
        lambda,
    ))
}

/// Error bound of the round-robin non-adaptive sampler: same shape with
/// threshold `sqrt(T / (gamma H_tilde))`.
pub fn bound_nonadaptive(
    report: &ComplexityReport,
    spectrum: &SpectrumSummary,
    t: u64,
    gamma: f64,
    r: f64,
) -> Result<BoundValue, AnalysisError> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(AnalysisError::ZeroNoise);
    }
    let h_tilde = report
        .h_tilde
        .ok_or(AnalysisError::UndefinedComplexity("H_tilde"))?;
    let lambda = spectrum.lambda();
    let threshold = (t as f64 / (gamma * h_tilde)).sqrt();
    let d_t = spectrum.effective_dimension(t, gamma);
    Ok(exponential_bound(
        threshold,
        report.smoothness,
        d_t,
        t,
        gamma,
        r,
        lambda,
    ))
}

/// Error bound of the fractional oracle sampler: same shape with threshold
/// `sqrt(T / (gamma H_star))`.
pub fn bound_oracle(
    report: &ComplexityReport,
    spectrum: &SpectrumSummary,
    t: u64,
    gamma: f64,
    r: f64,
) -> Result<BoundValue, AnalysisError> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(AnalysisError::ZeroNoise);
    }
    let h_star = report
        .h_star
        .ok_or(AnalysisError::UndefinedComplexity("H_star"))?;
    let lambda = spectrum.lambda();
    let threshold = (t as f64 / (gamma * h_star)).sqrt();
    let d_t = spectrum.effective_dimension(t, gamma);
    Ok(exponential_bound(
        threshold,
        report.smoothness,
        d_t,
        t,
        gamma,
        r,
        lambda,
    ))
}

/// The burn-in horizon `T_0 = gamma H (3M + 1)^2 ||mu||^2` at which the
/// adaptive bound's smoothness condition is first met.
pub fn burn_in_horizon(report: &ComplexityReport, gamma: f64, alpha: f64, lambda: f64) -> f64 {
    let m = m_value(alpha, gamma, lambda);
    let s = report.smoothness;
    gamma * report.h * (3.0 * m + 1.0).powi(2) * s * s
}

/// The simplified adaptive bound for `T = T_0 + T_1`:
/// `exp{ -gamma T_1 / (4 (3M+1)^2 R^2 H) + d_T log(1 + T/(gamma lambda)) }`.
/// It upper-bounds the exact adaptive bound once `T_1 >= 8 T_0`, which is
/// what `condition_met` reports.
pub fn bound_adaptive_simplified(
    report: &ComplexityReport,
    spectrum: &SpectrumSummary,
    t: u64,
    gamma: f64,
    r: f64,
    alpha: f64,
) -> Result<BoundValue, AnalysisError> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(AnalysisError::ZeroNoise);
    }
    let lambda = spectrum.lambda();
    let m = m_value(alpha, gamma, lambda);
    let t0 = burn_in_horizon(report, gamma, alpha, lambda);
    let t1 = t as f64 - t0;
    let d_t = spectrum.effective_dimension(t, gamma);
    let exponent = -gamma * t1 / (4.0 * (3.0 * m + 1.0).powi(2) * r * r * report.h)
        + d_t as f64 * (1.0 + t as f64 / (gamma * lambda)).ln();
    Ok(BoundValue {
        value: exponent.exp(),
        exponent,
        condition_met: t1 >= 8.0 * t0,
        effective_dimension: d_t,
    })
}

/// The disconnected-cliques lower bound for `cliques` cliques of size `k`:
/// `exp{ -3 K T / (R^2 H) - 4 log(12 (log T + 1) N) }` with `N = cliques k`.
pub fn bound_cliques_lower(
    cliques: usize,
    k: usize,
    t: u64,
    r: f64,
    h: f64,
) -> Result<f64, AnalysisError> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(AnalysisError::ZeroNoise);
    }
    let n = (cliques * k) as f64;
    let t = t as f64;
    let exponent = -3.0 * k as f64 * t / (r * r * h) - 4.0 * (12.0 * (t.ln() + 1.0) * n).ln();
    Ok(exponent.exp())
}

/// The tuned regularization weight and the effective dimension it induces.
#[derive(Debug, Clone)]
pub struct GammaStar {
    pub gamma: f64,
    /// Effective dimension at the tuned horizon.
    pub d_prime: usize,
    pub iterations: usize,
    /// Fixed-point iterate history, last entry equals `gamma`.
    pub history: Vec<f64>,
}

/// Solves for the regularization weight that balances the burn-in horizon
/// against the log-det term:
///
/// ```text
/// gamma* = (2R / ||mu||) sqrt(d' log(1 + 9 H (3M+1)^2 ||mu||^2 / lambda)),
/// ```
///
/// where `d'` is the largest `d` with
/// `(d - 1) lambda_d <= 9 H (3M+1)^2 ||mu||^2 / log(1 + 9 H (3M+1)^2 ||mu||^2 / lambda)`.
///
/// `M` depends on `gamma` itself, so the system is closed by fixed-point
/// iteration: start from `M = sqrt(1 + alpha)`, recompute `M` from each new
/// iterate, and stop when the relative change drops below `1e-6`.
pub fn gamma_star(
    report: &ComplexityReport,
    spectrum: &SpectrumSummary,
    alpha: f64,
    r: f64,
) -> Result<GammaStar, AnalysisError> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(AnalysisError::ZeroNoise);
    }
    let s = report.smoothness;
    if !(s > 0.0 && s.is_finite()) {
        return Err(AnalysisError::ZeroSmoothness);
    }
    let lambda = spectrum.lambda();
    let h = report.h;
    let mut m = (1.0 + alpha).sqrt();
    let mut gamma = f64::NAN;
    let mut history = Vec::new();
    for iteration in 1..=GAMMA_STAR_MAX_ITERS {
        let scale = 9.0 * h * (3.0 * m + 1.0).powi(2) * s * s;
        let log_term = (1.0 + scale / lambda).ln();
        let budget = scale / log_term;
        let mut d_prime = 1;
        for d in (1..=spectrum.n()).rev() {
            if (d - 1) as f64 * spectrum.eigenvalues()[d - 1] <= budget {
                d_prime = d;
                break;
            }
        }
        let next = 2.0 * r / s * (d_prime as f64 * log_term).sqrt();
        history.push(next);
        if gamma.is_finite() && (next - gamma).abs() / next < GAMMA_STAR_REL_TOL {
            return Ok(GammaStar {
                gamma: next,
                d_prime,
                iterations: iteration,
                history,
            });
        }
        gamma = next;
        m = m_value(alpha, gamma, lambda);
    }
    Err(AnalysisError::FixedPointDiverged {
        iterations: GAMMA_STAR_MAX_ITERS,
        last: gamma,
    })
}

/// The smallest integer horizon at which the simplified bound's linear term
/// reaches the log-det term:
///
/// ```text
/// gamma (T - T_0) / (4 (3M+1)^2 R^2 H) >= d_T log(1 + T / (gamma lambda)).
/// ```
///
/// Horizons up to the graph size are scanned directly (the effective
/// dimension varies there); beyond it `d_T` is constant and the margin is
/// convex in `T`, so the first crossing is found by doubling plus bisection.
/// Saturates at `2^62` for degenerate parameter combinations.
pub fn critical_iteration(
    report: &ComplexityReport,
    spectrum: &SpectrumSummary,
    gamma: f64,
    r: f64,
    alpha: f64,
) -> Result<u64, AnalysisError> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(AnalysisError::ZeroNoise);
    }
    let lambda = spectrum.lambda();
    let m = m_value(alpha, gamma, lambda);
    let t0 = burn_in_horizon(report, gamma, alpha, lambda);
    let slope = gamma / (4.0 * (3.0 * m + 1.0).powi(2) * r * r * report.h);
    let margin = |t: u64| -> f64 {
        let d_t = spectrum.effective_dimension(t, gamma) as f64;
        slope * (t as f64 - t0) - d_t * (1.0 + t as f64 / (gamma * lambda)).ln()
    };

    let n = spectrum.n() as u64;
    for t in 1..=n {
        if margin(t) >= 0.0 {
            return Ok(t);
        }
    }
    const SATURATION: u64 = 1 << 62;
    let mut hi = (n + 1).max(2);
    if margin(n + 1) >= 0.0 {
        return Ok(n + 1);
    }
    while margin(hi) < 0.0 {
        if hi >= SATURATION {
            return Ok(SATURATION);
        }
        hi = (hi * 2).min(SATURATION);
    }
    // Beyond n the margin is convex with margin(lo) < 0 <= margin(hi), so
    // the admissible set is a suffix; bisect for its first element.
    let mut lo = hi / 2;
    while lo + 1 < hi {
        let mid = lo + (hi - lo) / 2;
        if margin(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}
