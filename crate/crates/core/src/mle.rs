//! Maximum-likelihood estimation of (δ, β) through the profile score
//!
//! ```text
//! h(δ | X) = 1/δ + ln X̃ − Σ xᵢ^δ ln xᵢ / Σ xᵢ^δ
//! ```
//!
//! which is strictly decreasing in δ, positive near 0 and negative for large
//! δ whenever the sample holds two distinct values. The solver brackets the
//! unique root and runs a Newton iteration that falls back to bisection
//! whenever a step would leave the bracket.
//!
//! All power sums are evaluated on `ln xᵢ − ln max xⱼ`, i.e. on the ratios
//! `xᵢ / max xⱼ ∈ (0, 1]`, so nothing overflows for large δ and the score is
//! invariant under rescaling of the data up to rounding in the logarithms.

use crate::error::SolverError;
use crate::weibull::WeibullParams;

/// Default tolerance on |h(δ̂)|.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Iteration cap for the safeguarded Newton loop.
pub const MAX_ITERATIONS: usize = 500;
/// Cap on geometric bracket expansions.
pub const MAX_DOUBLINGS: usize = 200;

/// A validated sample of positive observations.
#[derive(Debug, Clone)]
pub struct Sample {
    values: Vec<f64>,
    /// ln xᵢ − ln max x
    rel_logs: Vec<f64>,
    ln_max: f64,
    mean_rel_log: f64,
    distinct: bool,
}

impl Sample {
    pub fn new(values: Vec<f64>) -> Result<Self, SolverError> {
        if values.is_empty() {
            return Err(SolverError::EmptySample);
        }
        if let Some((index, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v > 0.0 && v.is_finite()))
        {
            return Err(SolverError::NonPositiveObservation { index, value });
        }
        let max = values.iter().copied().fold(f64::MIN, f64::max);
        let ln_max = max.ln();
        let rel_logs: Vec<f64> = values.iter().map(|v| v.ln() - ln_max).collect();
        let mean_rel_log = rel_logs.iter().sum::<f64>() / values.len() as f64;
        let distinct = values.iter().any(|&v| v != max);
        Ok(Self {
            values,
            rel_logs,
            ln_max,
            mean_rel_log,
            distinct,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// True iff at least two observations differ.
    pub fn has_distinct_values(&self) -> bool {
        self.distinct
    }

    pub fn ln_geometric_mean(&self) -> f64 {
        self.ln_max + self.mean_rel_log
    }

    /// Returns (Σwᵢ, weighted mean of rel_logs, weighted variance of rel_logs)
    /// with wᵢ = exp(δ·rel_logᵢ).
    fn weighted_moments(&self, delta: f64) -> (f64, f64, f64) {
        let mut s0 = 0.0;
        let mut s1 = 0.0;
        for &d in &self.rel_logs {
            let w = (delta * d).exp();
            s0 += w;
            s1 += w * d;
        }
        let mean = s1 / s0;
        let var = self
            .rel_logs
            .iter()
            .map(|&d| (delta * d).exp() * (d - mean) * (d - mean))
            .sum::<f64>()
            / s0;
        (s0, mean, var)
    }

    fn weight_sum(&self, delta: f64) -> f64 {
        self.rel_logs.iter().map(|&d| (delta * d).exp()).sum()
    }
}

/// Solution of the likelihood equations plus solver diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MleEstimate {
    pub delta_hat: f64,
    pub beta_hat: f64,
    /// h(δ̂), bounded by the solver tolerance in absolute value.
    pub h_residual: f64,
    pub iterations: usize,
    /// Final sign-change bracket: h(lo) > 0 > h(hi).
    pub bracket: (f64, f64),
}

pub fn geometric_mean(sample: &Sample) -> f64 {
    sample.ln_geometric_mean().exp()
}

/// Weibull log-likelihood
/// `n ln δ − nδ ln β + n(δ−1) ln X̃ − Σ (xᵢ/β)^δ`.
pub fn log_likelihood(params: &WeibullParams, sample: &Sample) -> f64 {
    let (delta, beta) = (params.shape(), params.scale());
    let n = sample.len() as f64;
    let ln_beta = beta.ln();
    let power_sum = (delta * (sample.ln_max - ln_beta)).exp() * sample.weight_sum(delta);
    n * delta.ln() - n * delta * ln_beta + n * (delta - 1.0) * sample.ln_geometric_mean()
        - power_sum
}

/// h(δ | X).
pub fn profile_score(delta: f64, sample: &Sample) -> f64 {
    let (_, wmean, _) = sample.weighted_moments(delta);
    1.0 / delta + sample.mean_rel_log - wmean
}

/// h′(δ | X) = −1/δ² − Var_w(ln x), the weighted variance being non-negative.
pub fn profile_score_derivative(delta: f64, sample: &Sample) -> f64 {
    let (_, _, wvar) = sample.weighted_moments(delta);
    -1.0 / (delta * delta) - wvar
}

fn score_and_slope(delta: f64, sample: &Sample) -> (f64, f64) {
    let (_, wmean, wvar) = sample.weighted_moments(delta);
    (
        1.0 / delta + sample.mean_rel_log - wmean,
        -1.0 / (delta * delta) - wvar,
    )
}

/// Finds (lo, hi) with h(lo) > 0 > h(hi), doubling or halving from δ = 1.
pub fn find_bracket(sample: &Sample) -> Result<(f64, f64), SolverError> {
    if !sample.has_distinct_values() {
        return Err(SolverError::DegenerateSample);
    }
    let h1 = profile_score(1.0, sample);
    if h1 == 0.0 {
        return Ok((0.5, 2.0));
    }
    if h1 > 0.0 {
        let (mut lo, mut hi) = (1.0, 2.0);
        for _ in 0..MAX_DOUBLINGS {
            if profile_score(hi, sample) < 0.0 {
                return Ok((lo, hi));
            }
            lo = hi;
            hi *= 2.0;
        }
    } else {
        let (mut lo, mut hi) = (0.5, 1.0);
        for _ in 0..MAX_DOUBLINGS {
            if profile_score(lo, sample) > 0.0 {
                return Ok((lo, hi));
            }
            hi = lo;
            lo *= 0.5;
        }
    }
    Err(SolverError::BracketFailure {
        doublings: MAX_DOUBLINGS,
    })
}

/// β̂(δ) = (Σ xᵢ^δ / n)^{1/δ}, evaluated in log space.
pub fn beta_hat_given_delta(delta: f64, sample: &Sample) -> f64 {
    let n = sample.len() as f64;
    (sample.ln_max + (sample.weight_sum(delta) / n).ln() / delta).exp()
}

/// Solves h(δ | X) = 0 to |h| ≤ `tol` and back-substitutes β̂.
pub fn solve_mle(sample: &Sample, tol: f64) -> Result<MleEstimate, SolverError> {
    if !(tol > 0.0) {
        return Err(SolverError::InvalidTolerance(tol));
    }
    let (mut lo, mut hi) = find_bracket(sample)?;
    let mut x = (lo * hi).sqrt();
    let mut residual = f64::INFINITY;
    for iteration in 1..=MAX_ITERATIONS {
        let (h, slope) = score_and_slope(x, sample);
        residual = h;
        if h.abs() <= tol {
            return Ok(MleEstimate {
                delta_hat: x,
                beta_hat: beta_hat_given_delta(x, sample),
                h_residual: h,
                iterations: iteration,
                bracket: (lo, hi),
            });
        }
        if h > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - h / slope;
        x = if slope < 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    Err(SolverError::NoConvergence {
        iterations: MAX_ITERATIONS,
        residual,
    })
}
