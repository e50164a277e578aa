//! Three ways to read off a quantile of δ̂ or β̂/β at one (n, δ):
//!
//! * `q_hat`: from the fitted approximating law W(a, b) or W(c, d);
//! * `q_tilde`: the empirical order statistic of the Monte Carlo draws;
//! * `q_double_hat`: from the regression surrogates' (â, b̂) or (ĉ, d̂).

use std::fmt;

use crate::error::{FitError, SimError};
use crate::moment_match::{fit_cell, FittedWeibull};
use crate::regression::{predict_abcd, SurrogateCoefficients};
use crate::sim::{empirical_quantile, empirical_quantile_sorted, CellSummary};
use crate::weibull::WeibullParams;

pub const DEFAULT_P_LIST: [f64; 5] = [0.1, 0.25, 0.5, 0.75, 0.9];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Target {
    DeltaHat,
    BetaRatio,
}

impl Target {
    pub const ALL: [Target; 2] = [Target::DeltaHat, Target::BetaRatio];

    pub fn as_str(self) -> &'static str {
        match self {
            Target::DeltaHat => "delta_hat",
            Target::BetaRatio => "beta_ratio",
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantileTriple {
    pub target: Target,
    pub n: usize,
    pub delta: f64,
    pub p: f64,
    pub q_hat: f64,
    pub q_tilde: f64,
    pub q_double_hat: f64,
}

pub fn q_hat(fitted: &FittedWeibull, p: f64) -> Result<f64, FitError> {
    Ok(fitted.params().quantile(p)?)
}

pub fn q_tilde(samples: &[f64], p: f64) -> Result<f64, SimError> {
    empirical_quantile(samples, p)
}

pub fn q_double_hat(
    n: usize,
    delta: f64,
    p: f64,
    coef: &SurrogateCoefficients,
    target: Target,
) -> Result<f64, FitError> {
    let pred = predict_abcd(n, delta, coef)?;
    let (shape, scale) = match target {
        Target::DeltaHat => (pred.a, pred.b),
        Target::BetaRatio => (pred.c, pred.d),
    };
    Ok(WeibullParams::new(shape, scale)?.quantile(p)?)
}

/// Triples for every cell, target and p, in that nesting order.
pub fn build_comparison(
    cells: &[CellSummary],
    p_list: &[f64],
    coef: &SurrogateCoefficients,
) -> Result<Vec<QuantileTriple>, SimError> {
    let mut out = Vec::with_capacity(cells.len() * 2 * p_list.len());
    for cell in cells {
        let (shape_fit, scale_fit) = fit_cell(cell)?;
        for target in Target::ALL {
            let (fit, samples) = match target {
                Target::DeltaHat => (&shape_fit, &cell.delta_hat_samples),
                Target::BetaRatio => (&scale_fit, &cell.beta_ratio_samples),
            };
            let mut sorted = samples.clone();
            sorted.sort_by(f64::total_cmp);
            for &p in p_list {
                out.push(QuantileTriple {
                    target,
                    n: cell.n,
                    delta: cell.delta,
                    p,
                    q_hat: q_hat(fit, p)?,
                    q_tilde: empirical_quantile_sorted(&sorted, p)?,
                    q_double_hat: q_double_hat(cell.n, cell.delta, p, coef, target)?,
                });
            }
        }
    }
    Ok(out)
}
