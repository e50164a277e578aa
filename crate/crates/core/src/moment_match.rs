//! Weibull law matched to a sample mean and variance.
//!
//! The coefficient of variation of W(a, b) depends on the shape alone,
//!
//! ```text
//! cv²(a) = Γ(1 + 2/a) / Γ(1 + 1/a)² − 1,
//! ```
//!
//! and is strictly decreasing in a, so matching two moments reduces to a
//! one-dimensional monotone root-find for the shape followed by a closed-form
//! scale.

use crate::error::FitError;
use crate::sim::CellSummary;
use crate::special_math::{gamma_unchecked, log_gamma_unchecked};
use crate::weibull::WeibullParams;

const LN_SHAPE_MIN: f64 = -4.605_170_185_988_091; // ln 1e-2
const LN_SHAPE_MAX: f64 = 9.210_340_371_976_184; // ln 1e4

/// Moment-matched Weibull parameters together with the targets they match.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FittedWeibull {
    pub shape: f64,
    pub scale: f64,
    pub target_mean: f64,
    pub target_var: f64,
    /// Largest relative mismatch of the two moment equations.
    pub residual: f64,
}

impl FittedWeibull {
    pub fn params(&self) -> WeibullParams {
        WeibullParams::new(self.shape, self.scale).expect("fitted parameters are positive")
    }
}

/// Squared coefficient of variation of W(shape, ·).
pub fn cv_squared(shape: f64) -> f64 {
    (log_gamma_unchecked(1.0 + 2.0 / shape) - 2.0 * log_gamma_unchecked(1.0 + 1.0 / shape))
        .exp_m1()
}

/// The unique shape whose coefficient of variation equals `cv`.
pub fn cv_to_shape(cv: f64) -> Result<f64, FitError> {
    if !(cv > 0.0 && cv.is_finite()) {
        return Err(FitError::ShapeOutOfRange(cv));
    }
    let target = cv * cv;
    let f = |ln_a: f64| cv_squared(ln_a.exp()) - target;
    let (mut lo, mut hi) = (LN_SHAPE_MIN, LN_SHAPE_MAX);
    let (f_lo, f_hi) = (f(lo), f(hi));
    if f_lo < 0.0 || f_hi > 0.0 {
        return Err(FitError::ShapeOutOfRange(cv));
    }
    if f_lo == 0.0 {
        return Ok(lo.exp());
    }
    if f_hi == 0.0 {
        return Ok(hi.exp());
    }
    // decreasing in ln a: f(lo) > 0 > f(hi)
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid.exp());
        }
        if fm > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let best = if f(lo).abs() <= f(hi).abs() { lo } else { hi };
    Ok(best.exp())
}

/// Solves `b Γ(1+1/a) = mean`, `b² {Γ(1+2/a) − Γ(1+1/a)²} = var`.
pub fn fit_weibull_moments(mean: f64, var: f64) -> Result<FittedWeibull, FitError> {
    if !(mean > 0.0 && var > 0.0 && mean.is_finite() && var.is_finite()) {
        return Err(FitError::InvalidMoments { mean, var });
    }
    let shape = cv_to_shape(var.sqrt() / mean)?;
    let g1 = gamma_unchecked(1.0 + 1.0 / shape);
    let scale = mean / g1;
    let (m, v) = WeibullParams::new(shape, scale)?.mean_var();
    let residual = ((m - mean) / mean).abs().max(((v - var) / var).abs());
    Ok(FittedWeibull {
        shape,
        scale,
        target_mean: mean,
        target_var: var,
        residual,
    })
}

/// (a, b) for δ̂ and (c, d) for β̂/β from one Monte Carlo cell.
pub fn fit_cell(summary: &CellSummary) -> Result<(FittedWeibull, FittedWeibull), FitError> {
    let shape_fit = fit_weibull_moments(summary.mean_delta_hat, summary.var_delta_hat)?;
    let scale_fit = fit_weibull_moments(summary.mean_beta_ratio, summary.var_beta_ratio)?;
    Ok((shape_fit, scale_fit))
}

/// Approximating-law parameters of one (n, δ) cell: δ̂ ~ W(a, b), β̂/β ~ W(c, d).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellParams {
    pub n: usize,
    pub delta: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl CellParams {
    pub fn from_cell(summary: &CellSummary) -> Result<Self, FitError> {
        let (ab, cd) = fit_cell(summary)?;
        Ok(Self {
            n: summary.n,
            delta: summary.delta,
            a: ab.shape,
            b: ab.scale,
            c: cd.shape,
            d: cd.scale,
        })
    }
}

pub fn fit_grid(cells: &[CellSummary]) -> Result<Vec<CellParams>, FitError> {
    cells.iter().map(CellParams::from_cell).collect()
}
