//! First-order bias and variance of the MLEs and their comparison with the
//! simulated sampling distributions.
//!
//! With n observations, E(δ̂) − δ ≈ B₁/n, Var(δ̂) ≈ V₁/n,
//! E(β̂/β) − 1 ≈ B₂/(βn) and Var(β̂/β) ≈ V₂/n. The simulation-side
//! counterparts B̂ᵢ, V̂ᵢ are n times the bias and variance of the fitted
//! approximating laws W(a, b) and W(c, d).

use crate::error::FitError;
use crate::moment_match::CellParams;
use crate::regression::{predict_abcd, SurrogateCoefficients};
use crate::special_math::{gamma_unchecked, A1, ZETA2, ZETA3};

/// Leading coefficients of B₂/β = C2/δ² − C1/δ, derived from the constants.
pub const B2_COEF_INV_SQ: f64 = (A1 * A1 + ZETA2) / (2.0 * ZETA2);
pub const B2_COEF_INV: f64 =
    (2.0 * ZETA2 * ZETA2 - (4.0 * A1 + 1.0) * ZETA2 + 2.0 * A1 * ZETA3) / (2.0 * ZETA2 * ZETA2);

pub fn b1(delta: f64) -> f64 {
    delta * (3.0 * ZETA2 - ZETA3) / (ZETA2 * ZETA2)
}

/// B₂/β in its unsimplified form.
pub fn b2_over_beta(delta: f64) -> f64 {
    let inner = 2.0 * ZETA2 * ZETA2 - (4.0 * A1 + 1.0) * ZETA2 + 2.0 * A1 * ZETA3;
    ((A1 * A1 + ZETA2) * ZETA2 - delta * inner) / (2.0 * delta * delta * ZETA2 * ZETA2)
}

/// B₂/β as a polynomial in 1/δ.
pub fn b2_over_beta_simplified(delta: f64) -> f64 {
    B2_COEF_INV_SQ / (delta * delta) - B2_COEF_INV / delta
}

/// δ at which the first-order bias of β̂ changes sign.
pub fn b2_sign_change() -> f64 {
    B2_COEF_INV_SQ / B2_COEF_INV
}

pub fn v1(delta: f64) -> f64 {
    delta * delta / ZETA2
}

pub fn v2(delta: f64) -> f64 {
    (A1 * A1 + ZETA2) / (delta * delta * ZETA2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstOrderQuantities {
    pub delta: f64,
    pub b1: f64,
    pub b2_over_beta: f64,
    pub v1: f64,
    pub v2: f64,
}

impl FirstOrderQuantities {
    pub fn at(delta: f64) -> Self {
        let b2 = b2_over_beta(delta);
        debug_assert!(
            (b2 - b2_over_beta_simplified(delta)).abs() <= 1e-9 * (1.0 + b2.abs()),
            "B₂ forms disagree at δ = {delta}"
        );
        Self {
            delta,
            b1: b1(delta),
            b2_over_beta: b2,
            v1: v1(delta),
            v2: v2(delta),
        }
    }
}

/// n × (bias, variance) of the fitted approximating laws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HattedQuantities {
    pub b1: f64,
    pub v1: f64,
    pub b2: f64,
    pub v2: f64,
}

/// B̂₁ = n{bΓ(1+1/a) − δ}, V̂₁ = n b²{Γ(1+2/a) − Γ(1+1/a)²}, and likewise
/// B̂₂, V̂₂ from (c, d) with target 1.
pub fn hatted_quantities(
    n: usize,
    delta: f64,
    (a, b): (f64, f64),
    (c, d): (f64, f64),
) -> Result<HattedQuantities, FitError> {
    for v in [a, b, c, d] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(FitError::InvalidMoments { mean: v, var: v });
        }
    }
    let nf = n as f64;
    let ga = gamma_unchecked(1.0 + 1.0 / a);
    let gc = gamma_unchecked(1.0 + 1.0 / c);
    Ok(HattedQuantities {
        b1: nf * (b * ga - delta),
        v1: nf * b * b * (gamma_unchecked(1.0 + 2.0 / a) - ga * ga),
        b2: nf * (d * gc - 1.0),
        v2: nf * d * d * (gamma_unchecked(1.0 + 2.0 / c) - gc * gc),
    })
}

/// Where the approximating-law parameters for the hatted quantities come from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HatSource {
    /// The fitted (a, b, c, d) of each cell.
    Table,
    /// Surrogate predictions (â, b̂, ĉ, d̂) at each cell's (n, δ).
    Regression(SurrogateCoefficients),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonRow {
    pub n: usize,
    pub delta: f64,
    pub abs_diff_b1: f64,
    pub abs_diff_v1: f64,
    pub abs_diff_b2: f64,
    pub abs_diff_v2: f64,
}

pub fn comparison_row(n: usize, delta: f64, hats: &HattedQuantities) -> ComparisonRow {
    let q = FirstOrderQuantities::at(delta);
    let nf = n as f64;
    ComparisonRow {
        n,
        delta,
        abs_diff_b1: (hats.b1 - q.b1).abs() / nf,
        abs_diff_v1: (hats.v1 - q.v1).abs() / nf,
        abs_diff_b2: (hats.b2 - q.b2_over_beta).abs() / nf,
        abs_diff_v2: (hats.v2 - q.v2).abs() / nf,
    }
}

pub fn comparison_table(
    cells: &[CellParams],
    source: HatSource,
) -> Result<Vec<ComparisonRow>, FitError> {
    cells
        .iter()
        .map(|cell| {
            let (a, b, c, d) = match source {
                HatSource::Table => (cell.a, cell.b, cell.c, cell.d),
                HatSource::Regression(coef) => {
                    let p = predict_abcd(cell.n, cell.delta, &coef)?;
                    (p.a, p.b, p.c, p.d)
                }
            };
            let hats = hatted_quantities(cell.n, cell.delta, (a, b), (c, d))?;
            Ok(comparison_row(cell.n, cell.delta, &hats))
        })
        .collect()
}
