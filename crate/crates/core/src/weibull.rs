//! The two-parameter Weibull law W(δ, β).

use rand::Rng;

use crate::error::MathError;
use crate::special_math::{gamma_unchecked, log_gamma_unchecked};

/// Shape δ and scale β of a Weibull law, both validated positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeibullParams {
    shape: f64,
    scale: f64,
}

impl WeibullParams {
    pub fn new(shape: f64, scale: f64) -> Result<Self, MathError> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        if !ok(shape) || !ok(scale) {
            return Err(MathError::InvalidParams { shape, scale });
        }
        Ok(Self { shape, scale })
    }

    #[inline]
    pub fn shape(&self) -> f64 {
        self.shape
    }

    #[inline]
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let z = x / self.scale;
        let zd = z.powf(self.shape);
        (self.shape / self.scale) * z.powf(self.shape - 1.0) * (-zd).exp()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        -(-(x / self.scale).powf(self.shape)).exp_m1()
    }

    /// β(−ln(1−p))^{1/δ}, with −ln(1−p) taken through `ln_1p` so small p keeps its digits.
    pub fn quantile(&self, p: f64) -> Result<f64, MathError> {
        if !(p > 0.0 && p < 1.0) {
            return Err(MathError::Domain {
                what: "quantile",
                value: p,
            });
        }
        Ok(self.scale * (-(-p).ln_1p()).powf(1.0 / self.shape))
    }

    /// E(X^r) = β^r Γ(1 + r/δ); exists only for r > −δ.
    pub fn moment(&self, r: f64) -> Result<f64, MathError> {
        if !(r > -self.shape) {
            return Err(MathError::MomentDoesNotExist {
                order: r,
                shape: self.shape,
            });
        }
        Ok((r * self.scale.ln() + log_gamma_unchecked(1.0 + r / self.shape)).exp())
    }

    /// Mean and variance.
    pub fn mean_var(&self) -> (f64, f64) {
        let g1 = gamma_unchecked(1.0 + 1.0 / self.shape);
        let g2 = gamma_unchecked(1.0 + 2.0 / self.shape);
        let mean = self.scale * g1;
        (mean, self.scale * self.scale * (g2 - g1 * g1))
    }

    pub fn skewness(&self) -> f64 {
        skewness(self.shape)
    }

    /// `n` inverse-transform draws x = β(−ln U)^{1/δ}.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        let inv_shape = 1.0 / self.shape;
        (0..n)
            .map(|_| {
                // open interval (0, 1): never feeds ln(0)
                let u: f64 = loop {
                    let u: f64 = rng.random();
                    if u > 0.0 {
                        break u;
                    }
                };
                self.scale * (-u.ln()).powf(inv_shape)
            })
            .collect()
    }
}

/// Pearson skewness of W(δ, ·). Scale never enters.
pub fn skewness(shape: f64) -> f64 {
    let g1 = gamma_unchecked(1.0 + 1.0 / shape);
    let g2 = gamma_unchecked(1.0 + 2.0 / shape);
    let g3 = gamma_unchecked(1.0 + 3.0 / shape);
    (2.0 * g1.powi(3) - 3.0 * g1 * g2 + g3) / (g2 - g1 * g1).powf(1.5)
}

/// Shape at which the skewness changes sign, by bisection on [3, 4].
pub fn skewness_root(tol: f64) -> f64 {
    let (mut lo, mut hi) = (3.0_f64, 4.0_f64);
    debug_assert!(skewness(lo) > 0.0 && skewness(hi) < 0.0);
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..200 {
        mid = 0.5 * (lo + hi);
        let s = skewness(mid);
        if s.abs() <= tol || hi - lo <= f64::EPSILON * mid {
            break;
        }
        if s > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    mid
}
