//! Gamma function and the handful of constants used by the first-order
//! bias and variance expressions.

use crate::error::MathError;

/// Riemann zeta at 2, π²/6.
pub const ZETA2: f64 = 1.644_934_066_848_226_4;
/// Apéry's constant, ζ(3).
pub const ZETA3: f64 = 1.202_056_903_159_594_3;
/// Euler–Mascheroni constant γ.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
/// A₁ = 1 − γ.
pub const A1: f64 = 1.0 - EULER_GAMMA;

/// Bundle of the constants, for callers that prefer a value over module paths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MathConstants {
    pub zeta2: f64,
    pub zeta3: f64,
    pub euler_gamma: f64,
    pub a1: f64,
}

impl MathConstants {
    pub const fn get() -> Self {
        Self {
            zeta2: ZETA2,
            zeta3: ZETA3,
            euler_gamma: EULER_GAMMA,
            a1: A1,
        }
    }
}

impl Default for MathConstants {
    fn default() -> Self {
        Self::get()
    }
}

/// ζ(k) − 1 for k = 2, 3, …, 31.
const ZETA_MINUS_ONE: [f64; 30] = [
    0.644_934_066_848_226_4,
    0.202_056_903_159_594_3,
    0.082_323_233_711_138_19,
    0.036_927_755_143_369_93,
    0.017_343_061_984_449_14,
    0.008_349_277_381_922_827,
    0.004_077_356_197_944_339,
    0.002_008_392_826_082_214,
    0.000_994_575_127_818_085_3,
    0.000_494_188_604_119_464_6,
    0.000_246_086_553_308_048_3,
    0.000_122_713_347_578_489_1,
    6.124_813_505_870_483e-5,
    3.058_823_630_702_049e-5,
    1.528_225_940_865_187e-5,
    7.637_197_637_899_762e-6,
    3.817_293_264_999_840e-6,
    1.908_212_716_553_939e-6,
    9.539_620_338_727_961e-7,
    4.769_329_867_878_065e-7,
    2.384_505_027_277_330e-7,
    1.192_199_259_653_111e-7,
    5.960_818_905_125_948e-8,
    2.980_350_351_465_228e-8,
    1.490_155_482_836_504e-8,
    7.450_711_789_835_429e-9,
    3.725_334_024_788_457e-9,
    1.862_659_723_513_049e-9,
    9.313_274_324_196_682e-10,
    4.656_629_065_033_784e-10,
];

/// ln Γ(1 + z) for |z| ≤ 0.5 from the zeta power series,
/// split so the ζ(k) = 1 part sums to z − ln(1 + z) in closed form.
fn log_gamma_1p(z: f64) -> f64 {
    let mut acc = 0.0;
    let mut power = -z;
    for (i, t) in ZETA_MINUS_ONE.iter().enumerate() {
        let k = (i + 2) as f64;
        power *= -z;
        let term = t * power / k;
        acc += term;
        if term.abs() <= 1e-18 * acc.abs() {
            break;
        }
    }
    (1.0 - EULER_GAMMA) * z - z.ln_1p() + acc
}

/// Stirling series for large x (x ≥ 10).
fn log_gamma_stirling(x: f64) -> f64 {
    // B_{2k} / (2k (2k - 1)), k = 1..8
    const COEF: [f64; 8] = [
        1.0 / 12.0,
        -1.0 / 360.0,
        1.0 / 1260.0,
        -1.0 / 1680.0,
        1.0 / 1188.0,
        -691.0 / 360_360.0,
        1.0 / 156.0,
        -3617.0 / 122_400.0,
    ];
    let half_ln_two_pi = 0.918_938_533_204_672_8;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let mut series = 0.0;
    let mut p = inv;
    for c in COEF {
        series += c * p;
        p *= inv2;
    }
    (x - 0.5) * x.ln() - x + half_ln_two_pi + series
}

/// Natural log of the gamma function for positive real arguments.
pub fn log_gamma(x: f64) -> Result<f64, MathError> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(MathError::Domain {
            what: "log_gamma",
            value: x,
        });
    }
    Ok(log_gamma_unchecked(x))
}

/// `log_gamma` without the domain check; callers guarantee x > 0.
pub(crate) fn log_gamma_unchecked(x: f64) -> f64 {
    if x < 0.5 {
        // Γ(x) = Γ(x + 1) / x
        log_gamma_1p(x) - x.ln()
    } else if x <= 1.5 {
        log_gamma_1p(x - 1.0)
    } else if x <= 2.5 {
        (x - 1.0).ln() + log_gamma_1p(x - 2.0)
    } else if x < 10.0 {
        let mut y = x;
        let mut prod = 1.0;
        while y > 2.5 {
            y -= 1.0;
            prod *= y;
        }
        prod.ln() + (y - 1.0).ln() + log_gamma_1p(y - 2.0)
    } else {
        log_gamma_stirling(x)
    }
}

/// Γ(x) for x > 0.
pub fn gamma_fn(x: f64) -> Result<f64, MathError> {
    let lg = log_gamma(x)?;
    let g = lg.exp();
    if !g.is_finite() {
        return Err(MathError::Range {
            what: "gamma_fn",
            value: x,
        });
    }
    Ok(g)
}

/// Γ(1 + r/δ) style helper used all over the Weibull moment formulas.
pub(crate) fn gamma_unchecked(x: f64) -> f64 {
    log_gamma_unchecked(x).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// Adaptive Simpson quadrature, independent of the series code above.
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
        fn rec<F: Fn(f64) -> f64>(
            f: &F,
            a: f64,
            b: f64,
            fa: f64,
            fm: f64,
            fb: f64,
            whole: f64,
            tol: f64,
            depth: u32,
        ) -> f64 {
            let m = 0.5 * (a + b);
            let lm = 0.5 * (a + m);
            let rm = 0.5 * (m + b);
            let flm = f(lm);
            let frm = f(rm);
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                return left + right + (left + right - whole) / 15.0;
            }
            rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
        let fa = f(a);
        let fb = f(b);
        let fm = f(0.5 * (a + b));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        rec(f, a, b, fa, fm, fb, whole, tol, 50)
    }

    /// Γ(k) = ∫ x^{k-1} e^{-x} dx with x = t², so the integrand is smooth at 0.
    fn gamma_quadrature(k: f64) -> f64 {
        let f = |t: f64| 2.0 * t.powf(2.0 * k - 1.0) * (-t * t).exp();
        simpson(&f, 0.0, 12.0, 1e-14)
    }

    #[test]
    fn constants_bracketed() {
        let c = MathConstants::get();
        assert!((1.644_934_066_8..=1.644_934_066_9).contains(&c.zeta2));
        assert!((1.202_056_9..=1.202_057_0).contains(&c.zeta3));
        assert!((0.577_215_6..=0.577_215_7).contains(&c.euler_gamma));
        assert_eq!(c.a1, 1.0 - c.euler_gamma);
        assert!((ZETA2 - PI * PI / 6.0).abs() < 1e-15);
    }

    #[test]
    fn log_gamma_examples() {
        assert_eq!(log_gamma(1.0).unwrap(), 0.0);
        assert!((log_gamma(5.0).unwrap() - 24f64.ln()).abs() < 1e-14);
        let q = gamma_quadrature(0.5).ln();
        assert!((log_gamma(0.5).unwrap() - q).abs() < 1e-10);
        assert!((log_gamma(0.5).unwrap() - 0.572_364_942_924_700_1).abs() < 1e-15);
    }

    #[test]
    fn log_gamma_relative_accuracy() {
        // reference values from 40-digit arithmetic
        let refs = [
            (1e-3, 6.907_178_885_383_853_7),
            (1e3, 5_905.220_423_209_181),
            (1.0001, -5.771_334_222_047_126_8e-5),
            (2.0001, 4.228_165_811_291_994_6e-5),
            (3.3, 0.987_098_577_894_734_4),
            (17.25, 31.374_622_313_677_686),
            (0.77, 0.182_065_168_660_537_05),
        ];
        for (x, want) in refs {
            let got = log_gamma(x).unwrap();
            assert!(
                ((got - want) / want).abs() <= 1e-13,
                "x={x} got={got} want={want}"
            );
        }
    }

    #[test]
    fn log_gamma_rejects_non_positive() {
        assert!(log_gamma(0.0).is_err());
        assert!(log_gamma(-1.5).is_err());
        assert!(log_gamma(f64::NAN).is_err());
    }

    #[test]
    fn gamma_examples() {
        assert!((gamma_fn(2.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((gamma_fn(4.0).unwrap() - 6.0).abs() < 1e-13);
        let q = gamma_quadrature(1.5);
        assert!((gamma_fn(1.5).unwrap() - q).abs() < 1e-10);
        assert!((gamma_fn(1.5).unwrap() - 0.886_226_925_452_758).abs() < 1e-14);
        assert!((gamma_fn(0.5).unwrap().powi(2) - PI).abs() < 1e-12);
        assert!(matches!(gamma_fn(200.0), Err(MathError::Range { .. })));
    }

    #[test]
    fn gamma_recurrence() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let x: f64 = rng.random_range(0.5..50.0);
            let g1 = gamma_fn(x + 1.0).unwrap();
            let g0 = gamma_fn(x).unwrap();
            assert!((g1 - x * g0).abs() / g1 <= 1e-12, "x={x}");
        }
    }

    #[test]
    fn continuity_at_branch_points() {
        for b in [0.5, 1.5, 2.5, 10.0] {
            let lo = log_gamma(b - 1e-12).unwrap();
            let hi = log_gamma(b + 1e-12).unwrap();
            assert!((lo - hi).abs() < 1e-11, "branch {b}");
        }
    }
}
