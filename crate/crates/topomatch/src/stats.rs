//! Normal-distribution primitives and the coverage/exclusion calculators
//! behind the feasibility thresholds.
//!
//! The CDF uses the classic Cody rational approximations for erf/erfc
//! (relative error near machine epsilon); the quantile is a rational
//! first guess polished by one Halley step against that CDF. No external
//! statistics dependency, so every consumer sees bit-identical numbers.

use serde::{Deserialize, Serialize};

use crate::error::StatError;

/// Additive edge-weight noise: zero-mean normal with standard deviation
/// `sigma`, assumed independent across edges unless flagged otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub sigma: f64,
    pub independent: bool,
}

impl NoiseModel {
    pub fn new(sigma: f64) -> Self {
        assert!(sigma >= 0.0, "sigma must be non-negative");
        NoiseModel {
            sigma,
            independent: true,
        }
    }
}

/// Evaluated theoretical guarantees for one `(mu, c, alpha)` setting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuaranteeReport {
    /// Probability that the feasible set retains the true match.
    pub coverage: f64,
    /// Lower bound on the probability of rejecting a mismatched pair.
    pub exclusion_lower_bound: f64,
    /// Mismatch separation in noise units.
    pub mu: f64,
    /// Count the threshold is calibrated for.
    pub c: usize,
    pub alpha: f64,
}

impl GuaranteeReport {
    pub fn evaluate(mu: f64, c: usize, alpha: f64) -> Self {
        GuaranteeReport {
            coverage: coverage_probability(alpha),
            exclusion_lower_bound: exclusion_lower_bound(mu, c, alpha),
            mu,
            c,
            alpha,
        }
    }
}

// Cody's rational approximations for erf (|x| <= 0.46875) and erfc.
const ERF_A: [f64; 5] = [
    3.16112374387056560e0,
    1.13864154151050156e2,
    3.77485237685302021e2,
    3.20937758913846947e3,
    1.85777706184603153e-1,
];
const ERF_B: [f64; 4] = [
    2.36012909523441209e1,
    2.44024637934444173e2,
    1.28261652607737228e3,
    2.84423683343917062e3,
];
const ERFC_C: [f64; 9] = [
    5.64188496988670089e-1,
    8.88314979438837594e0,
    6.61191906371416295e1,
    2.98635138197400131e2,
    8.81952221241769090e2,
    1.71204761263407058e3,
    2.05107837782607147e3,
    1.23033935479799725e3,
    2.15311535474403846e-8,
];
const ERFC_D: [f64; 8] = [
    1.57449261107098347e1,
    1.17693950891312499e2,
    5.37181101862009858e2,
    1.62138957456669019e3,
    3.29079923573345963e3,
    4.36261909014324716e3,
    3.43936767414372164e3,
    1.23033935480374942e3,
];
const ERFC_P: [f64; 6] = [
    3.05326634961232344e-1,
    3.60344899949804439e-1,
    1.25781726111229246e-1,
    1.60837851487422766e-2,
    6.58749161529837803e-4,
    1.63153871373020978e-2,
];
const ERFC_Q: [f64; 5] = [
    2.56852019228982242e0,
    1.87295284992346047e0,
    5.27905102951428412e-1,
    6.05183413124413191e-2,
    2.33520497626869185e-3,
];

const ONE_OVER_SQRT_PI: f64 = 0.564_189_583_547_756_3;

fn erf_small(x: f64) -> f64 {
    let ysq = if x.abs() > 1e-10 { x * x } else { 0.0 };
    let mut num = ERF_A[4] * ysq;
    let mut den = ysq;
    for i in 0..3 {
        num = (num + ERF_A[i]) * ysq;
        den = (den + ERF_B[i]) * ysq;
    }
    x * (num + ERF_A[3]) / (den + ERF_B[3])
}

// erfc on [0.46875, inf) for positive y.
fn erfc_pos(y: f64) -> f64 {
    let r = if y <= 4.0 {
        let mut num = ERFC_C[8] * y;
        let mut den = y;
        for i in 0..7 {
            num = (num + ERFC_C[i]) * y;
            den = (den + ERFC_D[i]) * y;
        }
        (num + ERFC_C[7]) / (den + ERFC_D[7])
    } else {
        let ysq = 1.0 / (y * y);
        let mut num = ERFC_P[5] * ysq;
        let mut den = ysq;
        for i in 0..4 {
            num = (num + ERFC_P[i]) * ysq;
            den = (den + ERFC_Q[i]) * ysq;
        }
        (ONE_OVER_SQRT_PI - ysq * (num + ERFC_P[4]) / (den + ERFC_Q[4])) / y
    };
    // Split exp(-y^2) to keep the argument of each exp small in magnitude.
    let ysq = (y * 16.0).trunc() / 16.0;
    let del = (y - ysq) * (y + ysq);
    (-ysq * ysq).exp() * (-del).exp() * r
}

/// Error function.
pub fn erf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let y = x.abs();
    if y <= 0.46875 {
        erf_small(x)
    } else if x > 0.0 {
        1.0 - erfc_pos(y)
    } else {
        erfc_pos(y) - 1.0
    }
}

/// Complementary error function.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x.abs() <= 0.46875 {
        1.0 - erf_small(x)
    } else if x > 0.0 {
        erfc_pos(x)
    } else {
        2.0 - erfc_pos(-x)
    }
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

// Acklam's rational approximation to the standard normal quantile.
const PPF_A: [f64; 6] = [
    -3.969683028665376e1,
    2.209460984245205e2,
    -2.759285104469687e2,
    1.383577518672690e2,
    -3.066479806614716e1,
    2.506628277459239e0,
];
const PPF_B: [f64; 5] = [
    -5.447609879822406e1,
    1.615858368580409e2,
    -1.556989798598866e2,
    6.680131188771972e1,
    -1.328068155288572e1,
];
const PPF_C: [f64; 6] = [
    -7.784894002430293e-3,
    -3.223964580411365e-1,
    -2.400758277161838e0,
    -2.549732539343734e0,
    4.374664141464968e0,
    2.938163982698783e0,
];
const PPF_D: [f64; 4] = [
    7.784695709041462e-3,
    3.224671290700398e-1,
    2.445134137142996e0,
    3.754408661907416e0,
];

fn quantile_guess(q: f64) -> f64 {
    const LOW: f64 = 0.02425;
    if q < LOW {
        let r = (-2.0 * q.ln()).sqrt();
        (((((PPF_C[0] * r + PPF_C[1]) * r + PPF_C[2]) * r + PPF_C[3]) * r + PPF_C[4]) * r
            + PPF_C[5])
            / ((((PPF_D[0] * r + PPF_D[1]) * r + PPF_D[2]) * r + PPF_D[3]) * r + 1.0)
    } else if q <= 1.0 - LOW {
        let r = q - 0.5;
        let s = r * r;
        (((((PPF_A[0] * s + PPF_A[1]) * s + PPF_A[2]) * s + PPF_A[3]) * s + PPF_A[4]) * s
            + PPF_A[5])
            * r
            / (((((PPF_B[0] * s + PPF_B[1]) * s + PPF_B[2]) * s + PPF_B[3]) * s + PPF_B[4]) * s
                + 1.0)
    } else {
        let r = (-2.0 * (1.0 - q).ln()).sqrt();
        -(((((PPF_C[0] * r + PPF_C[1]) * r + PPF_C[2]) * r + PPF_C[3]) * r + PPF_C[4]) * r
            + PPF_C[5])
            / ((((PPF_D[0] * r + PPF_D[1]) * r + PPF_D[2]) * r + PPF_D[3]) * r + 1.0)
    }
}

/// Standard normal quantile (inverse CDF) on the open interval (0, 1).
pub fn normal_quantile(q: f64) -> Result<f64, StatError> {
    if !(q > 0.0 && q < 1.0) {
        return Err(StatError::QuantileRange(q));
    }
    let x = quantile_guess(q);
    // One Halley step against the high-precision CDF.
    let e = normal_cdf(x) - q;
    let u = e * (2.0 * std::f64::consts::PI).sqrt() * (x * x / 2.0).exp();
    Ok(x - u / (1.0 + x * u / 2.0))
}

/// Probability that a feasibility threshold calibrated at level `alpha`
/// retains the true match.
pub fn coverage_probability(alpha: f64) -> f64 {
    assert!(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
    1.0 - alpha
}

/// Lower bound on the probability that a pair of unmatched edges, whose
/// expected weights differ by `mu` noise units, is rejected by the
/// threshold calibrated for count `c` at level `alpha`.
///
/// The bound is monotone increasing in `c`: larger matched structures
/// separate wrong candidates more reliably.
pub fn exclusion_lower_bound(mu: f64, c: usize, alpha: f64) -> f64 {
    assert!(mu > 0.0, "mu must be positive");
    assert!(c >= 1);
    let z = normal_quantile(1.0 - alpha / 2.0).expect("alpha in (0,1)");
    let cf = c as f64;
    let spread = (2.0 * cf).sqrt();
    normal_cdf((-z - mu * cf.sqrt()) / spread) + 1.0 - normal_cdf((z - mu * cf.sqrt()) / spread)
}

/// Sample standard deviation (mean-centered, `n - 1` denominator) of the
/// per-edge residuals of a match; the estimator behind `--estimate-sigma`.
pub fn estimate_sigma(residuals: &[f64]) -> Result<f64, StatError> {
    let n = residuals.len();
    if n < 2 {
        return Err(StatError::TooFewResiduals(n));
    }
    let mean = residuals.iter().sum::<f64>() / n as f64;
    let ss = residuals.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>();
    Ok((ss / (n - 1) as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values computed with 30-digit arithmetic.
    const CDF_CASES: &[(f64, f64)] = &[
        (0.0, 0.5),
        (1.0, 0.841344746068542948),
        (2.0, 0.977249868051820792),
        (-3.0, 0.001349898031630094526),
        (1.959964, 0.975000000903557595),
        (-5.5, 1.89895624658877193e-8),
        (4.2, 0.999986654250984093),
    ];

    #[test]
    fn cdf_matches_high_precision_reference() {
        for &(z, want) in CDF_CASES {
            assert!(
                (normal_cdf(z) - want).abs() <= 1e-10,
                "cdf({z}) = {} want {want}",
                normal_cdf(z)
            );
        }
    }

    #[test]
    fn cdf_symmetry() {
        for i in 0..=1200 {
            let z = -6.0 + i as f64 * 0.01;
            let s = normal_cdf(z) + normal_cdf(-z);
            assert!((s - 1.0).abs() < 1e-14, "z = {z}: {s}");
        }
    }

    #[test]
    fn quantile_reference_values() {
        assert_eq!(normal_quantile(0.5).unwrap(), 0.0);
        assert!((normal_quantile(0.975).unwrap() - 1.95996398454005423).abs() < 1e-9);
        assert!((normal_quantile(0.9875).unwrap() - 2.24140272760494537).abs() < 1e-9);
        assert!((normal_quantile(0.8413447460685429).unwrap() - 1.0).abs() < 1e-9);
        assert!((normal_quantile(0.001).unwrap() + 3.09023230616781354).abs() < 1e-9);
        assert!((normal_quantile(1e-9).unwrap() + 5.99780701500768687).abs() < 1e-8);
    }

    #[test]
    fn quantile_rejects_out_of_range() {
        for q in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(normal_quantile(q).is_err(), "q = {q}");
        }
    }

    #[test]
    fn round_trip_within_1e8() {
        for i in 0..=240 {
            let z = -6.0 + i as f64 * 0.05;
            let back = normal_quantile(normal_cdf(z)).unwrap();
            assert!((back - z).abs() <= 1e-8, "z = {z}, back = {back}");
        }
        for i in 1..200 {
            let q = i as f64 / 200.0;
            let fwd = normal_cdf(normal_quantile(q).unwrap());
            assert!((fwd - q).abs() <= 1e-9, "q = {q}");
        }
    }

    #[test]
    fn coverage_is_one_minus_alpha() {
        assert_eq!(coverage_probability(0.025), 0.975);
        assert_eq!(coverage_probability(0.05), 0.95);
        assert_eq!(coverage_probability(0.5), 0.5);
    }

    #[test]
    fn exclusion_bound_reference_value() {
        let b = exclusion_lower_bound(1.0, 4, 0.05);
        assert!((b - 0.586394658742915651).abs() < 1e-9, "got {b}");
    }

    #[test]
    fn exclusion_bound_monotone_in_c() {
        for &mu in &[0.25, 0.5, 1.0, 2.0] {
            let mut prev = 0.0;
            for c in [1usize, 2, 4, 8, 16, 32, 64, 128, 1024] {
                let b = exclusion_lower_bound(mu, c, 0.05);
                assert!(b > 0.0 && b < 1.0);
                assert!(b > prev, "mu = {mu}, c = {c}: {b} <= {prev}");
                prev = b;
            }
        }
    }

    #[test]
    fn exclusion_bound_limit() {
        // Convergence toward 1 is slow: ~0.9914 at c = 1e4, crossing
        // 0.999 only near c = 1e6.
        let at_1e4 = exclusion_lower_bound(1.0, 10_000, 0.05);
        assert!((at_1e4 - 0.991388226817487765).abs() < 1e-9);
        assert!(exclusion_lower_bound(1.0, 1_000_000, 0.05) >= 0.999);
    }

    #[test]
    fn sigma_estimate_hand_values() {
        assert_eq!(estimate_sigma(&[0.3, 0.3, 0.3]).unwrap(), 0.0);
        assert!((estimate_sigma(&[-1.0, 1.0]).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!(estimate_sigma(&[1.0]).is_err());
        assert!(estimate_sigma(&[]).is_err());
    }
}
