//! Shapiro-Wilk W statistic.
//!
//! Royston's AS R94 formulation: approximate normal-order-statistic
//! coefficients from Blom scores, apply the two polynomial corrections to
//! the outermost weights, and report W as the squared correlation between
//! the sorted sample and those coefficients. Only the statistic is
//! computed; callers compare W against a fixed threshold rather than a
//! p-value.

use crate::{Error, Result};

const MIN_SAMPLES: usize = 3;
const MAX_SAMPLES: usize = 5000;

/// W statistic of the sample, in (0, 1]. Higher means closer to normal.
pub fn shapiro_wilk(samples: &[f64]) -> Result<f64> {
    let n = samples.len();
    if !(MIN_SAMPLES..=MAX_SAMPLES).contains(&n) {
        return Err(Error::UndefinedStatistic(format!(
            "Shapiro-Wilk needs {MIN_SAMPLES}..={MAX_SAMPLES} samples, got {n}"
        )));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::UndefinedStatistic(
            "sample contains a non-finite value".into(),
        ));
    }

    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("values are finite"));
    let range = sorted[n - 1] - sorted[0];
    if range <= 0.0 {
        return Err(Error::UndefinedStatistic(
            "sample has zero variance".into(),
        ));
    }

    let a = coefficients(n);

    // Squared correlation between the sorted sample and the antisymmetric
    // coefficient vector (-a[k] ... a[k]). Scaling by the range keeps the
    // sums well conditioned.
    let coef_at = |i: usize| -> f64 {
        let j = n - 1 - i;
        if i == j {
            0.0
        } else if i < j {
            -a[i]
        } else {
            a[j]
        }
    };
    let coef_mean = (0..n).map(coef_at).sum::<f64>() / n as f64;
    let sample_mean = sorted.iter().map(|v| v / range).sum::<f64>() / n as f64;

    let mut ss_coef = 0.0;
    let mut ss_sample = 0.0;
    let mut cross = 0.0;
    for i in 0..n {
        let ca = coef_at(i) - coef_mean;
        let xa = sorted[i] / range - sample_mean;
        ss_coef += ca * ca;
        ss_sample += xa * xa;
        cross += ca * xa;
    }

    let norm = (ss_coef * ss_sample).sqrt();
    let complement = (norm - cross) * (norm + cross) / (ss_coef * ss_sample);
    Ok((1.0 - complement).clamp(f64::MIN_POSITIVE, 1.0))
}

/// Coefficients a[0..n/2] for the lower half of the ordered sample, per
/// Royston (1995): Blom scores rescaled so the full antisymmetric vector
/// has unit norm, with polynomial corrections to the first two entries.
fn coefficients(n: usize) -> Vec<f64> {
    let half = n / 2;
    if n == 3 {
        return vec![std::f64::consts::FRAC_1_SQRT_2];
    }

    let an = n as f64;
    let mut m: Vec<f64> = (1..=half)
        .map(|i| normal_quantile((i as f64 - 0.375) / (an + 0.25)))
        .collect();
    let m_norm_sq = 2.0 * m.iter().map(|v| v * v).sum::<f64>();
    let m_norm = m_norm_sq.sqrt();
    let rsn = 1.0 / an.sqrt();

    const C1: [f64; 6] = [0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056];
    const C2: [f64; 6] = [0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633];

    let a1 = horner(&C1, rsn) - m[0] / m_norm;
    if n > 5 {
        let a2 = horner(&C2, rsn) - m[1] / m_norm;
        let scale = ((m_norm_sq - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1])
            / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2))
            .sqrt();
        m[0] = a1;
        m[1] = a2;
        for v in m.iter_mut().skip(2) {
            *v /= -scale;
        }
    } else {
        let scale =
            ((m_norm_sq - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1)).sqrt();
        m[0] = a1;
        for v in m.iter_mut().skip(1) {
            *v /= -scale;
        }
    }
    m
}

/// Ascending-coefficient polynomial evaluation.
fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Standard normal quantile via Acklam's rational approximation, accurate
/// to ~1e-9 over (0, 1).
fn normal_quantile(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0);
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    if (P_LOW..=1.0 - P_LOW).contains(&p) {
        let q = p - 0.5;
        let r = q * q;
        let num = (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q;
        let den = ((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0;
        return num / den;
    }

    let (q, sign) = if p < P_LOW {
        ((-2.0 * p.ln()).sqrt(), 1.0)
    } else {
        ((-2.0 * (1.0 - p).ln()).sqrt(), -1.0)
    };
    let num = ((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5];
    let den = (((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0;
    sign * num / den
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn near_perfect_normal_sample_scores_high() {
        let n = 20;
        let sample: Vec<f64> = (1..=n)
            .map(|i| normal_quantile((i as f64 - 0.5) / n as f64))
            .collect();
        let w = shapiro_wilk(&sample).unwrap();
        assert!(w >= 0.98, "W = {w}");
    }

    #[test]
    fn bimodal_sample_scores_low() {
        let mut sample = vec![0.0; 10];
        sample.extend(vec![100.0; 10]);
        let w = shapiro_wilk(&sample).unwrap();
        assert!(w < 0.9, "W = {w}");
        assert!((w - 0.6411).abs() < 1e-3, "W = {w}");
    }

    #[test]
    fn matches_reference_values_on_fixed_samples() {
        // Eleven weights often used to demonstrate the test; R and SciPy
        // both report W = 0.7888.
        let weights = [
            148.0, 154.0, 158.0, 160.0, 161.0, 162.0, 166.0, 170.0, 182.0, 195.0, 236.0,
        ];
        let w = shapiro_wilk(&weights).unwrap();
        assert!((w - 0.7888).abs() < 1e-3, "W = {w}");

        // Integer ramps, checked against the same references.
        for (n, expected) in [(5usize, 0.9868), (10, 0.9702), (20, 0.9604)] {
            let ramp: Vec<f64> = (1..=n).map(|i| i as f64).collect();
            let w = shapiro_wilk(&ramp).unwrap();
            assert!((w - expected).abs() < 1e-3, "n = {n}: W = {w}");
        }
    }

    #[test]
    fn three_point_sample_uses_the_exact_coefficient() {
        let w = shapiro_wilk(&[1.0, 2.0, 3.0]).unwrap();
        assert!((w - 1.0).abs() < 1e-12, "W = {w}");
        let skewed = shapiro_wilk(&[1.0, 1.1, 9.0]).unwrap();
        assert!(skewed < 0.8);
    }

    #[test]
    fn out_of_range_sizes_are_rejected() {
        assert!(matches!(
            shapiro_wilk(&[1.0, 2.0]),
            Err(Error::UndefinedStatistic(_))
        ));
        let huge = vec![0.5; 5001];
        assert!(matches!(
            shapiro_wilk(&huge),
            Err(Error::UndefinedStatistic(_))
        ));
    }

    #[test]
    fn degenerate_samples_are_rejected() {
        assert!(matches!(
            shapiro_wilk(&[4.0; 50]),
            Err(Error::UndefinedStatistic(_))
        ));
        assert!(matches!(
            shapiro_wilk(&[1.0, f64::NAN, 3.0]),
            Err(Error::UndefinedStatistic(_))
        ));
    }

    proptest! {
        /// W depends only on the shape of the sample, not its location or
        /// scale.
        #[test]
        fn affine_transforms_leave_w_unchanged(
            sample in prop::collection::vec(-50.0f64..50.0, 4..60),
            scale in 0.01f64..100.0,
            shift in -1000.0f64..1000.0,
            flip in prop::bool::ANY,
        ) {
            let base = shapiro_wilk(&sample);
            let signed = if flip { -scale } else { scale };
            let moved: Vec<f64> = sample.iter().map(|v| signed * v + shift).collect();
            let transformed = shapiro_wilk(&moved);
            match (base, transformed) {
                (Ok(w0), Ok(w1)) => prop_assert!((w0 - w1).abs() < 1e-9),
                (Err(_), Err(_)) => {}
                (a, b) => prop_assert!(false, "diverged: {a:?} vs {b:?}"),
            }
        }
    }
}
