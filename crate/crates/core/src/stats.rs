//! Summary statistics and the one-sample Kolmogorov–Smirnov test.

use serde::Serialize;

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Unbiased sample variance.
pub fn variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0)
}

/// Standard error of the sample variance of roughly normal data.
pub fn variance_se(v: &[f64]) -> f64 {
    variance(v) * (2.0 / (v.len() as f64 - 1.0)).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// `P(K > x)` for the Kolmogorov distribution.
pub fn kolmogorov_survival(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 0.3 {
        // the alternating series converges slowly here; use the dual form
        let s = (2.0 * std::f64::consts::PI).sqrt() / x;
        let mut acc = 0.0;
        for k in 1..=50 {
            let j = (2 * k - 1) as f64;
            acc += (-(j * j) * std::f64::consts::PI.powi(2) / (8.0 * x * x)).exp();
        }
        return (1.0 - s * acc).clamp(0.0, 1.0);
    }
    let mut acc = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * x * x).exp();
        acc += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * acc).clamp(0.0, 1.0)
}

/// Two-sided test of `samples` against a continuous CDF, with the
/// small-sample scaling `√n + 0.12 + 0.11/√n`.
pub fn ks_test(samples: &[f64], cdf: impl Fn(f64) -> f64) -> KsResult {
    let mut s = samples.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let n = s.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in s.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i as f64 + 1.0) / n - f);
    }
    let sn = n.sqrt();
    KsResult { statistic: d, p_value: kolmogorov_survival((sn + 0.12 + 0.11 / sn) * d) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn moments() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(mean(&v), 2.5);
        assert!((variance(&v) - 5.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn kolmogorov_tail_values() {
        // tabulated critical values of the limiting distribution
        assert!((kolmogorov_survival(1.358) - 0.05).abs() < 1e-3);
        assert!((kolmogorov_survival(1.628) - 0.01).abs() < 1e-3);
        let (a, b) = (kolmogorov_survival(0.2999999), kolmogorov_survival(0.3000001));
        assert!((a - b).abs() < 1e-6);
    }

    #[test]
    fn degenerate_sample_is_rejected() {
        let r = ks_test(&[0.5; 50], |x| x.clamp(0.0, 1.0));
        assert!(r.p_value < 1e-6);
    }

    #[test]
    fn calibration_at_one_percent() {
        let reps = 10_000;
        let mut rejections = 0;
        for k in 0..reps {
            let mut rng = crate::rng::stream(99, k);
            let s: Vec<f64> = (0..50).map(|_| rng.random::<f64>()).collect();
            if ks_test(&s, |x| x).p_value < 0.01 {
                rejections += 1;
            }
        }
        let f = rejections as f64 / reps as f64;
        assert!((f - 0.01).abs() < 3.0 * (0.01f64 * 0.99 / reps as f64).sqrt(), "{f}");
    }
}
