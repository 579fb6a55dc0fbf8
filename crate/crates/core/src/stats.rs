//! Summation and goodness-of-fit tests used by the estimators.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

/// Smallest sample a KS test is applied to.
pub const KS_MIN_N: usize = 1000;

/// Pairwise (cascade) summation; the result depends only on the order of `x`.
pub fn pairwise_sum(x: &[f64]) -> f64 {
    if x.len() <= 16 {
        return x.iter().sum();
    }
    let (a, b) = x.split_at(x.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// Sample mean and standard error of the mean.
pub fn mean_se(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    if x.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = pairwise_sum(x) / n;
    if x.len() == 1 {
        return (mean, f64::NAN);
    }
    let dev: Vec<f64> = x.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = pairwise_sum(&dev) / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// `P(K > lambda)` for the Kolmogorov distribution.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=100 {
        let j = j as f64;
        let term = (-2.0 * j * j * lambda * lambda).exp();
        sum += if j as u64 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
}

fn sorted(x: &[f64]) -> Vec<f64> {
    let mut v = x.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    v
}

/// One-sample KS test against a continuous CDF, with the asymptotic p-value
/// (Stephens' small-sample correction).
pub fn ks_one_sample<F: Fn(f64) -> f64>(x: &[f64], cdf: F) -> Result<TestResult> {
    if x.len() < KS_MIN_N {
        return Err(Error::Invalid(format!("KS needs at least {KS_MIN_N} samples, got {}", x.len())));
    }
    let v = sorted(x);
    let n = v.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &y) in v.iter().enumerate() {
        let f = cdf(y);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    let s = n.sqrt();
    Ok(TestResult { statistic: d, p_value: kolmogorov_q((s + 0.12 + 0.11 / s) * d) })
}

/// Two-sample KS test with the asymptotic p-value.
pub fn ks_two_sample(x: &[f64], y: &[f64]) -> Result<TestResult> {
    if x.len().min(y.len()) < KS_MIN_N {
        return Err(Error::Invalid(format!("KS needs at least {KS_MIN_N} samples per group")));
    }
    let (a, b) = (sorted(x), sorted(y));
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let t = a[i].min(b[j]);
        while i < a.len() && a[i] <= t {
            i += 1;
        }
        while j < b.len() && b[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    let ne = (n * m / (n + m)).sqrt();
    Ok(TestResult { statistic: d, p_value: kolmogorov_q((ne + 0.12 + 0.11 / ne) * d) })
}

/// Pearson's chi-square goodness of fit of `counts` to `probs`; cells with
/// zero probability must be empty and are dropped.
pub fn chi_square_gof(counts: &[u64], probs: &[f64]) -> Result<TestResult> {
    if counts.len() != probs.len() {
        return Err(Error::Invalid("counts and probabilities differ in length".into()));
    }
    let n: u64 = counts.iter().sum();
    let mut stat = 0.0;
    let mut cells = 0;
    for (&c, &p) in counts.iter().zip(probs) {
        if p <= 0.0 {
            if c > 0 {
                return Ok(TestResult { statistic: f64::INFINITY, p_value: 0.0 });
            }
            continue;
        }
        let e = p * n as f64;
        stat += (c as f64 - e).powi(2) / e;
        cells += 1;
    }
    chi_square_p(stat, cells - 1)
}

/// Chi-square test of homogeneity for two rows of counts.
pub fn chi_square_two_sample(a: &[u64], b: &[u64]) -> Result<TestResult> {
    if a.len() != b.len() {
        return Err(Error::Invalid("count vectors differ in length".into()));
    }
    let (na, nb) = (a.iter().sum::<u64>() as f64, b.iter().sum::<u64>() as f64);
    let mut stat = 0.0;
    let mut cells = 0;
    for (&x, &y) in a.iter().zip(b) {
        let tot = (x + y) as f64;
        if tot == 0.0 {
            continue;
        }
        for (obs, n) in [(x as f64, na), (y as f64, nb)] {
            let e = tot * n / (na + nb);
            stat += (obs - e).powi(2) / e;
        }
        cells += 1;
    }
    chi_square_p(stat, cells - 1)
}

fn chi_square_p(stat: f64, dof: usize) -> Result<TestResult> {
    if dof == 0 {
        return Ok(TestResult { statistic: stat, p_value: 1.0 });
    }
    let d = ChiSquared::new(dof as f64).map_err(|e| Error::Invalid(e.to_string()))?;
    Ok(TestResult { statistic: stat, p_value: 1.0 - d.cdf(stat) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_sum_is_exact_on_integers() {
        let x: Vec<f64> = (1..=1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&x), 500500.0);
    }

    #[test]
    fn kolmogorov_tail_known_points() {
        // Critical values of the Kolmogorov distribution at 5% and 1%.
        assert!((kolmogorov_q(1.3581) - 0.05).abs() < 1e-4);
        assert!((kolmogorov_q(1.6276) - 0.01).abs() < 1e-4);
    }

    #[test]
    fn ks_uniform_grid_fits_uniform() {
        let x: Vec<f64> = (0..2000).map(|i| (i as f64 + 0.5) / 2000.0).collect();
        let r = ks_one_sample(&x, |u| u.clamp(0.0, 1.0)).unwrap();
        assert!(r.statistic <= 0.5 / 2000.0 + 1e-15);
        assert!(r.p_value > 0.99);
        let shifted: Vec<f64> = x.iter().map(|u| u * 0.9).collect();
        assert!(ks_one_sample(&shifted, |u| u.clamp(0.0, 1.0)).unwrap().p_value < 1e-6);
    }

    #[test]
    fn chi_square_exact_counts() {
        let r = chi_square_gof(&[50, 30, 20], &[0.5, 0.3, 0.2]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!((r.p_value - 1.0).abs() < 1e-12);
    }
}
