//! One-sample Kolmogorov–Smirnov test with the asymptotic p-value.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    #[serde(rename = "D")]
    pub statistic: f64,
    pub p_value: f64,
}

/// `sup_x |F_emp(x) - F(x)|`, evaluated at the sorted sample on both sides
/// of every jump.
pub fn ks_statistic(samples: &[f64], reference_cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Degenerate("empty sample".into()));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::Degenerate("sample has non-finite values".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = reference_cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    Ok(d)
}

/// `P(K > x)` for the Kolmogorov distribution.
pub fn kolmogorov_survival(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let sum = if x < 1.0 {
        // Jacobi-theta form converges fast for small x.
        let mut cdf = 0.0;
        for k in 1..=100 {
            let j = (2 * k - 1) as f64;
            let term = (-(j * j) * PI * PI / (8.0 * x * x)).exp();
            cdf += term;
            if term < 1e-12 * cdf.max(1e-300) {
                break;
            }
        }
        1.0 - (2.0 * PI).sqrt() / x * cdf
    } else {
        let mut tail = 0.0;
        for k in 1..=100 {
            let kf = k as f64;
            let term = (-2.0 * kf * kf * x * x).exp();
            tail += if k % 2 == 1 { term } else { -term };
            if term < 1e-12 {
                break;
            }
        }
        2.0 * tail
    };
    sum.clamp(0.0, 1.0)
}

/// KS test of `samples` against a continuous reference distribution.
pub fn ks_test(samples: &[f64], reference_cdf: impl Fn(f64) -> f64) -> Result<KsResult> {
    if samples.len() < 2 {
        return Err(Error::Degenerate(format!("need at least two samples, got {}", samples.len())));
    }
    if samples.iter().all(|&v| v == samples[0]) {
        return Err(Error::Degenerate("all samples are equal".into()));
    }
    let statistic = ks_statistic(samples, reference_cdf)?;
    let root_n = (samples.len() as f64).sqrt();
    Ok(KsResult { statistic, p_value: kolmogorov_survival(root_n * statistic) })
}
