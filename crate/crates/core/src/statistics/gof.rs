//! Kolmogorov–Smirnov and Anderson–Darling goodness-of-fit tests with
//! asymptotic p-values.

use serde::{Deserialize, Serialize};

use crate::numerics::special::normal_cdf;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
}

impl TestResult {
    pub fn passes(&self, alpha: f64) -> bool {
        self.p_value > alpha
    }
}

/// `P(K > λ)` for the Kolmogorov distribution.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // small-λ theta-function form of the CDF
        let a = std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda);
        let cdf: f64 = (1..=20)
            .map(|j| {
                let m = (2 * j - 1) as f64;
                (-m * m * a).exp()
            })
            .sum::<f64>()
            * (2.0 * std::f64::consts::PI).sqrt()
            / lambda;
        (1.0 - cdf).clamp(0.0, 1.0)
    } else {
        let mut sum = 0.0;
        for j in 1..=100 {
            let jf = j as f64;
            let term = (-2.0 * jf * jf * lambda * lambda).exp();
            sum += if j % 2 == 1 { term } else { -term };
            if term < 1e-300 {
                break;
            }
        }
        (2.0 * sum).clamp(0.0, 1.0)
    }
}

fn effective_lambda(n: f64, d: f64) -> f64 {
    let sn = n.sqrt();
    (sn + 0.12 + 0.11 / sn) * d
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("NaN in sample"));
    v
}

/// One-sample KS test against a continuous CDF.
pub fn ks_one_sample(values: &[f64], cdf: impl Fn(f64) -> f64) -> TestResult {
    let v = sorted(values);
    let n = v.len() as f64;
    let d = v
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max);
    TestResult { statistic: d, p_value: kolmogorov_sf(effective_lambda(n, d)) }
}

/// Two-sample KS test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> TestResult {
    let (a, b) = (sorted(a), sorted(b));
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    TestResult { statistic: d, p_value: kolmogorov_sf(effective_lambda(n * m / (n + m), d)) }
}

/// Limiting CDF of the Anderson–Darling statistic (Marsaglia's approximation).
pub fn anderson_darling_cdf(z: f64) -> f64 {
    if z <= 0.0 {
        return 0.0;
    }
    if z < 2.0 {
        (-1.2337141 / z).exp() / z.sqrt()
            * (2.00012
                + (0.247105 - (0.0649821 - (0.0347962 - (0.011672 - 0.00168691 * z) * z) * z) * z) * z)
    } else {
        (-(1.0776 - (2.30695 - (0.43424 - (0.082433 - (0.008056 - 0.0003146 * z) * z) * z) * z) * z).exp())
            .exp()
    }
}

/// Anderson–Darling test of `values` against N(0, 1).
pub fn anderson_darling_normal(values: &[f64]) -> TestResult {
    let v = sorted(values);
    let n = v.len();
    let nf = n as f64;
    let tiny = 1e-300;
    let mut s = 0.0;
    for i in 0..n {
        let lo = normal_cdf(v[i]).max(tiny).ln();
        let hi = normal_cdf(-v[n - 1 - i]).max(tiny).ln();
        s += (2 * i + 1) as f64 * (lo + hi);
    }
    let a2 = -nf - s / nf;
    TestResult { statistic: a2, p_value: (1.0 - anderson_darling_cdf(a2)).clamp(0.0, 1.0) }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalityReport {
    pub ks: TestResult,
    pub anderson_darling: TestResult,
}

/// Test `values` against N(0, σ²) after standardizing by the predicted variance.
pub fn normality_test(values: &[f64], predicted_variance: f64) -> NormalityReport {
    let sd = predicted_variance.sqrt();
    let z: Vec<f64> = values.iter().map(|v| v / sd).collect();
    NormalityReport {
        ks: ks_one_sample(&z, normal_cdf),
        anderson_darling: anderson_darling_normal(&z),
    }
}
