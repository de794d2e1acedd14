//! Empirical cumulants (k-statistics) with bootstrap standard errors.

use serde::{Deserialize, Serialize};

use super::integrals::{asymptotic_variance, centered_statistics};
use super::test_functions::TestFunction;
use super::traces::{cumulant_trace, variance_trace};
use crate::error::Result;
use crate::kernels::KernelSpec;
use crate::numerics::RngStream;
use crate::sampler::PointSample;

pub const DEFAULT_RESAMPLES: usize = 1000;

/// Unbiased cumulant estimators `k₁ … k₄`; `NaN` where the sample is too
/// small (`k_j` needs more than `j − 1` values).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KStatistics {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k4: f64,
}

impl KStatistics {
    pub fn as_array(&self) -> [f64; 4] {
        [self.k1, self.k2, self.k3, self.k4]
    }
}

pub fn k_statistics(values: &[f64]) -> KStatistics {
    let n = values.len() as f64;
    if values.is_empty() {
        return KStatistics { k1: f64::NAN, k2: f64::NAN, k3: f64::NAN, k4: f64::NAN };
    }
    let mean = values.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in values {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    let k2 = if n > 1.0 { n / (n - 1.0) * m2 } else { f64::NAN };
    let k3 = if n > 2.0 { n * n / ((n - 1.0) * (n - 2.0)) * m3 } else { f64::NAN };
    let k4 = if n > 3.0 {
        n * n * ((n + 1.0) * m4 - 3.0 * (n - 1.0) * m2 * m2) / ((n - 1.0) * (n - 2.0) * (n - 3.0))
    } else {
        f64::NAN
    };
    KStatistics { k1: mean, k2, k3, k4 }
}

/// Bootstrap standard errors of the four k-statistics; `None` for fewer
/// than two values.
pub fn bootstrap_std_errors(values: &[f64], resamples: usize, stream: RngStream) -> Option<[f64; 4]> {
    let n = values.len();
    if n < 2 || resamples < 2 {
        return None;
    }
    let mut rng = stream.rng();
    let mut buf = vec![0.0; n];
    let mut sums = [0.0f64; 4];
    let mut sq = [0.0f64; 4];
    for _ in 0..resamples {
        for slot in buf.iter_mut() {
            *slot = values[((rng.uniform() * n as f64) as usize).min(n - 1)];
        }
        for (j, k) in k_statistics(&buf).as_array().iter().enumerate() {
            sums[j] += k;
            sq[j] += k * k;
        }
    }
    let b = resamples as f64;
    let mut out = [0.0; 4];
    for j in 0..4 {
        let mean = sums[j] / b;
        out[j] = ((sq[j] / b - mean * mean) * b / (b - 1.0)).max(0.0).sqrt();
    }
    Some(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Moment {
    pub estimate: f64,
    /// Bootstrap standard error; absent when it cannot be formed.
    pub std_error: Option<f64>,
}

impl Moment {
    /// `|estimate − target| ≤ sigmas · SE`, false without an SE.
    pub fn within(&self, target: f64, sigmas: f64) -> bool {
        self.std_error.is_some_and(|se| (self.estimate - target).abs() <= sigmas * se)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub samples: usize,
    pub mean: Moment,
    pub variance: Moment,
    pub cumulant3: Moment,
    pub cumulant4: Moment,
    /// Trace-formula variance of the sampled (possibly truncated) kernel.
    pub predicted_variance: Option<f64>,
    pub predicted_cumulant3: Option<f64>,
    /// `‖f‖²_{H¹}/(4π)`.
    pub asymptotic_variance: Option<f64>,
    pub spec: Option<KernelSpec>,
}

/// Moments of arbitrary values, without predictions.
pub fn moment_report(values: &[f64], resamples: usize, stream: RngStream) -> MomentReport {
    let k = k_statistics(values).as_array();
    let se = bootstrap_std_errors(values, resamples, stream);
    let m = |j: usize| Moment { estimate: k[j], std_error: se.map(|s| s[j]) };
    MomentReport {
        samples: values.len(),
        mean: m(0),
        variance: m(1),
        cumulant3: m(2),
        cumulant4: m(3),
        predicted_variance: None,
        predicted_cumulant3: None,
        asymptotic_variance: None,
        spec: None,
    }
}

/// Moments of the centered statistic of `f` over `samples`, with trace and
/// asymptotic predictions attached.
pub fn empirical_report(
    samples: &[PointSample],
    f: &TestFunction,
    resamples: usize,
    stream: RngStream,
) -> Result<MomentReport> {
    let values = centered_statistics(samples, f)?;
    let mut report = moment_report(&values, resamples, stream);
    if let Some(first) = samples.first() {
        report.spec = Some(first.spec);
        report.predicted_variance = Some(variance_trace(&first.spec, f)?.value);
        report.predicted_cumulant3 = Some(cumulant_trace(&first.spec, f, 3)?.value);
        report.asymptotic_variance = Some(asymptotic_variance(f)?.value);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn k_statistics_small_example() {
        // values 1, 2, 3, 4, 10: mean 4, central moments by hand
        let v = [1.0, 2.0, 3.0, 4.0, 10.0];
        let k = k_statistics(&v);
        assert_relative_eq!(k.k1, 4.0);
        // m2 = 50/5 = 10, m3 = 180/5 = 36, m4 = 1394/5 = 278.8
        assert_relative_eq!(k.k2, 12.5, max_relative = 1e-14);
        assert_relative_eq!(k.k3, 25.0 / 12.0 * 36.0, max_relative = 1e-14);
        assert_relative_eq!(k.k4, 25.0 * (6.0 * 278.8 - 12.0 * 100.0) / 24.0, max_relative = 1e-14);
    }

    #[test]
    fn constant_statistic_and_tiny_samples() {
        let r = moment_report(&[2.0; 50], 200, RngStream::new(1, 0));
        assert_eq!(r.variance.estimate, 0.0);
        assert_eq!(r.variance.std_error, Some(0.0));
        let single = moment_report(&[1.0], 200, RngStream::new(1, 0));
        assert!(single.mean.std_error.is_none() && single.variance.estimate.is_nan());
        assert!(!single.mean.within(1.0, 4.0));
    }

    #[test]
    fn gaussian_cumulants_and_standard_errors() {
        let mut rng = RngStream::new(5, 0).rng();
        let v: Vec<f64> = (0..4000).map(|_| 2.0 * rng.standard_normal() + 1.0).collect();
        let r = moment_report(&v, DEFAULT_RESAMPLES, RngStream::new(5, 1));
        assert!(r.mean.within(1.0, 4.0));
        assert!(r.variance.within(4.0, 4.0));
        assert!(r.cumulant3.within(0.0, 4.0));
        assert!(r.cumulant4.within(0.0, 4.0));
        // SE of the mean is σ/√n
        assert_relative_eq!(r.mean.std_error.unwrap(), 2.0 / 4000f64.sqrt(), max_relative = 0.1);
        let again = moment_report(&v, DEFAULT_RESAMPLES, RngStream::new(5, 1));
        assert_eq!(r, again);
    }
}
