//! Exact samplers for the rank-`N` projection processes and the spherical
//! matrix model.
//!
//! Plane and hyperbolic processes have infinitely many points; they are
//! sampled through a rank-`N` truncation chosen so that the one-point
//! intensity on the observation window is off by at most a tail tolerance.

pub mod linalg;

use std::f64::consts::PI;

use num_complex::Complex64;
use rand_distr::{Beta, Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::SpaceKind;
use crate::kernels::KernelSpec;
use crate::numerics::special::log_sum_exp;
use crate::numerics::{ln_binomial, ln_gamma, RngStream, StreamRng};

use linalg::{eigenvalues, Lu, Matrix};

/// Summed terms past which [`truncation_choice`] gives up.
pub const TRUNCATION_TERM_CAP: usize = 10_000_000;

/// Smallest rank `N ≥ 1` whose intensity deficit `K(z,z) − K_N(z,z)` stays
/// below `tail_tol` for `|z| ≤ window_radius`.
///
/// The deficit at `|z| = R` is `(ρ/π) P(Poisson(ρR²) ≥ N)` on the plane and
/// `(ρ/π)(1−R²)^{−2} P(X ≥ N)` on the disk, with `X` negative binomial with
/// weights `C(ρ+k, k) R^{2k} (1−R²)^{ρ+1}`; both increase with `R`.
pub fn truncation_choice(space: SpaceKind, rho: f64, window_radius: f64, tail_tol: f64) -> Result<usize> {
    if !(tail_tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tail tolerance must be positive, got {tail_tol}")));
    }
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::InvalidParameter(format!("ρ must be positive, got {rho}")));
    }
    if !(window_radius >= 0.0) {
        return Err(Error::InvalidParameter(format!("window radius must be nonnegative, got {window_radius}")));
    }
    let s = window_radius * window_radius;
    let (log_pref, log_term): (f64, Box<dyn Fn(usize) -> f64>) = match space {
        SpaceKind::Plane => {
            if s == 0.0 {
                return Ok(1);
            }
            let lam = rho * s;
            ((rho / PI).ln(), Box::new(move |k| -lam + k as f64 * lam.ln() - ln_gamma(k as f64 + 1.0)))
        }
        SpaceKind::Hyperbolic => {
            if window_radius >= 1.0 {
                return Err(Error::InvalidParameter(format!(
                    "hyperbolic window must lie inside the disk, got {window_radius}"
                )));
            }
            if s == 0.0 {
                return Ok(1);
            }
            let l1s = (-s).ln_1p();
            (
                (rho / PI).ln() - 2.0 * l1s,
                Box::new(move |k| ln_binomial(rho + k as f64, k as f64) + k as f64 * s.ln() + (rho + 1.0) * l1s),
            )
        }
        SpaceKind::Sphere => {
            return Err(Error::InvalidParameter("the sphere has finite rank ρ".into()));
        }
    };
    let log_tol = tail_tol.ln();
    let mut logs = Vec::new();
    let remainder;
    loop {
        let k = logs.len();
        if k >= TRUNCATION_TERM_CAP {
            return Err(Error::TruncationUnreachable { tol: tail_tol, cap: TRUNCATION_TERM_CAP });
        }
        let lt = log_term(k);
        logs.push(lt);
        let lr = log_term(k + 1) - lt;
        // successive ratios decrease, so past the mode the rest is geometric
        if lr < 0.0 {
            let log_rest = log_term(k + 1) - (-lr.exp()).ln_1p();
            if log_pref + log_rest < log_tol - 7.0 {
                remainder = log_rest;
                break;
            }
        }
    }
    let mut suffix = remainder;
    let mut suffixes = vec![0.0; logs.len()];
    for k in (0..logs.len()).rev() {
        suffix = log_sum_exp(&[suffix, logs[k]]);
        suffixes[k] = suffix;
    }
    let n = suffixes.iter().position(|&l| log_pref + l <= log_tol).unwrap_or(logs.len());
    Ok(n.max(1))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleConfig {
    /// Finite-rank kernel to sample.
    pub spec: KernelSpec,
    pub stream: RngStream,
    /// Observation window used to pick the rank (unused on the sphere).
    pub window_radius: f64,
    /// Proposals allowed per placed point.
    pub max_rejections: usize,
}

impl SampleConfig {
    pub fn new(spec: KernelSpec, stream: RngStream, window_radius: f64) -> Result<Self> {
        let n = spec
            .truncation_rank()
            .ok_or_else(|| Error::InvalidParameter("sampling needs a finite-rank kernel".into()))?;
        if spec.space == SpaceKind::Hyperbolic && window_radius >= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "hyperbolic window must lie inside the disk, got {window_radius}"
            )));
        }
        Ok(Self { spec, stream, window_radius, max_rejections: 50 * n + 1000 })
    }

    /// Sphere of integer `ρ`, or plane/disk truncated for `window_radius` at `tail_tol`.
    pub fn for_model(space: SpaceKind, rho: f64, window_radius: f64, tail_tol: f64, stream: RngStream) -> Result<Self> {
        let spec = match space {
            SpaceKind::Sphere => KernelSpec::full(space, rho)?,
            _ => KernelSpec::truncated(space, rho, truncation_choice(space, rho, window_radius, tail_tol)?)?,
        };
        Self::new(spec, stream, window_radius)
    }

    pub fn rank(&self) -> usize {
        self.spec.truncation_rank().expect("finite rank checked at construction")
    }

    /// Same configuration on stream `stream_id`.
    pub fn with_stream_id(self, stream_id: u64) -> Self {
        Self { stream: self.stream.with_id(stream_id), ..self }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointSample {
    pub points: Vec<Complex64>,
    pub spec: KernelSpec,
    /// Rejected proposals (projection sampler) or resampled `A` matrices
    /// (matrix model).
    pub rejection_count: usize,
    pub stream_id: u64,
}

/// Draws from the normalized base intensity `K_N(x,x) dx / N`: a uniform mixture
/// of the radial laws `|ψ_k|² dx`, each sampled exactly.
pub struct BaseIntensity {
    space: SpaceKind,
    radial: Vec<Radial>,
}

enum Radial {
    /// `|z|² ~ Gamma(k+1, rate ρ)`.
    Gamma(Gamma<f64>),
    /// `|z|²/(1+|z|²) ~ Beta(k+1, ρ−k)`.
    SphereBeta(Beta<f64>),
    /// `|z|² ~ Beta(k+1, ρ)`.
    DiskBeta(Beta<f64>),
}

impl BaseIntensity {
    pub fn new(spec: &KernelSpec) -> Result<Self> {
        let n = spec
            .truncation_rank()
            .ok_or_else(|| Error::InvalidParameter("base intensity needs a finite-rank kernel".into()))?;
        let bad = |e: String| Error::InvalidParameter(e);
        let rho = spec.rho;
        let radial = (0..n)
            .map(|k| {
                let a = k as f64 + 1.0;
                Ok(match spec.space {
                    SpaceKind::Plane => Radial::Gamma(Gamma::new(a, 1.0 / rho).map_err(|e| bad(e.to_string()))?),
                    SpaceKind::Sphere => {
                        Radial::SphereBeta(Beta::new(a, rho - k as f64).map_err(|e| bad(e.to_string()))?)
                    }
                    SpaceKind::Hyperbolic => Radial::DiskBeta(Beta::new(a, rho).map_err(|e| bad(e.to_string()))?),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { space: spec.space, radial })
    }

    pub fn sample(&self, rng: &mut StreamRng) -> Complex64 {
        loop {
            let k = ((rng.uniform() * self.radial.len() as f64) as usize).min(self.radial.len() - 1);
            let s = match &self.radial[k] {
                Radial::Gamma(g) => g.sample(rng),
                Radial::SphereBeta(b) => {
                    let u: f64 = b.sample(rng);
                    u / (1.0 - u)
                }
                Radial::DiskBeta(b) => b.sample(rng),
            };
            if !s.is_finite() || (self.space == SpaceKind::Hyperbolic && s >= 1.0) {
                continue;
            }
            let theta = 2.0 * PI * rng.uniform();
            return Complex64::from_polar(s.sqrt(), theta);
        }
    }
}

/// One draw from `K_N(x,x) dx / N`.
pub fn sample_base_intensity(spec: &KernelSpec, rng: &mut StreamRng) -> Result<Complex64> {
    Ok(BaseIntensity::new(spec)?.sample(rng))
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Sequential sampler for the projection process with kernel
/// `Σ_{k<N} ψ_k(z) conj(ψ_k(w))`.
///
/// With `v(x) = (ψ_k(x))_k`, point `j+1` has density `‖P_j^⊥ v(x)‖² / (N − j)`,
/// where `P_j` projects onto the span of `v(x_1), …, v(x_j)`; it is drawn by
/// rejection from `‖v(x)‖² / N`.
pub fn sample_projection(cfg: &SampleConfig) -> Result<PointSample> {
    let spec = &cfg.spec;
    let n = cfg.rank();
    let base = BaseIntensity::new(spec)?;
    let coeff = spec.log_coeff_half_table(n);
    let mut rng = cfg.stream.rng();
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    let mut points = Vec::with_capacity(n);
    let mut rejections = 0usize;
    let mut v = vec![Complex64::new(0.0, 0.0); n];
    let mut proj = vec![Complex64::new(0.0, 0.0); n];
    for index in 0..n {
        let mut attempts = 0usize;
        loop {
            attempts += 1;
            if attempts > cfg.max_rejections {
                return Err(Error::RejectionLimit { index, rank: n, max: cfg.max_rejections });
            }
            let x = base.sample(&mut rng);
            spec.basis_vector(x, &coeff, &mut v);
            let diag: f64 = v.iter().map(|c| c.norm_sqr()).sum();
            let threshold = rng.uniform() * diag;
            let guard = -1e-9 * diag;
            let mut resid = diag;
            let mut rejected = false;
            for (i, e) in basis.iter().enumerate() {
                let p = inner(e, &v);
                proj[i] = p;
                resid -= p.norm_sqr();
                if resid < guard {
                    return Err(Error::NegativeDensity { z: x, density: resid, diagonal: diag, index });
                }
                if resid <= threshold {
                    rejected = true;
                    break;
                }
            }
            if rejected || resid <= threshold {
                rejections += 1;
                continue;
            }
            // modified Gram–Schmidt plus one reorthogonalization pass
            let mut w = v.clone();
            for _ in 0..2 {
                for e in &basis {
                    let p = inner(e, &w);
                    w.iter_mut().zip(e).for_each(|(wi, ei)| *wi -= p * ei);
                }
            }
            let norm = w.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            w.iter_mut().for_each(|c| *c /= norm);
            basis.push(w);
            points.push(x);
            break;
        }
    }
    Ok(PointSample { points, spec: *spec, rejection_count: rejections, stream_id: cfg.stream.stream_id })
}

/// Eigenvalues of `A⁻¹B` for independent `ρ × ρ` Ginibre matrices.
pub fn sample_sphere_matrix_model(rho: usize, stream: RngStream) -> Result<PointSample> {
    let spec = KernelSpec::sphere(rho)?;
    let mut rng = stream.rng();
    let b = Matrix::from_fn(rho, |_, _| rng.complex_gaussian());
    let mut resampled = 0usize;
    let lu = loop {
        let a = Matrix::from_fn(rho, |_, _| rng.complex_gaussian());
        let lu = Lu::new(&a);
        if lu.pivot_ratio >= 1e-12 {
            break lu;
        }
        resampled += 1;
    };
    let x = lu.solve(&b);
    let points = eigenvalues(&x, 100 * rho)?;
    Ok(PointSample { points, spec, rejection_count: resampled, stream_id: stream.stream_id })
}

/// Which sampler [`sample_many`] runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sampler {
    Projection,
    MatrixModel,
}

/// `m` independent samples; replicate `i` runs on stream id
/// `cfg.stream.stream_id + i`, so results do not depend on scheduling.
pub fn sample_many(cfg: &SampleConfig, m: usize, sampler: Sampler) -> Result<Vec<PointSample>> {
    if sampler == Sampler::MatrixModel && cfg.spec.space != SpaceKind::Sphere {
        return Err(Error::InvalidParameter("the matrix model is spherical".into()));
    }
    let run = |i: usize| {
        let c = cfg.with_stream_id(cfg.stream.stream_id.wrapping_add(i as u64));
        match sampler {
            Sampler::Projection => sample_projection(&c),
            Sampler::MatrixModel => sample_sphere_matrix_model(c.rank(), c.stream),
        }
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..m).into_par_iter().map(run).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..m).map(run).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statistics::gof::{ks_one_sample, ks_two_sample};

    fn sphere_u(z: Complex64) -> f64 {
        let s = z.norm_sqr();
        s / (1.0 + s)
    }

    #[test]
    fn truncation_matches_direct_poisson_tail() {
        // plane ρ = 4, R = 1: (4/π) e^{−4} Σ_{k≥N} 4^k/k! by plain summation
        let tail = |n: usize| {
            let mut t = (-4.0f64).exp();
            let mut acc = 0.0;
            for k in 0..200 {
                if k >= n {
                    acc += t;
                }
                t *= 4.0 / (k + 1) as f64;
            }
            4.0 / PI * acc
        };
        let want = (0..200).find(|&n| tail(n) <= 1e-10).unwrap();
        assert_eq!(truncation_choice(SpaceKind::Plane, 4.0, 1.0, 1e-10).unwrap(), want);
        assert_eq!(want, 23);
    }

    #[test]
    fn truncation_edges_and_monotonicity() {
        assert_eq!(truncation_choice(SpaceKind::Plane, 3.0, 1.0, 10.0 * 3.0 / PI * 3f64.exp()).unwrap(), 1);
        assert!(truncation_choice(SpaceKind::Sphere, 3.0, 1.0, 1e-3).is_err());
        assert!(truncation_choice(SpaceKind::Hyperbolic, 3.0, 1.0, 1e-3).is_err());
        assert!(truncation_choice(SpaceKind::Plane, 3.0, 1.0, 0.0).is_err());
        let mut rng = RngStream::new(5, 0).rng();
        for _ in 0..40 {
            let rho = 1.0 + 60.0 * rng.uniform();
            for space in [SpaceKind::Plane, SpaceKind::Hyperbolic] {
                let r = if space == SpaceKind::Plane { 2.0 * rng.uniform() } else { 0.9 * rng.uniform() };
                let mut prev = 0;
                for eps in [1e-2, 1e-4, 1e-6, 1e-8, 1e-10, 1e-12] {
                    let n = truncation_choice(space, rho, r, eps).unwrap();
                    assert!(n >= prev);
                    prev = n;
                }
            }
        }
    }

    #[test]
    fn hyperbolic_truncation_bounds_the_deficit() {
        let (rho, r, eps) = (5.0, 0.6, 1e-9);
        let n = truncation_choice(SpaceKind::Hyperbolic, rho, r, eps).unwrap();
        let full = KernelSpec::full(SpaceKind::Hyperbolic, rho).unwrap();
        let z = Complex64::new(r, 0.0);
        let deficit = |m: usize| {
            let t = KernelSpec::truncated(SpaceKind::Hyperbolic, rho, m).unwrap();
            full.kernel_weighted(z, z).unwrap().re - t.kernel_weighted(z, z).unwrap().re
        };
        assert!(deficit(n) <= eps * 1.001);
        assert!(deficit(n - 1) > eps);
    }

    #[test]
    fn sphere_rho_one_is_uniform_in_u() {
        let cfg = SampleConfig::for_model(SpaceKind::Sphere, 1.0, 0.0, 0.0, RngStream::new(1, 0)).unwrap();
        let samples = sample_many(&cfg, 10_000, Sampler::Projection).unwrap();
        let u: Vec<f64> = samples.iter().map(|s| sphere_u(s.points[0])).collect();
        assert!(ks_one_sample(&u, |x| x.clamp(0.0, 1.0)).p_value > 0.01);
        let mut rng = RngStream::new(2, 0).rng();
        let spec = KernelSpec::sphere(1).unwrap();
        let base = BaseIntensity::new(&spec).unwrap();
        let u: Vec<f64> = (0..10_000).map(|_| sphere_u(base.sample(&mut rng))).collect();
        assert!(ks_one_sample(&u, |x| x.clamp(0.0, 1.0)).p_value > 0.01);
    }

    #[test]
    fn counts_and_angles() {
        let cfg = SampleConfig::for_model(SpaceKind::Sphere, 40.0, 0.0, 0.0, RngStream::new(3, 0)).unwrap();
        let samples = sample_many(&cfg, 250, Sampler::Projection).unwrap();
        assert!(samples.iter().all(|s| s.points.len() == 40));
        let angles: Vec<f64> = samples
            .iter()
            .flat_map(|s| s.points.iter().map(|z| z.arg().rem_euclid(2.0 * PI)))
            .collect();
        assert_eq!(angles.len(), 10_000);
        assert!(ks_one_sample(&angles, |t| (t / (2.0 * PI)).clamp(0.0, 1.0)).p_value > 0.01);
    }

    #[test]
    fn determinism() {
        let cfg = SampleConfig::for_model(SpaceKind::Plane, 8.0, 1.5, 1e-8, RngStream::new(9, 4)).unwrap();
        let a = sample_projection(&cfg).unwrap();
        let b = sample_projection(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.points.len(), cfg.rank());
        let c = sample_projection(&cfg.with_stream_id(5)).unwrap();
        assert_ne!(a.points, c.points);
    }

    #[test]
    fn plane_base_intensity_radial_law() {
        // |z|² has density Σ_{k<N} ρ^{k+1} s^k e^{−ρs}/k! / N
        let spec = KernelSpec::truncated(SpaceKind::Plane, 3.0, 10).unwrap();
        let base = BaseIntensity::new(&spec).unwrap();
        let mut rng = RngStream::new(6, 0).rng();
        let s: Vec<f64> = (0..20_000).map(|_| base.sample(&mut rng).norm_sqr()).collect();
        let cdf = |x: f64| {
            // P(Gamma(k+1, ρ) ≤ x) = P(Poisson(ρx) ≥ k+1)
            let lam = 3.0 * x;
            let mut pmf = (-lam).exp();
            let mut cum = 0.0;
            let mut total = 0.0;
            for k in 0..10 {
                cum += pmf;
                total += 1.0 - cum;
                pmf *= lam / (k + 1) as f64;
            }
            total / 10.0
        };
        assert!(ks_one_sample(&s, cdf).p_value > 0.01);
    }

    #[test]
    fn matrix_model_rho_one_and_counts() {
        let u: Vec<f64> = (0..10_000)
            .map(|i| sphere_u(sample_sphere_matrix_model(1, RngStream::new(21, i)).unwrap().points[0]))
            .collect();
        assert!(ks_one_sample(&u, |x| x.clamp(0.0, 1.0)).p_value > 0.01);
        let s = sample_sphere_matrix_model(12, RngStream::new(21, 0)).unwrap();
        assert_eq!(s.points.len(), 12);
    }

    #[test]
    fn matrix_model_agrees_with_projection_sampler() {
        let cfg = SampleConfig::for_model(SpaceKind::Sphere, 8.0, 0.0, 0.0, RngStream::new(31, 0)).unwrap();
        let radial = |v: Vec<PointSample>| -> Vec<f64> {
            v.iter().flat_map(|s| s.points.iter().map(|z| sphere_u(*z)).collect::<Vec<_>>()).collect()
        };
        let a = sample_many(&cfg, 2000, Sampler::Projection).unwrap();
        let b = sample_many(&cfg.with_stream_id(1 << 32), 2000, Sampler::MatrixModel).unwrap();
        // pooled points are negatively correlated within a configuration, which
        // only makes the two-sample test conservative
        assert!(ks_two_sample(&radial(a.clone()), &radial(b.clone())).p_value > 0.01);
        let na: Vec<f64> = a.iter().map(|s| s.points.iter().filter(|z| z.norm() < 1.0).count() as f64).collect();
        let nb: Vec<f64> = b.iter().map(|s| s.points.iter().filter(|z| z.norm() < 1.0).count() as f64).collect();
        assert!(ks_two_sample(&na, &nb).p_value > 0.01);
    }

    #[test]
    fn intensity_and_repulsion_in_a_disk() {
        let cfg = SampleConfig::for_model(SpaceKind::Plane, 16.0, 2.0, 1e-10, RngStream::new(41, 0)).unwrap();
        let m = 3000;
        let samples = sample_many(&cfg, m, Sampler::Projection).unwrap();
        let counts: Vec<f64> = samples.iter().map(|s| s.points.iter().filter(|z| z.norm() < 1.0).count() as f64).collect();
        let mean = counts.iter().sum::<f64>() / m as f64;
        let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
        let expected = 16.0;
        assert!((mean - expected).abs() < 4.0 * (var / m as f64).sqrt(), "mean {mean}");
        // Poisson variance equals the mean; a standard error of the sample variance ~ var √(2/m)
        assert!(var + 4.0 * var * (2.0 / m as f64).sqrt() < mean, "var {var} mean {mean}");
    }
}
