//! Residuals of the local analytic projection (LLAP) and covariance (CO)
//! properties.
//!
//! For `K = Σ_{l<N} ψ_l(x) conj(ψ_l(z))` with `ψ_l = c_l z^l √κ`, angular
//! selection gives
//!
//! `x^p K(x,z) − ∫_B K(x,y) y^p K(y,z) dy = Σ_l c_l x^{l+p} √κ(x) conj(ψ_l(z)) w_l`
//!
//! where `w_l` is the mass of `|ψ_{l+p}|²` outside `B` when `l + p < N` and 1
//! otherwise. Summing this directly avoids subtracting two nearly equal
//! quantities, which otherwise caps the resolvable residual near `1e−13`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;
use statrs::function::gamma::gamma_ur;

use super::test_functions::{radius_squared_cutoff, TestFunction};
use super::traces::covariance_trace;
use crate::error::{Error, Result};
use crate::geometry::SpaceKind;
use crate::kernels::KernelSpec;
use crate::numerics::{integrate_disk, Estimate, QuadratureConfig};
use crate::sampler::truncation_choice;

/// Mass of `|ψ_k|²` outside `|z| ≤ b`.
pub fn outside_mass(spec: &KernelSpec, k: usize, b: f64) -> f64 {
    let rho = spec.rho;
    let a = k as f64 + 1.0;
    let s = b * b;
    match spec.space {
        // |z|² ~ Gamma(k+1, rate ρ)
        SpaceKind::Plane => gamma_ur(a, rho * s),
        // |z|²/(1+|z|²) ~ Beta(k+1, ρ−k)
        SpaceKind::Sphere => beta_reg(rho - k as f64, a, 1.0 / (1.0 + s)),
        // |z|² ~ Beta(k+1, ρ)
        SpaceKind::Hyperbolic => {
            if s >= 1.0 {
                0.0
            } else {
                beta_reg(rho, a, 1.0 - s)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LlapParams {
    pub p: u32,
    /// Radius of the integration disk `B`.
    pub b: f64,
    /// Radius of the evaluation disk `B₂ ⊂ B`.
    pub b2: f64,
}

impl LlapParams {
    fn validate(&self, space: SpaceKind) -> Result<()> {
        if self.p > 2 {
            return Err(Error::InvalidParameter(format!("p must be 0, 1 or 2, got {}", self.p)));
        }
        if !(self.b2 > 0.0 && self.b2 < self.b) {
            return Err(Error::InvalidParameter(format!("need 0 < B₂ < B, got B₂ = {}, B = {}", self.b2, self.b)));
        }
        space.check(Complex64::new(self.b, 0.0))
    }
}

/// Sup of the residuals over an `(x, z)` grid in `B₂`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LlapReport {
    pub params: LlapParams,
    /// `sup |x^p K(x,z) − ∫_B K(x,y) y^p K(y,z) dy|`.
    pub residual: f64,
    /// `sup |K(x,z) z̄^p − ∫_B K(x,y) ȳ^p K(y,z) dy|`.
    pub conjugate_residual: f64,
    /// Basis terms summed.
    pub terms: usize,
}

/// Polar grid in `|z| ≤ radius`: the origin plus `rings × spokes` points.
pub fn polar_grid(radius: f64, rings: usize, spokes: usize) -> Vec<Complex64> {
    let mut g = vec![Complex64::new(0.0, 0.0)];
    for i in 1..=rings {
        let r = radius * i as f64 / rings as f64;
        for j in 0..spokes {
            // offset alternate rings so spokes do not line up
            let t = (j as f64 + 0.5 * (i % 2) as f64) * std::f64::consts::TAU / spokes as f64;
            g.push(Complex64::from_polar(r, t));
        }
    }
    g
}

fn log_pow(k: usize, r: f64) -> f64 {
    if k == 0 {
        0.0
    } else {
        k as f64 * r.ln()
    }
}

/// Precomputed weights for the stable residual sum.
pub struct LlapResidual {
    spec: KernelSpec,
    p: usize,
    lc_half: Vec<f64>,
    weights: Vec<f64>,
}

impl LlapResidual {
    pub fn new(spec: &KernelSpec, params: LlapParams) -> Result<Self> {
        params.validate(spec.space)?;
        let p = params.p as usize;
        let (n, terms) = match spec.truncation_rank() {
            Some(n) => (Some(n), n),
            None => {
                let eta = spec.space.invariant_density(Complex64::new(params.b2, 0.0))?;
                let tol = 1e-20 * spec.rho * eta;
                (None, truncation_choice(spec.space, spec.rho, params.b2, tol)? + p + 1)
            }
        };
        let weights = (0..terms)
            .map(|l| match n {
                Some(n) if l + p >= n => 1.0,
                _ => outside_mass(spec, l + p, params.b),
            })
            .collect();
        let lc_half = spec.log_coeff_half_table(terms);
        Ok(Self { spec: *spec, p, lc_half, weights })
    }

    pub fn terms(&self) -> usize {
        self.weights.len()
    }

    /// `x^p K(x,z) − ∫_B K(x,y) y^p K(y,z) dy`.
    pub fn at(&self, x: Complex64, z: Complex64) -> Complex64 {
        let (rx, rz) = (x.norm(), z.norm());
        let (tx, tz) = (x.arg(), z.arg());
        let half_k = 0.5
            * (self.spec.log_reference_at(rx * rx) + self.spec.log_reference_at(rz * rz));
        let mut acc = Complex64::new(0.0, 0.0);
        for (l, &w) in self.weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let lp = l + self.p;
            // c_l appears in both ψ_l(z) and the prefactor
            let lm = 2.0 * self.lc_half[l] + log_pow(lp, rx) + log_pow(l, rz) + half_k;
            if lm < -745.0 {
                continue;
            }
            acc += Complex64::from_polar(lm.exp() * w, lp as f64 * tx - l as f64 * tz);
        }
        acc
    }

    /// `K(x,z) z̄^p − ∫_B K(x,y) ȳ^p K(y,z) dy`, the conjugate of `at(z, x)`.
    pub fn conjugate_at(&self, x: Complex64, z: Complex64) -> Complex64 {
        self.at(z, x).conj()
    }
}

/// Stable-route LLAP residuals over a polar grid of `B₂`.
pub fn llap_residual(spec: &KernelSpec, params: LlapParams) -> Result<LlapReport> {
    let r = LlapResidual::new(spec, params)?;
    let grid = polar_grid(params.b2, 4, 8);
    let (mut sup, mut sup_c) = (0.0f64, 0.0f64);
    for &x in &grid {
        for &z in &grid {
            sup = sup.max(r.at(x, z).norm());
            sup_c = sup_c.max(r.conjugate_at(x, z).norm());
        }
    }
    Ok(LlapReport { params, residual: sup, conjugate_residual: sup_c, terms: r.terms() })
}

/// The residual at one pair by direct 2D quadrature of the projection integral.
pub fn llap_residual_direct_at(
    spec: &KernelSpec,
    params: LlapParams,
    x: Complex64,
    z: Complex64,
    cfg: &QuadratureConfig,
) -> Result<Complex64> {
    params.validate(spec.space)?;
    let p = params.p as i32;
    let integrand = |y: Complex64| -> Complex64 {
        match (spec.kernel_weighted(x, y), spec.kernel_weighted(y, z)) {
            (Ok(a), Ok(b)) => a * y.powi(p) * b,
            _ => Complex64::new(0.0, 0.0),
        }
    };
    let o = Complex64::new(0.0, 0.0);
    let re = integrate_disk(|y| integrand(y).re, o, params.b, cfg);
    let im = integrate_disk(|y| integrand(y).im, o, params.b, cfg);
    Ok(x.powi(p) * spec.kernel_weighted(x, z)? - Complex64::new(re.value, im.value))
}

/// `|Cov(Σ ¼ΔF, Σ |z|² 1_{|z|≤B})|` by the trace route.
pub fn co_residual(spec: &KernelSpec, f: &TestFunction, b: f64) -> Result<Estimate> {
    if f.support_radius() >= b {
        return Err(Error::InvalidParameter(format!(
            "{} must be supported inside |z| < {b}",
            f
        )));
    }
    let c = covariance_trace(spec, &f.quarter_laplacian(), &radius_squared_cutoff(b))?;
    Ok(Estimate { value: c.value.abs(), ..c })
}
