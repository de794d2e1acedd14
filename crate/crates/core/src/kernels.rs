//! The three invariant kernel families.
//!
//! Each model pairs an analytic kernel `Ǩ(z,w) = Σ c_k² (z w̄)^k` with a
//! radial reference density `κ = dμ/dz`:
//!
//! | model      | `c_k²`            | `κ(z)`                        |
//! |------------|-------------------|-------------------------------|
//! | plane      | `ρ^k / k!`        | `(ρ/π) e^{−ρ|z|²}`            |
//! | sphere     | `C(ρ−1, k)`       | `(ρ/π) (1+|z|²)^{−(ρ+1)}`     |
//! | hyperbolic | `C(ρ+k, k)`       | `(ρ/π) (1−|z|²)^{ρ−1}`        |
//!
//! All magnitudes are assembled in the log domain, so `ρ` in the thousands
//! is fine.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::SpaceKind;
use crate::numerics::{ln_binomial, ln_gamma};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub space: SpaceKind,
    pub rho: f64,
    /// Rank of the projection; `None` is the infinite-rank closed form
    /// (plane and hyperbolic only; the sphere always has rank `ρ`).
    rank: Option<usize>,
}

impl KernelSpec {
    /// The model's full kernel (closed form).
    pub fn full(space: SpaceKind, rho: f64) -> Result<Self> {
        Self::validate_rho(space, rho)?;
        let rank = match space {
            SpaceKind::Sphere => Some(rho as usize),
            _ => None,
        };
        Ok(Self { space, rho, rank })
    }

    /// The rank-`n` truncation `Σ_{k<n}`; for the sphere `n` must equal `ρ`.
    pub fn truncated(space: SpaceKind, rho: f64, n: usize) -> Result<Self> {
        Self::validate_rho(space, rho)?;
        if n == 0 {
            return Err(Error::InvalidParameter("truncation rank must be positive".into()));
        }
        if space == SpaceKind::Sphere && n != rho as usize {
            return Err(Error::InvalidParameter(format!(
                "sphere rank is fixed at ρ = {rho}, got {n}"
            )));
        }
        Ok(Self { space, rho, rank: Some(n) })
    }

    pub fn sphere(rho: usize) -> Result<Self> {
        Self::full(SpaceKind::Sphere, rho as f64)
    }

    fn validate_rho(space: SpaceKind, rho: f64) -> Result<()> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::InvalidParameter(format!("ρ must be positive, got {rho}")));
        }
        if space == SpaceKind::Sphere && (rho.fract() != 0.0 || rho < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "sphere needs a positive integer ρ, got {rho}"
            )));
        }
        Ok(())
    }

    pub fn truncation_rank(&self) -> Option<usize> {
        self.rank
    }

    /// Rank for the sphere, `None` for infinite-rank kernels.
    pub fn is_finite_rank(&self) -> bool {
        self.rank.is_some()
    }

    /// Same model at full rank.
    pub fn to_full(&self) -> Self {
        Self::full(self.space, self.rho).expect("validated spec")
    }

    /// `ln c_k²`.
    pub fn log_coeff_sq(&self, k: usize) -> f64 {
        let kf = k as f64;
        match self.space {
            SpaceKind::Plane => kf * self.rho.ln() - ln_gamma(kf + 1.0),
            SpaceKind::Sphere => {
                if k as f64 > self.rho - 1.0 {
                    f64::NEG_INFINITY
                } else {
                    ln_binomial(self.rho - 1.0, kf)
                }
            }
            SpaceKind::Hyperbolic => {
                ln_gamma(self.rho + kf + 1.0) - ln_gamma(kf + 1.0) - ln_gamma(self.rho + 1.0)
            }
        }
    }

    /// `ln κ` at modulus squared `s = |z|²`.
    pub(crate) fn log_reference_at(&self, s: f64) -> f64 {
        let base = (self.rho / PI).ln();
        match self.space {
            SpaceKind::Plane => base - self.rho * s,
            SpaceKind::Sphere => base - (self.rho + 1.0) * s.ln_1p(),
            SpaceKind::Hyperbolic => {
                if self.rho == 1.0 {
                    base
                } else {
                    base + (self.rho - 1.0) * (-s).ln_1p()
                }
            }
        }
    }

    /// `κ(z) = dμ_ρ/dz`.
    pub fn reference_density(&self, z: Complex64) -> Result<f64> {
        self.space.check(z)?;
        Ok(self.log_reference_at(z.norm_sqr()).exp())
    }

    fn log_weight(&self, z: Complex64, w: Complex64) -> f64 {
        0.5 * (self.log_reference_at(z.norm_sqr()) + self.log_reference_at(w.norm_sqr()))
    }

    /// `Σ_{k<n} exp(ln c_k² + k ln u + shift)` with phase, in the log domain.
    fn series(&self, n: usize, u: Complex64, shift: f64) -> Complex64 {
        if u == Complex64::new(0.0, 0.0) {
            return Complex64::new((self.log_coeff_sq(0) + shift).exp(), 0.0);
        }
        let lu = u.norm().ln();
        let phase = u / u.norm();
        let mut rot = Complex64::new(1.0, 0.0);
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..n {
            let m = (self.log_coeff_sq(k) + k as f64 * lu + shift).exp();
            acc += rot * m;
            rot *= phase;
        }
        acc
    }

    /// Complex log of the closed-form analytic kernel at `u = z w̄`.
    fn log_closed_form(&self, u: Complex64) -> Complex64 {
        let one = Complex64::new(1.0, 0.0);
        match self.space {
            SpaceKind::Plane => self.rho * u,
            SpaceKind::Sphere => (self.rho - 1.0) * (one + u).ln(),
            SpaceKind::Hyperbolic => -(self.rho + 1.0) * (one - u).ln(),
        }
    }

    fn assemble(&self, z: Complex64, w: Complex64, shift: f64) -> Complex64 {
        let u = z * w.conj();
        match self.rank {
            Some(n) if !(self.space == SpaceKind::Sphere) => self.series(n, u, shift),
            _ => {
                if self.space == SpaceKind::Sphere && (Complex64::new(1.0, 0.0) + u).norm() == 0.0 {
                    return if self.rho == 1.0 {
                        Complex64::new(shift.exp(), 0.0)
                    } else {
                        Complex64::new(0.0, 0.0)
                    };
                }
                (self.log_closed_form(u) + shift).exp()
            }
        }
    }

    /// `Ǩ_ρ(z, w)`: the closed form at full rank, the truncated series otherwise.
    pub fn kernel_raw(&self, z: Complex64, w: Complex64) -> Result<Complex64> {
        self.space.check(z)?;
        self.space.check(w)?;
        Ok(self.assemble(z, w, 0.0))
    }

    /// The rank-`n` series evaluated term by term; the sphere's full kernel
    /// through this route must agree with its closed form.
    pub fn kernel_series(&self, n: usize, z: Complex64, w: Complex64) -> Result<Complex64> {
        self.space.check(z)?;
        self.space.check(w)?;
        Ok(self.series(n, z * w.conj(), self.log_weight(z, w)))
    }

    /// `K_ρ(z, w) = Ǩ_ρ(z, w) (κ(z) κ(w))^{1/2}`, the Lebesgue-weighted kernel.
    pub fn kernel_weighted(&self, z: Complex64, w: Complex64) -> Result<Complex64> {
        self.space.check(z)?;
        self.space.check(w)?;
        Ok(self.assemble(z, w, self.log_weight(z, w)))
    }

    /// `K^ι(z, w) = K_ρ(z, w) (η(z) η(w))^{−1/2}`.
    pub fn kernel_invariant(&self, z: Complex64, w: Complex64) -> Result<Complex64> {
        let k = self.kernel_weighted(z, w)?;
        let eta = self.space.invariant_density(z)? * self.space.invariant_density(w)?;
        Ok(k / eta.sqrt())
    }

    /// `|K^ι(0, u)|²` as a function of `r = |u|`; closed form, full rank.
    pub fn invariant_profile_sq(&self, r: f64) -> f64 {
        let s = r * r;
        let base = 2.0 * (self.rho / PI).ln();
        let l = match self.space {
            SpaceKind::Plane => -self.rho * s,
            SpaceKind::Sphere => -(self.rho - 1.0) * s.ln_1p(),
            SpaceKind::Hyperbolic => (self.rho + 1.0) * (-s).ln_1p(),
        };
        (base + l).exp()
    }

    /// Weighted truncated sphere kernel `K̂_ρ` projecting onto polynomials of
    /// degree at most `ρ − 1 − p` in `L²(μ_ρ)`.
    pub fn kernel_truncated_sphere(&self, p: usize, z: Complex64, w: Complex64) -> Result<Complex64> {
        if self.space != SpaceKind::Sphere {
            return Err(Error::InvalidParameter("truncated kernel is defined for the sphere".into()));
        }
        let rho = self.rho as usize;
        if rho < 1 + p {
            return Err(Error::InvalidParameter(format!("need ρ ≥ 1 + p, got ρ = {rho}, p = {p}")));
        }
        self.kernel_series(rho - p, z, w)
    }

    /// `ψ_k(z) = c_k z^k √κ(z)`, orthonormal in `L²(dz)`.
    pub fn basis_function(&self, k: usize, z: Complex64) -> Result<Complex64> {
        if let Some(n) = self.rank {
            if k >= n {
                return Err(Error::IndexOutOfRange { k, rank: n });
            }
        }
        self.space.check(z)?;
        Ok(self.basis_unchecked(k, z))
    }

    pub(crate) fn basis_unchecked(&self, k: usize, z: Complex64) -> Complex64 {
        let r = z.norm();
        let half_k = 0.5 * self.log_reference_at(r * r);
        if r == 0.0 {
            return if k == 0 {
                Complex64::new((0.5 * self.log_coeff_sq(0) + half_k).exp(), 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            };
        }
        let m = (0.5 * self.log_coeff_sq(k) + k as f64 * r.ln() + half_k).exp();
        Complex64::from_polar(m, k as f64 * z.arg())
    }

    /// Fill `out[k] = ψ_k(z)` for `k < out.len()`.
    pub fn basis_vector(&self, z: Complex64, log_coeff_half: &[f64], out: &mut [Complex64]) {
        let r = z.norm();
        let half_k = 0.5 * self.log_reference_at(r * r);
        if r == 0.0 {
            out.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
            out[0] = Complex64::new((log_coeff_half[0] + half_k).exp(), 0.0);
            return;
        }
        let lr = r.ln();
        let phase = z / r;
        let mut rot = Complex64::new(1.0, 0.0);
        for (k, v) in out.iter_mut().enumerate() {
            *v = rot * (log_coeff_half[k] + k as f64 * lr + half_k).exp();
            rot *= phase;
        }
    }

    /// `½ ln c_k²` for `k < n`.
    pub fn log_coeff_half_table(&self, n: usize) -> Vec<f64> {
        (0..n).map(|k| 0.5 * self.log_coeff_sq(k)).collect()
    }
}

/// Gaussian-type envelope `φ_ρ` dominating `|K_ρ(z, w)|` on a restricted domain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeSpec {
    pub space: SpaceKind,
    pub rho: f64,
    /// `R`: `|z| ≤ R < 1` on the disk, `|z|, |w| ≤ R` on the sphere; unused
    /// for the plane.
    pub restriction_radius: f64,
}

impl EnvelopeSpec {
    pub fn new(space: SpaceKind, rho: f64, restriction_radius: f64) -> Result<Self> {
        match space {
            SpaceKind::Plane => {
                if !(rho > 0.0) {
                    return Err(Error::InvalidParameter(format!("ρ must be positive, got {rho}")));
                }
            }
            _ => {
                if !(rho >= 2.0) {
                    return Err(Error::InvalidParameter(format!("envelope needs ρ ≥ 2, got {rho}")));
                }
            }
        }
        if space == SpaceKind::Hyperbolic && !(restriction_radius >= 0.0 && restriction_radius < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "hyperbolic restriction radius must lie in [0, 1), got {restriction_radius}"
            )));
        }
        if space == SpaceKind::Sphere && !(restriction_radius >= 0.0 && restriction_radius.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "sphere restriction radius must be finite, got {restriction_radius}"
            )));
        }
        Ok(Self { space, rho, restriction_radius })
    }

    /// `φ_ρ(s)`.
    pub fn envelope(&self, s: Complex64) -> f64 {
        let d2 = s.norm_sqr();
        let rho = self.rho;
        let r = self.restriction_radius;
        match self.space {
            SpaceKind::Plane => rho / PI * (-rho * d2 / 2.0).exp(),
            SpaceKind::Hyperbolic => rho / ((1.0 - r) * (1.0 - r)) * (-(rho - 1.0) * d2 / 8.0).exp(),
            SpaceKind::Sphere => {
                let b = (1.0 + r * r).powi(2);
                rho * (-(rho - 1.0) * d2 / (2.0 * b)).exp()
            }
        }
    }
}
