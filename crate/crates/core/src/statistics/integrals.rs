//! Linear statistics and the quadrature side of their moments: means,
//! Sobolev and `L¹` norms, the symmetrized variance integral and `α(ρ)`.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::test_functions::TestFunction;
use crate::error::{Error, Result};
use crate::geometry::SpaceKind;
use crate::kernels::KernelSpec;
use crate::numerics::{integrate_disk, integrate_pair_local, integrate_radial, Estimate, PairDomain, QuadratureConfig};
use crate::sampler::PointSample;

/// `Σ_{z ∈ Z} f(z)`.
pub fn linear_statistic(sample: &PointSample, f: &TestFunction) -> f64 {
    sample.points.iter().map(|&z| f.value(z)).sum()
}

fn integration_radius(space: SpaceKind, f: &TestFunction) -> Result<f64> {
    let r = f.support_radius().min(space.chart_radius());
    if space != SpaceKind::Sphere && !r.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "{} is not integrable on the {} model",
            f,
            space.name()
        )));
    }
    Ok(r)
}

fn origin() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

/// `∫ f dν`.
pub fn integral_nu(f: &TestFunction, space: SpaceKind, cfg: &QuadratureConfig) -> Result<Estimate> {
    let r = integration_radius(space, f)?;
    Ok(integrate_disk(|z| f.value(z) * space.density_at_radius(z.norm()), origin(), r, cfg))
}

/// The mean `(ρ/π) ∫ f dν` of `Σf`.
pub fn mean_prediction(spec: &KernelSpec, f: &TestFunction) -> Result<Estimate> {
    Ok(integral_nu(f, spec.space, &QuadratureConfig::two_d())?.scale(spec.rho / PI))
}

/// `Σf − (ρ/π) ∫ f dν`.
pub fn centered_statistic(sample: &PointSample, f: &TestFunction) -> Result<f64> {
    Ok(linear_statistic(sample, f) - mean_prediction(&sample.spec, f)?.value)
}

/// Centered statistics of many samples of the same process.
pub fn centered_statistics(samples: &[PointSample], f: &TestFunction) -> Result<Vec<f64>> {
    let Some(first) = samples.first() else {
        return Ok(vec![]);
    };
    let mean = mean_prediction(&first.spec, f)?.value;
    Ok(samples.iter().map(|s| linear_statistic(s, f) - mean).collect())
}

/// `‖f‖²_{H¹} = ∫ |∇f|² dz`.
pub fn h1_norm_sq(f: &TestFunction) -> Result<Estimate> {
    if !f.support_radius().is_finite() {
        return Ok(Estimate { value: 0.0, error: 0.0, converged: true });
    }
    Ok(integrate_disk(
        |z| {
            let g = f.gradient(z);
            g[0] * g[0] + g[1] * g[1]
        },
        origin(),
        f.support_radius(),
        &QuadratureConfig::two_d(),
    ))
}

/// `∫ |∇_ι f|² dν` with the intrinsic gradient of `space`.
pub fn h1_norm_sq_intrinsic(f: &TestFunction, space: SpaceKind) -> Result<Estimate> {
    if !f.support_radius().is_finite() {
        return Ok(Estimate { value: 0.0, error: 0.0, converged: true });
    }
    let r = integration_radius(space, f)?;
    Ok(integrate_disk(
        |z| {
            let g = space.intrinsic_gradient_norm(f.gradient(z), z).unwrap_or(0.0);
            g * g * space.density_at_radius(z.norm())
        },
        origin(),
        r,
        &QuadratureConfig::two_d(),
    ))
}

/// `∫ |f| dν`.
pub fn l1_norm_invariant(f: &TestFunction, space: SpaceKind) -> Result<Estimate> {
    let r = integration_radius(space, f)?;
    Ok(integrate_disk(
        |z| f.value(z).abs() * space.density_at_radius(z.norm()),
        origin(),
        r,
        &QuadratureConfig::two_d(),
    ))
}

/// Limiting variance `‖f‖²_{H¹} / (4π)`.
pub fn asymptotic_variance(f: &TestFunction) -> Result<Estimate> {
    Ok(h1_norm_sq(f)?.scale(1.0 / (4.0 * PI)))
}

/// Invariant distances beyond `extent/√ρ` carry less than `e^{−extent²}` of
/// the squared kernel.
const KERNEL_EXTENT: f64 = 6.5;

/// `½ ∫∫ (f(z) − f(w))² |K(z,w)|² dz dw = ½ ∫∫ (f(z) − f(w))² |K^ι(z,w)|² dν dν`,
/// with `w` expressed in local invariant coordinates around `z`.
pub fn variance_quadrature(spec: &KernelSpec, f: &TestFunction, cfg: &QuadratureConfig) -> Result<Estimate> {
    let space = spec.space;
    let support = f.support_radius();
    if !support.is_finite() {
        // constant functions have no fluctuations
        return Ok(Estimate { value: 0.0, error: 0.0, converged: true });
    }
    space.check(Complex64::new(support, 0.0))?;
    let inner_scale = 1.0 / spec.rho.max(1.0).sqrt();
    let delta = inner_scale * KERNEL_EXTENT;
    let outer_radius = space.radius_at_distance(space.distance_from_origin(support) + delta);
    let dom = PairDomain {
        space,
        outer_radius: outer_radius.min(space.chart_radius()),
        inner_scale,
        inner_extent: KERNEL_EXTENT,
        outer_breaks: vec![support],
    };
    let spec = *spec;
    let f = *f;
    Ok(integrate_pair_local(
        move |z, w, u| {
            let d = f.value(z) - f.value(w);
            if d == 0.0 {
                return 0.0;
            }
            0.5 * d * d * spec.invariant_profile_sq(u.norm())
        },
        &dom,
        cfg,
    ))
}

/// `α(ρ) = (π/η(0)) ∫₀^{R_Λ} r s(0,r)² |K(0,r)|² dr`, `s` the invariant distance.
pub fn alpha(spec: &KernelSpec) -> Result<Estimate> {
    let space = spec.space;
    let spec = spec.to_full();
    let eta0 = space.density_at_radius(0.0);
    let est = integrate_radial(
        |r| {
            let d = space.distance_from_origin(r);
            // |K|² = |K^ι|² η(0) η(r)
            let k2 = spec.invariant_profile_sq(r) * eta0 * space.density_at_radius(r);
            let v = r * d * d * k2;
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        space.chart_radius(),
        &QuadratureConfig::one_d(),
    );
    Ok(est.scale(PI / eta0))
}
