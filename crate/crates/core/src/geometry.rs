//! The three symmetric spaces, each in a single complex chart.
//!
//! The sphere lives in the chart `C` (the point at infinity is never
//! represented) and the hyperbolic plane is the open unit disk. Each space
//! carries its invariant density `η = dν/dz`, the conformal factor `ψ` with
//! `η ψ² = 1`, the invariant distance, and its Möbius isometry group.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpaceKind {
    Plane,
    Sphere,
    Hyperbolic,
}

impl SpaceKind {
    pub const ALL: [SpaceKind; 3] = [SpaceKind::Plane, SpaceKind::Sphere, SpaceKind::Hyperbolic];

    pub fn name(self) -> &'static str {
        match self {
            SpaceKind::Plane => "plane",
            SpaceKind::Sphere => "sphere",
            SpaceKind::Hyperbolic => "hyperbolic",
        }
    }

    /// Radius of the chart: infinite for the plane and sphere, 1 for the disk.
    pub fn chart_radius(self) -> f64 {
        match self {
            SpaceKind::Hyperbolic => 1.0,
            _ => f64::INFINITY,
        }
    }

    /// Total invariant mass of the space (`π` for the sphere chart).
    pub fn total_measure(self) -> f64 {
        match self {
            SpaceKind::Sphere => PI,
            _ => f64::INFINITY,
        }
    }

    pub fn contains(self, z: Complex64) -> bool {
        if !(z.re.is_finite() && z.im.is_finite()) {
            return false;
        }
        match self {
            SpaceKind::Hyperbolic => z.norm_sqr() < 1.0,
            _ => true,
        }
    }

    pub fn check(self, z: Complex64) -> Result<()> {
        if self.contains(z) {
            Ok(())
        } else {
            Err(Error::Domain { space: self, z })
        }
    }

    /// `η(|z|)` as a function of the modulus, without domain checks.
    pub(crate) fn density_at_radius(self, r: f64) -> f64 {
        let psi = self.conformal_at_radius(r);
        1.0 / (psi * psi)
    }

    pub(crate) fn conformal_at_radius(self, r: f64) -> f64 {
        match self {
            SpaceKind::Plane => 1.0,
            SpaceKind::Sphere => 1.0 + r * r,
            SpaceKind::Hyperbolic => 1.0 - r * r,
        }
    }

    /// `η(z) = dν/dz`.
    pub fn invariant_density(self, z: Complex64) -> Result<f64> {
        self.check(z)?;
        Ok(self.density_at_radius(z.norm()))
    }

    /// `ψ(z)`: 1, `1 + |z|²` or `1 − |z|²`.
    pub fn conformal_factor(self, z: Complex64) -> Result<f64> {
        self.check(z)?;
        Ok(self.conformal_at_radius(z.norm()))
    }

    /// Invariant distance from the origin to a point of modulus `r`.
    pub fn distance_from_origin(self, r: f64) -> f64 {
        match self {
            SpaceKind::Plane => r,
            SpaceKind::Sphere => r.atan(),
            SpaceKind::Hyperbolic => r.atanh(),
        }
    }

    /// Inverse of [`SpaceKind::distance_from_origin`]: the chart modulus at
    /// invariant distance `d` from the origin (infinite past the antipode).
    pub fn radius_at_distance(self, d: f64) -> f64 {
        match self {
            SpaceKind::Plane => d,
            SpaceKind::Sphere => {
                if d >= 0.5 * PI {
                    f64::INFINITY
                } else {
                    d.tan()
                }
            }
            SpaceKind::Hyperbolic => d.tanh(),
        }
    }

    /// Geodesic distance of the metric `|dz|/ψ(z)`.
    pub fn invariant_distance(self, z: Complex64, w: Complex64) -> Result<f64> {
        self.check(z)?;
        self.check(w)?;
        let t = self.to_origin(z)?;
        let u = t.apply(w)?;
        Ok(self.distance_from_origin(u.norm()))
    }

    /// The isometry `T_z` with `T_z(z) = 0`.
    pub fn to_origin(self, z: Complex64) -> Result<Isometry> {
        self.check(z)?;
        Ok(match self {
            SpaceKind::Plane => Isometry::Plane {
                rotation: Complex64::new(1.0, 0.0),
                shift: -z,
            },
            SpaceKind::Sphere => {
                let s = (1.0 + z.norm_sqr()).sqrt();
                Isometry::Sphere {
                    alpha: Complex64::new(1.0 / s, 0.0),
                    beta: -z / s,
                }
            }
            SpaceKind::Hyperbolic => Isometry::Hyperbolic {
                rotation: Complex64::new(1.0, 0.0),
                center: z,
            },
        })
    }

    /// The isometry sending 0 to `z`: the inverse of [`SpaceKind::to_origin`].
    pub fn from_origin(self, z: Complex64) -> Result<Isometry> {
        Ok(self.to_origin(z)?.inverse())
    }

    /// `|∇_ι f|(z) = ψ(z) |∇f(z)|` for a planar gradient.
    pub fn intrinsic_gradient_norm(self, planar_gradient: [f64; 2], z: Complex64) -> Result<f64> {
        let psi = self.conformal_factor(z)?;
        Ok(psi * planar_gradient[0].hypot(planar_gradient[1]))
    }
}

/// A Möbius map preserving the invariant measure of its space.
///
/// * plane: `z ↦ rotation·z + shift` with `|rotation| = 1`
/// * sphere: `z ↦ (αz + β)/(−β̄z + ᾱ)` with `|α|² + |β|² = 1`
/// * hyperbolic: `z ↦ rotation·(z − center)/(1 − c̄enter·z)` with `|center| < 1`
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Isometry {
    Plane { rotation: Complex64, shift: Complex64 },
    Sphere { alpha: Complex64, beta: Complex64 },
    Hyperbolic { rotation: Complex64, center: Complex64 },
}

type Mobius = [[Complex64; 2]; 2];

fn mat_mul(a: &Mobius, b: &Mobius) -> Mobius {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

fn unit(c: Complex64) -> Complex64 {
    c / c.norm()
}

impl Isometry {
    pub fn identity(space: SpaceKind) -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        match space {
            SpaceKind::Plane => Isometry::Plane { rotation: one, shift: zero },
            SpaceKind::Sphere => Isometry::Sphere { alpha: one, beta: zero },
            SpaceKind::Hyperbolic => Isometry::Hyperbolic { rotation: one, center: zero },
        }
    }

    pub fn plane(theta: f64, shift: Complex64) -> Self {
        Isometry::Plane {
            rotation: Complex64::from_polar(1.0, theta),
            shift,
        }
    }

    pub fn sphere(alpha: Complex64, beta: Complex64) -> Result<Self> {
        let n = alpha.norm_sqr() + beta.norm_sqr();
        if !((n - 1.0).abs() <= 1e-12) {
            return Err(Error::InvalidParameter(format!(
                "sphere isometry needs |α|² + |β|² = 1, got {n}"
            )));
        }
        Ok(Isometry::Sphere { alpha, beta })
    }

    pub fn hyperbolic(theta: f64, center: Complex64) -> Result<Self> {
        if !(center.norm_sqr() < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "hyperbolic isometry needs |a| < 1, got |a| = {}",
                center.norm()
            )));
        }
        Ok(Isometry::Hyperbolic {
            rotation: Complex64::from_polar(1.0, theta),
            center,
        })
    }

    /// A random isometry; displacements are drawn with modulus below `spread`
    /// (clamped to the unit disk for the hyperbolic plane).
    pub fn random<R: Rng + ?Sized>(space: SpaceKind, spread: f64, rng: &mut R) -> Self {
        let theta = rng.random::<f64>() * 2.0 * PI;
        let r = spread * rng.random::<f64>().sqrt();
        let phi = rng.random::<f64>() * 2.0 * PI;
        let d = Complex64::from_polar(r, phi);
        match space {
            SpaceKind::Plane => Isometry::plane(theta, d),
            SpaceKind::Sphere => {
                let s = (1.0 + d.norm_sqr()).sqrt();
                let rot = Complex64::from_polar(1.0, 0.5 * theta);
                Isometry::Sphere {
                    alpha: rot / s,
                    beta: rot * d / s,
                }
            }
            SpaceKind::Hyperbolic => {
                let r = r.min(0.999);
                Isometry::Hyperbolic {
                    rotation: Complex64::from_polar(1.0, theta),
                    center: Complex64::from_polar(r, phi),
                }
            }
        }
    }

    pub fn space(&self) -> SpaceKind {
        match self {
            Isometry::Plane { .. } => SpaceKind::Plane,
            Isometry::Sphere { .. } => SpaceKind::Sphere,
            Isometry::Hyperbolic { .. } => SpaceKind::Hyperbolic,
        }
    }

    fn matrix(&self) -> Mobius {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        match *self {
            Isometry::Plane { rotation, shift } => [[rotation, shift], [zero, one]],
            Isometry::Sphere { alpha, beta } => [[alpha, beta], [-beta.conj(), alpha.conj()]],
            Isometry::Hyperbolic { rotation, center } => {
                [[rotation, -rotation * center], [-center.conj(), one]]
            }
        }
    }

    fn from_matrix(space: SpaceKind, m: &Mobius) -> Self {
        match space {
            SpaceKind::Plane => {
                let d = m[1][1];
                Isometry::Plane {
                    rotation: unit(m[0][0] / d),
                    shift: m[0][1] / d,
                }
            }
            SpaceKind::Sphere => {
                // SU(2) up to a common phase and rounding
                let n = (m[0][0].norm_sqr() + m[0][1].norm_sqr()).sqrt();
                let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
                let phase = (det / (n * n)).sqrt();
                Isometry::Sphere {
                    alpha: m[0][0] / (n * phase),
                    beta: m[0][1] / (n * phase),
                }
            }
            SpaceKind::Hyperbolic => {
                let s = m[1][1];
                Isometry::Hyperbolic {
                    rotation: unit(m[0][0] / s),
                    center: -(m[1][0] / s).conj(),
                }
            }
        }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Isometry) -> Result<Isometry> {
        if self.space() != other.space() {
            return Err(Error::InvalidParameter(
                "cannot compose isometries of different spaces".into(),
            ));
        }
        Ok(Isometry::from_matrix(self.space(), &mat_mul(&self.matrix(), &other.matrix())))
    }

    pub fn inverse(&self) -> Isometry {
        let m = self.matrix();
        let inv = [[m[1][1], -m[0][1]], [-m[1][0], m[0][0]]];
        Isometry::from_matrix(self.space(), &inv)
    }

    /// Image of `z`; a vanishing denominator on the sphere is reported as
    /// [`Error::PointAtInfinity`].
    pub fn apply(&self, z: Complex64) -> Result<Complex64> {
        self.space().check(z)?;
        Ok(match *self {
            Isometry::Plane { rotation, shift } => rotation * z + shift,
            Isometry::Sphere { alpha, beta } => {
                let den = -beta.conj() * z + alpha.conj();
                if den.norm() <= f64::EPSILON * (1.0 + z.norm()) {
                    return Err(Error::PointAtInfinity { z });
                }
                (alpha * z + beta) / den
            }
            Isometry::Hyperbolic { rotation, center } => {
                rotation * (z - center) / (Complex64::new(1.0, 0.0) - center.conj() * z)
            }
        })
    }

    /// Complex derivative `T'(z)`; the Jacobian of `T` is `|T'(z)|²`.
    pub fn derivative(&self, z: Complex64) -> Result<Complex64> {
        self.space().check(z)?;
        let m = self.matrix();
        let den = m[1][0] * z + m[1][1];
        if den.norm() <= f64::EPSILON * (1.0 + z.norm()) {
            return Err(Error::PointAtInfinity { z });
        }
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        Ok(det / (den * den))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn densities() {
        assert_eq!(SpaceKind::Plane.invariant_density(c(7.0, 2.0)).unwrap(), 1.0);
        assert_eq!(SpaceKind::Sphere.invariant_density(c(0.0, 0.0)).unwrap(), 1.0);
        assert_relative_eq!(
            SpaceKind::Hyperbolic.invariant_density(c(0.6, 0.0)).unwrap(),
            2.44140625,
            max_relative = 1e-14
        );
        assert!(matches!(
            SpaceKind::Hyperbolic.invariant_density(c(1.0, 0.0)),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn conformal_factors() {
        assert_eq!(SpaceKind::Plane.conformal_factor(c(3.0, -9.0)).unwrap(), 1.0);
        assert_eq!(SpaceKind::Sphere.conformal_factor(c(1.0, 0.0)).unwrap(), 2.0);
        assert_eq!(SpaceKind::Hyperbolic.conformal_factor(c(0.0, 0.0)).unwrap(), 1.0);
    }

    #[test]
    fn density_times_conformal_squared_is_one() {
        for space in SpaceKind::ALL {
            for i in 0..40 {
                for j in 0..40 {
                    let z = c(-0.95 + 0.0475 * i as f64, -0.95 + 0.0475 * j as f64);
                    if !space.contains(z) {
                        continue;
                    }
                    let eta = space.invariant_density(z).unwrap();
                    let psi = space.conformal_factor(z).unwrap();
                    assert!((eta * psi * psi - 1.0).abs() <= 1e-14);
                }
            }
        }
    }

    fn trapezoid_distance(space: SpaceKind, r: f64) -> f64 {
        // composite Simpson on ∫₀ʳ dt/ψ(t)
        let n = 2000;
        let h = r / n as f64;
        let g = |t: f64| 1.0 / space.conformal_at_radius(t);
        let mut s = g(0.0) + g(r);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * g(i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn distances() {
        assert_relative_eq!(
            SpaceKind::Plane.invariant_distance(c(0.0, 0.0), c(3.0, 4.0)).unwrap(),
            5.0
        );
        let d = SpaceKind::Sphere.invariant_distance(c(0.0, 0.0), c(1.0, 0.0)).unwrap();
        assert_relative_eq!(d, trapezoid_distance(SpaceKind::Sphere, 1.0), max_relative = 1e-12);
        assert_relative_eq!(d, 0.785398, epsilon = 1e-6);
        let d = SpaceKind::Hyperbolic
            .invariant_distance(c(0.0, 0.0), c(0.5, 0.0))
            .unwrap();
        assert_relative_eq!(d, trapezoid_distance(SpaceKind::Hyperbolic, 0.5), max_relative = 1e-12);
        assert_relative_eq!(d, 0.549306, epsilon = 1e-6);
    }

    #[test]
    fn distance_is_increasing_in_radius() {
        for space in SpaceKind::ALL {
            let mut last = -1.0;
            for i in 0..999 {
                let r = i as f64 / 1000.0;
                let d = space.distance_from_origin(r);
                assert!(d > last);
                last = d;
            }
        }
    }

    #[test]
    fn isometry_examples() {
        let z = c(0.3, -0.7);
        for space in SpaceKind::ALL {
            assert_eq!(Isometry::identity(space).apply(z).unwrap(), z);
        }
        let t = Isometry::hyperbolic(0.0, c(0.5, 0.0)).unwrap();
        assert!(t.apply(c(0.5, 0.0)).unwrap().norm() < 1e-15);
        let t = Isometry::sphere(c(0.0, 0.0), c(1.0, 0.0)).unwrap();
        assert_relative_eq!(t.apply(c(2.0, 0.0)).unwrap().re, -0.5);
        let t = Isometry::sphere(c(0.6, 0.0), c(0.8, 0.0)).unwrap();
        assert!(matches!(
            t.apply(c(0.75, 0.0)),
            Err(Error::PointAtInfinity { .. })
        ));
    }

    #[test]
    fn to_origin_and_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for space in SpaceKind::ALL {
            for _ in 0..50 {
                let r = 0.9 * rng.random::<f64>();
                let z = Complex64::from_polar(r, 6.0 * rng.random::<f64>());
                let t = space.to_origin(z).unwrap();
                assert!(t.apply(z).unwrap().norm() < 1e-14);
                let back = space.from_origin(z).unwrap().apply(c(0.0, 0.0)).unwrap();
                assert!((back - z).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn composition_and_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for space in SpaceKind::ALL {
            for _ in 0..50 {
                let a = Isometry::random(space, 0.8, &mut rng);
                let b = Isometry::random(space, 0.8, &mut rng);
                let ab = a.compose(&b).unwrap();
                assert_eq!(ab.space(), space);
                let z = Complex64::from_polar(0.5 * rng.random::<f64>(), 1.0);
                let lhs = ab.apply(z).unwrap();
                let rhs = a.apply(b.apply(z).unwrap()).unwrap();
                assert!((lhs - rhs).norm() < 1e-12 * (1.0 + lhs.norm()));
                let id = a.inverse().apply(a.apply(z).unwrap()).unwrap();
                assert!((id - z).norm() < 1e-12);
                // composite is again of canonical form
                match ab {
                    Isometry::Sphere { alpha, beta } => {
                        assert!((alpha.norm_sqr() + beta.norm_sqr() - 1.0).abs() < 1e-12)
                    }
                    Isometry::Hyperbolic { rotation, center } => {
                        assert!((rotation.norm() - 1.0).abs() < 1e-12);
                        assert!(center.norm() < 1.0);
                    }
                    Isometry::Plane { rotation, .. } => assert!((rotation.norm() - 1.0).abs() < 1e-12),
                }
            }
        }
    }

    #[test]
    fn distance_is_isometry_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for space in SpaceKind::ALL {
            for _ in 0..200 {
                let t = Isometry::random(space, 0.8, &mut rng);
                let z = Complex64::from_polar(0.8 * rng.random::<f64>(), 7.0 * rng.random::<f64>());
                let w = Complex64::from_polar(0.8 * rng.random::<f64>(), 7.0 * rng.random::<f64>());
                let d0 = space.invariant_distance(z, w).unwrap();
                let d1 = space
                    .invariant_distance(t.apply(z).unwrap(), t.apply(w).unwrap())
                    .unwrap();
                assert!((d0 - d1).abs() < 1e-10, "{space:?}: {d0} vs {d1}");
            }
        }
    }

    #[test]
    fn isometries_preserve_invariant_measure() {
        // ν(T(D)) = ∫_D η(T z) |T'(z)|² dz against ν(D) on small disks
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let n_r = 40;
        let n_t = 64;
        for space in SpaceKind::ALL {
            let t = Isometry::random(space, 0.7, &mut rng);
            for (cx, cy) in [(0.0, 0.0), (0.3, -0.2), (-0.5, 0.4)] {
                let center = c(cx, cy);
                let rad = 0.1;
                let (mut lhs, mut rhs) = (0.0, 0.0);
                for i in 0..n_r {
                    let r = rad * (i as f64 + 0.5) / n_r as f64;
                    for j in 0..n_t {
                        let z = center + Complex64::from_polar(r, 2.0 * PI * j as f64 / n_t as f64);
                        let w = r * (rad / n_r as f64) * (2.0 * PI / n_t as f64);
                        let tz = t.apply(z).unwrap();
                        let jac = t.derivative(z).unwrap().norm_sqr();
                        lhs += w * space.invariant_density(tz).unwrap() * jac;
                        rhs += w * space.invariant_density(z).unwrap();
                    }
                }
                assert_relative_eq!(lhs, rhs, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn intrinsic_gradient() {
        assert_eq!(
            SpaceKind::Plane.intrinsic_gradient_norm([3.0, 4.0], c(9.0, 1.0)).unwrap(),
            5.0
        );
        assert_eq!(
            SpaceKind::Sphere.intrinsic_gradient_norm([1.0, 0.0], c(1.0, 0.0)).unwrap(),
            2.0
        );
    }
}
