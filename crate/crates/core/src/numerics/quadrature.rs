//! Adaptive Gauss–Legendre quadrature in one, two and four real dimensions.
//!
//! Every routine returns an [`Estimate`] carrying an error bound obtained by
//! comparing two resolutions; callers check the bound, not just the flag.

use std::collections::BinaryHeap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::SpaceKind;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    /// Gauss points per panel.
    pub base_order: usize,
}

impl QuadratureConfig {
    pub fn one_d() -> Self {
        Self { rel_tol: 1e-10, abs_tol: 1e-14, max_subdivisions: 4000, base_order: 15 }
    }

    pub fn two_d() -> Self {
        Self { rel_tol: 1e-8, abs_tol: 1e-12, max_subdivisions: 2000, base_order: 15 }
    }

    pub fn pair() -> Self {
        Self { rel_tol: 1e-6, abs_tol: 1e-10, max_subdivisions: 3, base_order: 8 }
    }

    pub fn with_tolerances(mut self, rel_tol: f64, abs_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }

    fn target(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self::one_d()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub converged: bool,
}

impl Estimate {
    /// The value, or [`Error::Unconverged`] when refinement ran out.
    pub fn into_result(self) -> Result<f64> {
        if self.converged {
            Ok(self.value)
        } else {
            Err(Error::Unconverged { value: self.value, error: self.error })
        }
    }

    pub fn scale(self, c: f64) -> Self {
        Self { value: c * self.value, error: c.abs() * self.error, ..self }
    }
}

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                let pn = if n == 1 { x } else { p1 };
                let pm = if n == 1 { 1.0 } else { p0 };
                dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
                let dx = pn / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            if n == 1 {
                x = 0.0;
                dp = 1.0;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n == 1 {
            weights[0] = 2.0;
        }
        Self { nodes, weights }
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let h = 0.5 * (b - a);
        let c = 0.5 * (b + a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(c + h * x))
            .sum::<f64>()
            * h
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let h = 0.5 * (b - a);
        let c = 0.5 * (b + a);
        self.nodes.iter().zip(&self.weights).map(move |(x, w)| (c + h * x, w * h))
    }
}

#[derive(Debug)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn eval_panel<F: FnMut(f64) -> f64>(gl: &GaussLegendre, f: &mut F, a: f64, b: f64) -> Panel {
    let m = 0.5 * (a + b);
    let coarse = gl.integrate(a, b, &mut *f);
    let fine = gl.integrate(a, m, &mut *f) + gl.integrate(m, b, &mut *f);
    let error = if fine.is_finite() { (fine - coarse).abs() } else { f64::INFINITY };
    Panel { a, b, value: fine, error }
}

/// Globally adaptive integration over `[breaks[0], breaks[last]]`, starting
/// from the panels delimited by `breaks`.
pub fn integrate_with_breaks<F: FnMut(f64) -> f64>(
    mut f: F,
    breaks: &[f64],
    cfg: &QuadratureConfig,
) -> Estimate {
    let gl = GaussLegendre::new(cfg.base_order);
    let mut heap: BinaryHeap<Panel> = breaks
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| eval_panel(&gl, &mut f, w[0], w[1]))
        .collect();
    let mut splits = 0;
    loop {
        let value: f64 = heap.iter().map(|p| p.value).sum();
        let error: f64 = heap.iter().map(|p| p.error).sum();
        if error <= cfg.target(value) {
            return Estimate { value, error, converged: true };
        }
        if splits >= cfg.max_subdivisions || !error.is_finite() {
            return Estimate { value, error, converged: false };
        }
        let worst = heap.pop().expect("non-empty panel set");
        let m = 0.5 * (worst.a + worst.b);
        if !(m > worst.a && m < worst.b) {
            // interval exhausted in floating point
            heap.push(Panel { error: 0.0, ..worst });
            continue;
        }
        heap.push(eval_panel(&gl, &mut f, worst.a, m));
        heap.push(eval_panel(&gl, &mut f, m, worst.b));
        splits += 1;
    }
}

/// Adaptive integral over a finite interval.
pub fn integrate_interval<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, cfg: &QuadratureConfig) -> Estimate {
    integrate_with_breaks(f, &[a, b], cfg)
}

/// Geometrically graded breakpoints clustering toward both ends of `[0, 1]`.
fn graded_unit_breaks() -> Vec<f64> {
    let mut v = vec![0.0];
    for k in (1..=10).rev() {
        v.push(0.5f64.powi(k));
    }
    for k in 2..=10 {
        v.push(1.0 - 0.5f64.powi(k));
    }
    v.push(1.0);
    v
}

/// `∫₀^{r_max} f(r) dr`; an infinite `r_max` is compactified by `r = t/(1−t)`.
pub fn integrate_radial<F: FnMut(f64) -> f64>(mut f: F, r_max: f64, cfg: &QuadratureConfig) -> Estimate {
    let breaks = graded_unit_breaks();
    if r_max.is_infinite() {
        integrate_with_breaks(
            |t| {
                let s = 1.0 - t;
                let v = f(t / s) / (s * s);
                if v.is_finite() { v } else { 0.0 }
            },
            &breaks,
            cfg,
        )
    } else {
        let scaled: Vec<f64> = breaks.iter().map(|t| t * r_max).collect();
        integrate_with_breaks(f, &scaled, cfg)
    }
}

/// Trapezoid rule on the circle, doubled until two levels agree.
fn angular<F: FnMut(f64) -> f64>(mut g: F, tol: f64) -> (f64, f64) {
    let mut n = 32usize;
    let mut sum: f64 = (0..n).map(|j| g(2.0 * PI * j as f64 / n as f64)).sum();
    let mut prev = sum * 2.0 * PI / n as f64;
    loop {
        let extra: f64 = (0..n)
            .map(|j| g(2.0 * PI * (j as f64 + 0.5) / n as f64))
            .sum();
        sum += extra;
        n *= 2;
        let cur = sum * 2.0 * PI / n as f64;
        let err = (cur - prev).abs();
        if err <= tol.max(1e-15 * cur.abs()) || n >= 8192 {
            return (cur, err);
        }
        prev = cur;
    }
}

/// `∫_{|z−center|<radius} f(z) dz` in polar coordinates: adaptive radial
/// panels, doubling trapezoid in angle. `radius` may be infinite.
pub fn integrate_disk<F: Fn(Complex64) -> f64>(
    f: F,
    center: Complex64,
    radius: f64,
    cfg: &QuadratureConfig,
) -> Estimate {
    let ang_tol = (0.01 * cfg.abs_tol).max(1e-15);
    let mut ang_err = 0.0f64;
    let est = integrate_radial(
        |r| {
            if r == 0.0 {
                return 0.0;
            }
            let (v, e) = angular(|t| f(center + Complex64::from_polar(r, t)), ang_tol.max(1e-3 * cfg.rel_tol * v_scale(r)));
            ang_err = ang_err.max(e * r);
            r * v
        },
        radius,
        cfg,
    );
    let extent = if radius.is_finite() { radius } else { 1.0 };
    Estimate { error: est.error + ang_err * extent, ..est }
}

fn v_scale(r: f64) -> f64 {
    r.max(1e-3)
}

/// Outer region and inner neighbourhood of a pair integral
/// `∫∫ f(z, w) dν(z) dν(w)` in invariant coordinates.
///
/// `z` ranges over the chart disk `|z| < outer_radius`; `w = T_z⁻¹(u)` where
/// `T_z` maps `z` to the origin and `u` ranges over the invariant ball of
/// radius `inner_scale · inner_extent`. For the plane this is exactly
/// `w = z + ρ^{−1/2} w′` with `|w′| < inner_extent`.
#[derive(Clone, Debug, PartialEq)]
pub struct PairDomain {
    pub space: SpaceKind,
    pub outer_radius: f64,
    pub inner_scale: f64,
    pub inner_extent: f64,
    /// Chart radii where the integrand may lose smoothness.
    pub outer_breaks: Vec<f64>,
}

impl PairDomain {
    fn jacobian(space: SpaceKind, d: f64) -> f64 {
        match space {
            SpaceKind::Plane => d,
            SpaceKind::Sphere => 0.5 * (2.0 * d).sin(),
            SpaceKind::Hyperbolic => 0.5 * (2.0 * d).sinh(),
        }
    }
}

fn panel_nodes(gl: &GaussLegendre, breaks: &[f64], per_gap: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let h = (b - a) / per_gap as f64;
        for p in 0..per_gap {
            out.extend(gl.mapped(a + p as f64 * h, a + (p + 1) as f64 * h));
        }
    }
    out
}

fn pair_level<F: Fn(Complex64, Complex64, Complex64) -> f64 + Sync>(
    f: &F,
    dom: &PairDomain,
    gl: &GaussLegendre,
    level: u32,
) -> f64 {
    let space = dom.space;
    let mult = 1usize << level;
    let d_out = space.distance_from_origin(dom.outer_radius).min(if space == SpaceKind::Sphere {
        0.5 * PI
    } else {
        f64::INFINITY
    });
    let mut breaks: Vec<f64> = dom
        .outer_breaks
        .iter()
        .map(|&r| space.distance_from_origin(r))
        .filter(|&d| d > 0.0 && d < d_out)
        .collect();
    breaks.push(0.0);
    breaks.push(d_out);
    breaks.sort_by(f64::total_cmp);
    let outer_r = panel_nodes(gl, &breaks, 6 * mult);
    let delta_max = dom.inner_scale * dom.inner_extent;
    let delta_max = if space == SpaceKind::Sphere { delta_max.min(0.5 * PI) } else { delta_max };
    let inner_r = panel_nodes(gl, &[0.0, delta_max], 6 * mult);
    let n_outer_t = 16 * mult;
    let n_inner_t = 32 * mult;
    let inner: Vec<(Complex64, f64)> = inner_r
        .iter()
        .flat_map(|&(d, w)| {
            let r = space.radius_at_distance(d);
            let jw = w * PairDomain::jacobian(space, d) * 2.0 * PI / n_inner_t as f64;
            (0..n_inner_t).map(move |j| {
                (Complex64::from_polar(r, 2.0 * PI * (j as f64 + 0.5) / n_inner_t as f64), jw)
            })
        })
        .collect();

    let outer_node = |&(d, w): &(f64, f64)| -> f64 {
        let r = space.radius_at_distance(d);
        let jw = w * PairDomain::jacobian(space, d) * 2.0 * PI / n_outer_t as f64;
        let mut acc = 0.0;
        for j in 0..n_outer_t {
            let z = Complex64::from_polar(r, 2.0 * PI * j as f64 / n_outer_t as f64);
            let Ok(t) = space.from_origin(z) else { continue };
            let mut s = 0.0;
            for &(u, uw) in &inner {
                if let Ok(w) = t.apply(u) {
                    s += uw * f(z, w, u);
                }
            }
            acc += s;
        }
        jw * acc
    };

    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let parts: Vec<f64> = outer_r.par_iter().map(outer_node).collect();
        parts.iter().sum()
    }
    #[cfg(not(feature = "parallel"))]
    {
        outer_r.iter().map(outer_node).sum()
    }
}

/// Four-dimensional pair integral over a [`PairDomain`]; the level is doubled
/// in every direction until two successive levels agree (at most
/// `cfg.max_subdivisions` levels).
pub fn integrate_pair<F: Fn(Complex64, Complex64) -> f64 + Sync>(
    f: F,
    dom: &PairDomain,
    cfg: &QuadratureConfig,
) -> Estimate {
    integrate_pair_local(|z, w, _| f(z, w), dom, cfg)
}

/// As [`integrate_pair`], with the integrand also receiving the local
/// coordinate `u = T_z(w)`, so `|u|` fixes the invariant distance of `(z, w)`.
pub fn integrate_pair_local<F: Fn(Complex64, Complex64, Complex64) -> f64 + Sync>(
    f: F,
    dom: &PairDomain,
    cfg: &QuadratureConfig,
) -> Estimate {
    let gl = GaussLegendre::new(cfg.base_order.max(2));
    let mut prev = pair_level(&f, dom, &gl, 0);
    let levels = cfg.max_subdivisions.max(2) as u32;
    let mut last = Estimate { value: prev, error: f64::INFINITY, converged: false };
    for level in 1..levels {
        let cur = pair_level(&f, dom, &gl, level);
        let error = (cur - prev).abs();
        last = Estimate { value: cur, error, converged: error <= cfg.target(cur) };
        if last.converged {
            break;
        }
        prev = cur;
    }
    last
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        for n in 1..25 {
            let gl = GaussLegendre::new(n);
            for deg in 0..(2 * n) {
                let v = gl.integrate(-1.0, 1.0, |x| x.powi(deg as i32));
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((v - exact).abs() < 1e-13, "n={n} deg={deg}: {v} vs {exact}");
            }
        }
    }

    #[test]
    fn radial_examples() {
        let cfg = QuadratureConfig::one_d();
        let e = integrate_radial(|r| 2.0 * PI * r, 1.0, &cfg);
        assert!(e.converged);
        assert_relative_eq!(e.value, PI, max_relative = 1e-12);
        let e = integrate_radial(|r| 2.0 * PI * r * (-r * r).exp(), f64::INFINITY, &cfg);
        assert!(e.converged && e.error < 1e-9);
        assert_relative_eq!(e.value, PI, max_relative = 1e-10);
        let e = integrate_radial(|r| 2.0 * PI * r / (1.0 + r * r).powi(2), f64::INFINITY, &cfg);
        assert_relative_eq!(e.value, PI, max_relative = 1e-10);
    }

    #[test]
    fn compactified_agrees_with_truncated() {
        let cfg = QuadratureConfig::one_d();
        for a in [0.5, 3.0, 40.0] {
            let inf = integrate_radial(|r| r * r * (-a * r * r).exp(), f64::INFINITY, &cfg).value;
            let cut = integrate_radial(|r| r * r * (-a * r * r).exp(), 12.0, &cfg).value;
            assert_relative_eq!(inf, cut, max_relative = 1e-8);
        }
    }

    #[test]
    fn unconverged_is_flagged() {
        let cfg = QuadratureConfig { max_subdivisions: 2, ..QuadratureConfig::one_d() };
        let e = integrate_interval(|x| (1.0 / x).sin() / x.sqrt(), 1e-9, 1.0, &cfg);
        assert!(!e.converged);
        assert!(e.into_result().is_err());
    }

    #[test]
    fn disk_examples() {
        let cfg = QuadratureConfig::two_d();
        let o = Complex64::new(0.0, 0.0);
        let e = integrate_disk(|_| 1.0, o, 1.0, &cfg);
        assert_relative_eq!(e.value, PI, max_relative = 1e-12);
        // Dirichlet energy of (1−|z|²)⁴: |∇f|² = 64 r² (1−r²)⁶
        let e = integrate_disk(
            |z| {
                let s = z.norm_sqr();
                if s >= 1.0 { 0.0 } else { 64.0 * s * (1.0 - s).powi(6) }
            },
            o,
            1.0,
            &cfg,
        );
        assert!(e.error < 1e-8);
        assert_relative_eq!(e.value, 8.0 * PI / 7.0, max_relative = 1e-10);
        assert_relative_eq!(e.value, 3.590392, epsilon = 1e-6);
        let e = integrate_disk(|z| (z.powi(2) * z.conj().powi(3)).re, o, 1.0, &cfg);
        assert!(e.value.abs() < 1e-12);
        let e = integrate_disk(|z| (-z.norm_sqr()).exp(), Complex64::new(3.0, -1.0), f64::INFINITY, &cfg);
        assert_relative_eq!(e.value, PI, max_relative = 1e-8);
    }

    #[test]
    fn pair_inner_gaussian_mass() {
        // ∫ |K(z,w)|² dw for the plane kernel at ρ = 16 equals ρ/π
        let rho: f64 = 16.0;
        let dom = PairDomain {
            space: SpaceKind::Plane,
            outer_radius: 1.0,
            inner_scale: rho.powf(-0.5),
            inner_extent: 7.0,
            outer_breaks: vec![],
        };
        let k2 = |z: Complex64, w: Complex64| (rho / PI).powi(2) * (-rho * (z - w).norm_sqr()).exp();
        let e = integrate_pair(k2, &dom, &QuadratureConfig::pair());
        // outer area π, inner mass ρ/π
        assert!(e.converged);
        assert_relative_eq!(e.value, rho, max_relative = 1e-6);
    }

    #[test]
    fn pair_symmetric_integrand_is_order_independent() {
        let rho: f64 = 9.0;
        let g = |z: Complex64| (-4.0 * (z - Complex64::new(0.2, 0.1)).norm_sqr()).exp();
        let dom = PairDomain {
            space: SpaceKind::Plane,
            outer_radius: 5.0,
            inner_scale: rho.powf(-0.5),
            inner_extent: 7.0,
            outer_breaks: vec![],
        };
        let cfg = QuadratureConfig::pair();
        let k2 = |z: Complex64, w: Complex64| (-rho * (z - w).norm_sqr()).exp();
        let a = integrate_pair(|z, w| g(z) * (1.0 + g(w)) * k2(z, w), &dom, &cfg).value;
        let b = integrate_pair(|z, w| g(w) * (1.0 + g(z)) * k2(z, w), &dom, &cfg).value;
        assert!(((a - b) / a).abs() < 1e-8, "{a} vs {b}");
    }
}
