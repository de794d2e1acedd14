//! Moments of linear statistics through traces of Gram matrices.
//!
//! For a rank-`n` projection kernel `Σ ψ_k(z) conj(ψ_k(w))` every cyclic
//! integral `∫ Π f_i(x_i) K(x_i, x_{i+1})` is `tr(F_1 ⋯ F_m)` with
//! `(F)_{ab} = ∫ conj(ψ_a) f ψ_b dz`. With `f(z) = R(|z|) cos^j(m arg z)` only
//! the diagonals `b − a ∈ {jm, (j−2)m, …, −jm}` survive, so matrices are
//! stored by diagonal.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use super::test_functions::{Separable, TestFunction};
use crate::combinatorics::cumulant_terms;
use crate::error::{Error, Result};
use crate::geometry::SpaceKind;
use crate::kernels::KernelSpec;
use crate::numerics::{Estimate, GaussLegendre};
use crate::sampler::truncation_choice;

/// Square matrix stored as a map from diagonal offset `d` to the entries
/// `M[a][a+d]`, indexed by `a` (zero where `a + d` is out of range).
#[derive(Clone, Debug, PartialEq)]
pub struct Banded {
    pub n: usize,
    pub diagonals: BTreeMap<i64, Vec<f64>>,
}

impl Banded {
    pub fn zeros(n: usize) -> Self {
        Self { n, diagonals: BTreeMap::new() }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        m.diagonals.insert(0, vec![1.0; n]);
        m
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        let d = b as i64 - a as i64;
        self.diagonals.get(&d).map_or(0.0, |v| v[a])
    }

    pub fn trace(&self) -> f64 {
        self.diagonals.get(&0).map_or(0.0, |v| v.iter().sum())
    }

    pub fn mul(&self, o: &Banded) -> Banded {
        assert_eq!(self.n, o.n);
        let n = self.n as i64;
        let mut out = Banded::zeros(self.n);
        for (&d1, v1) in &self.diagonals {
            for (&d2, v2) in &o.diagonals {
                let d = d1 + d2;
                if d.abs() >= n {
                    continue;
                }
                let dst = out.diagonals.entry(d).or_insert_with(|| vec![0.0; self.n]);
                for a in 0..n {
                    let (b, c) = (a + d1, a + d);
                    if (0..n).contains(&b) && (0..n).contains(&c) {
                        dst[a as usize] += v1[a as usize] * v2[b as usize];
                    }
                }
            }
        }
        out
    }

    /// `tr(self · o)` without forming the product.
    pub fn trace_product(&self, o: &Banded) -> f64 {
        let n = self.n as i64;
        let mut acc = 0.0;
        for (&d, v) in &self.diagonals {
            if let Some(w) = o.diagonals.get(&-d) {
                for a in 0..n {
                    let b = a + d;
                    if (0..n).contains(&b) {
                        acc += v[a as usize] * w[b as usize];
                    }
                }
            }
        }
        acc
    }

    pub fn max_abs(&self) -> f64 {
        self.diagonals.values().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Rank used by the trace route: the kernel's own rank when finite, otherwise
/// one whose intensity deficit on the support is negligible.
pub fn trace_rank(spec: &KernelSpec, support: f64) -> Result<usize> {
    if let Some(n) = spec.truncation_rank() {
        return Ok(n);
    }
    if !support.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "an unbounded support has infinite trace on the {} model",
            spec.space.name()
        )));
    }
    let eta = spec.space.invariant_density(Complex64::new(support, 0.0))?;
    truncation_choice(spec.space, spec.rho, support, 1e-16 * spec.rho / PI * eta)
}

/// Gram matrices `∫ conj(ψ_a) g ψ_b dz` for separable `g`, with radial
/// integrals in the coordinate `u` (`|z|²`, or `|z|²/(1+|z|²)` on the sphere).
pub struct TraceEngine {
    spec: KernelSpec,
    n: usize,
    lc_half: Vec<f64>,
}

struct Grid {
    u: Vec<f64>,
    w: Vec<f64>,
    ln_u: Vec<f64>,
    ln_1mu: Vec<f64>,
    u_hi: f64,
}

impl TraceEngine {
    pub fn new(spec: KernelSpec, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("rank must be positive".into()));
        }
        if let Some(r) = spec.truncation_rank() {
            if n > r {
                return Err(Error::IndexOutOfRange { k: n - 1, rank: r });
            }
        }
        Ok(Self { lc_half: spec.log_coeff_half_table(n), spec, n })
    }

    /// Engine at the trace rank for functions supported in `|z| < support`.
    pub fn for_support(spec: KernelSpec, support: f64) -> Result<Self> {
        Self::new(spec, trace_rank(&spec, support)?)
    }

    pub fn rank(&self) -> usize {
        self.n
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    fn u_of_r(&self, r: f64) -> f64 {
        match self.spec.space {
            SpaceKind::Sphere => r * r / (1.0 + r * r),
            _ => r * r,
        }
    }

    fn r_of_u(&self, u: f64) -> f64 {
        match self.spec.space {
            SpaceKind::Sphere => (u / (1.0 - u)).sqrt(),
            _ => u.sqrt(),
        }
    }

    fn grid(&self, support: f64, resolution: f64) -> Grid {
        let rho = self.spec.rho;
        let u_hi = if support.is_finite() {
            self.u_of_r(support)
        } else {
            match self.spec.space {
                SpaceKind::Plane => {
                    let n = self.n as f64;
                    (n + 12.0 * n.sqrt() + 60.0) / rho
                }
                _ => 1.0,
            }
        };
        let panels = ((4.0 * rho * u_hi * resolution).ceil() as usize).max((16.0 * resolution) as usize).max(2);
        let gl = GaussLegendre::new(15);
        let h = u_hi / panels as f64;
        let mut g = Grid { u: vec![], w: vec![], ln_u: vec![], ln_1mu: vec![], u_hi };
        for p in 0..panels {
            for (u, w) in gl.mapped(p as f64 * h, (p + 1) as f64 * h) {
                g.u.push(u);
                g.w.push(w);
                g.ln_u.push(u.ln());
                g.ln_1mu.push((-u).ln_1p());
            }
        }
        g
    }

    /// `ln` of the `u`-weight for `t = a + b`, up to the coefficients.
    fn log_weight(&self, t: usize, ln_u: f64, u: f64, ln_1mu: f64) -> f64 {
        let rho = self.spec.rho;
        let half_t = 0.5 * t as f64;
        let lu = if t == 0 { 0.0 } else { half_t * ln_u };
        lu + match self.spec.space {
            SpaceKind::Plane => -rho * u,
            SpaceKind::Sphere => (rho - 1.0 - half_t) * ln_1mu,
            SpaceKind::Hyperbolic => (rho - 1.0) * ln_1mu,
        }
    }

    fn log_weight_peak(&self, t: usize, u_hi: f64) -> f64 {
        let rho = self.spec.rho;
        let half_t = 0.5 * t as f64;
        let mode = match self.spec.space {
            SpaceKind::Plane => half_t / rho,
            SpaceKind::Sphere => {
                if rho <= 1.0 {
                    u_hi
                } else {
                    half_t / (rho - 1.0)
                }
            }
            SpaceKind::Hyperbolic => {
                if half_t + rho - 1.0 <= 0.0 {
                    0.0
                } else {
                    half_t / (half_t + rho - 1.0)
                }
            }
        };
        let u = mode.clamp(0.0, u_hi);
        let u = if u >= 1.0 { 1.0 - 1e-300 } else { u };
        let ln_u = if u > 0.0 { u.ln() } else { f64::NEG_INFINITY };
        let l = self.log_weight(t, ln_u, u, (-u).ln_1p());
        // at the end points the peak may be −∞ (e.g. u = 0 with t > 0); fall
        // back to the grid maximum
        if l.is_finite() {
            l
        } else {
            f64::NEG_INFINITY
        }
    }

    /// Gram matrix of `g` over the first `n` basis functions; `resolution`
    /// scales the number of radial panels.
    pub fn matrix_at(&self, g: &Separable, resolution: f64) -> Banded {
        let grid = self.grid(g.support, resolution);
        let radial: Vec<f64> = grid.u.iter().map(|&u| (g.radial)(self.r_of_u(u))).collect();
        let n = self.n;
        let modes = g.modes();
        let mut needed = vec![false; 2 * n];
        for &(d, _) in &modes {
            for a in 0..n as i64 {
                let b = a + d;
                if (0..n as i64).contains(&b) {
                    needed[(a + b) as usize] = true;
                }
            }
        }
        // (scale, integral) per t = a + b
        let mut moments = vec![(0.0f64, 0.0f64); 2 * n];
        for (t, m) in moments.iter_mut().enumerate() {
            if !needed[t] {
                continue;
            }
            let mut peak = self.log_weight_peak(t, grid.u_hi);
            let logs: Vec<f64> = (0..grid.u.len())
                .map(|i| self.log_weight(t, grid.ln_u[i], grid.u[i], grid.ln_1mu[i]))
                .collect();
            let grid_max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if !peak.is_finite() || grid_max > peak {
                peak = grid_max;
            }
            let mut acc = 0.0;
            for i in 0..logs.len() {
                let e = logs[i] - peak;
                if e > -60.0 && radial[i] != 0.0 {
                    acc += grid.w[i] * e.exp() * radial[i];
                }
            }
            *m = (peak, acc);
        }
        let rho = self.spec.rho;
        let mut out = Banded::zeros(n);
        for &(d, coef) in &modes {
            if d.unsigned_abs() as usize >= n {
                continue;
            }
            let mut diag = vec![0.0; n];
            for a in 0..n as i64 {
                let b = a + d;
                if !(0..n as i64).contains(&b) {
                    continue;
                }
                let (peak, integral) = moments[(a + b) as usize];
                let lc = self.lc_half[a as usize] + self.lc_half[b as usize];
                diag[a as usize] = rho * coef * (lc + peak).exp() * integral;
            }
            out.diagonals.insert(d, diag);
        }
        out
    }

    pub fn matrix(&self, g: &Separable) -> Banded {
        self.matrix_at(g, 1.0)
    }
}

/// Gram matrix of a separable function over the first `n` basis functions.
pub fn matrix_elements(spec: &KernelSpec, g: &Separable, n: usize) -> Result<Banded> {
    Ok(TraceEngine::new(*spec, n)?.matrix(g))
}

/// Dense Gram matrix of an arbitrary real function supported in
/// `|z| < support`, with the angular transform done by the trapezoid rule;
/// symmetrized to be Hermitian.
pub fn matrix_elements_general<G: Fn(Complex64) -> f64>(
    spec: &KernelSpec,
    g: G,
    support: f64,
    n: usize,
) -> Result<Vec<Vec<Complex64>>> {
    let engine = TraceEngine::new(*spec, n)?;
    let grid = engine.grid(support, 1.0);
    let n_theta = 128usize;
    let n_modes = 2 * n - 1;
    // A[i][d + n − 1] = ∫ g(r e^{iθ}) e^{idθ} dθ at node i
    let mut ang = vec![vec![Complex64::new(0.0, 0.0); n_modes]; grid.u.len()];
    for (i, row) in ang.iter_mut().enumerate() {
        let r = engine.r_of_u(grid.u[i]);
        let vals: Vec<f64> = (0..n_theta)
            .map(|j| g(Complex64::from_polar(r, 2.0 * PI * j as f64 / n_theta as f64)))
            .collect();
        for (k, slot) in row.iter_mut().enumerate() {
            let d = k as f64 - (n as f64 - 1.0);
            *slot = vals
                .iter()
                .enumerate()
                .map(|(j, v)| Complex64::from_polar(*v, d * 2.0 * PI * j as f64 / n_theta as f64))
                .sum::<Complex64>()
                * (2.0 * PI / n_theta as f64);
        }
    }
    let rho = spec.rho;
    let mut out = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for a in 0..n {
        for b in 0..n {
            let t = a + b;
            let d = b as i64 - a as i64;
            let logs: Vec<f64> = (0..grid.u.len())
                .map(|i| engine.log_weight(t, grid.ln_u[i], grid.u[i], grid.ln_1mu[i]))
                .collect();
            let peak = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..logs.len() {
                acc += grid.w[i] * (logs[i] - peak).exp() * ang[i][(d + n as i64 - 1) as usize];
            }
            let lc = engine.lc_half[a] + engine.lc_half[b];
            // ρ = 2π · ½ · ρ/π, with the 2π already inside the angular transform
            out[a][b] = acc * (rho / (2.0 * PI)) * (lc + peak).exp();
        }
    }
    for a in 0..n {
        for b in a..n {
            let h = 0.5 * (out[a][b] + out[b][a].conj());
            out[a][b] = h;
            out[b][a] = h.conj();
        }
    }
    Ok(out)
}

fn estimate_from(fine: f64, coarse: f64, scale: f64) -> Estimate {
    let error = (fine - coarse).abs() + 64.0 * f64::EPSILON * scale;
    Estimate { value: fine, error, converged: error.is_finite() }
}

/// `Cov(Σf, Σg) = tr(M_{fg}) − tr(M_f M_g)`, at two radial resolutions.
pub fn covariance_trace(spec: &KernelSpec, f: &Separable, g: &Separable) -> Result<Estimate> {
    let engine = TraceEngine::for_support(*spec, f.support.max(g.support))?;
    let at = |res: f64| {
        let fg = engine.matrix_at(&f.product(g), res);
        let (mf, mg) = (engine.matrix_at(f, res), engine.matrix_at(g, res));
        let a = fg.trace();
        let b = mf.trace_product(&mg);
        (a - b, a.abs() + b.abs())
    };
    let (fine, scale) = at(1.0);
    let (coarse, _) = at(0.5);
    Ok(estimate_from(fine, coarse, scale))
}

/// `Var(Σf) = tr(F₂) − tr(F F)`.
pub fn variance_trace(spec: &KernelSpec, f: &TestFunction) -> Result<Estimate> {
    let s = f.separable();
    covariance_trace(spec, &s, &s)
}

/// `E Σf = tr(F)`.
pub fn mean_trace(spec: &KernelSpec, f: &TestFunction) -> Result<Estimate> {
    let s = f.separable();
    let engine = TraceEngine::for_support(*spec, s.support)?;
    let fine = engine.matrix_at(&s, 1.0).trace();
    let coarse = engine.matrix_at(&s, 0.5).trace();
    Ok(estimate_from(fine, coarse, fine.abs()))
}

/// `k`-th cumulant of `Σf` as a signed sum over compositions of
/// `tr(F^{(k₁)} ⋯ F^{(k_m)})`, `F^{(j)}` the Gram matrix of `f^j`.
pub fn cumulant_trace(spec: &KernelSpec, f: &TestFunction, k: usize) -> Result<Estimate> {
    if !(1..=6).contains(&k) {
        return Err(Error::InvalidParameter(format!("cumulant order must be in 1..=6, got {k}")));
    }
    let s = f.separable();
    let engine = TraceEngine::for_support(*spec, s.support)?;
    let terms = cumulant_terms(k);
    let at = |res: f64| {
        let powers: Vec<Banded> = (1..=k as u32).map(|j| engine.matrix_at(&s.pow(j), res)).collect();
        let mut total = 0.0;
        let mut scale = 0.0;
        for (c, w) in &terms {
            let mut prod = powers[c.parts[0] - 1].clone();
            for &p in &c.parts[1..] {
                prod = prod.mul(&powers[p - 1]);
            }
            let tr = prod.trace();
            total += w * tr;
            scale += (w * tr).abs();
        }
        (total, scale)
    };
    let (fine, scale) = at(1.0);
    let (coarse, _) = at(0.5);
    Ok(estimate_from(fine, coarse, scale))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statistics::test_functions::radius_squared_cutoff;
    use approx::assert_relative_eq;

    fn radial_bump(r: f64) -> Separable {
        TestFunction::bump(r).separable()
    }

    #[test]
    fn banded_algebra_matches_dense() {
        let mut a = Banded::zeros(5);
        a.diagonals.insert(0, vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        a.diagonals.insert(2, vec![0.5, -1.0, 2.0, 0.0, 0.0]);
        let mut b = Banded::zeros(5);
        b.diagonals.insert(-2, vec![0.0, 0.0, 1.5, 2.5, -0.5]);
        b.diagonals.insert(1, vec![1.0, 1.0, 1.0, 1.0, 0.0]);
        let c = a.mul(&b);
        for i in 0..5 {
            for j in 0..5 {
                let dense: f64 = (0..5).map(|k| a.get(i, k) * b.get(k, j)).sum();
                assert!((c.get(i, j) - dense).abs() < 1e-15);
            }
        }
        assert!((a.trace_product(&b) - c.trace()).abs() < 1e-14);
    }

    #[test]
    fn constant_on_sphere_gives_identity() {
        let spec = KernelSpec::sphere(20).unwrap();
        let m = matrix_elements(&spec, &TestFunction::constant(1.0).separable(), 20).unwrap();
        for a in 0..20 {
            for b in 0..20 {
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((m.get(a, b) - want).abs() < 1e-8, "{a},{b}: {}", m.get(a, b));
            }
        }
        let dense = matrix_elements_general(&spec, |_| 1.0, f64::INFINITY, 12).unwrap();
        for a in 0..12 {
            for b in 0..12 {
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((dense[a][b] - want).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn selection_rules_in_the_general_route() {
        let spec = KernelSpec::full(SpaceKind::Plane, 3.0).unwrap();
        let radial = matrix_elements_general(&spec, |z| (-z.norm_sqr()).exp(), 5.0, 10).unwrap();
        let re = matrix_elements_general(&spec, |z| if z.norm() < 5.0 { z.re } else { 0.0 }, 5.0, 10).unwrap();
        for a in 0..10usize {
            for b in 0..10usize {
                if a != b {
                    assert!(radial[a][b].norm() < 1e-8);
                }
                if a.abs_diff(b) != 1 {
                    assert!(re[a][b].norm() < 1e-8, "{a},{b}: {}", re[a][b]);
                } else {
                    assert!(re[a][b].norm() > 1e-3);
                }
            }
        }
    }

    #[test]
    fn separable_route_matches_general_route() {
        for (space, rho) in [(SpaceKind::Plane, 6.0), (SpaceKind::Sphere, 9.0), (SpaceKind::Hyperbolic, 4.0)] {
            let spec = KernelSpec::full(space, rho).unwrap();
            let radius = if space == SpaceKind::Hyperbolic { 0.8 } else { 1.3 };
            for f in [TestFunction::bump(radius), TestFunction::angular(radius, 1), TestFunction::angular(radius, 2)] {
                let fast = matrix_elements(&spec, &f.separable().pow(2), 8).unwrap();
                let slow = matrix_elements_general(&spec, |z| f.value(z).powi(2), radius, 8).unwrap();
                for a in 0..8 {
                    for b in 0..8 {
                        assert!((slow[a][b].re - fast.get(a, b)).abs() < 1e-9, "{space:?} {f} {a},{b}");
                        assert!(slow[a][b].im.abs() < 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn basis_norms_and_intensity_through_the_trace() {
        // tr of the Gram matrix of g is ∫ g K(z,z) dz = (ρ/π) ∫ g dν for the full kernel
        for (space, rho) in [(SpaceKind::Plane, 16.0), (SpaceKind::Sphere, 16.0), (SpaceKind::Hyperbolic, 16.0)] {
            let spec = KernelSpec::full(space, rho).unwrap();
            let f = TestFunction::bump(0.7);
            let m = mean_trace(&spec, &f).unwrap();
            let nu = crate::numerics::integrate_radial(
                |r| 2.0 * PI * r * f.value(Complex64::new(r, 0.0)) * space.invariant_density(Complex64::new(r, 0.0)).unwrap(),
                0.7,
                &crate::numerics::QuadratureConfig::one_d(),
            );
            assert_relative_eq!(m.value, rho / PI * nu.value, max_relative = 1e-9);
        }
    }

    #[test]
    fn constant_sphere_statistic_is_deterministic() {
        let spec = KernelSpec::sphere(12).unwrap();
        let c = TestFunction::constant(1.0);
        assert!(variance_trace(&spec, &c).unwrap().value.abs() < 1e-10);
        for k in 2..=4 {
            assert!(cumulant_trace(&spec, &c, k).unwrap().value.abs() < 1e-9, "k = {k}");
        }
        assert_relative_eq!(cumulant_trace(&spec, &c, 1).unwrap().value, 12.0, max_relative = 1e-10);
    }

    #[test]
    fn second_cumulant_is_the_variance() {
        for space in SpaceKind::ALL {
            let spec = KernelSpec::full(space, 16.0).unwrap();
            for f in [TestFunction::bump(0.6), TestFunction::angular(0.6, 2)] {
                let v = variance_trace(&spec, &f).unwrap();
                let c = cumulant_trace(&spec, &f, 2).unwrap();
                assert!((v.value - c.value).abs() < 1e-10, "{space:?} {f}");
                assert!(v.error < 1e-8 && v.value > 0.0);
            }
        }
    }

    #[test]
    fn covariance_is_symmetric_and_bilinear() {
        let spec = KernelSpec::full(SpaceKind::Plane, 10.0).unwrap();
        let f = radial_bump(1.0);
        let g = radius_squared_cutoff(1.5);
        let a = covariance_trace(&spec, &f, &g).unwrap().value;
        let b = covariance_trace(&spec, &g, &f).unwrap().value;
        assert!((a - b).abs() < 1e-12);
        let f2 = TestFunction::bump(1.0).scaled(3.0).separable();
        let c = covariance_trace(&spec, &f2, &g).unwrap().value;
        assert_relative_eq!(c, 3.0 * a, max_relative = 1e-12);
    }

    #[test]
    fn third_cumulant_shrinks_with_rho() {
        let f = TestFunction::bump(1.0);
        let c16 = cumulant_trace(&KernelSpec::full(SpaceKind::Plane, 16.0).unwrap(), &f, 3).unwrap();
        let c256 = cumulant_trace(&KernelSpec::full(SpaceKind::Plane, 256.0).unwrap(), &f, 3).unwrap();
        assert!(c256.value.abs() < c16.value.abs(), "{c16:?} {c256:?}");
    }
}
