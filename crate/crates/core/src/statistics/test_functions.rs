//! Built-in test functions and their separable radial–angular form.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum Shape {
    /// `(1 − |z|²/R²)₊⁴`.
    Bump,
    /// `Re(z^m) (1 − |z|²/R²)₊⁴`.
    Angular { m: u32 },
    /// The constant function, unbounded support.
    Constant,
}

/// `scale · shape` with support radius `radius`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub shape: Shape,
    pub radius: f64,
    pub scale: f64,
}

impl TestFunction {
    pub fn bump(radius: f64) -> Self {
        Self { shape: Shape::Bump, radius, scale: 1.0 }
    }

    pub fn angular(radius: f64, m: u32) -> Self {
        Self { shape: Shape::Angular { m }, radius, scale: 1.0 }
    }

    pub fn constant(value: f64) -> Self {
        Self { shape: Shape::Constant, radius: f64::INFINITY, scale: value }
    }

    pub fn scaled(self, c: f64) -> Self {
        Self { scale: self.scale * c, ..self }
    }

    pub fn support_radius(&self) -> f64 {
        self.radius
    }

    /// Angular frequency `m` (0 for radial functions).
    pub fn frequency(&self) -> u32 {
        match self.shape {
            Shape::Angular { m } => m,
            _ => 0,
        }
    }

    pub fn label(&self) -> String {
        self.to_string()
    }

    /// `s = |z|²/R²` and the bump factor `(1 − s)`, or `None` outside the support.
    fn inside(&self, z: Complex64) -> Option<(f64, f64)> {
        let s = z.norm_sqr() / (self.radius * self.radius);
        (s < 1.0).then_some((s, 1.0 - s))
    }

    pub fn value(&self, z: Complex64) -> f64 {
        match self.shape {
            Shape::Constant => self.scale,
            Shape::Bump => self.inside(z).map_or(0.0, |(_, t)| self.scale * t.powi(4)),
            Shape::Angular { m } => self.inside(z).map_or(0.0, |(_, t)| self.scale * z.powu(m).re * t.powi(4)),
        }
    }

    /// `(∂_x f, ∂_y f)`.
    pub fn gradient(&self, z: Complex64) -> [f64; 2] {
        let r2 = self.radius * self.radius;
        match self.shape {
            Shape::Constant => [0.0, 0.0],
            Shape::Bump => self.inside(z).map_or([0.0, 0.0], |(_, t)| {
                let c = -8.0 * self.scale * t.powi(3) / r2;
                [c * z.re, c * z.im]
            }),
            Shape::Angular { m } => self.inside(z).map_or([0.0, 0.0], |(_, t)| {
                let u = z.powu(m).re;
                let du = if m == 0 { Complex64::new(0.0, 0.0) } else { m as f64 * z.powu(m - 1) };
                let b = t.powi(4);
                let db = -8.0 * t.powi(3) / r2;
                [self.scale * (b * du.re + u * db * z.re), self.scale * (-b * du.im + u * db * z.im)]
            }),
        }
    }

    /// `Δf`.
    pub fn laplacian(&self, z: Complex64) -> f64 {
        let r2 = self.radius * self.radius;
        match self.shape {
            Shape::Constant => 0.0,
            Shape::Bump => self
                .inside(z)
                .map_or(0.0, |(s, t)| self.scale * 16.0 / r2 * t * t * (4.0 * s - 1.0)),
            Shape::Angular { m } => self.inside(z).map_or(0.0, |(s, t)| {
                let u = z.powu(m).re;
                self.scale * 16.0 * u / r2 * t * t * (4.0 * s - 1.0 - m as f64 * t)
            }),
        }
    }

    /// `f(z) = R(|z|) cos(m arg z)`.
    pub fn separable(&self) -> Separable {
        let (scale, radius) = (self.scale, self.radius);
        match self.shape {
            Shape::Constant => Separable::radial(move |_| scale, f64::INFINITY),
            Shape::Bump => Separable::radial(move |r| scale * bump(r, radius), radius),
            Shape::Angular { m } => Separable {
                m,
                power: 1,
                support: radius,
                radial: Arc::new(move |r| scale * r.powi(m as i32) * bump(r, radius)),
            },
        }
    }

    /// `¼Δf = ∂_z ∂_z̄ f` in separable form.
    pub fn quarter_laplacian(&self) -> Separable {
        let (scale, radius) = (self.scale, self.radius);
        let m = self.frequency();
        let lap = move |r: f64| {
            let s = r * r / (radius * radius);
            if s >= 1.0 {
                return 0.0;
            }
            let t = 1.0 - s;
            scale * 4.0 / (radius * radius) * r.powi(m as i32) * t * t * (4.0 * s - 1.0 - m as f64 * t)
        };
        match self.shape {
            Shape::Constant => Separable::radial(|_| 0.0, 0.0),
            Shape::Bump => Separable::radial(lap, radius),
            Shape::Angular { m } => Separable { m, power: 1, support: radius, radial: Arc::new(lap) },
        }
    }
}

fn bump(r: f64, radius: f64) -> f64 {
    let s = r * r / (radius * radius);
    if s < 1.0 {
        (1.0 - s).powi(4)
    } else {
        0.0
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let scale = if self.scale == 1.0 { String::new() } else { format!("*{}", self.scale) };
        match self.shape {
            Shape::Bump => write!(f, "bump:{}{scale}", self.radius),
            Shape::Angular { m } => write!(f, "angular:{}:{m}{scale}", self.radius),
            Shape::Constant => write!(f, "const:{}", self.scale),
        }
    }
}

impl FromStr for TestFunction {
    type Err = Error;

    /// `bump:R`, `angular:R:m` or `const:c`, optionally followed by `*scale`
    /// (except for constants).
    fn from_str(s: &str) -> Result<Self, Error> {
        let bad = || Error::InvalidParameter(format!("unrecognized test function '{s}'"));
        let (body, scale) = match s.split_once('*') {
            Some((b, c)) => (b, c.parse::<f64>().map_err(|_| bad())?),
            None => (s, 1.0),
        };
        let parts: Vec<&str> = body.split(':').collect();
        let num = |i: usize| parts.get(i).and_then(|p| p.parse::<f64>().ok()).ok_or_else(bad);
        let f = match parts[0] {
            "bump" if parts.len() == 2 => Self::bump(num(1)?),
            "angular" if parts.len() == 3 => {
                let m = parts[2].parse::<u32>().map_err(|_| bad())?;
                Self::angular(num(1)?, m)
            }
            "const" if parts.len() == 2 => return Ok(Self::constant(num(1)? * scale)),
            _ => return Err(bad()),
        };
        if !(f.radius > 0.0 && f.radius.is_finite()) {
            return Err(bad());
        }
        Ok(f.scaled(scale))
    }
}

/// The built-in family: the unit bump and the unit angular bumps `m = 1, 2`.
pub fn builtin_test_functions() -> Vec<TestFunction> {
    vec![TestFunction::bump(1.0), TestFunction::angular(1.0, 1), TestFunction::angular(1.0, 2)]
}

/// `g(z) = R(|z|) cos^power(m arg z)`, vanishing for `|z| ≥ support`.
#[derive(Clone)]
pub struct Separable {
    pub m: u32,
    pub power: u32,
    pub support: f64,
    pub radial: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for Separable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Separable")
            .field("m", &self.m)
            .field("power", &self.power)
            .field("support", &self.support)
            .finish_non_exhaustive()
    }
}

impl Separable {
    pub fn radial(g: impl Fn(f64) -> f64 + Send + Sync + 'static, support: f64) -> Self {
        Self { m: 0, power: 0, support, radial: Arc::new(g) }
    }

    pub fn value(&self, z: Complex64) -> f64 {
        let r = z.norm();
        if r >= self.support {
            return 0.0;
        }
        (self.radial)(r) * (self.m as f64 * z.arg()).cos().powi(self.power as i32)
    }

    fn is_radial(&self) -> bool {
        self.m == 0 || self.power == 0
    }

    /// Pointwise product; the angular frequencies must agree unless one
    /// factor is radial.
    pub fn product(&self, other: &Separable) -> Separable {
        let (m, power) = if self.is_radial() {
            (other.m, other.power)
        } else if other.is_radial() {
            (self.m, self.power)
        } else {
            assert_eq!(self.m, other.m, "products need a common angular frequency");
            (self.m, self.power + other.power)
        };
        let (a, b) = (self.radial.clone(), other.radial.clone());
        Separable { m, power, support: self.support.min(other.support), radial: Arc::new(move |r| a(r) * b(r)) }
    }

    pub fn pow(&self, j: u32) -> Separable {
        let a = self.radial.clone();
        Separable {
            m: self.m,
            power: self.power * j,
            support: if j == 0 { f64::INFINITY } else { self.support },
            radial: Arc::new(move |r| a(r).powi(j as i32)),
        }
    }

    /// Angular Fourier modes `(d, ĝ_d)` of `cos^power(mθ) = Σ_d ĝ_d e^{idθ}`.
    pub fn modes(&self) -> Vec<(i64, f64)> {
        if self.is_radial() {
            return vec![(0, 1.0)];
        }
        let j = self.power as i64;
        let norm = 0.5f64.powi(self.power as i32);
        let mut out: Vec<(i64, f64)> = Vec::new();
        let mut binom = 1.0;
        for i in 0..=j {
            let d = (j - 2 * i) * self.m as i64;
            match out.iter_mut().find(|(dd, _)| *dd == d) {
                Some(e) => e.1 += norm * binom,
                None => out.push((d, norm * binom)),
            }
            binom = binom * (j - i) as f64 / (i + 1) as f64;
        }
        out.sort_by_key(|e| e.0);
        out
    }
}

/// `|z|² · 1_{|z| ≤ B}`.
pub fn radius_squared_cutoff(b: f64) -> Separable {
    Separable::radial(move |r| if r <= b { r * r } else { 0.0 }, b)
}
