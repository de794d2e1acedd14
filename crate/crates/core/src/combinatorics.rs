//! Exact rational bookkeeping for the cumulant expansion.
//!
//! The `k`-th cumulant of a linear statistic is a sum over compositions
//! `k = k₁ + ⋯ + k_m` weighted by `(−1)^{m−1}/m · k!/(k₁!⋯k_m!)`. The
//! functional `Υ_k(φ)` collects the same sum without the `k!`, and its
//! generating functions are checked here with truncated bivariate series.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Composition {
    pub parts: Vec<usize>,
}

impl Composition {
    pub fn total(&self) -> usize {
        self.parts.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }
}

/// Lexicographic enumeration of the compositions of `k`.
#[derive(Clone, Debug)]
pub struct Compositions {
    next: Option<Vec<usize>>,
}

impl Iterator for Compositions {
    type Item = Composition;

    fn next(&mut self) -> Option<Composition> {
        let current = self.next.take()?;
        if current.len() > 1 {
            let mut succ = current.clone();
            let last = succ.pop().unwrap();
            *succ.last_mut().unwrap() += 1;
            succ.extend(std::iter::repeat(1).take(last - 1));
            self.next = Some(succ);
        }
        Some(Composition { parts: current })
    }
}

/// All `2^{k−1}` compositions of `k`, starting at `(1, …, 1)` and ending at `(k)`.
pub fn compositions(k: usize) -> Compositions {
    Compositions { next: (k > 0).then(|| vec![1; k]) }
}

fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

/// `(−1)^{m−1}/m`.
pub fn sign_over_m(m: usize) -> BigRational {
    let v = BigRational::new(BigInt::one(), BigInt::from(m));
    if m % 2 == 0 {
        -v
    } else {
        v
    }
}

/// `(−1)^{m−1}/m · k!/(k₁!⋯k_m!)`, the coefficient of the cyclic integral
/// indexed by `c` in the `k`-th cumulant.
pub fn cumulant_coefficient(c: &Composition) -> BigRational {
    let denom = c.parts.iter().fold(BigInt::one(), |acc, &p| acc * factorial(p));
    sign_over_m(c.len()) * BigRational::new(factorial(c.total()), denom)
}

/// Floating-point table of `(composition, coefficient)` for the `k`-th cumulant.
pub fn cumulant_terms(k: usize) -> Vec<(Composition, f64)> {
    compositions(k)
        .map(|c| {
            let w = cumulant_coefficient(&c).to_f64().unwrap();
            (c, w)
        })
        .collect()
}

/// `Υ_k(φ) = Σ_m (−1)^{m−1}/m Σ_{k₁+⋯+k_m=k} φ(k₁,…,k_m)/(k₁!⋯k_m!)`.
pub fn upsilon<F>(k: usize, weight: F) -> BigRational
where
    F: Fn(&Composition) -> BigRational,
{
    compositions(k)
        .map(|c| {
            let denom = c.parts.iter().fold(BigInt::one(), |acc, &p| acc * factorial(p));
            sign_over_m(c.len()) * weight(&c) / BigRational::from_integer(denom)
        })
        .fold(BigRational::zero(), |a, b| a + b)
}

/// Named weights with generating-function counterparts.
pub mod weights {
    use super::*;

    pub fn one(_: &Composition) -> BigRational {
        BigRational::one()
    }

    /// `k₁ + ⋯ + k_m`.
    pub fn total(c: &Composition) -> BigRational {
        int(c.total() as i64)
    }

    /// `k₂ + ⋯ + k_m`.
    pub fn tail_sum(c: &Composition) -> BigRational {
        int(c.parts[1..].iter().sum::<usize>() as i64)
    }

    /// `k₂² + ⋯ + k_m²`.
    pub fn tail_sum_sq(c: &Composition) -> BigRational {
        int(c.parts[1..].iter().map(|&p| (p * p) as i64).sum())
    }

    /// `Σ_{2≤i<j≤m} k_i k_j`.
    pub fn tail_pairs(c: &Composition) -> BigRational {
        let t = &c.parts[1..];
        let mut acc = 0i64;
        for i in 0..t.len() {
            for j in i + 1..t.len() {
                acc += (t[i] * t[j]) as i64;
            }
        }
        int(acc)
    }
}

/// `Σ_{i=2}^{m} (k_i² − k k_i) + Σ_{2≤i<j≤m} k_i k_j`.
pub fn gff_weight(k: usize, c: &Composition) -> BigRational {
    let kk = k as i64;
    let single: i64 = c.parts[1..].iter().map(|&p| (p * p) as i64 - kk * p as i64).sum();
    int(single) + weights::tail_pairs(c)
}

/// `Υ_k(gff_weight)`: `1/2` at `k = 2` and zero for every `k ≥ 3`.
pub fn verify_gff(k: usize) -> BigRational {
    upsilon(k, |c| gff_weight(k, c))
}

/// Bivariate power series in `x, y` truncated at total degrees
/// `deg_x ≤ dx`, `deg_y ≤ dy`.
#[derive(Clone, Debug, PartialEq)]
pub struct BiSeries {
    dx: usize,
    dy: usize,
    /// `coef[i][j]` multiplies `x^i y^j`.
    coef: Vec<Vec<BigRational>>,
}

impl BiSeries {
    pub fn zero(dx: usize, dy: usize) -> Self {
        Self { dx, dy, coef: vec![vec![BigRational::zero(); dy + 1]; dx + 1] }
    }

    pub fn constant(dx: usize, dy: usize, c: BigRational) -> Self {
        let mut s = Self::zero(dx, dy);
        s.coef[0][0] = c;
        s
    }

    pub fn monomial(dx: usize, dy: usize, i: usize, j: usize, c: BigRational) -> Self {
        let mut s = Self::zero(dx, dy);
        if i <= dx && j <= dy {
            s.coef[i][j] = c;
        }
        s
    }

    pub fn x(dx: usize, dy: usize) -> Self {
        Self::monomial(dx, dy, 1, 0, BigRational::one())
    }

    pub fn y(dx: usize, dy: usize) -> Self {
        Self::monomial(dx, dy, 0, 1, BigRational::one())
    }

    pub fn orders(&self) -> (usize, usize) {
        (self.dx, self.dy)
    }

    pub fn coeff(&self, i: usize, j: usize) -> BigRational {
        self.coef.get(i).and_then(|r| r.get(j)).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn add(&self, o: &Self) -> Self {
        self.zip(o, |a, b| a + b)
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.zip(o, |a, b| a - b)
    }

    fn zip(&self, o: &Self, op: impl Fn(&BigRational, &BigRational) -> BigRational) -> Self {
        assert_eq!(self.orders(), o.orders(), "series orders differ");
        let mut s = Self::zero(self.dx, self.dy);
        for i in 0..=self.dx {
            for j in 0..=self.dy {
                s.coef[i][j] = op(&self.coef[i][j], &o.coef[i][j]);
            }
        }
        s
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        let mut s = self.clone();
        s.coef.iter_mut().flatten().for_each(|v| *v *= c);
        s
    }

    pub fn mul(&self, o: &Self) -> Self {
        assert_eq!(self.orders(), o.orders(), "series orders differ");
        let mut s = Self::zero(self.dx, self.dy);
        for i1 in 0..=self.dx {
            for j1 in 0..=self.dy {
                let a = &self.coef[i1][j1];
                if a.is_zero() {
                    continue;
                }
                for i2 in 0..=self.dx - i1 {
                    for j2 in 0..=self.dy - j1 {
                        let b = &o.coef[i2][j2];
                        if !b.is_zero() {
                            s.coef[i1 + i2][j1 + j2] += a * b;
                        }
                    }
                }
            }
        }
        s
    }

    fn constant_term(&self) -> &BigRational {
        &self.coef[0][0]
    }

    /// `Σ_{n≥0} c_n a^n` for `a` with zero constant term; the sum terminates
    /// because `a^n` vanishes beyond total degree `dx + dy`.
    fn compose(&self, c: impl Fn(usize) -> BigRational) -> Self {
        assert!(self.constant_term().is_zero(), "composition needs a zero constant term");
        let mut acc = Self::constant(self.dx, self.dy, c(0));
        let mut power = Self::constant(self.dx, self.dy, BigRational::one());
        for n in 1..=self.dx + self.dy {
            power = power.mul(self);
            acc = acc.add(&power.scale(&c(n)));
        }
        acc
    }

    /// `exp(a)`; requires `a(0, 0) = 0`.
    pub fn exp(&self) -> Self {
        self.compose(|n| BigRational::new(BigInt::one(), factorial(n)))
    }

    /// `log(a)`; requires `a(0, 0) = 1`.
    pub fn log(&self) -> Self {
        assert!(self.constant_term().is_one(), "log needs constant term 1");
        let shifted = self.sub(&Self::constant(self.dx, self.dy, BigRational::one()));
        shifted.compose(|n| if n == 0 { BigRational::zero() } else { sign_over_m(n) })
    }

    /// `1/a`; requires `a(0, 0) ≠ 0`.
    pub fn inverse(&self) -> Self {
        let c0 = self.constant_term().clone();
        assert!(!c0.is_zero(), "inverse needs a nonzero constant term");
        let unit = self.scale(&c0.recip());
        let a = unit.sub(&Self::constant(self.dx, self.dy, BigRational::one()));
        // 1/(1 + a) = Σ (−a)^n
        a.compose(|n| if n % 2 == 0 { BigRational::one() } else { -BigRational::one() })
            .scale(&c0.recip())
    }

    /// `a / x`; requires no `x⁰` terms. The top `x` degree becomes unknown
    /// and is set to zero, so callers work one order above what they keep.
    pub fn div_x(&self) -> Self {
        assert!(self.coef[0].iter().all(Zero::is_zero), "series is not divisible by x");
        let mut s = Self::zero(self.dx, self.dy);
        for i in 1..=self.dx {
            s.coef[i - 1] = self.coef[i].clone();
        }
        s
    }

    pub fn d_dx(&self) -> Self {
        let mut s = Self::zero(self.dx, self.dy);
        for i in 1..=self.dx {
            for j in 0..=self.dy {
                s.coef[i - 1][j] = &self.coef[i][j] * int(i as i64);
            }
        }
        s
    }

    pub fn d_dy(&self) -> Self {
        let mut s = Self::zero(self.dx, self.dy);
        for i in 0..=self.dx {
            for j in 1..=self.dy {
                s.coef[i][j - 1] = &self.coef[i][j] * int(j as i64);
            }
        }
        s
    }

    /// The series in `x` multiplying `y^j`, as a series with `dy = 0`.
    pub fn y_coefficient(&self, j: usize) -> Self {
        let mut s = Self::zero(self.dx, 0);
        for i in 0..=self.dx {
            s.coef[i][0] = self.coeff(i, j);
        }
        s
    }

    /// Drop every term of `x` degree above `dx`.
    pub fn truncate_x(&self, dx: usize) -> Self {
        let mut s = Self::zero(dx, self.dy);
        for i in 0..=dx.min(self.dx) {
            s.coef[i] = self.coef[i].clone();
        }
        s
    }

    /// Coefficients `[x^0, …, x^dx]` of `y⁰`.
    pub fn x_coefficients(&self) -> Vec<BigRational> {
        (0..=self.dx).map(|i| self.coeff(i, 0)).collect()
    }
}

/// Generating functions of `Υ_k` over the composition weights above.
#[derive(Clone, Debug)]
pub struct UpsilonSeries {
    /// `Σ Υ_k(k₂+⋯+k_m) x^k`.
    pub s1: BiSeries,
    /// `Σ Υ_k(k₂²+⋯+k_m²) x^k`.
    pub s2: BiSeries,
    /// `Σ Υ_k(Σ_{2≤i<j} k_i k_j) x^k`.
    pub s11: BiSeries,
}

/// `(log F)(eˣ − 1)/(F − 1)`; `F − 1` and `log F` are both divisible by `x`.
fn generating(f: &BiSeries, ex_minus_one: &BiSeries) -> BiSeries {
    let (dx, dy) = f.orders();
    let fm1 = f.sub(&BiSeries::constant(dx, dy, BigRational::one()));
    f.log().div_x().mul(&fm1.div_x().inverse()).mul(ex_minus_one)
}

/// Build `s₁, s₂, s₁₁` from `f = eˣ + xyeˣ` and `g = eˣ + y(xeˣ + x²eˣ)`,
/// exact through `x^order`.
pub fn upsilon_series(order: usize) -> UpsilonSeries {
    let (dx, dy) = (order + 2, 2);
    let x = BiSeries::x(dx, dy);
    let y = BiSeries::y(dx, dy);
    let ex = x.exp();
    let one = BiSeries::constant(dx, dy, BigRational::one());
    let ex_m1 = ex.sub(&one);
    let f = ex.add(&x.mul(&y).mul(&ex));
    let xex = x.mul(&ex);
    let g = ex.add(&y.mul(&xex.add(&x.mul(&xex))));
    let gf = generating(&f, &ex_m1);
    let gg = generating(&g, &ex_m1);
    UpsilonSeries {
        s1: gf.y_coefficient(1).truncate_x(order),
        s2: gg.y_coefficient(1).truncate_x(order),
        s11: gf.y_coefficient(2).truncate_x(order),
    }
}

/// Coefficients of `−x s₁′ + s₂ + s₁₁ − x²/2` through `x^order`; all vanish.
pub fn series_identity_check(order: usize) -> Vec<BigRational> {
    let s = upsilon_series(order);
    let x = BiSeries::x(order, 0);
    let half_x2 = BiSeries::monomial(order, 0, 2, 0, BigRational::new(BigInt::one(), BigInt::from(2)));
    let lhs = x.mul(&s.s1.d_dx()).scale(&int(-1)).add(&s.s2).add(&s.s11).sub(&half_x2);
    lhs.x_coefficients()
}

/// `true` when every entry is exactly zero.
pub fn all_zero(values: &[BigRational]) -> bool {
    values.iter().all(|v| v.is_zero())
}

/// Largest absolute value, as a float, for reporting.
pub fn max_abs(values: &[BigRational]) -> f64 {
    values.iter().map(|v| v.abs().to_f64().unwrap_or(f64::INFINITY)).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn composition_counts_and_order() {
        let all: Vec<_> = compositions(3).map(|c| c.parts).collect();
        assert_eq!(all, vec![vec![1, 1, 1], vec![1, 2], vec![2, 1], vec![3]]);
        assert_eq!(compositions(1).map(|c| c.parts).collect::<Vec<_>>(), vec![vec![1]]);
        let ten: Vec<_> = compositions(10).collect();
        assert_eq!(ten.len(), 512);
        assert!(ten.iter().all(|c| c.total() == 10 && c.parts.iter().all(|&p| p >= 1)));
        let unique: std::collections::HashSet<_> = ten.iter().collect();
        assert_eq!(unique.len(), 512);
        assert!(ten.windows(2).all(|w| w[0].parts < w[1].parts));
        assert_eq!(compositions(0).count(), 0);
    }

    #[test]
    fn upsilon_of_one_is_log_of_exp() {
        assert_eq!(upsilon(1, weights::one), q(1, 1));
        for k in 2..=10 {
            assert!(upsilon(k, weights::one).is_zero(), "k = {k}");
        }
    }

    #[test]
    fn upsilon_small_values() {
        assert!(upsilon(2, weights::total).is_zero());
        assert_eq!(upsilon(2, |c| gff_weight(2, c)), q(1, 2));
    }

    #[test]
    fn gff_weight_examples() {
        let c = |p: &[usize]| Composition { parts: p.to_vec() };
        assert_eq!(gff_weight(3, &c(&[3])), q(0, 1));
        assert_eq!(gff_weight(3, &c(&[1, 2])), q(-2, 1));
        assert_eq!(gff_weight(3, &c(&[1, 1, 1])), q(-3, 1));
    }

    #[test]
    fn gff_identity_exact() {
        assert_eq!(verify_gff(2), q(1, 2));
        for k in 3..=10 {
            assert!(verify_gff(k).is_zero(), "k = {k}");
        }
    }

    #[test]
    fn cumulant_coefficients_cancel_for_constants() {
        // a deterministic count has no cumulants past the first
        for k in 2..=8 {
            let s = compositions(k).map(|c| cumulant_coefficient(&c)).fold(BigRational::zero(), |a, b| a + b);
            assert!(s.is_zero(), "k = {k}");
        }
        assert_eq!(cumulant_terms(2).iter().map(|t| t.1).collect::<Vec<_>>(), vec![-1.0, 1.0]);
    }

    #[test]
    fn log_exp_roundtrip() {
        let x = BiSeries::x(12, 0);
        let back = x.exp().log();
        assert_eq!(back, x);
        let xy = BiSeries::x(6, 3).add(&BiSeries::y(6, 3));
        assert_eq!(xy.exp().log(), xy);
    }

    #[test]
    fn inverse_and_division() {
        let (dx, dy) = (8, 2);
        let one = BiSeries::constant(dx, dy, BigRational::one());
        let a = one.add(&BiSeries::x(dx, dy).scale(&q(3, 1))).add(&BiSeries::y(dx, dy));
        assert_eq!(a.mul(&a.inverse()), one);
        let x = BiSeries::x(dx, dy);
        assert_eq!(x.mul(&a).div_x().truncate_x(dx - 1), a.truncate_x(dx - 1));
        assert_eq!(x.mul(&x).d_dx(), x.scale(&q(2, 1)));
    }

    #[test]
    fn series_identity_vanishes() {
        let residual = series_identity_check(12);
        assert_eq!(residual.len(), 13);
        assert!(all_zero(&residual), "{residual:?}");
    }

    #[test]
    fn series_route_matches_direct_upsilon() {
        let s = upsilon_series(8);
        for k in 1..=8 {
            assert_eq!(s.s1.coeff(k, 0), upsilon(k, weights::tail_sum), "s1, k = {k}");
            assert_eq!(s.s2.coeff(k, 0), upsilon(k, weights::tail_sum_sq), "s2, k = {k}");
            assert_eq!(s.s11.coeff(k, 0), upsilon(k, weights::tail_pairs), "s11, k = {k}");
        }
        let lx = BiSeries::x(8, 0).exp().log();
        for k in 1..=8 {
            assert_eq!(lx.coeff(k, 0), upsilon(k, weights::one));
        }
    }
}
