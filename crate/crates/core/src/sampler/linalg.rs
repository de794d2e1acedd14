//! Small dense complex linear algebra for the spherical matrix model.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Row-major square complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    pub n: usize,
    pub data: Vec<Complex64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![Complex64::new(0.0, 0.0); n * n] }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = f(i, j);
            }
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.n + j]
    }

    #[inline]
    fn at(&mut self, i: usize, j: usize) -> &mut Complex64 {
        &mut self.data[i * self.n + j]
    }

    pub fn mul(&self, o: &Matrix) -> Matrix {
        let n = self.n;
        Matrix::from_fn(n, |i, j| (0..n).map(|k| self.get(i, k) * o.get(k, j)).sum())
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }
}

/// LU factorization with partial pivoting.
pub struct Lu {
    lu: Matrix,
    perm: Vec<usize>,
    /// `min |pivot| / max |pivot|`.
    pub pivot_ratio: f64,
}

impl Lu {
    pub fn new(a: &Matrix) -> Self {
        let n = a.n;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let (mut pmin, mut pmax) = (f64::INFINITY, 0.0f64);
        for k in 0..n {
            let p = (k..n)
                .max_by(|&x, &y| lu.get(x, k).norm().partial_cmp(&lu.get(y, k).norm()).unwrap())
                .unwrap();
            if p != k {
                for j in 0..n {
                    lu.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = lu.get(k, k);
            pmin = pmin.min(pivot.norm());
            pmax = pmax.max(pivot.norm());
            if pivot.norm() == 0.0 {
                continue;
            }
            for i in k + 1..n {
                let l = lu.get(i, k) / pivot;
                *lu.at(i, k) = l;
                for j in k + 1..n {
                    let v = lu.get(k, j);
                    *lu.at(i, j) -= l * v;
                }
            }
        }
        let pivot_ratio = if pmax > 0.0 { pmin / pmax } else { 0.0 };
        Self { lu, perm, pivot_ratio }
    }

    /// Solve `A X = B` for every column of `B`.
    pub fn solve(&self, b: &Matrix) -> Matrix {
        let n = self.lu.n;
        let mut x = Matrix::from_fn(n, |i, j| b.get(self.perm[i], j));
        for col in 0..n {
            for i in 0..n {
                let mut s = x.get(i, col);
                for k in 0..i {
                    s -= self.lu.get(i, k) * x.get(k, col);
                }
                *x.at(i, col) = s;
            }
            for i in (0..n).rev() {
                let mut s = x.get(i, col);
                for k in i + 1..n {
                    s -= self.lu.get(i, k) * x.get(k, col);
                }
                *x.at(i, col) = s / self.lu.get(i, i);
            }
        }
        x
    }

    pub fn determinant(&self) -> Complex64 {
        let n = self.lu.n;
        let mut d: Complex64 = (0..n).map(|i| self.lu.get(i, i)).product();
        // sign of the permutation
        let mut seen = vec![false; n];
        for i in 0..n {
            if seen[i] {
                continue;
            }
            let mut len = 0;
            let mut j = i;
            while !seen[j] {
                seen[j] = true;
                j = self.perm[j];
                len += 1;
            }
            if len % 2 == 0 {
                d = -d;
            }
        }
        d
    }
}

/// Householder reduction to upper Hessenberg form (similarity transform).
pub fn hessenberg(a: &Matrix) -> Matrix {
    let n = a.n;
    let mut h = a.clone();
    for k in 0..n.saturating_sub(2) {
        let x: Vec<Complex64> = (k + 1..n).map(|i| h.get(i, k)).collect();
        let norm = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let phase = if x[0].norm() > 0.0 { x[0] / x[0].norm() } else { Complex64::new(1.0, 0.0) };
        let mut v = x;
        v[0] += phase * norm;
        let vn = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|c| *c /= vn);
        // H ← (I − 2vv*) H
        for j in k..n {
            let t: Complex64 = (0..v.len()).map(|i| v[i].conj() * h.get(k + 1 + i, j)).sum();
            for (i, vi) in v.iter().enumerate() {
                *h.at(k + 1 + i, j) -= 2.0 * vi * t;
            }
        }
        // H ← H (I − 2vv*)
        for i in 0..n {
            let t: Complex64 = (0..v.len()).map(|j| h.get(i, k + 1 + j) * v[j]).sum();
            for (j, vj) in v.iter().enumerate() {
                *h.at(i, k + 1 + j) -= 2.0 * t * vj.conj();
            }
        }
        for i in k + 2..n {
            *h.at(i, k) = Complex64::new(0.0, 0.0);
        }
    }
    h
}

/// Rotation `G = [[c̄, s̄], [−s, c]]` with `G (a, b)ᵀ = (r, 0)ᵀ`.
fn givens(a: Complex64, b: Complex64) -> (Complex64, Complex64) {
    let r = (a.norm_sqr() + b.norm_sqr()).sqrt();
    if r == 0.0 {
        (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0))
    } else {
        (a / r, b / r)
    }
}

/// Eigenvalues of a complex matrix by Hessenberg reduction and single-shift
/// QR with Wilkinson shifts and deflation.
pub fn eigenvalues(a: &Matrix, max_iterations: usize) -> Result<Vec<Complex64>> {
    let n = a.n;
    let mut h = hessenberg(a);
    let mut eig = vec![Complex64::new(0.0, 0.0); n];
    if n == 0 {
        return Ok(eig);
    }
    let eps = f64::EPSILON;
    let mut hi = n - 1;
    let mut total = 0usize;
    let mut since_deflation = 0usize;
    while hi > 0 {
        let mut l = hi;
        while l > 0 {
            let scale = h.get(l - 1, l - 1).norm() + h.get(l, l).norm();
            if h.get(l, l - 1).norm() <= eps * scale.max(f64::MIN_POSITIVE) {
                *h.at(l, l - 1) = Complex64::new(0.0, 0.0);
                break;
            }
            l -= 1;
        }
        if l == hi {
            eig[hi] = h.get(hi, hi);
            hi -= 1;
            since_deflation = 0;
            continue;
        }
        total += 1;
        since_deflation += 1;
        if total > max_iterations {
            return Err(Error::EigenNoConvergence(max_iterations));
        }
        let (p, q) = (h.get(hi - 1, hi - 1), h.get(hi - 1, hi));
        let (r, d) = (h.get(hi, hi - 1), h.get(hi, hi));
        let mu = if since_deflation % 11 == 10 {
            // exceptional shift to break cycles
            d + 0.75 * r.norm()
        } else {
            let half = (p - d) * 0.5;
            let disc = (half * half + q * r).sqrt();
            let (m1, m2) = ((p + d) * 0.5 + disc, (p + d) * 0.5 - disc);
            if (m1 - d).norm() < (m2 - d).norm() {
                m1
            } else {
                m2
            }
        };
        for i in l..=hi {
            *h.at(i, i) -= mu;
        }
        let mut rots = Vec::with_capacity(hi - l);
        for k in l..hi {
            let (c, s) = givens(h.get(k, k), h.get(k + 1, k));
            for j in k..=hi {
                let (x, y) = (h.get(k, j), h.get(k + 1, j));
                *h.at(k, j) = c.conj() * x + s.conj() * y;
                *h.at(k + 1, j) = -s * x + c * y;
            }
            rots.push((c, s));
        }
        for (idx, &(c, s)) in rots.iter().enumerate() {
            let k = l + idx;
            for i in l..=(k + 2).min(hi) {
                let (x, y) = (h.get(i, k), h.get(i, k + 1));
                *h.at(i, k) = x * c + y * s;
                *h.at(i, k + 1) = -x * s.conj() + y * c.conj();
            }
        }
        for i in l..=hi {
            *h.at(i, i) += mu;
        }
    }
    eig[0] = h.get(0, 0);
    Ok(eig)
}
