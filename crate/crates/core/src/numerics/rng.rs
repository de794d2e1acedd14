//! Reproducible random streams.
//!
//! A stream is a ChaCha20 generator keyed by the master seed with the
//! 64-bit stream id selecting an independent keystream, so any
//! `(master_seed, stream_id)` pair yields the same sequence on every platform
//! regardless of how replicates are scheduled.

use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        Self { master_seed, stream_id }
    }

    /// A sibling stream with a different id under the same master seed.
    pub fn with_id(self, stream_id: u64) -> Self {
        Self { stream_id, ..self }
    }

    pub fn rng(&self) -> StreamRng {
        let mut inner = ChaCha20Rng::seed_from_u64(self.master_seed);
        inner.set_stream(self.stream_id);
        StreamRng { inner }
    }
}

/// Generator handed out by [`RngStream::rng`].
#[derive(Clone, Debug)]
pub struct StreamRng {
    inner: ChaCha20Rng,
}

impl StreamRng {
    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// `(N(0,½) + i N(0,½))`, so that `E|g|² = 1`.
    pub fn complex_gaussian(&mut self) -> Complex64 {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let re: f64 = StandardNormal.sample(&mut self.inner);
        let im: f64 = StandardNormal.sample(&mut self.inner);
        Complex64::new(s * re, s * im)
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }
}

impl RngCore for StreamRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }
    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_stream_same_draws() {
        let s = RngStream::new(42, 7);
        let mut a = s.rng();
        let mut b = s.rng();
        for _ in 0..10_000 {
            assert_eq!(a.uniform().to_bits(), b.uniform().to_bits());
        }
        let mut a = s.rng();
        let mut b = s.rng();
        for _ in 0..1000 {
            assert_eq!(a.complex_gaussian(), b.complex_gaussian());
        }
    }

    #[test]
    fn complex_gaussian_second_moment() {
        let mut g = RngStream::new(1, 0).rng();
        let n = 1_000_000;
        let vals: Vec<f64> = (0..n).map(|_| g.complex_gaussian().norm_sqr()).collect();
        let mean = vals.iter().sum::<f64>() / n as f64;
        // |g|² is Exp(1): standard deviation 1
        let se = 1.0 / (n as f64).sqrt();
        assert!((mean - 1.0).abs() < 3.0 * se, "mean {mean}");
    }

    #[test]
    fn distinct_streams_are_uncorrelated() {
        let n = 100_000;
        let mut a = RngStream::new(9, 0).rng();
        let mut b = RngStream::new(9, 1).rng();
        let xs: Vec<f64> = (0..n).map(|_| a.uniform() - 0.5).collect();
        let ys: Vec<f64> = (0..n).map(|_| b.uniform() - 0.5).collect();
        assert_ne!(xs[..8], ys[..8]);
        let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum::<f64>() / n as f64;
        // var(U - ½) = 1/12; correlation SE ≈ 1/√n
        let corr = cov * 12.0;
        assert!(corr.abs() < 4.0 / (n as f64).sqrt(), "corr {corr}");
    }
}
