//! Quadrature engines, special functions and the seeded RNG-stream contract.

pub mod quadrature;
pub mod rng;
pub mod special;

pub use quadrature::{
    integrate_disk, integrate_interval, integrate_pair, integrate_pair_local, integrate_radial, Estimate, GaussLegendre,
    PairDomain, QuadratureConfig,
};
pub use rng::{RngStream, StreamRng};
pub use special::{ln_binomial, ln_gamma};
