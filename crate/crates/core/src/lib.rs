pub mod error;
pub mod geometry;
pub mod numerics;

pub use error::{Error, Result};
pub use geometry::{Isometry, SpaceKind};
pub use num_complex::Complex64;
pub mod kernels;

pub use kernels::{EnvelopeSpec, KernelSpec};
pub mod combinatorics;
pub mod statistics;
pub mod sampler;
