use num_complex::Complex64;
use thiserror::Error;

use crate::geometry::SpaceKind;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point {z} lies outside the {space:?} chart")]
    Domain { space: SpaceKind, z: Complex64 },

    #[error("isometry sends {z} to the point at infinity")]
    PointAtInfinity { z: Complex64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("basis index {k} out of range for truncation rank {rank}")]
    IndexOutOfRange { k: usize, rank: usize },

    #[error("tail tolerance {tol:e} cannot be met within {cap} summed terms")]
    TruncationUnreachable { tol: f64, cap: usize },

    #[error("rejection sampler exceeded {max} proposals while placing point {index} of {rank}")]
    RejectionLimit { index: usize, rank: usize, max: usize },

    #[error("conditional density {density:e} below tolerance at proposal {z} (diagonal {diagonal:e}, point {index})")]
    NegativeDensity {
        z: Complex64,
        density: f64,
        diagonal: f64,
        index: usize,
    },

    #[error("eigensolver did not converge within {0} iterations")]
    EigenNoConvergence(usize),

    #[error("quadrature did not converge: estimate {value:e}, error {error:e}")]
    Unconverged { value: f64, error: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
