//! Linear statistics, their moments by trace formulas and quadrature, and the
//! Monte Carlo side of the fluctuation theory.

pub mod gof;

pub use gof::{ks_one_sample, ks_two_sample, normality_test, NormalityReport, TestResult};
pub mod test_functions;

pub use test_functions::{builtin_test_functions, radius_squared_cutoff, Separable, Shape, TestFunction};
pub mod traces;

pub use traces::{
    covariance_trace, cumulant_trace, matrix_elements, matrix_elements_general, mean_trace, trace_rank,
    variance_trace, Banded, TraceEngine,
};
pub mod integrals;

pub use integrals::{
    alpha, asymptotic_variance, centered_statistic, centered_statistics, h1_norm_sq, h1_norm_sq_intrinsic,
    integral_nu, l1_norm_invariant, linear_statistic, mean_prediction, variance_quadrature,
};
pub mod moments;
pub mod residuals;

pub use moments::{empirical_report, k_statistics, moment_report, KStatistics, Moment, MomentReport};
pub use residuals::{co_residual, llap_residual, LlapParams, LlapReport, LlapResidual};
