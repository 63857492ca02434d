//! Small numerical kernels shared by the laboratory crates: Gaussian
//! quadrature rules, least-squares slope fits and replicate statistics.

mod quadrature;
mod stats;

pub use quadrature::{gauss_hermite, gauss_legendre, GaussHermite, GaussLegendre};
pub use stats::{linear_fit, loglog_slope, mean_and_se, LineFit};
