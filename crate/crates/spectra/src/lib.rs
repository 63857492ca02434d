//! Random-matrix and free-probability tools for Jacobian spectra.
//!
//! Densities are described by [`Density1D`]. The product-Wishart family
//! (Marchenko–Pastur is its depth-one member) is handled through its
//! trigonometric parameterization, so every integral against those densities
//! is an integral over the curve parameter φ.

mod density;
mod empirical;
mod inversion;
mod param;
mod transforms;

pub use density::Density1D;
pub use empirical::{empirical_spectrum, jacobian_spectrum, EmpiricalSpectrum};
pub use inversion::{invert_stieltjes, EPSILONS};
pub use param::{product_wishart_spectrum, relu_orth_edge, ParamPoint, ParamSpectrum};
pub use transforms::{r_transform, stieltjes_toolkit, RTransform, StieltjesToolkit};

pub use num_complex::Complex64;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpectraError {
    #[error("transform evaluated on the support at z = {0}")]
    OnSupport(f64),
    #[error("map is not monotone on [{lo}, {hi}]")]
    NotMonotone { lo: f64, hi: f64 },
    #[error("value {0} is outside the range of the transform")]
    OutOfRange(f64),
    #[error("depth {got} is not allowed (need L >= {min})")]
    BadDepth { got: usize, min: usize },
    #[error("invalid density: {0}")]
    BadDensity(String),
    #[error("inversion did not converge; (epsilon, value) sequence {0:?}")]
    Convergence(Vec<(f64, f64)>),
    #[error("eigensolver failed: {0}")]
    Eigen(String),
    #[error(transparent)]
    Net(#[from] netcore::NetError),
}
