//! Tangent kernels of wide networks and the training dynamics they induce.
//!
//! Data sets are matrices with one example per column. Kernels are
//! returned as [`KernelGram`]s tagged with what they represent.

mod alignment;
mod du;
mod empirical;
mod linearized;
mod recursion;

pub use alignment::{alignment, log_grid, AlignmentReport};
pub use du::{du_convergence_monitor, du_dataset, h_infinity, h_infinity_monte_carlo, DuConfig, DuTrajectory};
pub use empirical::{empirical_ntk, kernel_deviation, width_scan, WidthDeviation};
pub use linearized::{bayes_posterior, GpMoments, GpPrior, LinearizedSolution};
pub use recursion::{limiting_ntk, nngp_cross, nngp_gram, nngp_recursion, KernelRecursionState};

use nalgebra::{DMatrix, SymmetricEigen};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NtkError {
    #[error("kernel gram is singular (smallest eigenvalue {lambda_min:.3e})")]
    SingularGram { lambda_min: f64 },
    #[error("the limiting tangent kernel needs the NTK parameterization")]
    NotNtk,
    #[error("shape error: {0}")]
    Shape(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error(transparent)]
    Net(#[from] netcore::NetError),
}

/// What a gram matrix holds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelTag {
    /// `Θ̂_t`, the empirical tangent kernel of a finite network at time `t`.
    EmpiricalNtk { t: f64 },
    /// `Θ_0`, the infinite-width tangent kernel.
    LimitingNtk,
    /// `q_{L+1}`, the infinite-width output covariance.
    Nngp,
    /// `H^∞` of the two-layer ReLU setting.
    HInfinity,
    /// `H(t)` of a finite two-layer ReLU network.
    HT { t: f64 },
}

/// A symmetric kernel matrix over a data set.
#[derive(Debug, Clone)]
pub struct KernelGram {
    pub matrix: DMatrix<f64>,
    pub tag: KernelTag,
}

impl KernelGram {
    /// Wraps a matrix, averaging it with its transpose.
    pub fn new(matrix: DMatrix<f64>, tag: KernelTag) -> Self {
        let sym = (&matrix + matrix.transpose()) * 0.5;
        Self { matrix: sym, tag }
    }

    pub fn len(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.nrows() == 0
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.matrix.clone()).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    /// Symmetric to 1e−10 (relative to the largest entry) and no
    /// eigenvalue below −1e−8 (same scale).
    pub fn is_valid(&self) -> bool {
        let scale = self.matrix.amax().max(1.0);
        let asym = (&self.matrix - self.matrix.transpose()).amax();
        asym <= 1e-10 * scale && self.min_eigenvalue() >= -1e-8 * scale
    }
}
