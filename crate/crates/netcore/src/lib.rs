//! Finite bias-free fully-connected networks: configuration, weight
//! initialization, forward/backward traces and input–output Jacobians.
//!
//! Every other crate in the workspace samples its Monte Carlo ensembles
//! through this one, so the conventions live here:
//!
//! * layer `l` maps `x_l ∈ ℝ^{n_l}` to `h_{l+1} = c_l W_l x_l`, where
//!   `x_0` is the raw input and `x_l = φ(h_l)` for `1 ≤ l ≤ L`;
//! * `c_l = 1` under the standard parameterization and `σ_w/√n_l` under
//!   the NTK parameterization;
//! * the output `h_{L+1}` is linear (no activation on the last layer).

mod activation;
mod config;
mod error;
mod init;
mod trace;
mod weightfile;

pub use activation::Activation;
pub use config::{Init, NetConfig, Parameterization};
pub use error::NetError;
pub use init::{haar_orthogonal, init_weights, rng_for};
pub use trace::{
    forward, forward_backward, jacobian, output, param_gradient, BackwardTrace, ForwardTrace,
    Seed,
};
pub use weightfile::{read_weight_file, weight_file_json, write_weight_file, WeightFile};

use nalgebra::DMatrix;

/// Per-layer weight matrices `W_0..W_L`, `W_l` of shape `n_{l+1} × n_l`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSet {
    pub matrices: Vec<DMatrix<f64>>,
}

impl WeightSet {
    pub fn new(matrices: Vec<DMatrix<f64>>) -> Self {
        Self { matrices }
    }

    pub fn check_shapes(&self, config: &NetConfig) -> Result<(), NetError> {
        let w = &config.widths;
        if self.matrices.len() + 1 != w.len() {
            return Err(NetError::Shape(format!(
                "expected {} weight matrices, found {}",
                w.len() - 1,
                self.matrices.len()
            )));
        }
        for (l, m) in self.matrices.iter().enumerate() {
            if m.nrows() != w[l + 1] || m.ncols() != w[l] {
                return Err(NetError::Shape(format!(
                    "W_{l} is {}x{}, expected {}x{}",
                    m.nrows(),
                    m.ncols(),
                    w[l + 1],
                    w[l]
                )));
            }
        }
        Ok(())
    }

    /// Total number of scalar parameters.
    pub fn num_params(&self) -> usize {
        self.matrices.iter().map(|m| m.len()).sum()
    }

    /// Flattens all matrices (column-major within each layer) into one vector.
    pub fn flatten(&self) -> Vec<f64> {
        self.matrices
            .iter()
            .flat_map(|m| m.as_slice().iter().copied())
            .collect()
    }

    /// Inverse of [`WeightSet::flatten`] using `self` as the shape template.
    pub fn with_flat(&self, flat: &[f64]) -> WeightSet {
        assert_eq!(flat.len(), self.num_params(), "flat parameter length mismatch");
        let mut offset = 0;
        let matrices = self
            .matrices
            .iter()
            .map(|m| {
                let len = m.len();
                let out = DMatrix::from_column_slice(m.nrows(), m.ncols(), &flat[offset..offset + len]);
                offset += len;
                out
            })
            .collect();
        WeightSet { matrices }
    }

    pub fn scaled(&self, beta: f64) -> WeightSet {
        WeightSet {
            matrices: self.matrices.iter().map(|m| m * beta).collect(),
        }
    }
}
