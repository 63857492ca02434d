//! Exact correlation functions of randomly initialized linear networks.
//!
//! The network is `f(x) = n^{−L/2} aᵀ W_{L−1} ⋯ W_1 W_0 x` with i.i.d.
//! unit gaussian weights, hidden width `n`, and `W_0` of shape `n × d`.
//! A correlator multiplies `m` derivative tensors of `f` at given inputs
//! and sums contracted parameter indices. Its expectation is a polynomial
//! in `1/n`, obtained by Wick pairing every weight type and counting the
//! loops of the resulting double-line diagrams.

mod diagrams;
mod mc;
mod pairings;
mod spec;

pub use diagrams::{diagrams, exact_correlation, Diagram, Monomial, Polynomial, Term};
pub use mc::{
    kernel_variance_check, mc_correlation, mc_scaling_check, KernelVarianceReport, LinearNet, Params, ScalingReport,
};
pub use pairings::{double_factorial, enumerate_pairings, Pairing};
pub use spec::{conjecture_exponent, ClusterCounts, ContractionSpec, Factor};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum WickError {
    #[error("size guard: {0}")]
    TooLarge(String),
    #[error("invalid contraction spec: {0}")]
    InvalidSpec(String),
    #[error("deep networks (L >= 2) need scalar inputs, got dimension {0}")]
    VectorInputDeep(usize),
    #[error("Monte Carlo evaluation does not support {0}")]
    Unsupported(String),
    #[error(transparent)]
    Net(#[from] netcore::NetError),
}
