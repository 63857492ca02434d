//! Mean-field signal propagation through wide random networks.
//!
//! The length map `𝒱(q | σ_w²) = σ_w² E φ(√q z)²` tracks the preactivation
//! variance from layer to layer, the correlation map `𝒞` tracks the
//! covariance of two inputs, and `χ₁ = σ_w² E φ′(√q_∞ z)²` is the slope of
//! the normalized correlation map at `c = 1`, which decides between the
//! ordered and chaotic phases.
//!
//! Positively homogeneous activations (linear, ReLU, leaky ReLU) use closed
//! forms in one dimension and a piecewise angular rule in two dimensions;
//! tanh uses composite Gauss–Legendre panels sized to the variance.

mod expect;
mod maps;
mod moments;

pub use expect::{gaussian_expectation, normal_expectation, pair_expectation, PairFn, QUAD_NODES};
pub use maps::{
    chi1, corr_map, edge_of_chaos, edge_of_chaos_in, length_fixed_point, length_map, phase_classify, FixedPoint,
    LengthMapResult, Phase, PhasePoint, PHASE_TOL,
};
pub use moments::{simulate_moments, MomentProfile};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeanFieldError {
    #[error("variance must be non-negative, got {0}")]
    NegativeVariance(f64),
    #[error("sigma_w^2 must be positive, got {0}")]
    BadScale(f64),
    #[error("correlation {0} outside [-1, 1]")]
    BadCorrelation(f64),
    #[error("length-map iteration did not settle after {iterations} steps (last iterate {last})")]
    Divergence { last: f64, iterations: usize },
    #[error("chi1 - 1 does not change sign on sigma_w^2 in [{lo}, {hi}]")]
    NoEdge { lo: f64, hi: f64 },
    #[error("need at least {0} replicates")]
    TooFewReplicates(usize),
    #[error(transparent)]
    Net(#[from] netcore::NetError),
}
