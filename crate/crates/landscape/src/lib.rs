//! Constructive loss-landscape tools for bias-free networks with a
//! bijective activation: first-layer reconstruction through one-sided
//! inverses, and piecewise weight-space paths along which the loss never
//! increases.
//!
//! Data sets are stored column-wise: `X` is `n_0 × m` and targets are
//! `n_{L+1} × m`.

mod batch;
mod inverse;
mod path;

pub use batch::{batch_forward, batch_gradient, gradient_descent, Loss};
pub use inverse::{left_inverse, reconstruct_first_layer, right_inverse, RANK_THRESHOLD};
pub use path::{
    constant_loss_path, constant_output_segment, output_segment, PathOptions, PathSegment, PathTrace, Side,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LandscapeError {
    #[error("{matrix} is rank deficient (smallest/largest singular value {ratio:.3e})")]
    RankDeficient { matrix: String, ratio: f64 },
    #[error("activation {0} is not a bijection of the real line")]
    NotInvertible(String),
    #[error("interpolated W_{layer} loses full row rank at t = {t}")]
    RankLost { layer: usize, t: f64 },
    #[error("shape error: {0}")]
    Shape(String),
    #[error("labels must be ±1 for the logistic loss")]
    Labels,
    #[error(transparent)]
    Net(#[from] netcore::NetError),
}
