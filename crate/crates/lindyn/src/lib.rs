//! Gradient dynamics of deep linear networks in the decoupled-mode picture.
//!
//! With whitened inputs and weights aligned to the singular vectors of the
//! input–output correlation, every singular mode evolves independently. A
//! mode with target singular value `s` and balanced per-layer factor `a`
//! has product `u = a^{L+1}` and follows
//! `u̇ = η (L+1) u^{2L/(L+1)} (s − u)`.

mod closed;
mod gd;
mod hessian;
mod ode;

pub use closed::{mode_time, opt_schedule, ModeTimes, Schedule};
pub use gd::{simulate_deep_linear_gd, GdConfig, GdRun};
pub use hessian::{hessian_max_eig, hessian_mode_eigs, ModeEigs};
pub use ode::{mode_rhs, rk4_arrival_time, rk4_mode_trajectory, rk4_shallow_pair};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinDynError {
    #[error("target u_f = {uf} must be below s = {s}; the target is reached only as t -> infinity")]
    Unreachable { uf: f64, s: f64 },
    #[error("initial product u_0 = 0 is a fixed point of the dynamics")]
    StuckAtZero,
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("gradient descent diverged with learning rate {eta} (loss {loss} after {step} steps)")]
    Divergence { eta: f64, loss: f64, step: usize },
    #[error("loss {loss} still above tolerance after {steps} steps")]
    NotConverged { loss: f64, steps: usize },
    #[error(transparent)]
    Net(#[from] netcore::NetError),
}
