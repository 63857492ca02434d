use nalgebra::DMatrix;
use netcore::{output, NetConfig, WeightSet};
use serde::Serialize;

use crate::{BoundsError, Result};

/// Margins `y_i f(x_i)` with the hard and ramp margin risks at `γ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginStats {
    pub gamma: f64,
    pub margins: Vec<f64>,
    /// Fraction of examples with margin below `γ`.
    pub hard_risk: f64,
    /// Mean ramp loss, see [`ramp`].
    pub ramp_loss: f64,
}

impl MarginStats {
    pub fn from_margins(margins: Vec<f64>, gamma: f64) -> Result<Self> {
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(BoundsError::Domain(format!("gamma must be non-negative, got {gamma}")));
        }
        if margins.is_empty() {
            return Err(BoundsError::Domain("no examples".into()));
        }
        let m = margins.len() as f64;
        let hard_risk = margins.iter().filter(|&&v| v < gamma).count() as f64 / m;
        let ramp_loss = margins.iter().map(|&v| ramp(v, gamma)).sum::<f64>() / m;
        Ok(Self {
            gamma,
            margins,
            hard_risk,
            ramp_loss,
        })
    }

    /// Hard margin risk at another `γ`.
    pub fn hard_risk_at(&self, gamma: f64) -> f64 {
        self.margins.iter().filter(|&&v| v < gamma).count() as f64 / self.margins.len() as f64
    }
}

/// 1 for `v ≤ 0`, `1 − v/γ` on `(0, γ)`, 0 beyond; the 0/1 step when `γ = 0`.
pub fn ramp(v: f64, gamma: f64) -> f64 {
    if v <= 0.0 {
        1.0
    } else if v < gamma {
        1.0 - v / gamma
    } else {
        0.0
    }
}

pub(crate) fn check_labels(y: &[f64]) -> Result<()> {
    if y.iter().any(|&v| v != 1.0 && v != -1.0) {
        return Err(BoundsError::Labels);
    }
    Ok(())
}

pub(crate) fn check_data(config: &NetConfig, x: &DMatrix<f64>, y: &[f64]) -> Result<()> {
    if config.output_dim() != 1 {
        return Err(BoundsError::Domain("margins need a scalar output".into()));
    }
    if x.nrows() != config.input_dim() || x.ncols() != y.len() {
        return Err(BoundsError::Domain(format!(
            "data is {}x{} with {} labels, network expects {} inputs",
            x.nrows(),
            x.ncols(),
            y.len(),
            config.input_dim()
        )));
    }
    check_labels(y)
}

/// Network outputs on the columns of `x`.
pub(crate) fn outputs(config: &NetConfig, weights: &WeightSet, x: &DMatrix<f64>) -> Result<Vec<f64>> {
    x.column_iter()
        .map(|c| Ok(output(config, weights, &c.into_owned())?[0]))
        .collect()
}

/// Margins of a scalar-output network on examples stored as columns of `x`.
pub fn margin_stats(weights: &WeightSet, config: &NetConfig, x: &DMatrix<f64>, y: &[f64], gamma: f64) -> Result<MarginStats> {
    check_data(config, x, y)?;
    let z = outputs(config, weights, x)?;
    MarginStats::from_margins(z.iter().zip(y).map(|(z, y)| z * y).collect(), gamma)
}
