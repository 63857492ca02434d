use nalgebra::DMatrix;
use netcore::{NetConfig, WeightSet};

use crate::LandscapeError;

/// Losses that are convex in the network output with infimum zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Loss {
    /// `½‖y − z‖²` per example.
    Square,
    /// `Σ_k ln(1 + exp(−y_k z_k))` per example, labels ±1.
    Logistic,
}

impl Loss {
    /// Mean per-example loss of outputs `h` against targets `y`.
    pub fn value(&self, h: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
        let m = h.ncols() as f64;
        match self {
            Loss::Square => 0.5 * (h - y).norm_squared() / m,
            Loss::Logistic => h.zip_map(y, |z, t| softplus(-t * z)).sum() / m,
        }
    }

    /// `∂(mean loss)/∂h`.
    pub fn gradient(&self, h: &DMatrix<f64>, y: &DMatrix<f64>) -> DMatrix<f64> {
        let m = h.ncols() as f64;
        match self {
            Loss::Square => (h - y) / m,
            Loss::Logistic => h.zip_map(y, |z, t| -t * sigmoid(-t * z) / m),
        }
    }

    pub fn check_targets(&self, y: &DMatrix<f64>) -> Result<(), LandscapeError> {
        if *self == Loss::Logistic && y.iter().any(|&v| v != 1.0 && v != -1.0) {
            return Err(LandscapeError::Labels);
        }
        Ok(())
    }
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn check_data(config: &NetConfig, weights: &WeightSet, x: &DMatrix<f64>) -> Result<(), LandscapeError> {
    weights.check_shapes(config)?;
    if x.nrows() != config.input_dim() {
        return Err(LandscapeError::Shape(format!(
            "data has {} rows, network input is {}",
            x.nrows(),
            config.input_dim()
        )));
    }
    Ok(())
}

/// Preactivations `H_1..H_{L+1}` for a whole data set.
pub fn batch_forward(
    config: &NetConfig,
    weights: &WeightSet,
    x: &DMatrix<f64>,
) -> Result<Vec<DMatrix<f64>>, LandscapeError> {
    check_data(config, weights, x)?;
    let act = config.activation;
    let depth = config.depth();
    let mut pre = Vec::with_capacity(depth + 1);
    let mut cur = x.clone();
    for (l, w) in weights.matrices.iter().enumerate() {
        let h = w * &cur * config.layer_scale(l);
        if l < depth {
            cur = h.map(|z| act.value(z));
        }
        pre.push(h);
    }
    Ok(pre)
}

/// Gradient of the mean loss with respect to every weight matrix.
pub fn batch_gradient(
    config: &NetConfig,
    weights: &WeightSet,
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    loss: Loss,
) -> Result<(f64, WeightSet), LandscapeError> {
    let pre = batch_forward(config, weights, x)?;
    let act = config.activation;
    let depth = config.depth();
    let out = &pre[depth];
    let mut g = loss.gradient(out, y);
    let mut grads = vec![DMatrix::zeros(0, 0); depth + 1];
    for l in (0..=depth).rev() {
        let c = config.layer_scale(l);
        let input = if l == 0 { x.clone() } else { pre[l - 1].map(|z| act.value(z)) };
        grads[l] = &g * input.transpose() * c;
        if l >= 1 {
            let back = weights.matrices[l].tr_mul(&g) * c;
            g = back.component_mul(&pre[l - 1].map(|z| act.derivative(z)));
        }
    }
    Ok((loss.value(out, y), WeightSet::new(grads)))
}

/// Plain full-batch gradient descent; returns the final weights and the
/// loss before every step plus the final loss.
pub fn gradient_descent(
    config: &NetConfig,
    weights: &WeightSet,
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    loss: Loss,
    eta: f64,
    steps: usize,
) -> Result<(WeightSet, Vec<f64>), LandscapeError> {
    loss.check_targets(y)?;
    let mut w = weights.clone();
    let mut history = Vec::with_capacity(steps + 1);
    for _ in 0..steps {
        let (value, grad) = batch_gradient(config, &w, x, y, loss)?;
        history.push(value);
        for (m, g) in w.matrices.iter_mut().zip(&grad.matrices) {
            *m -= g * eta;
        }
    }
    let pre = batch_forward(config, &w, x)?;
    history.push(loss.value(pre.last().unwrap(), y));
    Ok((w, history))
}
