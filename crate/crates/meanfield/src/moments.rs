use nalgebra::DVector;
use netcore::{forward_backward, init_weights, NetConfig, Seed};
use numerics::mean_and_se;
use rayon::prelude::*;

use crate::MeanFieldError;

/// Monte Carlo layer statistics over a weight ensemble.
///
/// `q[l]` estimates `q_{l+1} = Var h_{l+1}^i` (layers 1..L+1) and `delta[l]`
/// estimates `δ_{l+1} = Var g_{l+1}^i` for a backward pass seeded with the
/// all-ones output gradient. Each entry comes with the standard error over
/// replicates.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentProfile {
    pub q: Vec<f64>,
    pub q_se: Vec<f64>,
    pub delta: Vec<f64>,
    pub delta_se: Vec<f64>,
    pub replicates: usize,
}

impl MomentProfile {
    /// Largest |q_l − reference| / se_l over layers.
    pub fn max_z_score(&self, reference: f64) -> f64 {
        self.q
            .iter()
            .zip(&self.q_se)
            .map(|(q, se)| (q - reference).abs() / se)
            .fold(0.0, f64::max)
    }

    /// True when every layer's q estimate lies within `k` standard errors
    /// of `reference`.
    pub fn is_flat(&self, reference: f64, k: f64) -> bool {
        self.max_z_score(reference) <= k
    }

    /// Slope of ln q_l against the layer index.
    pub fn log_slope(&self) -> f64 {
        let xs: Vec<f64> = (1..=self.q.len()).map(|l| l as f64).collect();
        let ys: Vec<f64> = self.q.iter().map(|q| q.ln()).collect();
        numerics::linear_fit(&xs, &ys).slope
    }

    /// Empirical backward multipliers δ_l / δ_{l+1}, to be compared with χ₁
    /// (the mean-field prediction assumes g_{l+1} independent of W_l).
    pub fn backward_ratios(&self) -> Vec<f64> {
        self.delta.windows(2).map(|w| w[0] / w[1]).collect()
    }
}

pub fn simulate_moments(
    config: &NetConfig,
    x: &DVector<f64>,
    replicates: usize,
    seed: u64,
) -> Result<MomentProfile, MeanFieldError> {
    if replicates < 2 {
        return Err(MeanFieldError::TooFewReplicates(2));
    }
    let seed_grad = DVector::from_element(config.output_dim(), 1.0);
    let per_rep: Vec<(Vec<f64>, Vec<f64>)> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let w = init_weights(config, seed.wrapping_add(r as u64))?;
            let (fwd, bwd) = forward_backward(config, &w, x, &Seed::LossGradient(seed_grad.clone()))?;
            let q = fwd.pre.iter().map(|h| h.norm_squared() / h.len() as f64).collect();
            let d = bwd.g.iter().map(|g| g.norm_squared() / g.len() as f64).collect();
            Ok((q, d))
        })
        .collect::<Result<_, netcore::NetError>>()?;
    let layers = config.depth() + 1;
    let mut profile = MomentProfile {
        q: Vec::with_capacity(layers),
        q_se: Vec::with_capacity(layers),
        delta: Vec::with_capacity(layers),
        delta_se: Vec::with_capacity(layers),
        replicates,
    };
    for l in 0..layers {
        let qs: Vec<f64> = per_rep.iter().map(|(q, _)| q[l]).collect();
        let ds: Vec<f64> = per_rep.iter().map(|(_, d)| d[l]).collect();
        let (qm, qse) = mean_and_se(&qs);
        let (dm, dse) = mean_and_se(&ds);
        profile.q.push(qm);
        profile.q_se.push(qse);
        profile.delta.push(dm);
        profile.delta_se.push(dse);
    }
    Ok(profile)
}
