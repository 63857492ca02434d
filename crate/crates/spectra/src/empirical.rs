use nalgebra::{DVector, SymmetricEigen};
use netcore::{init_weights, jacobian, rng_for, Init, NetConfig, WeightSet};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::param::ParamSpectrum;
use crate::SpectraError;

/// Pooled eigenvalues of `J Jᵀ` over a weight ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalSpectrum {
    /// Sorted ascending.
    pub eigenvalues: Vec<f64>,
    pub width: usize,
    pub depth: usize,
    pub init: Init,
    pub replicates: usize,
}

impl EmpiricalSpectrum {
    pub fn max(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(f64::NAN)
    }

    pub fn mean(&self) -> f64 {
        self.eigenvalues.iter().sum::<f64>() / self.eigenvalues.len() as f64
    }

    /// 1-Wasserstein distance between the pooled eigenvalues and the
    /// analytic law, pairing the k-th smallest eigenvalue with the
    /// `(k + ½)/N` quantile.
    pub fn wasserstein_to(&self, law: &ParamSpectrum) -> f64 {
        let n = self.eigenvalues.len() as f64;
        self.eigenvalues
            .iter()
            .enumerate()
            .map(|(k, &lam)| (lam - law.quantile((k as f64 + 0.5) / n)).abs())
            .sum::<f64>()
            / n
    }
}

/// Eigenvalues (ascending) of `J Jᵀ` for one network at input `x`.
pub fn jacobian_spectrum(config: &NetConfig, weights: &WeightSet, x: &DVector<f64>) -> Result<Vec<f64>, SpectraError> {
    let j = jacobian(config, weights, x)?;
    let jjt = &j * j.transpose();
    if jjt.iter().any(|v| !v.is_finite()) {
        return Err(SpectraError::Eigen("non-finite Jacobian".into()));
    }
    let mut ev: Vec<f64> = SymmetricEigen::new(jjt).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// Samples `replicates` networks (seed `seed + r` for replicate `r`) and
/// pools the spectra of `J Jᵀ`. ReLU masks come from a forward pass on `x`,
/// or on a fresh standard-normal input per replicate when `x` is `None`.
pub fn empirical_spectrum(
    config: &NetConfig,
    x: Option<&DVector<f64>>,
    replicates: usize,
    seed: u64,
) -> Result<EmpiricalSpectrum, SpectraError> {
    let n0 = config.input_dim();
    let per_rep: Vec<Vec<f64>> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let s = seed.wrapping_add(r as u64);
            let w = init_weights(config, s)?;
            let input = match x {
                Some(v) => v.clone(),
                None => {
                    let mut rng = rng_for(s);
                    rng.set_stream(1);
                    DVector::from_fn(n0, |_, _| rng.sample::<f64, _>(StandardNormal))
                }
            };
            jacobian_spectrum(config, &w, &input)
        })
        .collect::<Result<_, _>>()?;
    let mut eigenvalues: Vec<f64> = per_rep.into_iter().flatten().collect();
    eigenvalues.sort_by(f64::total_cmp);
    Ok(EmpiricalSpectrum {
        eigenvalues,
        width: config.widths[1],
        depth: config.depth(),
        init: config.init,
        replicates,
    })
}
