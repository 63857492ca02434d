use nalgebra::DMatrix;
use netcore::{init_weights, param_gradient, NetConfig, WeightSet};
use rayon::prelude::*;

use crate::{limiting_ntk, KernelGram, KernelTag, NtkError};

/// Empirical tangent kernel `Θ̂(x_i, x_j) = ∇_θ f(x_i)ᵀ ∇_θ f(x_j)` on the
/// columns of `x`, labelled with time `t`.
///
/// With `k` outputs the result is the `mk × mk` block matrix whose entry
/// `(i·k + a, j·k + b)` pairs output `a` at `x_i` with output `b` at `x_j`.
pub fn empirical_ntk(config: &NetConfig, weights: &WeightSet, x: &DMatrix<f64>, t: f64) -> Result<KernelGram, NtkError> {
    if x.nrows() != config.input_dim() {
        return Err(NtkError::Shape(format!(
            "data has {} rows, network input is {}",
            x.nrows(),
            config.input_dim()
        )));
    }
    let k = config.output_dim();
    let jobs: Vec<(usize, usize)> = (0..x.ncols()).flat_map(|i| (0..k).map(move |a| (i, a))).collect();
    let rows: Vec<Vec<f64>> = jobs
        .par_iter()
        .map(|&(i, a)| param_gradient(config, weights, &x.column(i).into_owned(), a).map(|g| g.flatten()))
        .collect::<Result<_, _>>()?;
    let p = weights.num_params();
    let jac = DMatrix::from_fn(rows.len(), p, |r, c| rows[r][c]);
    Ok(KernelGram::new(&jac * jac.transpose(), KernelTag::EmpiricalNtk { t }))
}

/// `‖Θ̂ − Θ_0‖_F / ‖Θ_0‖_F`.
pub fn kernel_deviation(empirical: &KernelGram, limit: &KernelGram) -> f64 {
    (&empirical.matrix - &limit.matrix).norm() / limit.matrix.norm()
}

/// Deviation statistics at one width.
#[derive(Debug, Clone)]
pub struct WidthDeviation {
    pub width: usize,
    pub per_seed: Vec<f64>,
    pub median: f64,
    pub mean: f64,
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Relative deviation of the empirical kernel from the limiting one for
/// each hidden width in `widths`, over `seeds` weight draws. `make`
/// builds the configuration for a given hidden width; replicate `r` uses
/// seed `base_seed + r`.
pub fn width_scan<F>(make: F, x: &DMatrix<f64>, widths: &[usize], seeds: usize, base_seed: u64) -> Result<Vec<WidthDeviation>, NtkError>
where
    F: Fn(usize) -> Result<NetConfig, NtkError> + Sync,
{
    widths
        .iter()
        .map(|&n| {
            let cfg = make(n)?;
            let limit = limiting_ntk(x, &cfg)?;
            let per_seed: Vec<f64> = (0..seeds as u64)
                .into_par_iter()
                .map(|r| {
                    let w = init_weights(&cfg, base_seed + r)?;
                    Ok(kernel_deviation(&empirical_ntk(&cfg, &w, x, 0.0)?, &limit))
                })
                .collect::<Result<_, NtkError>>()?;
            let mean = per_seed.iter().sum::<f64>() / per_seed.len() as f64;
            Ok(WidthDeviation {
                width: n,
                median: median(&per_seed),
                mean,
                per_seed,
            })
        })
        .collect()
}
