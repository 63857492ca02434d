use nalgebra::DMatrix;
use netcore::{haar_orthogonal, rng_for};

use crate::LinDynError;

/// Settings for full-matrix gradient descent on a deep linear network with
/// whitened inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct GdConfig {
    /// Hidden depth `L`; the network has `L + 1` square `n × n` matrices
    /// with `n = target_svals.len()`.
    pub depth: usize,
    pub target_svals: Vec<f64>,
    pub eta: f64,
    pub seed: u64,
    /// Stop once `½‖S − ∏W‖²_F ≤ tol_loss`; defaults to `1e−4 · max(s)²`.
    pub tol_loss: Option<f64>,
    /// Initial per-mode product `u₀`; every diagonal factor starts at
    /// `u₀^{1/(L+1)}` (balanced initialization).
    pub init_product: f64,
    pub max_steps: usize,
}

impl GdConfig {
    pub fn new(depth: usize, target_svals: Vec<f64>, eta: f64, seed: u64) -> Self {
        GdConfig {
            depth,
            target_svals,
            eta,
            seed,
            tol_loss: None,
            init_product: 0.1,
            max_steps: 1_000_000,
        }
    }

    pub fn tolerance(&self) -> f64 {
        self.tol_loss.unwrap_or_else(|| {
            let s = self.target_svals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            1e-4 * s * s
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GdRun {
    /// Number of GD steps taken until the loss met the tolerance.
    pub steps: usize,
    /// Loss before each step and after the last one (`steps + 1` values).
    pub losses: Vec<f64>,
    /// `modes[t][k]`: mode product `u_k` after `t` steps, read off as the
    /// diagonal of `R_{L+1}ᵀ (∏W) R_0`.
    pub modes: Vec<Vec<f64>>,
    /// Largest off-diagonal magnitude of `R_{L+1}ᵀ (∏W) R_0` over the run;
    /// zero up to round-off when the modes stay decoupled.
    pub max_coupling: f64,
}

fn product(ws: &[DMatrix<f64>], n: usize) -> DMatrix<f64> {
    ws.iter().fold(DMatrix::identity(n, n), |acc, w| w * acc)
}

/// Runs gradient descent on `½‖Σ_yx − W_L ⋯ W_0‖²_F` with
/// `Σ_yx = R_{L+1} diag(s) R_0ᵀ` and `W_l = R_{l+1} (ε I) R_lᵀ` for
/// independent Haar-random orthogonal `R_0 … R_{L+1}`.
pub fn simulate_deep_linear_gd(cfg: &GdConfig) -> Result<GdRun, LinDynError> {
    let n = cfg.target_svals.len();
    if n == 0 || cfg.depth < 1 {
        return Err(LinDynError::Invalid("need at least one mode and depth >= 1".into()));
    }
    if !(cfg.eta > 0.0) || !(cfg.init_product > 0.0) {
        return Err(LinDynError::Invalid("learning rate and initial product must be positive".into()));
    }
    let mut rng = rng_for(cfg.seed);
    let rs: Vec<DMatrix<f64>> = (0..cfg.depth + 2).map(|_| haar_orthogonal(n, &mut rng)).collect();
    let eps = cfg.init_product.powf(1.0 / (cfg.depth as f64 + 1.0));
    let mut ws: Vec<DMatrix<f64>> = (0..=cfg.depth)
        .map(|l| &rs[l + 1] * (eps * &rs[l].transpose()))
        .collect();
    let target = &rs[cfg.depth + 1] * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(cfg.target_svals.clone())) * rs[0].transpose();
    let out_basis = rs[cfg.depth + 1].transpose();
    let in_basis = &rs[0];

    let tol = cfg.tolerance();
    let mut losses = Vec::new();
    let mut modes = Vec::new();
    let mut max_coupling: f64 = 0.0;
    let mut record = |p: &DMatrix<f64>, modes: &mut Vec<Vec<f64>>| {
        let m = &out_basis * p * in_basis;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    max_coupling = max_coupling.max(m[(i, j)].abs());
                }
            }
        }
        modes.push((0..n).map(|k| m[(k, k)]).collect());
    };

    let mut p = product(&ws, n);
    let mut loss = 0.5 * (&target - &p).norm_squared();
    let initial = loss;
    losses.push(loss);
    record(&p, &mut modes);
    let mut steps = 0;
    while loss > tol {
        if steps >= cfg.max_steps {
            return Err(LinDynError::NotConverged { loss, steps });
        }
        let residual = &target - &p;
        // prefix[l] = W_{l−1} ⋯ W_0, suffix[l] = W_L ⋯ W_{l+1}.
        let mut prefix = Vec::with_capacity(ws.len());
        let mut acc = DMatrix::identity(n, n);
        for w in &ws {
            prefix.push(acc.clone());
            acc = w * acc;
        }
        let mut suffix = vec![DMatrix::identity(n, n); ws.len()];
        for l in (0..ws.len() - 1).rev() {
            suffix[l] = &suffix[l + 1] * &ws[l + 1];
        }
        for l in 0..ws.len() {
            let grad = -(suffix[l].transpose() * &residual * prefix[l].transpose());
            ws[l] -= cfg.eta * grad;
        }
        steps += 1;
        p = product(&ws, n);
        loss = 0.5 * (&target - &p).norm_squared();
        losses.push(loss);
        record(&p, &mut modes);
        if !loss.is_finite() || loss > 10.0 * initial {
            return Err(LinDynError::Divergence { eta: cfg.eta, loss, step: steps });
        }
    }
    Ok(GdRun {
        steps,
        losses,
        modes,
        max_coupling,
    })
}
