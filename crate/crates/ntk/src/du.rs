use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use netcore::rng_for;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::{KernelGram, KernelTag, NtkError};

/// `H^∞_{kl} = x_kᵀx_l (π − θ_{kl}) / (2π)`, the expected gram of
/// `1[wᵀx_k > 0] 1[wᵀx_l > 0] x_kᵀx_l` over `w ∼ N(0, I)`.
pub fn h_infinity(x: &DMatrix<f64>) -> KernelGram {
    let g = x.transpose() * x;
    let m = x.ncols();
    let h = DMatrix::from_fn(m, m, |k, l| {
        let denom = (g[(k, k)] * g[(l, l)]).sqrt();
        if denom == 0.0 {
            return 0.0;
        }
        let theta = (g[(k, l)] / denom).clamp(-1.0, 1.0).acos();
        g[(k, l)] * (PI - theta) / (2.0 * PI)
    });
    KernelGram::new(h, KernelTag::HInfinity)
}

/// Monte Carlo estimate of `H^∞` from `samples` gaussian directions.
pub fn h_infinity_monte_carlo(x: &DMatrix<f64>, samples: usize, seed: u64) -> KernelGram {
    let mut rng = rng_for(seed);
    let w = DMatrix::from_fn(samples, x.nrows(), |_, _| {
        let z: f64 = StandardNormal.sample(&mut rng);
        z
    });
    let act = (w * x).map(|z| if z > 0.0 { 1.0 } else { 0.0 });
    let counts = act.transpose() * &act / samples as f64;
    KernelGram::new(counts.component_mul(&(x.transpose() * x)), KernelTag::HInfinity)
}

/// Unit-norm gaussian inputs (one per column) and labels uniform on
/// `(−0.9, 0.9)`.
pub fn du_dataset(m: usize, d: usize, seed: u64) -> (DMatrix<f64>, DVector<f64>) {
    let mut rng = rng_for(seed);
    let mut x = DMatrix::from_fn(d, m, |_, _| {
        let z: f64 = StandardNormal.sample(&mut rng);
        z
    });
    for mut c in x.column_iter_mut() {
        let n = c.norm();
        c /= n;
    }
    let y = DVector::from_fn(m, |_, _| rng.random_range(-0.9..0.9));
    (x, y)
}

#[derive(Debug, Clone)]
pub struct DuConfig {
    pub width: usize,
    pub eta: f64,
    pub steps: usize,
    /// Record every this many steps (the last step is always recorded).
    pub record_every: usize,
    pub seed: u64,
    /// Directions for the Monte Carlo estimate of `H^∞`.
    pub mc_samples: usize,
}

impl DuConfig {
    pub fn new(width: usize, eta: f64, steps: usize, seed: u64) -> Self {
        Self {
            width,
            eta,
            steps,
            record_every: 1,
            seed,
            mc_samples: 200_000,
        }
    }
}

/// Recorded quantities of the two-layer simulation, indexed by time
/// `t = η · step`.
#[derive(Debug, Clone)]
pub struct DuTrajectory {
    pub times: Vec<f64>,
    /// `‖y⃗ − u(t)‖²`.
    pub loss: Vec<f64>,
    pub lambda_min: Vec<f64>,
    pub max_displacement: Vec<f64>,
    /// `‖H(t) − H(0)‖_F`.
    pub h_drift: Vec<f64>,
    pub h_inf: KernelGram,
    pub h_inf_mc: KernelGram,
    pub lambda0: f64,
    /// `(2/λ₀) √(m/n) ‖y⃗ − u(0)‖`.
    pub r_prime: f64,
}

impl DuTrajectory {
    /// Largest ratio `loss(t) / (e^{−λ₀t} loss(0))` over the record.
    pub fn worst_decay_ratio(&self) -> f64 {
        let l0 = self.loss[0];
        self.times
            .iter()
            .zip(&self.loss)
            .map(|(t, l)| l / ((-self.lambda0 * t).exp() * l0))
            .fold(0.0, f64::max)
    }
}

fn gram_h(act: &DMatrix<f64>, xtx: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    (act.transpose() * act / n as f64).component_mul(xtx)
}

/// Gradient descent on `½‖y⃗ − u‖²` for `u_k = n^{−1/2} Σ_i a_i relu(w_iᵀx_k)`
/// with the output signs `a_i ∈ {±1}` frozen, recording loss, the
/// smallest eigenvalue of `H(t)` and the largest weight displacement.
pub fn du_convergence_monitor(x: &DMatrix<f64>, y: &DVector<f64>, cfg: &DuConfig) -> Result<DuTrajectory, NtkError> {
    let (d, m) = (x.nrows(), x.ncols());
    if y.len() != m {
        return Err(NtkError::Shape(format!("{m} inputs but {} labels", y.len())));
    }
    if x.column_iter().any(|c| c.norm() > 1.0 + 1e-12) {
        return Err(NtkError::Invalid("inputs must lie in the unit ball".into()));
    }
    if y.iter().any(|v| v.abs() >= 1.0) {
        return Err(NtkError::Invalid("labels must satisfy |y| < 1".into()));
    }
    if cfg.width == 0 || !(cfg.eta > 0.0) || cfg.record_every == 0 {
        return Err(NtkError::Invalid("width, eta and record_every must be positive".into()));
    }
    let n = cfg.width;
    let mut rng = rng_for(cfg.seed);
    let w0 = DMatrix::from_fn(n, d, |_, _| {
        let z: f64 = StandardNormal.sample(&mut rng);
        z
    });
    let a = DVector::from_fn(n, |_, _| if rng.random_bool(0.5) { 1.0 } else { -1.0 });
    let scale = 1.0 / (n as f64).sqrt();
    let xtx = x.transpose() * x;
    let h_inf = h_infinity(x);
    let h_inf_mc = h_infinity_monte_carlo(x, cfg.mc_samples, cfg.seed.wrapping_add(1));
    let lambda0 = h_inf.min_eigenvalue();

    let mut w = w0.clone();
    let mut out = DuTrajectory {
        times: Vec::new(),
        loss: Vec::new(),
        lambda_min: Vec::new(),
        max_displacement: Vec::new(),
        h_drift: Vec::new(),
        h_inf,
        h_inf_mc,
        lambda0,
        r_prime: 0.0,
    };
    let mut h0 = None;
    for step in 0..=cfg.steps {
        let z = &w * x;
        let act = z.map(|v| if v > 0.0 { 1.0 } else { 0.0 });
        let u = z.map(|v| v.max(0.0)).tr_mul(&a) * scale;
        let r = &u - y;
        if step % cfg.record_every == 0 || step == cfg.steps {
            let h = gram_h(&act, &xtx, n);
            let h_start = h0.get_or_insert_with(|| h.clone());
            out.times.push(cfg.eta * step as f64);
            out.loss.push(r.norm_squared());
            out.lambda_min.push(SymmetricEigen::new(h.clone()).eigenvalues.min());
            out.h_drift.push((&h - &*h_start).norm());
            let disp = (&w - &w0).row_iter().map(|row| row.norm()).fold(0.0, f64::max);
            out.max_displacement.push(disp);
        }
        if step == cfg.steps {
            break;
        }
        // ∂/∂w_i = n^{−1/2} a_i Σ_k r_k 1[w_iᵀx_k > 0] x_k
        let mut coeff = act;
        for (k, mut col) in coeff.column_iter_mut().enumerate() {
            col *= r[k];
        }
        for (i, mut row) in coeff.row_iter_mut().enumerate() {
            row *= a[i] * scale;
        }
        w -= coeff * x.transpose() * cfg.eta;
    }
    out.r_prime = 2.0 / lambda0 * (m as f64 / n as f64).sqrt() * out.loss[0].sqrt();
    Ok(out)
}
