use std::f64::consts::{LN_2, PI};

use nalgebra::DMatrix;
use netcore::{output, param_gradient, rng_for, NetConfig, WeightSet};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::margin::{check_data, outputs};
use crate::{check_delta, check_positive, BoundReport, BoundsError, Result};

/// `Q = N(μ, diag(e^λ))` against the prior `P = N(μ*, e^{λ*} I)`, all
/// parameters flattened in [`WeightSet::flatten`] order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianPosterior {
    pub mu: Vec<f64>,
    pub log_var: Vec<f64>,
    pub prior_mu: Vec<f64>,
    pub prior_log_var: f64,
}

impl GaussianPosterior {
    /// Posterior centred at `weights` with a shared log-variance, prior
    /// centred at `prior`.
    pub fn around(weights: &WeightSet, prior: &WeightSet, log_var: f64, prior_log_var: f64) -> Result<Self> {
        let mu = weights.flatten();
        let prior_mu = prior.flatten();
        if mu.len() != prior_mu.len() {
            return Err(BoundsError::Domain("posterior and prior shapes differ".into()));
        }
        let out = Self {
            log_var: vec![log_var; mu.len()],
            mu,
            prior_mu,
            prior_log_var,
        };
        out.check()?;
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn check(&self) -> Result<()> {
        let d = self.mu.len();
        if self.log_var.len() != d || self.prior_mu.len() != d {
            return Err(BoundsError::Domain("posterior vectors have different lengths".into()));
        }
        let finite = self
            .mu
            .iter()
            .chain(&self.log_var)
            .chain(&self.prior_mu)
            .all(|v| v.is_finite())
            && self.prior_log_var.is_finite();
        if !finite {
            return Err(BoundsError::Domain("posterior has non-finite entries".into()));
        }
        Ok(())
    }

    pub fn kl(&self) -> f64 {
        gaussian_kl(&self.mu, &self.log_var, &self.prior_mu, self.prior_log_var)
    }

    /// One weight sample `μ + e^{λ/2} ⊙ z`.
    fn sample(&self, template: &WeightSet, noise: &[f64]) -> WeightSet {
        let flat: Vec<f64> = self
            .mu
            .iter()
            .zip(&self.log_var)
            .zip(noise)
            .map(|((m, l), z)| m + (0.5 * l).exp() * z)
            .collect();
        template.with_flat(&flat)
    }
}

/// `½[e^{−λ*}(Σ e^{λ_i} + ‖μ − μ*‖²) + dλ* − Σλ_i − d]`.
pub fn gaussian_kl(mu: &[f64], log_var: &[f64], prior_mu: &[f64], prior_log_var: f64) -> f64 {
    let d = mu.len() as f64;
    let var_sum: f64 = log_var.iter().map(|l| l.exp()).sum();
    let dist2: f64 = mu.iter().zip(prior_mu).map(|(a, b)| (a - b).powi(2)).sum();
    let log_sum: f64 = log_var.iter().sum();
    0.5 * ((-prior_log_var).exp() * (var_sum + dist2) + d * prior_log_var - log_sum - d)
}

/// `√((ln(4m/δ) + KL)/(2m − 1))`.
pub fn mcallester_gap(kl: f64, m: u64, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    if kl < 0.0 || !kl.is_finite() {
        return Err(BoundsError::Domain(format!("KL must be finite and non-negative, got {kl}")));
    }
    if m == 0 {
        return Err(BoundsError::Domain("m must be at least 1".into()));
    }
    let mf = m as f64;
    Ok((((4.0 * mf / delta).ln() + kl) / (2.0 * mf - 1.0)).sqrt())
}

pub fn pacbayes_mcallester(kl: f64, m: u64, delta: f64, empirical_risk: f64) -> Result<BoundReport> {
    let gap = mcallester_gap(kl, m, delta)?;
    Ok(BoundReport::new("mcallester")
        .input("m", m as f64)
        .input("delta", delta)
        .input("kl", kl)
        .input("empirical_risk", empirical_risk)
        .mid("gap", gap)
        .finish(empirical_risk + gap))
}

fn template(config: &NetConfig) -> WeightSet {
    let w = &config.widths;
    WeightSet::new((0..w.len() - 1).map(|l| DMatrix::zeros(w[l + 1], w[l])).collect())
}

fn noise(dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng_for(seed);
    (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// Monte Carlo 0/1 risk of the stochastic network: `(mean, standard error)`.
fn stochastic_risk(
    posterior: &GaussianPosterior,
    config: &NetConfig,
    x: &DMatrix<f64>,
    y: &[f64],
    samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let shape = template(config);
    if shape.num_params() != posterior.dim() {
        return Err(BoundsError::Domain(format!(
            "posterior has {} parameters, network has {}",
            posterior.dim(),
            shape.num_params()
        )));
    }
    if samples < 2 {
        return Err(BoundsError::Domain("need at least two posterior samples".into()));
    }
    let risks: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|s| {
            let w = posterior.sample(&shape, &noise(posterior.dim(), seed.wrapping_add(s as u64)));
            let z = outputs(config, &w, x)?;
            Ok(z.iter().zip(y).filter(|(z, y)| *z * *y < 0.0).count() as f64 / y.len() as f64)
        })
        .collect::<Result<_>>()?;
    let n = risks.len() as f64;
    let mean = risks.iter().sum::<f64>() / n;
    let var = risks.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((mean, (var / n).sqrt()))
}

/// McAllester bound for a gaussian posterior, with the empirical risk of
/// the stochastic network estimated from `samples` weight draws.
pub fn pacbayes_gaussian(
    posterior: &GaussianPosterior,
    config: &NetConfig,
    x: &DMatrix<f64>,
    y: &[f64],
    delta: f64,
    samples: usize,
    seed: u64,
) -> Result<BoundReport> {
    posterior.check()?;
    check_data(config, x, y)?;
    let (risk, se) = stochastic_risk(posterior, config, x, y, samples, seed)?;
    let kl = posterior.kl();
    let mut report = pacbayes_mcallester(kl, y.len() as u64, delta, risk)?;
    report.family = "pacbayes".to_string();
    report.intermediates.insert("empirical_risk_se".into(), se);
    report.intermediates.insert("mc_samples".into(), samples as f64);
    Ok(report)
}

/// Settings of the Dziugaite–Roy bound optimization. The prior
/// log-variance lives on the grid `λ*_j = ln c − j/b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrOptions {
    pub b: f64,
    pub c: f64,
    pub delta: f64,
    pub steps: usize,
    /// Fixed noise draws defining the surrogate objective.
    pub noise_samples: usize,
    pub mc_samples: usize,
    pub initial_step: f64,
    pub seed: u64,
}

impl Default for DrOptions {
    fn default() -> Self {
        Self {
            b: 100.0,
            c: 0.1,
            delta: 0.025,
            steps: 200,
            noise_samples: 8,
            mc_samples: 256,
            initial_step: 0.1,
            seed: 0,
        }
    }
}

/// `ln(2π² m j² / (3δ))` with `j = b(ln c − λ*)`: the confidence penalty
/// `ln(4m/δ_j)` for `δ_j = 6δ/(π² j²)`.
pub fn dr_penalty(lambda_star: f64, b: f64, c: f64, m: u64, delta: f64) -> f64 {
    let j = b * (c.ln() - lambda_star);
    (2.0 * PI * PI * m as f64 * j * j / (3.0 * delta)).ln()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DrOutcome {
    pub posterior: GaussianPosterior,
    /// Objective after each step, starting with the initial value.
    pub trace: Vec<f64>,
    pub lambda_star_continuous: f64,
    pub j: u64,
    pub lambda_star_rounded: f64,
    pub objective_before_rounding: f64,
    pub objective_after_rounding: f64,
    /// Rough size of the rounding effect: `|∂J/∂λ*| / (2b)`.
    pub rounding_estimate: f64,
    /// Bound at the initial posterior, evaluated like the final one.
    pub initial: BoundReport,
    pub report: BoundReport,
}

struct Problem<'a> {
    config: &'a NetConfig,
    x: &'a DMatrix<f64>,
    y: &'a [f64],
    shape: WeightSet,
    noise: Vec<Vec<f64>>,
    opts: DrOptions,
}

struct Point {
    mu: Vec<f64>,
    log_var: Vec<f64>,
    lambda_star: f64,
}

fn log2_logistic(v: f64) -> f64 {
    // ln(1 + e^{−v}) computed stably, in bits.
    let l = if v > 0.0 { (-v).exp().ln_1p() } else { -v + v.exp().ln_1p() };
    l / LN_2
}

impl Problem<'_> {
    fn m(&self) -> u64 {
        self.y.len() as u64
    }

    fn sample(&self, p: &Point, k: usize) -> WeightSet {
        let flat: Vec<f64> = p
            .mu
            .iter()
            .zip(&p.log_var)
            .zip(&self.noise[k])
            .map(|((m, l), z)| m + (0.5 * l).exp() * z)
            .collect();
        self.shape.with_flat(&flat)
    }

    fn surrogate(&self, p: &Point) -> Result<f64> {
        let mut total = 0.0;
        for k in 0..self.noise.len() {
            let z = outputs(self.config, &self.sample(p, k), self.x)?;
            total += z.iter().zip(self.y).map(|(z, y)| log2_logistic(z * y)).sum::<f64>();
        }
        Ok(total / (self.noise.len() * self.y.len()) as f64)
    }

    fn kl(&self, p: &Point, prior_mu: &[f64]) -> f64 {
        gaussian_kl(&p.mu, &p.log_var, prior_mu, p.lambda_star)
    }

    fn objective(&self, p: &Point, prior_mu: &[f64]) -> Result<f64> {
        let j = self.opts.b * (self.opts.c.ln() - p.lambda_star);
        // The grid starts at j = 1; below it the penalty would reward
        // leaving the grid.
        if j < 1.0 - 1e-9 {
            return Ok(f64::INFINITY);
        }
        let inner = dr_penalty(p.lambda_star, self.opts.b, self.opts.c, self.m(), self.opts.delta) + self.kl(p, prior_mu);
        Ok(self.surrogate(p)? + (inner / (2.0 * self.m() as f64 - 1.0)).sqrt())
    }

    /// Gradient of the objective with respect to `(μ, λ, λ*)`.
    fn gradient(&self, p: &Point, prior_mu: &[f64]) -> Result<(Vec<f64>, Vec<f64>, f64)> {
        let d = p.mu.len();
        let mut g_mu = vec![0.0; d];
        let mut g_lv = vec![0.0; d];
        let scale = 1.0 / (self.noise.len() * self.y.len()) as f64;
        for k in 0..self.noise.len() {
            let w = self.sample(p, k);
            let mut g_theta = vec![0.0; d];
            for (col, &y) in self.x.column_iter().zip(self.y) {
                let xi = col.into_owned();
                let z = output(self.config, &w, &xi)?[0];
                // d/dz log₂(1 + e^{−yz}) = −y σ(−yz) / ln 2
                let dl = -y / (1.0 + (y * z).exp()) / LN_2 * scale;
                let g = param_gradient(self.config, &w, &xi, 0)?.flatten();
                for (acc, gi) in g_theta.iter_mut().zip(&g) {
                    *acc += dl * gi;
                }
            }
            for i in 0..d {
                g_mu[i] += g_theta[i];
                g_lv[i] += g_theta[i] * self.noise[k][i] * 0.5 * (0.5 * p.log_var[i]).exp();
            }
        }
        let ls = p.lambda_star;
        let inv_prior = (-ls).exp();
        let kl = self.kl(p, prior_mu);
        let penalty = dr_penalty(ls, self.opts.b, self.opts.c, self.m(), self.opts.delta);
        let denom = 2.0 * self.m() as f64 - 1.0;
        let root = ((penalty + kl) / denom).sqrt();
        let outer = 1.0 / (2.0 * root * denom);
        let var_sum: f64 = p.log_var.iter().map(|l| l.exp()).sum();
        let dist2: f64 = p.mu.iter().zip(prior_mu).map(|(a, b)| (a - b).powi(2)).sum();
        for i in 0..d {
            g_mu[i] += outer * inv_prior * (p.mu[i] - prior_mu[i]);
            g_lv[i] += outer * 0.5 * (inv_prior * p.log_var[i].exp() - 1.0);
        }
        let dkl_dls = 0.5 * (d as f64 - inv_prior * (var_sum + dist2));
        let dpen_dls = -2.0 / (self.opts.c.ln() - ls);
        Ok((g_mu, g_lv, outer * (dkl_dls + dpen_dls)))
    }
}

/// Final bound at a grid point: Monte Carlo 0/1 risk plus the McAllester
/// gap with `δ_j`.
fn grid_bound(
    posterior: &GaussianPosterior,
    config: &NetConfig,
    x: &DMatrix<f64>,
    y: &[f64],
    opts: &DrOptions,
    j: u64,
) -> Result<BoundReport> {
    let delta_j = 6.0 * opts.delta / (PI * PI * (j as f64).powi(2));
    let mut report = pacbayes_gaussian(posterior, config, x, y, delta_j, opts.mc_samples, opts.seed)?;
    report.family = "dziugaite_roy".to_string();
    report.inputs.insert("delta".into(), opts.delta);
    report.inputs.insert("b".into(), opts.b);
    report.inputs.insert("c".into(), opts.c);
    report.intermediates.insert("delta_j".into(), delta_j);
    report.intermediates.insert("j".into(), j as f64);
    report.intermediates.insert("lambda_star".into(), posterior.prior_log_var);
    Ok(report)
}

fn round_to_grid(lambda_star: f64, b: f64, c: f64) -> (u64, f64) {
    let j = (b * (c.ln() - lambda_star)).round().max(1.0) as u64;
    (j, c.ln() - j as f64 / b)
}

/// Minimizes `L̂(Q) + √((ln(4m/δ_j) + KL(Q‖P))/(2m − 1))` over the posterior
/// mean, log-variances and prior log-variance by gradient descent with a
/// backtracking line search, then rounds `λ*` to the grid.
pub fn dziugaite_roy_optimize(
    init: &GaussianPosterior,
    config: &NetConfig,
    x: &DMatrix<f64>,
    y: &[f64],
    opts: &DrOptions,
) -> Result<DrOutcome> {
    init.check()?;
    check_data(config, x, y)?;
    check_delta(opts.delta)?;
    check_positive("b", opts.b)?;
    check_positive("c", opts.c)?;
    check_positive("initial step", opts.initial_step)?;
    if opts.noise_samples == 0 {
        return Err(BoundsError::Domain("need at least one noise sample".into()));
    }
    let shape = template(config);
    if shape.num_params() != init.dim() {
        return Err(BoundsError::Domain("posterior does not match the network".into()));
    }
    let noise = (0..opts.noise_samples)
        .map(|k| noise(init.dim(), opts.seed.wrapping_add(1_000_003 * (k as u64 + 1))))
        .collect();
    let problem = Problem {
        config,
        x,
        y,
        shape,
        noise,
        opts: *opts,
    };
    let prior_mu = &init.prior_mu;
    let mut point = Point {
        mu: init.mu.clone(),
        log_var: init.log_var.clone(),
        lambda_star: init.prior_log_var,
    };
    let mut value = problem.objective(&point, prior_mu)?;
    if !value.is_finite() {
        return Err(BoundsError::NonFinite(format!("initial objective is {value}")));
    }
    let mut trace = vec![value];
    let mut step = opts.initial_step;
    for _ in 0..opts.steps {
        let (g_mu, g_lv, g_ls) = problem.gradient(&point, prior_mu)?;
        let g2: f64 = g_mu.iter().chain(&g_lv).map(|v| v * v).sum::<f64>() + g_ls * g_ls;
        if !g2.is_finite() {
            return Err(BoundsError::NonFinite("gradient".into()));
        }
        let mut accepted = None;
        let mut t = step * 2.0;
        for _ in 0..50 {
            let trial = Point {
                mu: point.mu.iter().zip(&g_mu).map(|(p, g)| p - t * g).collect(),
                log_var: point.log_var.iter().zip(&g_lv).map(|(p, g)| p - t * g).collect(),
                lambda_star: point.lambda_star - t * g_ls,
            };
            let v = problem.objective(&trial, prior_mu)?;
            if v.is_finite() && v <= value - 1e-4 * t * g2 {
                accepted = Some((trial, v));
                break;
            }
            t *= 0.5;
        }
        if let Some((p, v)) = accepted {
            point = p;
            value = v;
            step = t;
        }
        trace.push(value);
    }
    let objective_before_rounding = value;
    let lambda_star_continuous = point.lambda_star;
    let (_, _, g_ls) = problem.gradient(&point, prior_mu)?;
    let (j, lambda_star_rounded) = round_to_grid(lambda_star_continuous, opts.b, opts.c);
    point.lambda_star = lambda_star_rounded;
    let objective_after_rounding = problem.objective(&point, prior_mu)?;
    let posterior = GaussianPosterior {
        mu: point.mu,
        log_var: point.log_var,
        prior_mu: prior_mu.clone(),
        prior_log_var: lambda_star_rounded,
    };
    let (j0, ls0) = round_to_grid(init.prior_log_var, opts.b, opts.c);
    let initial = grid_bound(
        &GaussianPosterior {
            prior_log_var: ls0,
            ..init.clone()
        },
        config,
        x,
        y,
        opts,
        j0,
    )?;
    let mut report = grid_bound(&posterior, config, x, y, opts, j)?;
    report.intermediates.insert("objective".into(), objective_after_rounding);
    Ok(DrOutcome {
        posterior,
        trace,
        lambda_star_continuous,
        j,
        lambda_star_rounded,
        objective_before_rounding,
        objective_after_rounding,
        rounding_estimate: g_ls.abs() / (2.0 * opts.b),
        initial,
        report,
    })
}

/// Two gaussian blobs in the plane centred at `±(1, 1)` with labels `±1`.
pub fn two_blobs(m: usize, spread: f64, seed: u64) -> (DMatrix<f64>, Vec<f64>) {
    let mut rng = rng_for(seed);
    let y: Vec<f64> = (0..m).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
    let x = DMatrix::from_fn(2, m, |_, i| {
        let z: f64 = StandardNormal.sample(&mut rng);
        y[i] + spread * z
    });
    (x, y)
}
