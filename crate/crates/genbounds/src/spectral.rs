use netcore::WeightSet;
use serde::Serialize;

use crate::{check_delta, check_positive, BoundReport, BoundsError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LayerNorms {
    pub spectral: f64,
    pub frobenius: f64,
    /// `‖Wᵀ‖_{2,1}`: the sum of the Euclidean norms of the columns of `W`.
    pub l21: f64,
    pub rows: usize,
    pub cols: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormProfile {
    pub layers: Vec<LayerNorms>,
}

impl NormProfile {
    pub fn max_width(&self) -> usize {
        self.layers.iter().map(|l| l.rows.max(l.cols)).max().unwrap_or(0)
    }

    pub fn spectral(&self) -> Vec<f64> {
        self.layers.iter().map(|l| l.spectral).collect()
    }

    pub fn l21(&self) -> Vec<f64> {
        self.layers.iter().map(|l| l.l21).collect()
    }

    pub fn widths(&self) -> Vec<usize> {
        let mut w: Vec<usize> = self.layers.iter().map(|l| l.cols).collect();
        if let Some(last) = self.layers.last() {
            w.push(last.rows);
        }
        w
    }
}

pub fn norm_profile(weights: &WeightSet) -> NormProfile {
    let layers = weights
        .matrices
        .iter()
        .map(|w| {
            let spectral = if w.is_empty() {
                0.0
            } else {
                w.clone().svd(false, false).singular_values.max()
            };
            LayerNorms {
                spectral,
                frobenius: w.norm(),
                l21: w.column_iter().map(|c| c.norm()).sum(),
                rows: w.nrows(),
                cols: w.ncols(),
            }
        })
        .collect();
    NormProfile { layers }
}

/// `(Σ_l (b_l Π_{l′≠l} s_{l′})^{2/3})^{3/2}`.
pub fn spectral_complexity(s: &[f64], b: &[f64]) -> f64 {
    assert_eq!(s.len(), b.len(), "one spectral and one (2,1) norm per layer");
    let sum: f64 = (0..s.len())
        .map(|l| {
            let others: f64 = s.iter().enumerate().filter(|(k, _)| *k != l).map(|(_, v)| v).product();
            (b[l] * others).powf(2.0 / 3.0)
        })
        .sum();
    sum.powf(1.5)
}

/// Dudley-integral Rademacher bound at the optimal cutoff:
/// `(12/m)K(1 − ln(6K/m))` with `K = C‖X‖_F 𝓡/γ`. Returns
/// `(rademacher, ε_opt, valid)`; outside the valid regime `6K/m < 1` the
/// cutoff exceeds the integration range.
pub fn bartlett_rademacher(complexity: f64, c: f64, x_norm_f: f64, gamma: f64, m: u64) -> (f64, f64, bool) {
    let mf = m as f64;
    let k = c * x_norm_f * complexity / gamma;
    let u = 6.0 * k / mf;
    let eps_opt = 3.0 * k / mf.sqrt();
    (12.0 / mf * k * (1.0 - u.ln()), eps_opt, u < 1.0)
}

/// Bartlett margin bound from an explicit spectral complexity.
#[allow(clippy::too_many_arguments)]
pub fn bartlett_from_complexity(
    complexity: f64,
    max_width: usize,
    x_norm_f: f64,
    gamma: f64,
    m: u64,
    delta: f64,
    margin_risk: f64,
) -> Result<BoundReport> {
    check_delta(delta)?;
    check_positive("gamma", gamma)?;
    check_positive("spectral complexity", complexity)?;
    check_positive("input norm", x_norm_f)?;
    if m == 0 || max_width == 0 {
        return Err(BoundsError::Domain("m and widths must be positive".into()));
    }
    let c = (2.0 * (max_width as f64).powi(2)).ln().sqrt();
    let (rad, eps_opt, valid) = bartlett_rademacher(complexity, c, x_norm_f, gamma, m);
    let conf = ((1.0 / delta).ln() / (2.0 * m as f64)).sqrt();
    let mut report = BoundReport::new("bartlett")
        .input("m", m as f64)
        .input("delta", delta)
        .input("gamma", gamma)
        .input("x_norm_f", x_norm_f)
        .input("margin_risk", margin_risk)
        .mid("spectral_complexity", complexity)
        .mid("c", c)
        .mid("eps_opt", eps_opt)
        .mid("rademacher", rad)
        .mid("confidence_term", conf);
    if valid {
        report = report.finish(margin_risk + 2.0 * rad + conf);
    } else {
        report = report.out_of_regime("log_argument_at_least_one");
    }
    Ok(report)
}

/// Bartlett bound for a priori norm caps equal to the given profile.
pub fn bartlett_bound(
    norms: &NormProfile,
    x_norm_f: f64,
    gamma: f64,
    m: u64,
    delta: f64,
    margin_risk: f64,
) -> Result<BoundReport> {
    let (s, b) = (norms.spectral(), norms.l21());
    if s.iter().chain(&b).any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(BoundsError::Domain("all norms must be positive".into()));
    }
    let mut report = bartlett_from_complexity(
        spectral_complexity(&s, &b),
        norms.max_width(),
        x_norm_f,
        gamma,
        m,
        delta,
        margin_risk,
    )?;
    report.widths = Some(norms.widths());
    Ok(report)
}

/// Grid cell of the a posteriori union bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridChoice {
    pub i_star: Vec<u64>,
    pub j_star: Vec<u64>,
    pub grid_denominator: f64,
    pub delta_star: f64,
    pub log_inv_delta_star: f64,
}

impl GridChoice {
    pub fn s_star(&self) -> Vec<f64> {
        self.i_star.iter().map(|&i| i as f64 / self.grid_denominator).collect()
    }

    pub fn b_star(&self) -> Vec<f64> {
        self.j_star.iter().map(|&j| j as f64 / self.grid_denominator).collect()
    }
}

/// Smallest grid index `i` with `i / denominator > norm`.
fn grid_index(norm: f64, denominator: f64) -> u64 {
    ((norm * denominator).floor() as u64 + 1).max(1)
}

/// Places each norm on the grid `s_l(i) = i/L`, `b_l(j) = j/L` and allocates
/// `δ(i, j) = δ / Π_l i_l(i_l+1) j_l(j_l+1)`.
pub fn a_posteriori_grid(norms: &NormProfile, delta: f64, grid_denominator: f64) -> Result<GridChoice> {
    check_delta(delta)?;
    check_positive("grid denominator", grid_denominator)?;
    if norms.layers.iter().any(|l| !l.spectral.is_finite() || !l.l21.is_finite()) {
        return Err(BoundsError::Domain("norms must be finite".into()));
    }
    let i_star: Vec<u64> = norms.layers.iter().map(|l| grid_index(l.spectral, grid_denominator)).collect();
    let j_star: Vec<u64> = norms.layers.iter().map(|l| grid_index(l.l21, grid_denominator)).collect();
    let penalty: f64 = i_star
        .iter()
        .chain(&j_star)
        .map(|&k| (k as f64).ln() + (k as f64 + 1.0).ln())
        .sum();
    let log_inv_delta_star = (1.0 / delta).ln() + penalty;
    Ok(GridChoice {
        i_star,
        j_star,
        grid_denominator,
        delta_star: (-log_inv_delta_star).exp(),
        log_inv_delta_star,
    })
}

/// Bartlett bound valid for learned weights: norm caps taken from the grid
/// cell, confidence from `δ(i*, j*)`.
pub fn bartlett_a_posteriori(
    norms: &NormProfile,
    x_norm_f: f64,
    gamma: f64,
    m: u64,
    delta: f64,
    margin_risk: f64,
) -> Result<BoundReport> {
    let denominator = (norms.layers.len().saturating_sub(1)).max(1) as f64;
    let grid = a_posteriori_grid(norms, delta, denominator)?;
    check_delta(delta)?;
    check_positive("gamma", gamma)?;
    check_positive("input norm", x_norm_f)?;
    if m == 0 {
        return Err(BoundsError::Domain("m must be positive".into()));
    }
    let complexity = spectral_complexity(&grid.s_star(), &grid.b_star());
    let c = (2.0 * (norms.max_width() as f64).powi(2)).ln().sqrt();
    let (rad, eps_opt, valid) = bartlett_rademacher(complexity, c, x_norm_f, gamma, m);
    let conf = (grid.log_inv_delta_star / (2.0 * m as f64)).sqrt();
    let mut report = BoundReport::new("bartlett_a_posteriori")
        .input("m", m as f64)
        .input("delta", delta)
        .input("gamma", gamma)
        .input("x_norm_f", x_norm_f)
        .input("margin_risk", margin_risk)
        .mid("spectral_complexity", complexity)
        .mid("c", c)
        .mid("eps_opt", eps_opt)
        .mid("rademacher", rad)
        .mid("confidence_term", conf);
    report.widths = Some(norms.widths());
    report.grid = Some(grid);
    if valid {
        Ok(report.finish(margin_risk + 2.0 * rad + conf))
    } else {
        Ok(report.out_of_regime("log_argument_at_least_one"))
    }
}

/// `(Π‖W_l‖₂) √(Σ ‖W_l‖_F² / ‖W_l‖₂²)`.
pub fn neyshabur_complexity(norms: &NormProfile) -> Result<f64> {
    if let Some(l) = norms.layers.iter().position(|l| l.spectral <= 0.0) {
        return Err(BoundsError::ZeroNorm(l));
    }
    let product: f64 = norms.layers.iter().map(|l| l.spectral).product();
    let ratio: f64 = norms.layers.iter().map(|l| (l.frobenius / l.spectral).powi(2)).sum();
    Ok(product * ratio.sqrt())
}

/// The square-root term of the Neyshabur et al. bound for `layers` weight
/// matrices and maximal width `n`.
#[allow(clippy::too_many_arguments)]
pub fn neyshabur_gap(complexity: f64, input_bound: f64, gamma: f64, layers: usize, n: usize, m: u64, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    check_positive("gamma", gamma)?;
    check_positive("input bound B", input_bound)?;
    if layers == 0 || n == 0 || m == 0 {
        return Err(BoundsError::Domain("layers, width and m must be positive".into()));
    }
    let (l, nf, mf) = (layers as f64, n as f64, m as f64);
    let e4 = 4f64.exp();
    let inner = (8.0 * l * mf / delta).ln()
        + mf.ln() / (2.0 * l)
        + 8.0 * e4 * (input_bound * complexity / gamma).powi(2) * l * l * nf * (2.0 * l * nf).ln();
    Ok((inner / (2.0 * mf - 1.0)).sqrt())
}

pub fn neyshabur_bound(
    weights: &WeightSet,
    gamma: f64,
    input_bound: f64,
    m: u64,
    delta: f64,
    margin_risk: f64,
) -> Result<BoundReport> {
    let norms = norm_profile(weights);
    let complexity = neyshabur_complexity(&norms)?;
    let n = norms.max_width();
    let gap = neyshabur_gap(complexity, input_bound, gamma, norms.layers.len(), n, m, delta)?;
    let mut report = BoundReport::new("neyshabur")
        .input("m", m as f64)
        .input("delta", delta)
        .input("gamma", gamma)
        .input("input_bound", input_bound)
        .input("margin_risk", margin_risk)
        .mid("spectral_complexity", complexity)
        .mid("gap", gap);
    report.widths = Some(norms.widths());
    Ok(report.finish(margin_risk + gap))
}
