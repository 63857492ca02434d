use nalgebra::{DMatrix, DVector};
use netcore::{init_weights, Activation, NetConfig, WeightSet};
use numerics::{loglog_slope, mean_and_se};
use rayon::prelude::*;

use crate::{exact_correlation, ContractionSpec, WickError};

/// Parameter-space vector with the block layout of [`LinearNet`].
pub type Params = WeightSet;

/// `f(x) = n^{−L/2} aᵀ W_{L−1} ⋯ W_0 x` with unit gaussian weights.
#[derive(Debug, Clone)]
pub struct LinearNet {
    /// `W_0, …, W_{L−1}` followed by `aᵀ` as a `1 × n` matrix.
    pub weights: WeightSet,
    scale: f64,
}

struct Pass {
    /// `h_0 = x, …, h_L`.
    forward: Vec<DVector<f64>>,
    /// `b_1, …, b_L` stored at indices `1..=L` (`b_L = a`).
    backward: Vec<DVector<f64>>,
}

impl LinearNet {
    /// Samples a width-`n`, depth-`depth` net on `d`-dimensional inputs.
    pub fn sample(d: usize, n: usize, depth: usize, seed: u64) -> Result<Self, WickError> {
        let mut widths = vec![d];
        widths.extend(std::iter::repeat_n(n, depth));
        widths.push(1);
        let cfg = NetConfig::ntk(widths, Activation::Linear, 1.0)?;
        let weights = init_weights(&cfg, seed)?;
        Ok(Self::from_weights(weights))
    }

    pub fn from_weights(weights: WeightSet) -> Self {
        let depth = weights.matrices.len() - 1;
        let n = weights.matrices[0].nrows() as f64;
        Self {
            weights,
            scale: n.powf(-(depth as f64) / 2.0),
        }
    }

    pub fn depth(&self) -> usize {
        self.weights.matrices.len() - 1
    }

    fn a(&self) -> DVector<f64> {
        self.weights.matrices[self.depth()].row(0).transpose()
    }

    fn pass(&self, x: &[f64]) -> Pass {
        let depth = self.depth();
        let mats = &self.weights.matrices;
        let mut forward = vec![DVector::from_column_slice(x)];
        for l in 0..depth {
            let next = &mats[l] * &forward[l];
            forward.push(next);
        }
        let mut backward = vec![DVector::zeros(0); depth + 1];
        backward[depth] = self.a();
        for l in (1..depth).rev() {
            backward[l] = mats[l].tr_mul(&backward[l + 1]);
        }
        Pass { forward, backward }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let p = self.pass(x);
        self.scale * self.a().dot(&p.forward[self.depth()])
    }

    pub fn gradient(&self, x: &[f64]) -> Params {
        let depth = self.depth();
        let p = self.pass(x);
        let mut blocks: Vec<DMatrix<f64>> = (0..depth)
            .map(|l| &p.backward[l + 1] * p.forward[l].transpose() * self.scale)
            .collect();
        blocks.push(DMatrix::from_row_slice(1, p.forward[depth].len(), p.forward[depth].as_slice()) * self.scale);
        WeightSet::new(blocks)
    }

    /// Exact Hessian–vector product `∇²f(x) v`, obtained as the directional
    /// derivative of the gradient.
    pub fn hessian_vector(&self, x: &[f64], v: &Params) -> Params {
        let depth = self.depth();
        let mats = &self.weights.matrices;
        let dirs = &v.matrices;
        let p = self.pass(x);
        let mut dh = vec![DVector::zeros(p.forward[0].len())];
        for l in 0..depth {
            let next = &dirs[l] * &p.forward[l] + &mats[l] * &dh[l];
            dh.push(next);
        }
        let mut db = vec![DVector::zeros(0); depth + 1];
        db[depth] = dirs[depth].row(0).transpose();
        for l in (1..depth).rev() {
            db[l] = dirs[l].tr_mul(&p.backward[l + 1]) + mats[l].tr_mul(&db[l + 1]);
        }
        let mut blocks: Vec<DMatrix<f64>> = (0..depth)
            .map(|l| (&db[l + 1] * p.forward[l].transpose() + &p.backward[l + 1] * dh[l].transpose()) * self.scale)
            .collect();
        blocks.push(DMatrix::from_row_slice(1, dh[depth].len(), dh[depth].as_slice()) * self.scale);
        WeightSet::new(blocks)
    }
}

fn params_dot(a: &Params, b: &Params) -> f64 {
    a.matrices.iter().zip(&b.matrices).map(|(x, y)| x.dot(y)).sum()
}

/// A contraction chain `g_start · H ⋯ H · g_end`, listed by factor.
#[derive(Debug, Clone)]
struct Chain(Vec<usize>);

/// Splits the contraction graph into chains; rejects tensors of rank > 2
/// and closed cycles of Hessians.
fn chains(spec: &ContractionSpec) -> Result<Vec<Chain>, WickError> {
    let m = spec.m();
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); m];
    for (k, &(i, j)) in spec.pairs.iter().enumerate() {
        incident[i].push(k);
        incident[j].push(k);
    }
    for (i, f) in spec.factors.iter().enumerate() {
        if f.derivs > 2 {
            return Err(WickError::Unsupported(format!("factor {i} with {} derivative indices", f.derivs)));
        }
    }
    let mut seen = vec![false; m];
    let mut out = Vec::new();
    for start in 0..m {
        if seen[start] || spec.factors[start].derivs != 1 {
            continue;
        }
        let mut chain = vec![start];
        seen[start] = true;
        let mut cur = start;
        let mut via = incident[start][0];
        loop {
            let (i, j) = spec.pairs[via];
            let next = if i == cur { j } else { i };
            seen[next] = true;
            chain.push(next);
            if spec.factors[next].derivs == 1 {
                break;
            }
            via = *incident[next].iter().find(|&&k| k != via).expect("rank-2 factor has two ends");
            cur = next;
        }
        out.push(Chain(chain));
    }
    if let Some(i) = (0..m).find(|&i| spec.factors[i].derivs == 2 && !seen[i]) {
        return Err(WickError::Unsupported(format!("closed cycle of Hessians through factor {i}")));
    }
    Ok(out)
}

fn sample_contraction(spec: &ContractionSpec, inputs: &[Vec<f64>], chains: &[Chain], net: &LinearNet) -> f64 {
    let x = |i: usize| inputs[spec.factors[i].input].as_slice();
    let mut value: f64 = (0..spec.m())
        .filter(|&i| spec.factors[i].derivs == 0)
        .map(|i| net.value(x(i)))
        .product();
    for Chain(c) in chains {
        let mut v = net.gradient(x(c[0]));
        for &mid in &c[1..c.len() - 1] {
            v = net.hessian_vector(x(mid), &v);
        }
        value *= params_dot(&net.gradient(x(*c.last().unwrap())), &v);
    }
    value
}

/// Per-replicate samples of the contracted product at width `n`.
fn samples(spec: &ContractionSpec, depth: usize, n: usize, replicates: usize, seed: u64) -> Result<Vec<f64>, WickError> {
    spec.validate_for_depth(depth)?;
    let inputs = spec.require_inputs()?;
    let chains = chains(spec)?;
    let d = inputs[0].len();
    (0..replicates)
        .into_par_iter()
        .map(|r| {
            let net = LinearNet::sample(d, n, depth, seed.wrapping_add(r as u64))?;
            Ok(sample_contraction(spec, inputs, &chains, &net))
        })
        .collect()
}

/// Monte Carlo estimate `(mean, standard error)` of the correlator at width `n`.
pub fn mc_correlation(
    spec: &ContractionSpec,
    depth: usize,
    n: usize,
    replicates: usize,
    seed: u64,
) -> Result<(f64, f64), WickError> {
    if replicates < 2 {
        return Err(WickError::InvalidSpec("need at least two replicates".into()));
    }
    Ok(mean_and_se(&samples(spec, depth, n, replicates, seed)?))
}

/// Monte Carlo estimates across widths with the exact values alongside.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    pub widths: Vec<usize>,
    pub estimates: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub exact: Vec<f64>,
    /// Least-squares slope of `ln |estimate|` against `ln n`.
    pub slope: f64,
    /// The same fit applied to the exact values.
    pub exact_slope: f64,
}

impl ScalingReport {
    /// Largest `|estimate − exact| / se` over widths.
    pub fn max_z(&self) -> f64 {
        self.estimates
            .iter()
            .zip(&self.exact)
            .zip(&self.std_errors)
            .map(|((e, x), s)| (e - x).abs() / s)
            .fold(0.0, f64::max)
    }
}

fn check_widths(widths: &[usize]) -> Result<(), WickError> {
    if widths.len() < 3 || widths.contains(&0) {
        return Err(WickError::InvalidSpec("need at least three positive widths".into()));
    }
    Ok(())
}

fn as_f64(widths: &[usize]) -> Vec<f64> {
    widths.iter().map(|&n| n as f64).collect()
}

pub fn mc_scaling_check(
    spec: &ContractionSpec,
    depth: usize,
    widths: &[usize],
    replicates: usize,
    seed: u64,
) -> Result<ScalingReport, WickError> {
    check_widths(widths)?;
    let poly = exact_correlation(spec, depth)?;
    let inputs = spec.require_inputs()?;
    let mut estimates = Vec::new();
    let mut std_errors = Vec::new();
    let mut exact = Vec::new();
    for &n in widths {
        let (mean, se) = mc_correlation(spec, depth, n, replicates, seed)?;
        estimates.push(mean);
        std_errors.push(se);
        exact.push(poly.evaluate(n as f64, inputs));
    }
    let ns = as_f64(widths);
    Ok(ScalingReport {
        widths: widths.to_vec(),
        slope: loglog_slope(&ns, &estimates),
        exact_slope: loglog_slope(&ns, &exact),
        estimates,
        std_errors,
        exact,
    })
}

/// Sample variance of the empirical kernel `Θ̂(x_1, x_2)` across widths.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelVarianceReport {
    pub widths: Vec<usize>,
    pub variances: Vec<f64>,
    /// `E Θ̂² − (E Θ̂)²` from the exact correlators.
    pub exact: Vec<f64>,
    pub slope: f64,
}

pub fn kernel_variance_check(
    x1: &[f64],
    x2: &[f64],
    depth: usize,
    widths: &[usize],
    replicates: usize,
    seed: u64,
) -> Result<KernelVarianceReport, WickError> {
    use crate::Factor;
    check_widths(widths)?;
    if replicates < 2 {
        return Err(WickError::InvalidSpec("need at least two replicates".into()));
    }
    let inputs = vec![x1.to_vec(), x2.to_vec()];
    let grad = |input| Factor { input, derivs: 1 };
    let kernel = ContractionSpec {
        factors: vec![grad(0), grad(1)],
        pairs: vec![(0, 1)],
        inputs: Some(inputs.clone()),
    };
    let square = ContractionSpec {
        factors: vec![grad(0), grad(1), grad(0), grad(1)],
        pairs: vec![(0, 1), (2, 3)],
        inputs: Some(inputs.clone()),
    };
    let mean_poly = exact_correlation(&kernel, depth)?;
    let square_poly = exact_correlation(&square, depth)?;
    let mut variances = Vec::new();
    let mut exact = Vec::new();
    for &n in widths {
        let s = samples(&kernel, depth, n, replicates, seed)?;
        let mean = s.iter().sum::<f64>() / s.len() as f64;
        variances.push(s.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (s.len() - 1) as f64);
        let nf = n as f64;
        exact.push(square_poly.evaluate(nf, &inputs) - mean_poly.evaluate(nf, &inputs).powi(2));
    }
    Ok(KernelVarianceReport {
        slope: loglog_slope(&as_f64(widths), &variances),
        widths: widths.to_vec(),
        variances,
        exact,
    })
}
