use meanfield::{pair_expectation, PairFn};
use nalgebra::{DMatrix, DVector};
use netcore::{Activation, NetConfig, Parameterization};

use crate::{KernelGram, KernelTag, NtkError};

/// Infinite-width covariances `q_l(x,x)`, `q_l(x,x′)`, `q_l(x′,x′)` and
/// derivative correlations `χ_l(x,x′)` for `l = 1..L+1` (index 0 is layer 1).
#[derive(Debug, Clone, PartialEq)]
pub struct KernelRecursionState {
    pub q_xx: Vec<f64>,
    pub q_xy: Vec<f64>,
    pub q_yy: Vec<f64>,
    pub chi: Vec<f64>,
}

impl KernelRecursionState {
    pub fn layers(&self) -> usize {
        self.q_xy.len()
    }

    /// `Σ_{l=1}^{L+1} q_l ∏_{l′=l}^{L} χ_{l′}`.
    pub fn tangent_kernel(&self) -> f64 {
        let top = self.layers();
        let mut total = 0.0;
        let mut prod = 1.0;
        for l in (0..top).rev() {
            total += self.q_xy[l] * prod;
            if l > 0 {
                prod *= self.chi[l - 1];
            }
        }
        total
    }

    /// `q_{L+1}(x,x′)`.
    pub fn output_covariance(&self) -> f64 {
        *self.q_xy.last().unwrap()
    }
}

fn pair(act: Activation, which: PairFn, q11: f64, q12: f64, q22: f64) -> f64 {
    let denom = (q11 * q22).sqrt();
    let c = if denom > 0.0 { q12 / denom } else { 0.0 };
    pair_expectation(act, which, q11, q22, c)
}

/// Layer-by-layer covariance and derivative-correlation recursion for the
/// pair `(x, x′)` under the weight variances of `config`.
pub fn nngp_recursion(x: &DVector<f64>, x_prime: &DVector<f64>, config: &NetConfig) -> Result<KernelRecursionState, NtkError> {
    let n0 = config.input_dim();
    if x.len() != n0 || x_prime.len() != n0 {
        return Err(NtkError::Shape(format!("inputs must have dimension {n0}")));
    }
    let act = config.activation;
    let layers = config.depth() + 1;
    let s0 = config.effective_sigma_w2(0) / n0 as f64;
    let (mut a, mut b, mut c) = (s0 * x.dot(x), s0 * x.dot(x_prime), s0 * x_prime.dot(x_prime));
    let mut st = KernelRecursionState {
        q_xx: Vec::with_capacity(layers),
        q_xy: Vec::with_capacity(layers),
        q_yy: Vec::with_capacity(layers),
        chi: Vec::with_capacity(layers),
    };
    for l in 1..=layers {
        st.q_xx.push(a);
        st.q_xy.push(b);
        st.q_yy.push(c);
        // The weights feeding layer l+1 are W_l; the last χ uses the
        // output-layer scale as well, though no product consumes it.
        let s2 = config.effective_sigma_w2(l.min(layers - 1));
        st.chi.push(s2 * pair(act, PairFn::Derivative, a, b, c));
        if l < layers {
            let na = s2 * pair(act, PairFn::Value, a, a, a);
            let nb = s2 * pair(act, PairFn::Value, a, b, c);
            let nc = s2 * pair(act, PairFn::Value, c, c, c);
            (a, b, c) = (na, nb, nc);
        }
    }
    Ok(st)
}

fn gram_from<F: Fn(&KernelRecursionState) -> f64>(x: &DMatrix<f64>, config: &NetConfig, f: F) -> Result<DMatrix<f64>, NtkError> {
    let m = x.ncols();
    let cols: Vec<DVector<f64>> = (0..m).map(|j| x.column(j).into_owned()).collect();
    let mut k = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let v = f(&nngp_recursion(&cols[i], &cols[j], config)?);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(k)
}

/// Limiting tangent kernel `Θ_0` on the columns of `x`. For several
/// outputs the kernel is this scalar kernel times the identity.
pub fn limiting_ntk(x: &DMatrix<f64>, config: &NetConfig) -> Result<KernelGram, NtkError> {
    if !matches!(config.parameterization, Parameterization::Ntk { .. }) {
        return Err(NtkError::NotNtk);
    }
    Ok(KernelGram::new(gram_from(x, config, KernelRecursionState::tangent_kernel)?, KernelTag::LimitingNtk))
}

/// Output covariance `q_{L+1}` on the columns of `x`. This is also the
/// tangent kernel when only the last layer is trained.
pub fn nngp_gram(x: &DMatrix<f64>, config: &NetConfig) -> Result<KernelGram, NtkError> {
    Ok(KernelGram::new(gram_from(x, config, KernelRecursionState::output_covariance)?, KernelTag::Nngp))
}

/// Output covariance between the columns of `a` (rows) and `b` (columns).
pub fn nngp_cross(a: &DMatrix<f64>, b: &DMatrix<f64>, config: &NetConfig, tangent: bool) -> Result<DMatrix<f64>, NtkError> {
    let mut k = DMatrix::zeros(a.ncols(), b.ncols());
    for i in 0..a.ncols() {
        for j in 0..b.ncols() {
            let st = nngp_recursion(&a.column(i).into_owned(), &b.column(j).into_owned(), config)?;
            k[(i, j)] = if tangent { st.tangent_kernel() } else { st.output_covariance() };
        }
    }
    Ok(k)
}
