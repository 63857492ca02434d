use nalgebra::{DMatrix, DVector};

use crate::{NetConfig, NetError, WeightSet};

/// Forward pass record: input `x_0`, preactivations `h_1..h_{L+1}` and
/// activations `x_1..x_L`.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pub input: DVector<f64>,
    pub pre: Vec<DVector<f64>>,
    pub post: Vec<DVector<f64>>,
}

impl ForwardTrace {
    pub fn output(&self) -> &DVector<f64> {
        self.pre.last().expect("trace has at least one layer")
    }

    /// `x_l`, with `x_0` the raw input.
    pub fn layer_input(&self, l: usize) -> &DVector<f64> {
        if l == 0 {
            &self.input
        } else {
            &self.post[l - 1]
        }
    }
}

/// What the backward pass is seeded with.
#[derive(Debug, Clone)]
pub enum Seed {
    /// `∂ℓ/∂h_{L+1}`; the trace then holds loss gradients.
    LossGradient(DVector<f64>),
    /// Output coordinate `i`: `B_{L+1} = e_i`, giving `∂h_{L+1,i}/∂·`.
    Output(usize),
}

/// Backward pass record: `g_1..g_{L+1}` (gradients w.r.t. preactivations)
/// and weight gradients `∇_0..∇_L` with `∇_l = c_l g_{l+1} x_lᵀ`.
#[derive(Debug, Clone)]
pub struct BackwardTrace {
    pub g: Vec<DVector<f64>>,
    pub grads: Vec<DMatrix<f64>>,
}

fn check_input(config: &NetConfig, weights: &WeightSet, x: &DVector<f64>) -> Result<(), NetError> {
    weights.check_shapes(config)?;
    if x.len() != config.input_dim() {
        return Err(NetError::Dimension {
            expected: config.input_dim(),
            got: x.len(),
        });
    }
    Ok(())
}

pub fn forward(config: &NetConfig, weights: &WeightSet, x: &DVector<f64>) -> Result<ForwardTrace, NetError> {
    check_input(config, weights, x)?;
    let depth = config.depth();
    let act = config.activation;
    let mut pre = Vec::with_capacity(depth + 1);
    let mut post = Vec::with_capacity(depth);
    let mut cur = x.clone();
    for (l, w) in weights.matrices.iter().enumerate() {
        let h = w * &cur * config.layer_scale(l);
        if l < depth {
            cur = h.map(|z| act.value(z));
            post.push(cur.clone());
        }
        pre.push(h);
    }
    Ok(ForwardTrace {
        input: x.clone(),
        pre,
        post,
    })
}

/// Network output `h_{L+1}`.
pub fn output(config: &NetConfig, weights: &WeightSet, x: &DVector<f64>) -> Result<DVector<f64>, NetError> {
    Ok(forward(config, weights, x)?.pre.pop().unwrap())
}

pub fn forward_backward(
    config: &NetConfig,
    weights: &WeightSet,
    x: &DVector<f64>,
    seed: &Seed,
) -> Result<(ForwardTrace, BackwardTrace), NetError> {
    let fwd = forward(config, weights, x)?;
    let nout = config.output_dim();
    let top = match seed {
        Seed::LossGradient(g) => {
            if g.len() != nout {
                return Err(NetError::Dimension {
                    expected: nout,
                    got: g.len(),
                });
            }
            g.clone()
        }
        Seed::Output(i) => {
            if *i >= nout {
                return Err(NetError::Dimension {
                    expected: nout,
                    got: *i + 1,
                });
            }
            let mut e = DVector::zeros(nout);
            e[*i] = 1.0;
            e
        }
    };
    let bwd = backward(config, weights, &fwd, top);
    Ok((fwd, bwd))
}

fn backward(config: &NetConfig, weights: &WeightSet, fwd: &ForwardTrace, top: DVector<f64>) -> BackwardTrace {
    let depth = config.depth();
    let act = config.activation;
    let mut g = vec![DVector::zeros(0); depth + 1];
    let mut grads = vec![DMatrix::zeros(0, 0); depth + 1];
    g[depth] = top;
    for l in (0..=depth).rev() {
        let c = config.layer_scale(l);
        grads[l] = &g[l] * fwd.layer_input(l).transpose() * c;
        if l >= 1 {
            let back = weights.matrices[l].tr_mul(&g[l]) * c;
            let d = fwd.pre[l - 1].map(|z| act.derivative(z));
            g[l - 1] = back.component_mul(&d);
        }
    }
    BackwardTrace { g, grads }
}

/// `∂f_i/∂W_l` for all layers, as a weight-shaped set.
pub fn param_gradient(
    config: &NetConfig,
    weights: &WeightSet,
    x: &DVector<f64>,
    output_index: usize,
) -> Result<WeightSet, NetError> {
    let (_, bwd) = forward_backward(config, weights, x, &Seed::Output(output_index))?;
    Ok(WeightSet::new(bwd.grads))
}

/// Input–output Jacobian `∂h_{L+1}/∂h_1 = ∏_{l=L}^{1} c_l W_l D_l`, of
/// shape `n_{L+1} × n_1`. Each row is one output-seeded backward pass; the
/// passes are stacked into a single matrix product.
pub fn jacobian(config: &NetConfig, weights: &WeightSet, x: &DVector<f64>) -> Result<DMatrix<f64>, NetError> {
    let fwd = forward(config, weights, x)?;
    let act = config.activation;
    let depth = config.depth();
    let mut m = DMatrix::<f64>::identity(config.output_dim(), config.output_dim());
    for l in (1..=depth).rev() {
        m = m * &weights.matrices[l] * config.layer_scale(l);
        let d = fwd.pre[l - 1].map(|z| act.derivative(z));
        for (j, mut col) in m.column_iter_mut().enumerate() {
            col *= d[j];
        }
    }
    Ok(m)
}
