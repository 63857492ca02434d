use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::{Init, NetConfig, NetError, Parameterization, WeightSet};

/// The workspace-wide seeded generator.
pub fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian_matrix<R: rand::Rng>(rows: usize, cols: usize, std: f64, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| {
        let z: f64 = StandardNormal.sample(rng);
        std * z
    })
}

/// Haar-distributed n×n orthogonal matrix: QR of a gaussian matrix with the
/// signs of R's diagonal folded back into Q.
pub fn haar_orthogonal<R: rand::Rng>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let a = gaussian_matrix(n, n, 1.0, rng);
    let qr = a.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Samples `W_0..W_L` for `config`. Deterministic in `seed`.
pub fn init_weights(config: &NetConfig, seed: u64) -> Result<WeightSet, NetError> {
    config.validate()?;
    let mut rng = rng_for(seed);
    let w = &config.widths;
    let mut matrices = Vec::with_capacity(w.len() - 1);
    for l in 0..w.len() - 1 {
        let (nin, nout) = (w[l], w[l + 1]);
        let m = match config.init {
            Init::Gaussian { sigma_w } => {
                let std = match config.parameterization {
                    Parameterization::Standard => sigma_w / (nin as f64).sqrt(),
                    Parameterization::Ntk { .. } => 1.0,
                };
                gaussian_matrix(nout, nin, std, &mut rng)
            }
            Init::Glorot => gaussian_matrix(nout, nin, (2.0 / (nin + nout) as f64).sqrt(), &mut rng),
            Init::He => gaussian_matrix(nout, nin, (2.0 / nin as f64).sqrt(), &mut rng),
            Init::Orthogonal { sigma_w } => {
                if nin != nout {
                    return Err(NetError::Shape(format!(
                        "orthogonal init needs square layers, W_{l} is {nout}x{nin}"
                    )));
                }
                haar_orthogonal(nin, &mut rng) * sigma_w
            }
        };
        matrices.push(m);
    }
    Ok(WeightSet { matrices })
}
