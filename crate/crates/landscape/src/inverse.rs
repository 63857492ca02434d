use nalgebra::DMatrix;
use netcore::{Activation, NetConfig};

use crate::LandscapeError;

/// A matrix counts as full rank when its smallest singular value exceeds
/// this fraction of its largest.
pub const RANK_THRESHOLD: f64 = 1e-8;

fn rank_ratio(svals: &[f64]) -> f64 {
    let max = svals.iter().copied().fold(0.0, f64::max);
    let min = svals.iter().copied().fold(f64::INFINITY, f64::min);
    if max > 0.0 {
        min / max
    } else {
        0.0
    }
}

/// Moore–Penrose inverse from an SVD whose singular values all pass the
/// rank test.
fn pinv_checked(a: &DMatrix<f64>, name: &str) -> Result<DMatrix<f64>, LandscapeError> {
    let svd = a.clone().svd(true, true);
    let ratio = rank_ratio(svd.singular_values.as_slice());
    if ratio <= RANK_THRESHOLD {
        return Err(LandscapeError::RankDeficient {
            matrix: name.to_string(),
            ratio,
        });
    }
    let u = svd.u.as_ref().unwrap();
    let vt = svd.v_t.as_ref().unwrap();
    let inv_s = DMatrix::from_diagonal(&svd.singular_values.map(|s| 1.0 / s));
    Ok(vt.transpose() * inv_s * u.transpose())
}

/// `W†` with `W W† = I`; requires full row rank (so at most as many rows
/// as columns).
pub fn right_inverse(w: &DMatrix<f64>, name: &str) -> Result<DMatrix<f64>, LandscapeError> {
    if w.nrows() > w.ncols() {
        return Err(LandscapeError::RankDeficient {
            matrix: format!("{name} ({}x{}, more rows than columns)", w.nrows(), w.ncols()),
            ratio: 0.0,
        });
    }
    pinv_checked(w, name)
}

/// `X†` with `X† X = I`; requires full column rank.
pub fn left_inverse(x: &DMatrix<f64>, name: &str) -> Result<DMatrix<f64>, LandscapeError> {
    if x.ncols() > x.nrows() {
        return Err(LandscapeError::RankDeficient {
            matrix: format!("{name} ({}x{}, more columns than rows)", x.nrows(), x.ncols()),
            ratio: 0.0,
        });
    }
    pinv_checked(x, name)
}

pub(crate) fn require_bijective(act: Activation) -> Result<(), LandscapeError> {
    if act.is_bijective_on_reals() {
        Ok(())
    } else {
        Err(LandscapeError::NotInvertible(act.to_string()))
    }
}

pub(crate) fn inverse_map(act: Activation, m: &DMatrix<f64>) -> DMatrix<f64> {
    m.map(|v| act.inverse(v).expect("bijective activation"))
}

/// Right inverses of the scaled upper layers `c_l W_l`, `l = 1..L`.
pub(crate) fn upper_inverses(
    config: &NetConfig,
    upper: &[DMatrix<f64>],
) -> Result<Vec<DMatrix<f64>>, LandscapeError> {
    upper
        .iter()
        .enumerate()
        .map(|(i, w)| right_inverse(&(w * config.layer_scale(i + 1)), &format!("W_{}", i + 1)))
        .collect()
}

/// Walks a target output down through the right inverses, returning the
/// preimage `H̃_1`.
pub(crate) fn pull_back(act: Activation, inverses: &[DMatrix<f64>], target: &DMatrix<f64>) -> DMatrix<f64> {
    let mut h = target.clone();
    for winv in inverses.iter().rev() {
        h = inverse_map(act, &(winv * h));
    }
    h
}

fn check_upper(config: &NetConfig, upper: &[DMatrix<f64>]) -> Result<(), LandscapeError> {
    let w = &config.widths;
    if upper.len() != config.depth() {
        return Err(LandscapeError::Shape(format!(
            "expected {} upper weight matrices, found {}",
            config.depth(),
            upper.len()
        )));
    }
    for (i, m) in upper.iter().enumerate() {
        let l = i + 1;
        if m.nrows() != w[l + 1] || m.ncols() != w[l] {
            return Err(LandscapeError::Shape(format!(
                "W_{l} is {}x{}, expected {}x{}",
                m.nrows(),
                m.ncols(),
                w[l + 1],
                w[l]
            )));
        }
    }
    Ok(())
}

/// First layer `W̃_0` such that the network with layers `(W̃_0, upper)`
/// maps the columns of `x` to the columns of `target`.
///
/// `upper` holds `W_1..W_L`. The construction pulls the target back
/// through right inverses of the upper layers and the inverse activation,
/// then solves the first layer with a left inverse of the data.
pub fn reconstruct_first_layer(
    config: &NetConfig,
    upper: &[DMatrix<f64>],
    x: &DMatrix<f64>,
    target: &DMatrix<f64>,
) -> Result<DMatrix<f64>, LandscapeError> {
    require_bijective(config.activation)?;
    check_upper(config, upper)?;
    if x.nrows() != config.input_dim() || target.nrows() != config.output_dim() || target.ncols() != x.ncols() {
        return Err(LandscapeError::Shape(format!(
            "data {}x{} and target {}x{} do not fit widths {:?}",
            x.nrows(),
            x.ncols(),
            target.nrows(),
            target.ncols(),
            config.widths
        )));
    }
    let xinv = left_inverse(x, "X")?;
    let inverses = upper_inverses(config, upper)?;
    let h1 = pull_back(config.activation, &inverses, target);
    Ok(h1 * xinv / config.layer_scale(0))
}
