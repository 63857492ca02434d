use serde::Serialize;

use crate::{check_delta, BoundsError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassicBounds {
    /// `√(ln(1/δ)/(2m))`.
    pub hoeffding_eps: f64,
    /// `(em/d)^d`, present when a VC dimension is given.
    pub sauer_growth: Option<f64>,
    /// `Σ_{k≤d} C(m, k)`, the sharper form of the same lemma.
    pub sauer_sum: Option<f64>,
    pub vc_rademacher: Option<f64>,
}

pub fn hoeffding_eps(m: u64, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    if m == 0 {
        return Err(BoundsError::Domain("m must be at least 1".into()));
    }
    Ok(((1.0 / delta).ln() / (2.0 * m as f64)).sqrt())
}

fn check_vc(m: u64, d: u64) -> Result<()> {
    if d == 0 || d >= m {
        return Err(BoundsError::Domain(format!("VC forms need 1 <= d < m, got d = {d}, m = {m}")));
    }
    Ok(())
}

/// `Σ_{k=0}^{d} C(m, k)`, accumulated in floating point.
pub fn sauer_sum(m: u64, d: u64) -> f64 {
    let mut term = 1.0;
    let mut total = 1.0;
    for k in 1..=d.min(m) {
        term *= (m - k + 1) as f64 / k as f64;
        total += term;
    }
    total
}

/// `√((2/m)(ln 2 + d(1 + ln m − ln d)))`.
pub fn vc_rademacher(m: u64, d: u64) -> Result<f64> {
    check_vc(m, d)?;
    let (mf, df) = (m as f64, d as f64);
    Ok((2.0 / mf * (2f64.ln() + df * (1.0 + mf.ln() - df.ln()))).sqrt())
}

pub fn classic_bounds(m: u64, delta: f64, vc_dim: Option<u64>) -> Result<ClassicBounds> {
    let hoeffding_eps = hoeffding_eps(m, delta)?;
    let (sauer_growth, sauer, vc) = match vc_dim {
        Some(d) => {
            check_vc(m, d)?;
            let (mf, df) = (m as f64, d as f64);
            (
                Some((std::f64::consts::E * mf / df).powf(df)),
                Some(sauer_sum(m, d)),
                Some(vc_rademacher(m, d)?),
            )
        }
        None => (None, None, None),
    };
    Ok(ClassicBounds {
        hoeffding_eps,
        sauer_growth,
        sauer_sum: sauer,
        vc_rademacher: vc,
    })
}
