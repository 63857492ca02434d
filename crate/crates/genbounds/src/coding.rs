use serde::Serialize;

use crate::{BoundsError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CodeLength {
    /// `KL(δ_{f_c} ‖ P_c)` in nats.
    pub kl: f64,
    pub code_bits: u64,
}

/// KL of a point mass at a code of `code_bits` bits against the prior
/// `P_c(f) = m(|f|) 2^{−|f|} / Z`.
pub fn code_length_kl(code_bits: u64, mass: impl Fn(u64) -> f64, z: f64) -> Result<CodeLength> {
    if code_bits == 0 {
        return Err(BoundsError::Domain("code length must be at least one bit".into()));
    }
    if !(z > 0.0 && z.is_finite()) {
        return Err(BoundsError::Domain(format!("normalizer must be positive, got {z}")));
    }
    let p = mass(code_bits);
    if !(p > 0.0 && p <= 1.0) {
        return Err(BoundsError::Domain(format!("m({code_bits}) = {p} is not a positive probability")));
    }
    Ok(CodeLength {
        kl: z.ln() + code_bits as f64 * 2f64.ln() - p.ln(),
        code_bits,
    })
}

/// Bits used by a pruned, quantized model with `k` non-zero weights out of
/// `dim`, a codebook of `r` 32-bit values: `k(log₂ dim + log₂ r) + 32r`.
pub fn naive_compressed_bits(k: u64, dim: u64, r: u64) -> Result<f64> {
    if dim == 0 || r == 0 || k > dim {
        return Err(BoundsError::Domain(format!("need dim, r >= 1 and k <= dim, got k={k}, dim={dim}, r={r}")));
    }
    Ok(k as f64 * ((dim as f64).log2() + (r as f64).log2()) + 32.0 * r as f64)
}
