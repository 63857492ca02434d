use netcore::Activation;

use crate::expect::{normal_expectation, pair_expectation, PairFn};
use crate::MeanFieldError;

/// Tolerance on |χ₁ − 1| separating the two phases from the edge.
pub const PHASE_TOL: f64 = 1e-6;

const FIXED_POINT_TOL: f64 = 1e-10;
const FIXED_POINT_MAX_ITERS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LengthMapResult {
    pub q_next: f64,
    /// `d𝒱/dq`, when requested.
    pub derivative: Option<f64>,
}

fn check_scale(sigma_w2: f64) -> Result<(), MeanFieldError> {
    if sigma_w2 > 0.0 && sigma_w2.is_finite() {
        Ok(())
    } else {
        Err(MeanFieldError::BadScale(sigma_w2))
    }
}

/// One application of the length map. The derivative uses
/// `𝒱′(q) = σ_w² E[φ′(√q z)² + φ(√q z) φ″(√q z)]`.
pub fn length_map(
    q: f64,
    sigma_w2: f64,
    act: Activation,
    with_derivative: bool,
) -> Result<LengthMapResult, MeanFieldError> {
    if q < 0.0 || q.is_nan() {
        return Err(MeanFieldError::NegativeVariance(q));
    }
    check_scale(sigma_w2)?;
    if let Some(kappa) = act.homogeneous_second_moment() {
        return Ok(LengthMapResult {
            q_next: sigma_w2 * kappa * q,
            derivative: with_derivative.then_some(sigma_w2 * kappa),
        });
    }
    let s = q.sqrt();
    let q_next = sigma_w2 * normal_expectation(s, |u| act.value(u).powi(2));
    let derivative = with_derivative.then(|| {
        sigma_w2 * normal_expectation(s, |u| act.derivative(u).powi(2) + act.value(u) * act.second_derivative(u))
    });
    Ok(LengthMapResult { q_next, derivative })
}

/// Outcome of iterating the length map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPoint {
    pub q_inf: f64,
    pub iterations: usize,
    /// Set when 𝒱 is the identity (every q is fixed); `q_inf` then echoes
    /// the starting value.
    pub marginal: bool,
}

/// Plain fixed-point iteration of the length map from `q0`.
pub fn length_fixed_point(sigma_w2: f64, act: Activation, q0: f64) -> Result<FixedPoint, MeanFieldError> {
    check_scale(sigma_w2)?;
    if !(q0 > 0.0) {
        return Err(MeanFieldError::NegativeVariance(q0));
    }
    if let Some(kappa) = act.homogeneous_second_moment() {
        if (sigma_w2 * kappa - 1.0).abs() <= 1e-12 {
            return Ok(FixedPoint {
                q_inf: q0,
                iterations: 0,
                marginal: true,
            });
        }
    }
    let mut q = q0;
    for it in 1..=FIXED_POINT_MAX_ITERS {
        let next = length_map(q, sigma_w2, act, false)?.q_next;
        if !next.is_finite() || next > 1e300 {
            return Err(MeanFieldError::Divergence {
                last: next,
                iterations: it,
            });
        }
        let step = (next - q).abs();
        q = next;
        if step <= FIXED_POINT_TOL {
            return Ok(FixedPoint {
                q_inf: q,
                iterations: it,
                marginal: false,
            });
        }
    }
    Err(MeanFieldError::Divergence {
        last: q,
        iterations: FIXED_POINT_MAX_ITERS,
    })
}

/// `𝒞(c, q¹¹, q²² | σ_w²) = σ_w² E φ(u¹) φ(u²)`.
pub fn corr_map(c: f64, q11: f64, q22: f64, sigma_w2: f64, act: Activation) -> Result<f64, MeanFieldError> {
    if !(c.abs() <= 1.0) {
        return Err(MeanFieldError::BadCorrelation(c));
    }
    for q in [q11, q22] {
        if q < 0.0 || q.is_nan() {
            return Err(MeanFieldError::NegativeVariance(q));
        }
    }
    check_scale(sigma_w2)?;
    Ok(sigma_w2 * pair_expectation(act, PairFn::Value, q11, q22, c))
}

/// `χ₁ = σ_w² E φ′(√q_∞ z)²`.
pub fn chi1(sigma_w2: f64, q_inf: f64, act: Activation) -> f64 {
    match act {
        Activation::Linear => sigma_w2,
        Activation::Relu => 0.5 * sigma_w2,
        Activation::LeakyRelu(a) => 0.5 * (1.0 + a * a) * sigma_w2,
        Activation::Tanh => {
            sigma_w2 * normal_expectation(q_inf.max(0.0).sqrt(), |u| act.derivative(u).powi(2))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Ordered,
    Chaotic,
    Edge,
}

impl Phase {
    pub fn from_chi1(chi1: f64) -> Self {
        if chi1 < 1.0 - PHASE_TOL {
            Phase::Ordered
        } else if chi1 > 1.0 + PHASE_TOL {
            Phase::Chaotic
        } else {
            Phase::Edge
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Phase::Ordered => "ordered",
            Phase::Chaotic => "chaotic",
            Phase::Edge => "edge",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint {
    pub sigma_w2: f64,
    /// Reached fixed point. For homogeneous activations with
    /// `σ_w² E φ² > 1` the variance grows without bound and this is +∞.
    pub q_inf: f64,
    pub chi1: f64,
    pub phase: Phase,
    pub marginal: bool,
}

/// Fixed point, then χ₁, then the phase label. The length-map iteration
/// starts from q = 1.
pub fn phase_classify(sigma_w2: f64, act: Activation) -> Result<PhasePoint, MeanFieldError> {
    check_scale(sigma_w2)?;
    let (q_inf, marginal) = match act.homogeneous_second_moment() {
        // χ₁ does not depend on q here and 𝒱 is linear in q, so the limit
        // is read off directly: 0 below the marginal scale, unbounded above.
        Some(kappa) if sigma_w2 * kappa > 1.0 + 1e-12 => (f64::INFINITY, false),
        Some(kappa) if sigma_w2 * kappa < 1.0 - 1e-12 => (0.0, false),
        // At σ_w² = 1 an activation with φ′(0) = 1 approaches q = 0 only
        // sublinearly, so plain iteration cannot meet its tolerance; when it
        // stalls that close to zero the limit q_∞ = 0 is used.
        _ => match length_fixed_point(sigma_w2, act, 1.0) {
            Ok(fp) => (fp.q_inf, fp.marginal),
            Err(MeanFieldError::Divergence { last, .. }) if last.abs() < 1e-3 => (0.0, false),
            Err(e) => return Err(e),
        },
    };
    let chi = chi1(sigma_w2, q_inf, act);
    Ok(PhasePoint {
        sigma_w2,
        q_inf,
        chi1: chi,
        phase: Phase::from_chi1(chi),
        marginal,
    })
}

/// Edge of chaos on the default bracket σ_w² ∈ [1, 4].
pub fn edge_of_chaos(act: Activation) -> Result<f64, MeanFieldError> {
    edge_of_chaos_in(act, 1.0, 4.0)
}

/// χ₁ − 1 for the edge solver.
fn edge_residual(sigma_w2: f64, act: Activation) -> Result<f64, MeanFieldError> {
    Ok(phase_classify(sigma_w2, act)?.chi1 - 1.0)
}

/// Bisection on σ_w² ∈ [lo, hi] for χ₁(σ_w²) = 1, stopping once
/// |χ₁ − 1| ≤ 1e−8.
pub fn edge_of_chaos_in(act: Activation, lo: f64, hi: f64) -> Result<f64, MeanFieldError> {
    check_scale(lo)?;
    check_scale(hi)?;
    let f = |s: f64| edge_residual(s, act);
    let (mut a, mut b) = (lo, hi);
    let (mut fa, fb) = (f(a)?, f(b)?);
    if fa.abs() <= 1e-8 {
        return Ok(a);
    }
    if fb.abs() <= 1e-8 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(MeanFieldError::NoEdge { lo, hi });
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let fm = f(m)?;
        if fm.abs() <= 1e-8 || (b - a) < 1e-15 {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}
