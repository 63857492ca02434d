use std::f64::consts::PI;
use std::sync::OnceLock;

use netcore::Activation;
use numerics::{gauss_hermite, gauss_legendre, GaussHermite, GaussLegendre};

/// Nodes of the default Gauss–Hermite rule (per dimension).
pub const QUAD_NODES: usize = 64;

fn hermite() -> &'static GaussHermite {
    static RULE: OnceLock<GaussHermite> = OnceLock::new();
    RULE.get_or_init(|| gauss_hermite(QUAD_NODES))
}

fn legendre() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(24))
}

fn panel_rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(16))
}

/// Nodes and weights (density included) for `E f(u)`, `u ~ N(mean, std²)`,
/// built from composite Gauss–Legendre panels on `mean ± 12 std`.
///
/// A fixed Gauss–Hermite rule loses accuracy quickly once `φ(√q z)` has
/// complex poles close to the real axis (tanh poles sit at `iπ/2` in `u`,
/// i.e. at `iπ/(2√q)` in `z`), so panels are kept no wider than `π/2` in
/// `u` as well as no wider than half a standard deviation.
fn normal_rule(mean: f64, std: f64, out: &mut Vec<(f64, f64)>) {
    out.clear();
    let half_range = 12.0 * std;
    let width = (0.5 * std).min(0.5 * PI);
    let panels = ((2.0 * half_range / width).ceil() as usize).clamp(48, 4000);
    let norm = 1.0 / (std * (2.0 * PI).sqrt());
    let gl = panel_rule();
    let h = 2.0 * half_range / panels as f64;
    for p in 0..panels {
        let a = mean - half_range + p as f64 * h;
        for (x, w) in gl.nodes.iter().zip(&gl.weights) {
            let u = a + 0.5 * h * (x + 1.0);
            let t = (u - mean) / std;
            out.push((u, 0.5 * h * w * norm * (-0.5 * t * t).exp()));
        }
    }
}

/// `E f(u)` for `u ~ N(0, std²)` with a rule adapted to the scale `std`.
pub fn normal_expectation<F: Fn(f64) -> f64>(std: f64, f: F) -> f64 {
    if std == 0.0 {
        return f(0.0);
    }
    let mut rule = Vec::new();
    normal_rule(0.0, std, &mut rule);
    rule.iter().map(|&(u, w)| w * f(u)).sum()
}

/// `E f(u₁, u₂)` for a centered gaussian pair, integrating `u₂` given `u₁`.
fn normal_expectation2<F: Fn(f64, f64) -> f64>(s1: f64, s2: f64, c: f64, f: F) -> f64 {
    let s = (1.0 - c * c).sqrt();
    let mut outer = Vec::new();
    normal_rule(0.0, s1, &mut outer);
    let mut inner = Vec::new();
    let mut total = 0.0;
    for &(u1, w1) in &outer {
        normal_rule(s2 * c * u1 / s1, s2 * s, &mut inner);
        let part: f64 = inner.iter().map(|&(u2, w2)| w2 * f(u1, u2)).sum();
        total += w1 * part;
    }
    total
}

/// Which function of the preactivation enters a pair expectation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairFn {
    /// φ itself (covariance maps).
    Value,
    /// φ′ (χ maps).
    Derivative,
}

impl PairFn {
    fn eval(self, act: Activation, z: f64) -> f64 {
        match self {
            PairFn::Value => act.value(z),
            PairFn::Derivative => act.derivative(z),
        }
    }

    /// Degree of positive homogeneity of φ (1) or φ′ (0).
    fn degree(self) -> i32 {
        match self {
            PairFn::Value => 1,
            PairFn::Derivative => 0,
        }
    }
}

/// `E_{z∼N(0,1)} f(z)` with the default rule.
pub fn gaussian_expectation<F: Fn(f64) -> f64>(f: F) -> f64 {
    hermite().expect(f)
}

/// `E g(u₁) g(u₂)` for the centered gaussian pair with variances `q11`,
/// `q22` and correlation `c`, where `g` is φ or φ′.
pub fn pair_expectation(act: Activation, which: PairFn, q11: f64, q22: f64, c: f64) -> f64 {
    let c = c.clamp(-1.0, 1.0);
    let (s1, s2) = (q11.max(0.0).sqrt(), q22.max(0.0).sqrt());
    if s1 == 0.0 || s2 == 0.0 {
        // One coordinate is identically zero.
        let g0 = |s_other: f64| which.eval(act, 0.0) * normal_expectation(s_other, |u| which.eval(act, u));
        return if s1 == 0.0 && s2 == 0.0 {
            which.eval(act, 0.0).powi(2)
        } else if s1 == 0.0 {
            g0(s2)
        } else {
            g0(s1)
        };
    }
    if act == Activation::Linear {
        return match which {
            PairFn::Value => s1 * s2 * c,
            PairFn::Derivative => 1.0,
        };
    }
    if c.abs() == 1.0 {
        return normal_expectation(s1, |u| which.eval(act, u) * which.eval(act, c * s2 / s1 * u));
    }
    let s = (1.0 - c * c).sqrt();
    match act {
        Activation::Relu | Activation::LeakyRelu(_) => {
            let k = which.degree();
            let radial = match k {
                0 => 1.0,
                _ => 2.0,
            };
            let scale = (s1 * s2).powi(k) * radial / (2.0 * PI);
            scale * angular_integral(|th| {
                let a1 = th.cos();
                let a2 = c * th.cos() + s * th.sin();
                which.eval(act, a1) * which.eval(act, a2)
            }, c, s)
        }
        _ => normal_expectation2(s1, s2, c, |u1, u2| which.eval(act, u1) * which.eval(act, u2)),
    }
}

/// `∫_0^{2π} f(θ) dθ` for integrands that are smooth except where
/// `cos θ = 0` or `c cos θ + s sin θ = 0`; the rule is applied panel-wise
/// between those breakpoints.
fn angular_integral<F: Fn(f64) -> f64>(f: F, c: f64, s: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let psi = s.atan2(c);
    let mut pts = vec![0.0, two_pi, 0.5 * PI, 1.5 * PI];
    for b in [psi + 0.5 * PI, psi - 0.5 * PI, psi + 1.5 * PI] {
        let r = b.rem_euclid(two_pi);
        pts.push(r);
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    let gl = legendre();
    pts.windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| gl.integrate(w[0], w[1], &f))
        .sum()
}
