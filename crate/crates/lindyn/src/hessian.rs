/// Hessian eigenvalues of `E = (s − ∏_{l=0}^{L} a_l)² / 2` at the balanced
/// point `a_0 = … = a_L = a`: `lambda1` along `[1, …, 1]` and the
/// `L`-fold `lambda_rest` on its orthogonal complement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeEigs {
    pub lambda1: f64,
    pub lambda_rest: f64,
}

pub fn hessian_mode_eigs(a: f64, s: f64, depth: usize) -> ModeEigs {
    let l = depth as i32;
    let lf = depth as f64;
    let a2l = a.powi(2 * l);
    let al1 = a.powi(l - 1);
    ModeEigs {
        lambda1: (1.0 + 2.0 * lf) * a2l - s * lf * al1,
        lambda_rest: s * al1 - a2l,
    }
}

/// Largest Hessian eigenvalue over the balanced path `a ∈ [0, s^{1/(L+1)}]`,
/// found by a grid scan refined with golden-section search.
pub fn hessian_max_eig(s: f64, depth: usize) -> f64 {
    let top = s.powf(1.0 / (depth as f64 + 1.0));
    let g = |a: f64| {
        let e = hessian_mode_eigs(a, s, depth);
        e.lambda1.max(e.lambda_rest)
    };
    let n = 2000;
    let (mut best_k, mut best) = (0, f64::NEG_INFINITY);
    for k in 0..=n {
        let v = g(top * k as f64 / n as f64);
        if v > best {
            best = v;
            best_k = k;
        }
    }
    let h = top / n as f64;
    let (mut lo, mut hi) = ((best_k as f64 - 1.0).max(0.0) * h, ((best_k + 1) as f64 * h).min(top));
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let x1 = hi - phi * (hi - lo);
        let x2 = lo + phi * (hi - lo);
        if g(x1) < g(x2) {
            lo = x1;
        } else {
            hi = x2;
        }
    }
    best.max(g(0.5 * (lo + hi))).max(g(top))
}
