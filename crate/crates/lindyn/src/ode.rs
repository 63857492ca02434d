use crate::closed::check_mode_args;
use crate::LinDynError;

/// Right-hand side of the mode equation `u̇ = η (L+1) u^{2L/(L+1)} (s − u)`.
pub fn mode_rhs(u: f64, s: f64, eta: f64, depth: usize) -> f64 {
    let l = depth as f64;
    eta * (l + 1.0) * u.max(0.0).powf(2.0 * l / (l + 1.0)) * (s - u)
}

fn rk4_step(u: f64, h: f64, f: &impl Fn(f64) -> f64) -> f64 {
    let k1 = f(u);
    let k2 = f(u + 0.5 * h * k1);
    let k3 = f(u + 0.5 * h * k2);
    let k4 = f(u + h * k3);
    u + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// Step size that keeps the relative change of both `u` and `s − u` near
/// one part in a thousand.
fn adaptive_dt(u: f64, s: f64, rate: f64) -> f64 {
    1e-3 * u.min(s - u) / rate.abs().max(1e-300)
}

/// Time at which the RK4 solution started at `u0` reaches `uf`. The last
/// step is shortened by bisection so that it lands on `uf`.
pub fn rk4_arrival_time(u0: f64, uf: f64, s: f64, eta: f64, depth: usize) -> Result<f64, LinDynError> {
    check_mode_args(u0, uf, s, depth)?;
    let f = |u: f64| mode_rhs(u, s, eta, depth);
    let (mut u, mut t) = (u0, 0.0);
    if u >= uf {
        return Ok(0.0);
    }
    loop {
        let h = adaptive_dt(u, s, f(u));
        let next = rk4_step(u, h, &f);
        if next >= uf {
            let (mut lo, mut hi) = (0.0, h);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if rk4_step(u, mid, &f) < uf {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Ok(t + 0.5 * (lo + hi));
        }
        u = next;
        t += h;
    }
}

/// RK4 solution of the mode equation sampled at the (increasing) `times`.
pub fn rk4_mode_trajectory(u0: f64, s: f64, eta: f64, depth: usize, times: &[f64]) -> Vec<f64> {
    let f = |u: f64| mode_rhs(u, s, eta, depth);
    let mut out = Vec::with_capacity(times.len());
    let (mut u, mut t) = (u0, 0.0);
    for &target in times {
        while t < target {
            let gap = (s - u).abs();
            let h = if u <= 0.0 || gap == 0.0 {
                target - t
            } else {
                (1e-3 * u.min(gap) / f(u).abs().max(1e-300)).min(target - t)
            };
            u = rk4_step(u, h, &f);
            t += h;
        }
        out.push(u);
    }
    out
}

/// RK4 for the one-hidden-unit pair `ȧ = η (s − ab) b`, `ḃ = η (s − ab) a`
/// with fixed step `dt`; returns `(a, b)` after each step.
pub fn rk4_shallow_pair(a0: f64, b0: f64, s: f64, eta: f64, dt: f64, steps: usize) -> Vec<(f64, f64)> {
    let f = |a: f64, b: f64| {
        let r = eta * (s - a * b);
        (r * b, r * a)
    };
    let (mut a, mut b) = (a0, b0);
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        let k1 = f(a, b);
        let k2 = f(a + 0.5 * dt * k1.0, b + 0.5 * dt * k1.1);
        let k3 = f(a + 0.5 * dt * k2.0, b + 0.5 * dt * k2.1);
        let k4 = f(a + dt * k3.0, b + dt * k3.1);
        a += dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        b += dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        out.push((a, b));
    }
    out
}
