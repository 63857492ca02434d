use crate::ode::rk4_arrival_time;
use crate::LinDynError;

/// Time for a mode to travel from `u0` to `uf`, from the closed form and
/// from RK4 integration of the exact mode equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeTimes {
    /// Exact logarithmic formula for `L = 1`; for `L ≥ 2` the formula
    /// obtained by replacing the exponent `2L/(L+1)` with 2.
    pub closed_form: f64,
    pub rk4: f64,
}

impl ModeTimes {
    /// `|closed_form − rk4| / rk4`.
    pub fn relative_gap(&self) -> f64 {
        if self.rk4 == 0.0 {
            0.0
        } else {
            (self.closed_form - self.rk4).abs() / self.rk4
        }
    }
}

pub(crate) fn check_mode_args(u0: f64, uf: f64, s: f64, depth: usize) -> Result<(), LinDynError> {
    if depth < 1 {
        return Err(LinDynError::Invalid(format!("depth must be >= 1, got {depth}")));
    }
    if !(s > 0.0) {
        return Err(LinDynError::Invalid(format!("target singular value must be positive, got {s}")));
    }
    if u0 == 0.0 {
        return Err(LinDynError::StuckAtZero);
    }
    if !(u0 > 0.0) || uf < u0 {
        return Err(LinDynError::Invalid(format!("need 0 < u0 <= uf, got u0 = {u0}, uf = {uf}")));
    }
    if uf >= s {
        return Err(LinDynError::Unreachable { uf, s });
    }
    Ok(())
}

/// `1/u₀ − 1/u_f + (1/s) ln(u_f (s − u₀) / (u₀ (s − u_f)))`.
fn deep_bracket(u0: f64, uf: f64, s: f64) -> f64 {
    1.0 / u0 - 1.0 / uf + log_ratio(u0, uf, s) / s
}

fn log_ratio(u0: f64, uf: f64, s: f64) -> f64 {
    (uf * (s - u0) / (u0 * (s - uf))).ln()
}

pub fn mode_time(u0: f64, uf: f64, s: f64, eta: f64, depth: usize) -> Result<ModeTimes, LinDynError> {
    check_mode_args(u0, uf, s, depth)?;
    if !(eta > 0.0) {
        return Err(LinDynError::Invalid(format!("learning rate must be positive, got {eta}")));
    }
    let l = depth as f64;
    let closed_form = if depth == 1 {
        log_ratio(u0, uf, s) / (2.0 * s * eta)
    } else {
        deep_bracket(u0, uf, s) / ((l + 1.0) * s * eta)
    };
    let rk4 = rk4_arrival_time(u0, uf, s, eta, depth)?;
    Ok(ModeTimes { closed_form, rk4 })
}

/// Learning rate `1/λ_max` with `λ_max = (L+1) s^{2L/(L+1)}` the largest
/// Hessian eigenvalue on the balanced path, and the resulting training time
/// of the approximate deep formula.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    pub eta_opt: f64,
    pub t_opt: f64,
}

pub fn opt_schedule(u0: f64, uf: f64, s: f64, depth: usize) -> Result<Schedule, LinDynError> {
    check_mode_args(u0, uf, s, depth)?;
    let l = depth as f64;
    let eta_opt = 1.0 / ((l + 1.0) * s.powf(2.0 * l / (l + 1.0)));
    let t_opt = s.powf((l - 1.0) / (l + 1.0)) * deep_bracket(u0, uf, s);
    Ok(Schedule { eta_opt, t_opt })
}
