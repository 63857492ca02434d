use num_complex::Complex64;

use crate::density::Density1D;
use crate::param::ParamSpectrum;
use crate::SpectraError;

/// Points of the monotonicity check on a bracket.
const MONOTONE_GRID: usize = 1000;
/// Tolerance for snapping an inverse onto a support edge.
const EDGE_SNAP: f64 = 1e-9;

/// Stieltjes, moment-generating and S transforms of a density.
///
/// `G(z) = ∫ ρ(t)/(z − t) dt`, `M(z) = z G(z) − 1`,
/// `S(w) = (1 + w) / (w M⁻¹(w))`.
#[derive(Debug, Clone)]
pub struct StieltjesToolkit {
    density: Density1D,
    param: Option<ParamSpectrum>,
    support: (f64, f64),
}

pub fn stieltjes_toolkit(density: &Density1D) -> Result<StieltjesToolkit, SpectraError> {
    density.validate()?;
    Ok(StieltjesToolkit {
        param: density.param(),
        support: density.support(),
        density: density.clone(),
    })
}

impl StieltjesToolkit {
    pub fn density(&self) -> &Density1D {
        &self.density
    }

    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    fn on_support(&self, x: f64) -> bool {
        let atoms = self.density.atoms();
        if !atoms.is_empty() {
            return atoms.iter().any(|(a, _)| *a == x);
        }
        x >= self.support.0 && x <= self.support.1
    }

    pub fn g(&self, z: Complex64) -> Result<Complex64, SpectraError> {
        if z.im == 0.0 && self.on_support(z.re) {
            return Err(SpectraError::OnSupport(z.re));
        }
        Ok(self.g_unchecked(z))
    }

    /// `G` without the support check, for callers that stay strictly off
    /// the real axis.
    pub fn g_unchecked(&self, z: Complex64) -> Complex64 {
        self.density.stieltjes_raw(z, self.param.as_ref())
    }

    pub fn g_real(&self, x: f64) -> Result<f64, SpectraError> {
        Ok(self.g(Complex64::new(x, 0.0))?.re)
    }

    pub fn m(&self, x: f64) -> Result<f64, SpectraError> {
        Ok(x * self.g_real(x)? - 1.0)
    }

    /// Limit of `G` (or of `M` when `moment` is set) at a support edge,
    /// approached from outside. Infinite when a point mass sits on the edge
    /// (for `M`, a mass at the origin contributes nothing).
    fn edge_value(&self, edge: f64, moment: bool) -> f64 {
        let atoms = self.density.atoms();
        if !atoms.is_empty() {
            let mut total = 0.0;
            for (t, mass) in atoms {
                let num = if moment { mass * t } else { mass };
                if t == edge {
                    if num != 0.0 {
                        return if edge >= self.support.1 { f64::INFINITY } else { f64::NEG_INFINITY } * num.signum();
                    }
                } else {
                    total += num / (edge - t);
                }
            }
            return total;
        }
        let z = match self.density {
            // The piecewise-linear closed form has a logarithm at the edge.
            Density1D::Tabulated { .. } => {
                let (a, b) = self.support;
                let off = 1e-12 * (b - a).abs().max(1.0);
                if edge >= b {
                    edge + off
                } else {
                    edge - off
                }
            }
            _ => edge,
        };
        let g = self.g_unchecked(Complex64::new(z, 0.0)).re;
        if moment {
            z * g - 1.0
        } else {
            g
        }
    }

    /// Solves `f(z) = target` for real `z` outside the support, where `f`
    /// is `G` or `M`. Positive targets are looked for right of the support,
    /// negative ones left of it.
    fn invert_outside(
        &self,
        target: f64,
        f: &dyn Fn(f64) -> Result<f64, SpectraError>,
        at_edge: &dyn Fn(f64) -> f64,
    ) -> Result<f64, SpectraError> {
        if !target.is_finite() || target == 0.0 {
            return Err(SpectraError::OutOfRange(target));
        }
        let (a, b) = self.support;
        let right = target > 0.0;
        let edge = if right { b } else { a };
        let dir = if right { 1.0 } else { -1.0 };
        let edge_val = at_edge(edge);
        if edge_val.is_finite() {
            if (target - edge_val).abs() <= EDGE_SNAP * edge_val.abs().max(1.0) {
                return Ok(edge);
            }
            let beyond = if right { target > edge_val } else { target < edge_val };
            if beyond {
                return Err(SpectraError::OutOfRange(target));
            }
        }
        // Bracket: f decreases in |z − edge| from edge_val toward 0.
        let scale = (b - a).abs().max(edge.abs()).max(1.0);
        let mut far = edge + dir * scale;
        let mut fv = f(far)?;
        let mut tries = 0;
        while (right && fv > target) || (!right && fv < target) {
            far = edge + 2.0 * (far - edge);
            fv = f(far)?;
            tries += 1;
            if tries > 200 {
                return Err(SpectraError::OutOfRange(target));
            }
        }
        let near_start = if edge_val.is_finite() {
            edge
        } else {
            edge + dir * 1e-300_f64.max(f64::EPSILON * scale)
        };
        self.check_monotone(near_start, far, f)?;
        let (mut lo, mut hi) = if right { (edge, far) } else { (far, edge) };
        for _ in 0..400 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let v = f(mid)?;
            // f is decreasing in z on both sides of the support.
            if v > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    fn check_monotone(&self, from: f64, to: f64, f: &dyn Fn(f64) -> Result<f64, SpectraError>) -> Result<(), SpectraError> {
        let (lo, hi) = if from < to { (from, to) } else { (to, from) };
        let mut prev = f64::INFINITY;
        for k in 1..=MONOTONE_GRID {
            let z = lo + (hi - lo) * k as f64 / MONOTONE_GRID as f64;
            if z == self.support.0 || z == self.support.1 {
                continue;
            }
            let v = f(z)?;
            if v > prev + 1e-12 * prev.abs().max(1.0) {
                return Err(SpectraError::NotMonotone { lo, hi });
            }
            prev = v;
        }
        Ok(())
    }

    /// Real `z` outside the support with `M(z) = w`.
    pub fn m_inverse(&self, w: f64) -> Result<f64, SpectraError> {
        let m = |x: f64| self.m(x);
        let at_edge = |e: f64| self.edge_value(e, true);
        self.invert_outside(w, &m, &at_edge)
    }

    pub fn s(&self, w: f64) -> Result<f64, SpectraError> {
        let z = self.m_inverse(w)?;
        if z == 0.0 {
            return Err(SpectraError::OutOfRange(w));
        }
        Ok((1.0 + w) / (w * z))
    }

    /// Real `z` outside the support with `G(z) = ζ`.
    pub fn g_inverse(&self, zeta: f64) -> Result<f64, SpectraError> {
        let g = |x: f64| self.g_real(x);
        let at_edge = |e: f64| self.edge_value(e, false);
        self.invert_outside(zeta, &g, &at_edge)
    }
}

/// `R(ζ) = G⁻¹(ζ) − 1/ζ`.
#[derive(Debug, Clone)]
pub struct RTransform {
    toolkit: StieltjesToolkit,
}

pub fn r_transform(density: &Density1D) -> Result<RTransform, SpectraError> {
    Ok(RTransform {
        toolkit: stieltjes_toolkit(density)?,
    })
}

impl RTransform {
    pub fn eval(&self, zeta: f64) -> Result<f64, SpectraError> {
        Ok(self.toolkit.g_inverse(zeta)? - 1.0 / zeta)
    }
}
