use std::f64::consts::PI;

use num_complex::Complex64;
use numerics::{gauss_legendre, GaussLegendre};

use crate::SpectraError;

const PANEL_NODES: usize = 16;
const BASE_PANELS: usize = 24;
/// Smallest panel of the fixed grading toward either end of the φ interval,
/// relative to its length. Finer grading is added per evaluation point.
const END_GRADING: f64 = 1e-3;

/// One sample of the parametric curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamPoint {
    pub phi: f64,
    pub lambda: f64,
    pub rho: f64,
}

/// Limiting spectrum of `J Jᵀ` for a product of `L` square gaussian matrices
/// with variance `1/n`, parameterized by φ ∈ (0, π/(L+1)):
///
/// `λ(φ) = sin^{L+1}((L+1)φ) / (sin φ sin^L(Lφ))`,
/// `ρ(λ(φ)) = sin²φ sin^{L−1}(Lφ) / (π sin^L((L+1)φ))`.
#[derive(Debug, Clone)]
pub struct ParamSpectrum {
    depth: usize,
    panels: Vec<(f64, f64)>,
    /// Per panel: (quadrature weight × ρ|dλ/dφ|, λ_max − λ).
    nodes: Vec<Vec<(f64, f64)>>,
    /// Cumulative mass from φ_max down to each `cdf_phi` entry.
    cdf_phi: Vec<f64>,
    cdf_mass: Vec<f64>,
}

fn rule() -> GaussLegendre {
    gauss_legendre(PANEL_NODES)
}

/// Breakpoints on [a, b] halving toward `a` (if `toward_a`) or `b` until the
/// innermost piece is no larger than `min_size`.
fn graded(a: f64, b: f64, toward_a: bool, min_size: f64) -> Vec<(f64, f64)> {
    let len = b - a;
    let mut out = Vec::new();
    let mut size = len;
    let mut levels = 0;
    while size > min_size && levels < 60 {
        size *= 0.5;
        levels += 1;
    }
    // Pieces of length len/2, len/4, ..., then the innermost remainder.
    let mut hi = len;
    for _ in 0..levels {
        let lo = hi * 0.5;
        out.push((lo, hi));
        hi = lo;
    }
    out.push((0.0, hi));
    out.into_iter()
        .map(|(lo, hi)| if toward_a { (a + lo, a + hi) } else { (b - hi, b - lo) })
        .collect()
}

impl ParamSpectrum {
    pub fn new(depth: usize) -> Result<Self, SpectraError> {
        if depth < 1 {
            return Err(SpectraError::BadDepth { got: depth, min: 1 });
        }
        let mut spec = ParamSpectrum {
            depth,
            panels: Vec::new(),
            nodes: Vec::new(),
            cdf_phi: Vec::new(),
            cdf_mass: Vec::new(),
        };
        let pm = spec.phi_max();
        let h = pm / BASE_PANELS as f64;
        spec.panels.extend(graded(0.0, h, true, END_GRADING * pm));
        for k in 1..BASE_PANELS - 1 {
            spec.panels.push((k as f64 * h, (k + 1) as f64 * h));
        }
        spec.panels.extend(graded(pm - h, pm, false, END_GRADING * pm));
        spec.panels.sort_by(|a, b| a.0.total_cmp(&b.0));
        let gl = rule();
        spec.nodes = spec
            .panels
            .iter()
            .map(|&(a, b)| spec.panel_nodes(&gl, a, b))
            .collect();
        spec.build_cdf(&gl);
        Ok(spec)
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn phi_max(&self) -> f64 {
        PI / (self.depth as f64 + 1.0)
    }

    /// Right edge of the support, `(L+1)^{L+1} / L^L`.
    pub fn lambda_max(&self) -> f64 {
        let l = self.depth as f64;
        (l + 1.0).powf(l + 1.0) / l.powf(l)
    }

    pub fn lambda(&self, phi: f64) -> f64 {
        self.lambda_max() * self.log_ratio(phi).exp()
    }

    /// `ln(λ(φ)/λ_max)`, accurate as φ → 0 where λ approaches the edge.
    fn log_ratio(&self, phi: f64) -> f64 {
        let lf = self.depth as f64;
        (lf + 1.0) * ln_sinc((lf + 1.0) * phi) - ln_sinc(phi) - lf * ln_sinc(lf * phi)
    }

    /// `λ_max − λ(φ)` without cancellation near the edge.
    pub fn gap(&self, phi: f64) -> f64 {
        -self.lambda_max() * self.log_ratio(phi).exp_m1()
    }

    /// `dλ/dφ / λ`.
    fn log_lambda_slope(&self, phi: f64) -> f64 {
        let lf = self.depth as f64;
        (lf + 1.0).powi(2) * d_ln_sinc((lf + 1.0) * phi) - d_ln_sinc(phi) - lf * lf * d_ln_sinc(lf * phi)
    }

    pub fn lambda_derivative(&self, phi: f64) -> f64 {
        self.lambda(phi) * self.log_lambda_slope(phi)
    }

    pub fn rho(&self, phi: f64) -> f64 {
        let l = self.depth as i32;
        let lf = l as f64;
        phi.sin().powi(2) * (lf * phi).sin().powi(l - 1) / (PI * ((lf + 1.0) * phi).sin().powi(l))
    }

    /// Mass density along the curve, `ρ(λ(φ)) |dλ/dφ|`, written as
    /// `(ρλ) · |d ln λ / dφ|` so that it stays finite and free of
    /// cancellation at both ends of the φ interval.
    pub fn weight(&self, phi: f64) -> f64 {
        let lf = self.depth as f64;
        let rho_lambda = phi.sin() * ((lf + 1.0) * phi).sin() / (PI * (lf * phi).sin());
        rho_lambda * self.log_lambda_slope(phi).abs()
    }

    fn panel_nodes(&self, gl: &GaussLegendre, a: f64, b: f64) -> Vec<(f64, f64)> {
        let half = 0.5 * (b - a);
        gl.nodes
            .iter()
            .zip(&gl.weights)
            .map(|(&x, &w)| {
                let phi = a + half * (x + 1.0);
                (half * w * self.weight(phi), self.gap(phi))
            })
            .collect()
    }

    fn build_cdf(&mut self, gl: &GaussLegendre) {
        let pm = self.phi_max();
        let n = 4096;
        let h = pm / n as f64;
        self.cdf_phi = Vec::with_capacity(n + 1);
        self.cdf_mass = Vec::with_capacity(n + 1);
        let mut acc = 0.0;
        self.cdf_phi.push(pm);
        self.cdf_mass.push(0.0);
        for k in (0..n).rev() {
            let (a, b) = (k as f64 * h, (k + 1) as f64 * h);
            acc += gl.integrate(a, b, |p| self.weight(p));
            self.cdf_phi.push(a);
            self.cdf_mass.push(acc);
        }
    }

    /// Samples of the curve on `points` equally spaced φ values, staying
    /// 1e−8 away from both ends.
    pub fn sample(&self, points: usize) -> Vec<ParamPoint> {
        let (lo, hi) = (1e-8, self.phi_max() - 1e-8);
        (0..points)
            .map(|k| {
                let phi = if points == 1 {
                    0.5 * (lo + hi)
                } else {
                    lo + (hi - lo) * k as f64 / (points - 1) as f64
                };
                ParamPoint {
                    phi,
                    lambda: self.lambda(phi),
                    rho: self.rho(phi),
                }
            })
            .collect()
    }

    /// `∫ f(λ) ρ(λ) dλ`, integrated along the curve.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let b = self.lambda_max();
        self.nodes.iter().flatten().map(|&(w, gap)| w * f(b - gap)).sum()
    }

    /// φ with λ(φ) = `lambda`, for λ inside the support.
    pub fn phi_of_lambda(&self, lambda: f64) -> f64 {
        let (mut lo, mut hi) = (0.0, self.phi_max());
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            // λ decreases in φ.
            if self.lambda(mid) > lambda {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Density at a point of the λ axis (zero outside the support).
    pub fn density_at(&self, lambda: f64) -> f64 {
        if lambda <= 0.0 || lambda >= self.lambda_max() {
            return 0.0;
        }
        self.rho(self.phi_of_lambda(lambda))
    }

    /// `P(λ ≤ x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= self.lambda_max() {
            return 1.0;
        }
        let phi = self.phi_of_lambda(x);
        let gl = rule();
        // Locate φ in the table (cdf_phi is decreasing).
        let n = self.cdf_phi.len() - 1;
        let h = self.phi_max() / n as f64;
        let k = ((phi / h).floor() as usize).min(n - 1);
        // Table entry at φ = (k+1)h holds the mass of [0, λ((k+1)h)].
        let idx = n - (k + 1);
        self.cdf_mass[idx] + gl.integrate(phi, (k + 1) as f64 * h, |p| self.weight(p))
    }

    /// Inverse of [`Self::cdf`].
    pub fn quantile(&self, p: f64) -> f64 {
        if p <= 0.0 {
            return 0.0;
        }
        if p >= 1.0 {
            return self.lambda_max();
        }
        // Table entry j sits at φ = (n − j) h with mass of φ' ≥ φ.
        let n = self.cdf_phi.len() - 1;
        let h = self.phi_max() / n as f64;
        let j = self.cdf_mass.partition_point(|m| *m < p).clamp(1, n);
        let (phi_hi, base) = (self.cdf_phi[j - 1], self.cdf_mass[j - 1]);
        let gl = rule();
        let (mut lo, mut hi) = (phi_hi - h, phi_hi);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            let mass = base + gl.integrate(mid, phi_hi, |q| self.weight(q));
            // Mass grows as φ decreases.
            if mass < p {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        self.lambda(0.5 * (lo + hi))
    }

    /// `∫ ρ(t) / (z − t) dt` for `z` off the support.
    ///
    /// Panels close to the preimage of `Re z` are re-graded so that the
    /// near-pole at distance `|Im z| / |λ′|` in φ is resolved.
    pub fn stieltjes(&self, z: Complex64) -> Complex64 {
        let b = self.lambda_max();
        let zb = z - b;
        let mut total = Complex64::new(0.0, 0.0);
        // Preimage of the evaluation point on the curve and the distance of
        // the complex pole of 1/(z − λ(φ)) from the real φ axis.
        let pm = self.phi_max();
        let lf = self.depth as f64;
        let (phi0, dp) = if z.re >= b {
            // λ ≈ b (1 − L(L+1) φ²/2) near φ = 0.
            (0.0, (2.0 * zb.norm() / (b * lf * (lf + 1.0))).sqrt())
        } else if z.re <= 0.0 {
            // λ ≈ ((L+1) ε)^{L+1} / (sin φ_max sin^L(L φ_max)) at φ = φ_max − ε.
            let k = pm.sin() * (lf * pm).sin().powi(self.depth as i32);
            (pm, (z.norm() * k).powf(1.0 / (lf + 1.0)) / (lf + 1.0))
        } else {
            let p = self.phi_of_lambda(z.re);
            let slope = self.lambda_derivative(p).abs().max(1e-300);
            (p, z.im.abs() / slope)
        };
        let gl = rule();
        for (panel, nodes) in self.panels.iter().zip(&self.nodes) {
            let (pa, pb) = *panel;
            let width = pb - pa;
            let dist = (pa - phi0).max(phi0 - pb).max(0.0);
            if dist + dp >= width {
                for &(w, gap) in nodes {
                    total += pole_term(w, zb + gap);
                }
                continue;
            }
            let min_size = (dist + dp).max(1e-15 * pm);
            let pieces = if phi0 <= pa {
                graded(pa, pb, true, min_size)
            } else if phi0 >= pb {
                graded(pa, pb, false, min_size)
            } else {
                let mut v = graded(pa, phi0, false, min_size);
                v.extend(graded(phi0, pb, true, min_size));
                v
            };
            for (a, c) in pieces {
                for (w, gap) in self.panel_nodes(&gl, a, c) {
                    total += pole_term(w, zb + gap);
                }
            }
        }
        total
    }
}

/// `ln(sin x / x)`.
fn ln_sinc(x: f64) -> f64 {
    if x.abs() < 1e-3 {
        let x2 = x * x;
        -x2 / 6.0 - x2 * x2 / 180.0
    } else {
        (x.sin() / x).ln()
    }
}

/// `d/dx ln(sin x / x) = cot x − 1/x`.
fn d_ln_sinc(x: f64) -> f64 {
    if x.abs() < 1e-2 {
        let x2 = x * x;
        -x * (1.0 / 3.0 + x2 * (1.0 / 45.0 + x2 * (2.0 / 945.0 + x2 / 4725.0)))
    } else {
        x.cos() / x.sin() - 1.0 / x
    }
}

/// `w / d`, dropping nodes that round onto the evaluation point. Those only
/// occur at a support edge, where the node weight is negligibly small.
fn pole_term(w: f64, d: Complex64) -> Complex64 {
    if d.norm_sqr() == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        w / d
    }
}

pub fn product_wishart_spectrum(depth: usize) -> Result<ParamSpectrum, SpectraError> {
    ParamSpectrum::new(depth)
}

/// Right spectral edge `L (L/(L−1))^{L−1}` of the masked orthogonal product
/// at the critical ReLU scale. Defined for `L ≥ 3`.
pub fn relu_orth_edge(depth: usize) -> Result<f64, SpectraError> {
    if depth < 3 {
        return Err(SpectraError::BadDepth { got: depth, min: 3 });
    }
    let l = depth as f64;
    Ok(l * (l / (l - 1.0)).powf(l - 1.0))
}
