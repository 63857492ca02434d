use num_complex::Complex64;
use numerics::gauss_legendre;

use crate::density::Density1D;
use crate::SpectraError;

/// Heights above the real axis used for the extrapolation ε → 0⁺.
pub const EPSILONS: [f64; 3] = [1e-2, 1e-3, 1e-4];

/// Height of the upper side of the contour.
const TOP: f64 = 1.0;

/// Recovers a density from its Stieltjes transform through
/// `ρ(λ) = −(1/π) lim_{ε→0⁺} Im G(λ + iε)`.
///
/// The value at each grid point is the average of `ρ` over its cell (cells
/// end halfway to the neighbouring points), so point masses come out as
/// tall finite spikes instead of diverging. The cell mass at height ε is
/// `−(1/π) Im ∫ G` along the segment `[a + iε, b + iε]`, which is evaluated
/// over the rest of the rectangle `a+iε → a+i → b+i → b+iε` where the
/// integrand is smooth. Masses at ε ∈ {1e−2, 1e−3, 1e−4} are extrapolated
/// quadratically to ε = 0; values in (−1e−6, 0) are clamped to zero.
pub fn invert_stieltjes<G>(g: G, support_grid: &[f64]) -> Result<Density1D, SpectraError>
where
    G: Fn(Complex64) -> Complex64 + Sync,
{
    let n = support_grid.len();
    if n < 2 || support_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(SpectraError::BadDensity("support grid must be strictly increasing".into()));
    }
    let mut edges = Vec::with_capacity(n + 1);
    edges.push(support_grid[0] - 0.5 * (support_grid[1] - support_grid[0]));
    for w in support_grid.windows(2) {
        edges.push(0.5 * (w[0] + w[1]));
    }
    edges.push(support_grid[n - 1] + 0.5 * (support_grid[n - 1] - support_grid[n - 2]));

    let gl = gauss_legendre(16);
    // ∫_{ε}^{TOP} G(x + iy) dy with y = e^s, piecewise between the heights.
    let vertical = |x: f64| -> [Complex64; 3] {
        let mut out = [Complex64::new(0.0, 0.0); 3];
        let mut acc = Complex64::new(0.0, 0.0);
        let mut upper = TOP.ln();
        for (k, eps) in EPSILONS.iter().enumerate() {
            let lower = eps.ln();
            let panels = (upper - lower).ceil().max(1.0) as usize;
            let h = (upper - lower) / panels as f64;
            for p in 0..panels {
                let a = lower + p as f64 * h;
                for (&t, &w) in gl.nodes.iter().zip(&gl.weights) {
                    let s = a + 0.5 * h * (t + 1.0);
                    let y = s.exp();
                    acc += g(Complex64::new(x, y)) * (0.5 * h * w * y);
                }
            }
            out[k] = acc;
            upper = lower;
        }
        out
    };
    let legs: Vec<[Complex64; 3]> = {
        use rayon::prelude::*;
        edges.par_iter().map(|&x| vertical(x)).collect()
    };

    let mut values = Vec::with_capacity(n);
    for k in 0..n {
        let (a, b) = (edges[k], edges[k + 1]);
        let top: Complex64 = {
            let panels = ((b - a) / 0.25).ceil().max(1.0) as usize;
            let h = (b - a) / panels as f64;
            let mut acc = Complex64::new(0.0, 0.0);
            for p in 0..panels {
                let lo = a + p as f64 * h;
                for (&t, &w) in gl.nodes.iter().zip(&gl.weights) {
                    acc += g(Complex64::new(lo + 0.5 * h * (t + 1.0), TOP)) * (0.5 * h * w);
                }
            }
            acc
        };
        let i = Complex64::new(0.0, 1.0);
        let masses: Vec<f64> = (0..3)
            .map(|e| {
                let contour = i * legs[k][e] + top - i * legs[k + 1][e];
                -contour.im / std::f64::consts::PI
            })
            .collect();
        let extrapolated = richardson(&masses);
        let last = masses[2];
        if !(extrapolated.is_finite()) || (extrapolated - last).abs() > 1e-2 * (1.0 + last.abs()) {
            return Err(SpectraError::Convergence(
                EPSILONS.iter().copied().zip(masses.iter().map(|m| m / (b - a))).collect(),
            ));
        }
        let mut v = extrapolated / (b - a);
        if v < 0.0 && v > -1e-6 {
            v = 0.0;
        }
        values.push(v);
    }
    Ok(Density1D::Tabulated {
        grid: support_grid.to_vec(),
        values,
    })
}

/// Quadratic extrapolation to ε = 0 through the three `EPSILONS` values.
fn richardson(v: &[f64]) -> f64 {
    let e = EPSILONS;
    (0..3)
        .map(|i| {
            let mut w = 1.0;
            for j in 0..3 {
                if j != i {
                    w *= (0.0 - e[j]) / (e[i] - e[j]);
                }
            }
            w * v[i]
        })
        .sum()
}
