use num_complex::Complex64;

use crate::param::ParamSpectrum;
use crate::SpectraError;

/// A probability density on the real line.
#[derive(Debug, Clone, PartialEq)]
pub enum Density1D {
    /// `(1/2π) √(4/x − 1)` on [0, 4]: the spectrum of `W Wᵀ` for a square
    /// gaussian `W` with entry variance `1/n`.
    MarchenkoPastur,
    /// `½ δ(x) + ½ δ(x − 1)`: the spectrum of a squared ReLU mask.
    ReluMaskSquared,
    /// Point mass.
    Dirac(f64),
    /// Product-Wishart limit of depth `L` (`L = 1` is Marchenko–Pastur).
    ProductWishart(usize),
    /// Density samples on an increasing grid, linearly interpolated and zero
    /// outside `[grid[0], grid[last]]`.
    Tabulated { grid: Vec<f64>, values: Vec<f64> },
}

impl Density1D {
    /// Checks the representation: depth ≥ 1, and for tabulated densities an
    /// increasing grid, non-negative values and unit trapezoid mass (1e−6).
    pub fn validate(&self) -> Result<(), SpectraError> {
        match self {
            Density1D::ProductWishart(l) if *l < 1 => Err(SpectraError::BadDepth { got: *l, min: 1 }),
            Density1D::Dirac(x) if !x.is_finite() => Err(SpectraError::BadDensity(format!("atom at {x}"))),
            Density1D::Tabulated { grid, values } => {
                if grid.len() < 2 || grid.len() != values.len() {
                    return Err(SpectraError::BadDensity("grid and values must match, length >= 2".into()));
                }
                if grid.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(SpectraError::BadDensity("grid must be strictly increasing".into()));
                }
                if values.iter().any(|v| !(*v >= 0.0)) {
                    return Err(SpectraError::BadDensity("negative density value".into()));
                }
                let mass = self.total_mass();
                if (mass - 1.0).abs() > 1e-6 {
                    return Err(SpectraError::BadDensity(format!("total mass {mass}")));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Parametric representation for the product-Wishart family.
    pub fn param(&self) -> Option<ParamSpectrum> {
        match self {
            Density1D::MarchenkoPastur => ParamSpectrum::new(1).ok(),
            Density1D::ProductWishart(l) => ParamSpectrum::new(*l).ok(),
            _ => None,
        }
    }

    /// Smallest interval containing the support.
    pub fn support(&self) -> (f64, f64) {
        match self {
            Density1D::MarchenkoPastur => (0.0, 4.0),
            Density1D::ReluMaskSquared => (0.0, 1.0),
            Density1D::Dirac(x) => (*x, *x),
            Density1D::ProductWishart(l) => {
                let l = *l as f64;
                (0.0, (l + 1.0).powf(l + 1.0) / l.powf(l))
            }
            Density1D::Tabulated { grid, .. } => (grid[0], grid[grid.len() - 1]),
        }
    }

    /// Point masses `(location, weight)`.
    pub fn atoms(&self) -> Vec<(f64, f64)> {
        match self {
            Density1D::ReluMaskSquared => vec![(0.0, 0.5), (1.0, 0.5)],
            Density1D::Dirac(x) => vec![(*x, 1.0)],
            _ => Vec::new(),
        }
    }

    /// Absolutely continuous part of the density at `x`.
    pub fn density_at(&self, x: f64) -> f64 {
        match self {
            Density1D::MarchenkoPastur => {
                if x > 0.0 && x < 4.0 {
                    (4.0 / x - 1.0).sqrt() / (2.0 * std::f64::consts::PI)
                } else {
                    0.0
                }
            }
            Density1D::ProductWishart(_) => self.param().map_or(0.0, |p| p.density_at(x)),
            Density1D::Tabulated { grid, values } => interpolate(grid, values, x),
            _ => 0.0,
        }
    }

    /// Total mass; trapezoid rule for tabulated densities.
    pub fn total_mass(&self) -> f64 {
        match self {
            Density1D::Tabulated { grid, values } => grid
                .windows(2)
                .zip(values.windows(2))
                .map(|(g, v)| 0.5 * (g[1] - g[0]) * (v[0] + v[1]))
                .sum(),
            Density1D::MarchenkoPastur | Density1D::ProductWishart(_) => {
                self.param().map_or(f64::NAN, |p| p.integrate(|_| 1.0))
            }
            _ => 1.0,
        }
    }

    /// `∫ ρ(t) / (z − t) dt` with no check against the support.
    pub(crate) fn stieltjes_raw(&self, z: Complex64, param: Option<&ParamSpectrum>) -> Complex64 {
        match self {
            Density1D::Dirac(x) => 1.0 / (z - x),
            Density1D::ReluMaskSquared => 0.5 / z + 0.5 / (z - 1.0),
            Density1D::MarchenkoPastur | Density1D::ProductWishart(_) => {
                param.expect("parametric density without curve").stieltjes(z)
            }
            Density1D::Tabulated { grid, values } => piecewise_linear_stieltjes(grid, values, z),
        }
    }
}

fn interpolate(grid: &[f64], values: &[f64], x: f64) -> f64 {
    if x < grid[0] || x > grid[grid.len() - 1] {
        return 0.0;
    }
    let k = grid.partition_point(|g| *g <= x).clamp(1, grid.len() - 1);
    let (x0, x1) = (grid[k - 1], grid[k]);
    let t = (x - x0) / (x1 - x0);
    values[k - 1] * (1.0 - t) + values[k] * t
}

/// Exact Stieltjes transform of a piecewise-linear density: on a segment
/// `p + q t`, `∫ (p + q t)/(z − t) dt = (p + q z) ln((z − a)/(z − b)) − q (b − a)`.
fn piecewise_linear_stieltjes(grid: &[f64], values: &[f64], z: Complex64) -> Complex64 {
    let mut total = Complex64::new(0.0, 0.0);
    for (g, v) in grid.windows(2).zip(values.windows(2)) {
        let (a, b) = (g[0], g[1]);
        let q = (v[1] - v[0]) / (b - a);
        let p = v[0] - q * a;
        total += (p + q * z) * ((z - a).ln() - (z - b).ln()) - q * (b - a);
    }
    total
}
