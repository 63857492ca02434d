use nalgebra::{DMatrix, SymmetricEigen};

/// Gauss–Hermite rule normalized for the standard normal measure:
/// `E f(z) ≈ Σ w_i f(z_i)` with `z ∼ N(0, 1)`.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    pub fn expect<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&z, &w)| w * f(z))
            .sum()
    }

    /// Tensor-product rule for a pair of independent standard normals.
    pub fn expect2<F: Fn(f64, f64) -> f64>(&self, f: F) -> f64 {
        let mut acc = 0.0;
        for (&z1, &w1) in self.nodes.iter().zip(&self.weights) {
            let mut inner = 0.0;
            for (&z2, &w2) in self.nodes.iter().zip(&self.weights) {
                inner += w2 * f(z1, z2);
            }
            acc += w1 * inner;
        }
        acc
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Golub–Welsch construction. The Jacobi matrix of the probabilists'
/// Hermite polynomials has off-diagonal entries √i, so the eigenvalues are
/// directly the standard-normal nodes and the weights are the squared first
/// eigenvector components (the measure has unit mass).
pub fn gauss_hermite(n: usize) -> GaussHermite {
    assert!(n >= 1, "quadrature needs at least one node");
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        let b = (i as f64).sqrt();
        jac[(i, i - 1)] = b;
        jac[(i - 1, i)] = b;
    }
    let (nodes, weights) = golub_welsch(jac, 1.0);
    // Symmetrize: the rule is exact on odd functions only if nodes pair up.
    let mut nodes_sym = nodes.clone();
    let mut weights_sym = weights.clone();
    for i in 0..n {
        let j = n - 1 - i;
        nodes_sym[i] = 0.5 * (nodes[i] - nodes[j]);
        weights_sym[i] = 0.5 * (weights[i] + weights[j]);
    }
    GaussHermite {
        nodes: nodes_sym,
        weights: weights_sym,
    }
}

/// Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        let mut acc = 0.0;
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }

    /// Composite rule over `panels` equal sub-intervals.
    pub fn integrate_composite<F: FnMut(f64) -> f64>(
        &self,
        a: f64,
        b: f64,
        panels: usize,
        mut f: F,
    ) -> f64 {
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|p| {
                let lo = a + h * p as f64;
                self.integrate(lo, lo + h, &mut f)
            })
            .sum()
    }

    /// Mapped nodes and weights of the composite rule, for callers that need
    /// to evaluate a complex-valued or vector integrand themselves.
    pub fn composite_points(&self, a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
        let h = (b - a) / panels as f64;
        let mut out = Vec::with_capacity(panels * self.nodes.len());
        for p in 0..panels {
            let lo = a + h * p as f64;
            let mid = lo + 0.5 * h;
            for (&x, &w) in self.nodes.iter().zip(&self.weights) {
                out.push((mid + 0.5 * h * x, 0.5 * h * w));
            }
        }
        out
    }
}

pub fn gauss_legendre(n: usize) -> GaussLegendre {
    assert!(n >= 1, "quadrature needs at least one node");
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        let k = i as f64;
        let b = k / (4.0 * k * k - 1.0).sqrt();
        jac[(i, i - 1)] = b;
        jac[(i - 1, i)] = b;
    }
    let (nodes, weights) = golub_welsch(jac, 2.0);
    GaussLegendre { nodes, weights }
}

fn golub_welsch(jac: DMatrix<f64>, mass: f64) -> (Vec<f64>, Vec<f64>) {
    let n = jac.nrows();
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let v0 = eig.eigenvectors[(0, k)];
            (eig.eigenvalues[k], mass * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn hermite_reproduces_normal_moments() {
        let gh = gauss_hermite(64);
        assert_relative_eq!(gh.expect(|_| 1.0), 1.0, epsilon = 1e-13);
        assert_relative_eq!(gh.expect(|z| z * z), 1.0, epsilon = 1e-12);
        assert_relative_eq!(gh.expect(|z| z.powi(4)), 3.0, epsilon = 1e-11);
        assert_relative_eq!(gh.expect(|z| z.powi(6)), 15.0, epsilon = 1e-10);
        assert!(gh.expect(|z| z.powi(3)).abs() < 1e-12);
    }

    #[test]
    fn legendre_integrates_polynomials_exactly() {
        let gl = gauss_legendre(16);
        assert_relative_eq!(gl.integrate(0.0, 2.0, |x| x.powi(7)), 32.0, epsilon = 1e-11);
        assert_relative_eq!(
            gl.integrate_composite(0.0, std::f64::consts::PI, 4, f64::sin),
            2.0,
            epsilon = 1e-13
        );
    }
}
