use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::NtkError;

/// Everything needed to evaluate the exact solution of linearized
/// training with the square loss `(1/2m)‖f(x⃗) − y⃗‖²` and step `η`.
#[derive(Debug, Clone)]
pub struct LinearizedSolution {
    pub theta_train: DMatrix<f64>,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
    pub f0_train: DVector<f64>,
    pub y: DVector<f64>,
    pub eta: f64,
}

fn eig_checked(gram: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>), NtkError> {
    let sym = (gram + gram.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let lambda_min = eig.eigenvalues.min();
    if lambda_min.is_nan() || lambda_min <= 1e-10 {
        return Err(NtkError::SingularGram { lambda_min });
    }
    Ok((eig.eigenvalues, eig.eigenvectors))
}

impl LinearizedSolution {
    pub fn new(theta_train: DMatrix<f64>, f0_train: DVector<f64>, y: DVector<f64>, eta: f64) -> Result<Self, NtkError> {
        let m = y.len();
        if theta_train.nrows() != m || theta_train.ncols() != m || f0_train.len() != m {
            return Err(NtkError::Shape("train gram, f0 and labels disagree in size".into()));
        }
        if !(eta > 0.0) {
            return Err(NtkError::Invalid(format!("learning rate must be positive, got {eta}")));
        }
        let (eigenvalues, eigenvectors) = eig_checked(&theta_train)?;
        Ok(Self {
            theta_train,
            eigenvalues,
            eigenvectors,
            f0_train,
            y,
            eta,
        })
    }

    pub fn m(&self) -> usize {
        self.y.len()
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    /// `V diag(λ) Vᵀ`, to check the stored decomposition.
    pub fn reconstructed_gram(&self) -> DMatrix<f64> {
        &self.eigenvectors * DMatrix::from_diagonal(&self.eigenvalues) * self.eigenvectors.transpose()
    }

    /// `Θ⁻¹(I − exp(−ηΘt/m))`; `t = ∞` gives `Θ⁻¹`.
    fn filter(&self, t: f64) -> DMatrix<f64> {
        let m = self.m() as f64;
        let g = self.eigenvalues.map(|l| {
            if t.is_infinite() {
                1.0 / l
            } else {
                -(-self.eta * l * t / m).exp_m1() / l
            }
        });
        &self.eigenvectors * DMatrix::from_diagonal(&g) * self.eigenvectors.transpose()
    }

    /// `A_t = Θ(x, x⃗) Θ⁻¹ (I − exp(−ηΘt/m))` for the query rows of
    /// `theta_cross` (queries × train).
    pub fn transfer(&self, theta_cross: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
        theta_cross * self.filter(t)
    }

    /// Prediction `f_t(x) = f_0(x) − A_t (f_0(x⃗) − y⃗)` at the queries.
    pub fn predict(&self, theta_cross: &DMatrix<f64>, f0_query: &DVector<f64>, t: f64) -> DVector<f64> {
        f0_query - self.transfer(theta_cross, t) * (&self.f0_train - &self.y)
    }

    /// Mean and covariance of `f_t` at the queries when `f_0` is drawn from
    /// the gaussian process `prior`.
    pub fn gp_moments(&self, theta_cross: &DMatrix<f64>, prior: &GpPrior, t: f64) -> GpMoments {
        let a = self.transfer(theta_cross, t);
        let mean = &a * &self.y;
        let ak = &a * &prior.cross.transpose();
        let cov = &prior.query - &ak - ak.transpose() + &a * &prior.train * a.transpose();
        GpMoments {
            mean,
            cov: (&cov + cov.transpose()) * 0.5,
        }
    }
}

/// Prior covariance blocks: train × train, query × train, query × query.
#[derive(Debug, Clone)]
pub struct GpPrior {
    pub train: DMatrix<f64>,
    pub cross: DMatrix<f64>,
    pub query: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct GpMoments {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

/// Noise-free GP regression: `μ = q(x,x⃗) q⁻¹ y⃗` and
/// `Σ = q(x,x′) − q(x,x⃗) q⁻¹ q(x⃗,x′)`.
pub fn bayes_posterior(prior: &GpPrior, y: &DVector<f64>) -> Result<GpMoments, NtkError> {
    let (vals, vecs) = eig_checked(&prior.train)?;
    let inv = &vecs * DMatrix::from_diagonal(&vals.map(|l| 1.0 / l)) * vecs.transpose();
    let a = &prior.cross * inv;
    let mean = &a * y;
    let cov = &prior.query - &a * prior.cross.transpose();
    Ok(GpMoments {
        mean,
        cov: (&cov + cov.transpose()) * 0.5,
    })
}
