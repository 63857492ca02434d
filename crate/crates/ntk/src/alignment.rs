use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::KernelGram;

/// Eigen-decomposition of `H^∞` and the projections of the initial
/// residual onto its eigenvectors, which predict the loss curve
/// `t ↦ Σ_k e^{−2λ_k t} p_k²`.
#[derive(Debug, Clone)]
pub struct AlignmentReport {
    /// Eigenvalues in decreasing order.
    pub eigenvalues: Vec<f64>,
    /// Matching eigenvectors as columns.
    pub eigenvectors: DMatrix<f64>,
    /// `p_k = v_kᵀ(y⃗ − u(0))`.
    pub projections: Vec<f64>,
    pub times: Vec<f64>,
    pub predicted: Vec<f64>,
}

impl AlignmentReport {
    pub fn predicted_at(&self, t: f64) -> f64 {
        self.eigenvalues
            .iter()
            .zip(&self.projections)
            .map(|(l, p)| (-2.0 * l * t).exp() * p * p)
            .sum()
    }

    /// First time the predicted loss falls to `fraction` of its initial
    /// value, or `None` if it never does (a residual in the null space).
    pub fn time_to_fraction(&self, fraction: f64) -> Option<f64> {
        let goal = fraction * self.predicted_at(0.0);
        let (mut lo, mut hi) = (0.0, 1.0);
        let mut tries = 0;
        while self.predicted_at(hi) > goal {
            hi *= 2.0;
            tries += 1;
            if tries > 200 {
                return None;
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.predicted_at(mid) > goal {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(hi)
    }
}

/// Decomposes `h_inf`, projects `y − u0` and evaluates the predicted curve
/// on `times`.
pub fn alignment(h_inf: &KernelGram, y: &DVector<f64>, u0: &DVector<f64>, times: &[f64]) -> AlignmentReport {
    let eig = SymmetricEigen::new(h_inf.matrix.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let cols: Vec<DVector<f64>> = order.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect();
    let eigenvectors = DMatrix::from_columns(&cols);
    let resid = y - u0;
    let projections: Vec<f64> = cols.iter().map(|v| v.dot(&resid)).collect();
    let mut report = AlignmentReport {
        eigenvalues,
        eigenvectors,
        projections,
        times: times.to_vec(),
        predicted: Vec::new(),
    };
    report.predicted = times.iter().map(|&t| report.predicted_at(t)).collect();
    report
}

/// `n` points log-spaced on `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp()).collect()
}
