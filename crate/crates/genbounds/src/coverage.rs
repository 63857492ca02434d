use netcore::rng_for;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::{check_delta, hoeffding_eps, BoundsError, Result};

/// Outcome of the union-bound coverage experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageReport {
    pub trials: usize,
    pub m: u64,
    pub delta: f64,
    pub class_size: usize,
    pub epsilon: f64,
    /// Fraction of samples on which some member has `R − R̂ > ε`.
    pub violation_fraction: f64,
    /// Fraction of (member, sample) pairs violating the bound.
    pub pair_violation_fraction: f64,
}

/// Threshold classifiers `s·sign(x − t)` on `x ~ U(0, 1)` with labels
/// `sign(x − ½)` flipped with probability `noise`; true risks are exact.
struct ThresholdClass {
    members: Vec<(f64, f64)>,
    noise: f64,
}

impl ThresholdClass {
    fn true_risk(&self, (t, s): (f64, f64)) -> f64 {
        let disagree = (t - 0.5).abs();
        let p = if s > 0.0 { disagree } else { 1.0 - disagree };
        self.noise + (1.0 - 2.0 * self.noise) * p
    }

    fn predict((t, s): (f64, f64), x: f64) -> f64 {
        if x > t {
            s
        } else {
            -s
        }
    }
}

/// Checks that a Hoeffding bound at `δ/|class|` holds uniformly over a
/// finite class with probability at least `1 − δ`.
pub fn coverage_simulation(trials: usize, m: u64, delta: f64, class_size: usize, seed: u64) -> Result<CoverageReport> {
    check_delta(delta)?;
    if trials == 0 || class_size == 0 || m == 0 {
        return Err(BoundsError::Domain("trials, m and class size must be positive".into()));
    }
    let epsilon = hoeffding_eps(m, delta / class_size as f64)?;
    let mut rng = rng_for(seed);
    let class = ThresholdClass {
        members: (0..class_size)
            .map(|_| (rng.random_range(0.0..1.0), if rng.random_bool(0.5) { 1.0 } else { -1.0 }))
            .collect(),
        noise: 0.1,
    };
    let risks: Vec<f64> = class.members.iter().map(|&h| class.true_risk(h)).collect();
    let counts: Vec<usize> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = rng_for(seed.wrapping_add(1 + trial as u64));
            let mut errors = vec![0usize; class_size];
            for _ in 0..m {
                let x: f64 = rng.random_range(0.0..1.0);
                let clean = if x > 0.5 { 1.0 } else { -1.0 };
                let y = if rng.random_bool(class.noise) { -clean } else { clean };
                for (e, &h) in errors.iter_mut().zip(&class.members) {
                    if ThresholdClass::predict(h, x) != y {
                        *e += 1;
                    }
                }
            }
            errors
                .iter()
                .zip(&risks)
                .filter(|(&e, &r)| r - e as f64 / m as f64 > epsilon)
                .count()
        })
        .collect();
    Ok(CoverageReport {
        trials,
        m,
        delta,
        class_size,
        epsilon,
        violation_fraction: counts.iter().filter(|&&c| c > 0).count() as f64 / trials as f64,
        pair_violation_fraction: counts.iter().sum::<usize>() as f64 / (trials * class_size) as f64,
    })
}
