//! Generalization-bound calculators: concentration and VC bounds, spectral
//! margin bounds, PAC-Bayes bounds with gaussian posteriors and their
//! optimization, and code-length priors.

mod classic;
mod coding;
mod coverage;
mod margin;
mod pacbayes;
mod spectral;

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

pub use classic::{classic_bounds, hoeffding_eps, sauer_sum, vc_rademacher, ClassicBounds};
pub use coding::{code_length_kl, naive_compressed_bits, CodeLength};
pub use coverage::{coverage_simulation, CoverageReport};
pub use margin::{margin_stats, ramp, MarginStats};
pub use pacbayes::{
    dr_penalty, dziugaite_roy_optimize, gaussian_kl, mcallester_gap, pacbayes_gaussian, pacbayes_mcallester,
    two_blobs, DrOptions, DrOutcome, GaussianPosterior,
};
pub use spectral::{
    a_posteriori_grid, bartlett_a_posteriori, bartlett_bound, bartlett_from_complexity, bartlett_rademacher,
    neyshabur_bound, neyshabur_complexity, neyshabur_gap, norm_profile, spectral_complexity, GridChoice,
    LayerNorms, NormProfile,
};

#[derive(Debug, Error)]
pub enum BoundsError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("layer {0} has zero spectral norm")]
    ZeroNorm(usize),
    #[error("labels must be +1 or -1")]
    Labels,
    #[error("non-finite objective: {0}")]
    NonFinite(String),
    #[error(transparent)]
    Net(#[from] netcore::NetError),
}

pub type Result<T> = std::result::Result<T, BoundsError>;

/// Everything needed to reproduce one bound evaluation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub family: String,
    pub inputs: BTreeMap<String, f64>,
    pub intermediates: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub widths: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridChoice>,
    /// Final risk bound. Values above 1 are vacuous and reported as 1.
    pub value: f64,
    pub flags: Vec<String>,
}

impl BoundReport {
    pub(crate) fn new(family: &str) -> Self {
        Self {
            family: family.to_string(),
            inputs: BTreeMap::new(),
            intermediates: BTreeMap::new(),
            widths: None,
            grid: None,
            value: 0.0,
            flags: Vec::new(),
        }
    }

    pub(crate) fn input(mut self, key: &str, v: f64) -> Self {
        self.inputs.insert(key.to_string(), v);
        self
    }

    pub(crate) fn mid(mut self, key: &str, v: f64) -> Self {
        self.intermediates.insert(key.to_string(), v);
        self
    }

    /// Stores `raw` clamped to `[0, 1]`, flagging vacuous values.
    pub(crate) fn finish(mut self, raw: f64) -> Self {
        self.intermediates.insert("raw_bound".to_string(), raw);
        if raw > 1.0 {
            self.flags.push("vacuous".to_string());
        }
        self.value = raw.clamp(0.0, 1.0);
        self
    }

    /// The formula left its validity regime; the bound is reported as 1.
    pub(crate) fn out_of_regime(mut self, flag: &str) -> Self {
        self.flags.push(flag.to_string());
        self.flags.push("vacuous".to_string());
        self.value = 1.0;
        self
    }
}

pub(crate) fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(BoundsError::Domain(format!("delta must lie in (0, 1), got {delta}")))
    }
}

pub(crate) fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(BoundsError::Domain(format!("{name} must be positive, got {v}")))
    }
}
