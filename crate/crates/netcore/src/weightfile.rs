use std::path::Path;

use serde::{Deserialize, Serialize};

use nalgebra::DMatrix;

use crate::{Activation, Init, NetConfig, NetError, Parameterization, WeightSet};

/// On-disk weight document. Matrices are stored as lists of rows.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightFile {
    pub version: u32,
    pub widths: Vec<usize>,
    pub activation: String,
    /// `standard`, `ntk` (σ_w = 1) or `ntk:<σ_w>`.
    pub parameterization: String,
    pub weights: Vec<Vec<Vec<f64>>>,
}

impl WeightFile {
    pub fn from_net(config: &NetConfig, weights: &WeightSet) -> Result<Self, NetError> {
        weights.check_shapes(config)?;
        let parameterization = match config.parameterization {
            Parameterization::Standard => "standard".to_string(),
            Parameterization::Ntk { sigma_w: 1.0 } => "ntk".to_string(),
            Parameterization::Ntk { sigma_w } => format!("ntk:{sigma_w}"),
        };
        let weights = weights
            .matrices
            .iter()
            .map(|m| m.row_iter().map(|r| r.iter().copied().collect()).collect())
            .collect();
        Ok(Self {
            version: 1,
            widths: config.widths.clone(),
            activation: config.activation.to_string(),
            parameterization,
            weights,
        })
    }

    /// Rebuilds the configuration (init is recorded as unit gaussian, it
    /// plays no role once weights exist) and the weights.
    pub fn to_net(&self) -> Result<(NetConfig, WeightSet), NetError> {
        if self.version != 1 {
            return Err(NetError::WeightFile(format!("unsupported version {}", self.version)));
        }
        let activation: Activation = self.activation.parse()?;
        let parameterization = match self.parameterization.as_str() {
            "standard" => Parameterization::Standard,
            "ntk" => Parameterization::Ntk { sigma_w: 1.0 },
            other => match other.strip_prefix("ntk:").map(str::parse::<f64>) {
                Some(Ok(sigma_w)) => Parameterization::Ntk { sigma_w },
                _ => {
                    return Err(NetError::WeightFile(format!("unknown parameterization '{other}'")));
                }
            },
        };
        let config = NetConfig::new(
            self.widths.clone(),
            activation,
            parameterization,
            Init::Gaussian { sigma_w: 1.0 },
        )?;
        let mut matrices = Vec::with_capacity(self.weights.len());
        for (l, rows) in self.weights.iter().enumerate() {
            let nrows = rows.len();
            let ncols = rows.first().map_or(0, Vec::len);
            if rows.iter().any(|r| r.len() != ncols) {
                return Err(NetError::WeightFile(format!("ragged rows in layer {l}")));
            }
            matrices.push(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]));
        }
        let ws = WeightSet::new(matrices);
        ws.check_shapes(&config)?;
        Ok((config, ws))
    }
}

pub fn weight_file_json(config: &NetConfig, weights: &WeightSet) -> Result<String, NetError> {
    let wf = WeightFile::from_net(config, weights)?;
    serde_json::to_string_pretty(&wf).map_err(|e| NetError::WeightFile(e.to_string()))
}

pub fn write_weight_file(path: &Path, config: &NetConfig, weights: &WeightSet) -> Result<(), NetError> {
    let mut s = weight_file_json(config, weights)?;
    s.push('\n');
    std::fs::write(path, s)?;
    Ok(())
}

pub fn read_weight_file(path: &Path) -> Result<(NetConfig, WeightSet), NetError> {
    let text = std::fs::read_to_string(path)?;
    let wf: WeightFile = serde_json::from_str(&text).map_err(|e| NetError::WeightFile(e.to_string()))?;
    wf.to_net()
}
