use crate::{Activation, NetError};

/// How layer outputs are scaled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Parameterization {
    /// `h_{l+1} = W_l x_l`; the variance lives in the weights.
    Standard,
    /// `h_{l+1} = (σ_w/√n_l) W_l x_l` with unit-variance weights.
    Ntk { sigma_w: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Init {
    /// i.i.d. N(0, σ_w²/n_l) under the standard parameterization and
    /// N(0, 1) under the NTK one (σ_w is then carried by the scaling).
    Gaussian { sigma_w: f64 },
    /// Variance 2/(n_l + n_{l+1}).
    Glorot,
    /// Variance 2/n_l.
    He,
    /// σ_w times a Haar-distributed orthogonal matrix; every layer must be
    /// square.
    Orthogonal { sigma_w: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetConfig {
    /// `n_0, …, n_{L+1}`.
    pub widths: Vec<usize>,
    pub activation: Activation,
    pub parameterization: Parameterization,
    pub init: Init,
}

impl NetConfig {
    pub fn new(
        widths: Vec<usize>,
        activation: Activation,
        parameterization: Parameterization,
        init: Init,
    ) -> Result<Self, NetError> {
        let cfg = Self {
            widths,
            activation,
            parameterization,
            init,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Standard parameterization with N(0, σ_w²/n_l) weights.
    pub fn gaussian(widths: Vec<usize>, activation: Activation, sigma_w: f64) -> Result<Self, NetError> {
        Self::new(
            widths,
            activation,
            Parameterization::Standard,
            Init::Gaussian { sigma_w },
        )
    }

    /// NTK parameterization with unit gaussian weights.
    pub fn ntk(widths: Vec<usize>, activation: Activation, sigma_w: f64) -> Result<Self, NetError> {
        Self::new(
            widths,
            activation,
            Parameterization::Ntk { sigma_w },
            Init::Gaussian { sigma_w },
        )
    }

    pub fn validate(&self) -> Result<(), NetError> {
        if self.widths.len() < 2 {
            return Err(NetError::Config("need at least input and output widths".into()));
        }
        if self.widths.contains(&0) {
            return Err(NetError::Config("all widths must be >= 1".into()));
        }
        if let Parameterization::Ntk { sigma_w } = self.parameterization {
            if !(sigma_w > 0.0 && sigma_w.is_finite()) {
                return Err(NetError::Config(format!("sigma_w must be positive, got {sigma_w}")));
            }
        }
        match self.init {
            Init::Gaussian { sigma_w } | Init::Orthogonal { sigma_w } if !(sigma_w >= 0.0 && sigma_w.is_finite()) => {
                Err(NetError::Config(format!("sigma_w must be non-negative, got {sigma_w}")))
            }
            _ => Ok(()),
        }
    }

    /// Number of hidden layers L.
    pub fn depth(&self) -> usize {
        self.widths.len() - 2
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.widths.last().unwrap()
    }

    /// The factor `c_l` multiplying `W_l x_l`.
    pub fn layer_scale(&self, l: usize) -> f64 {
        match self.parameterization {
            Parameterization::Standard => 1.0,
            Parameterization::Ntk { sigma_w } => sigma_w / (self.widths[l] as f64).sqrt(),
        }
    }

    /// Effective `σ_w²` of layer `l`, i.e. `n_l · Var((c_l W_l)_{ij})`.
    pub fn effective_sigma_w2(&self, l: usize) -> f64 {
        let (nin, nout) = (self.widths[l] as f64, self.widths[l + 1] as f64);
        match (self.parameterization, self.init) {
            (Parameterization::Ntk { sigma_w }, Init::Gaussian { .. }) => sigma_w * sigma_w,
            (Parameterization::Ntk { sigma_w }, Init::Glorot) => sigma_w * sigma_w * 2.0 / (nin + nout),
            (Parameterization::Ntk { sigma_w }, Init::He) => sigma_w * sigma_w * 2.0 / nin,
            (Parameterization::Ntk { sigma_w }, Init::Orthogonal { sigma_w: s }) => {
                sigma_w * sigma_w * s * s / nin
            }
            (Parameterization::Standard, Init::Gaussian { sigma_w }) => sigma_w * sigma_w,
            (Parameterization::Standard, Init::Glorot) => 2.0 * nin / (nin + nout),
            (Parameterization::Standard, Init::He) => 2.0,
            (Parameterization::Standard, Init::Orthogonal { sigma_w }) => sigma_w * sigma_w,
        }
    }
}
