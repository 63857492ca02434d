use std::fmt;
use std::str::FromStr;

use crate::NetError;

/// Pointwise nonlinearity φ with φ(0) = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activation {
    Linear,
    Relu,
    /// Slope α ∈ (0, 1) on the negative half-line.
    LeakyRelu(f64),
    Tanh,
}

impl Activation {
    pub fn leaky_relu(alpha: f64) -> Result<Self, NetError> {
        if alpha > 0.0 && alpha < 1.0 {
            Ok(Activation::LeakyRelu(alpha))
        } else {
            Err(NetError::Config(format!("leaky_relu slope {alpha} not in (0,1)")))
        }
    }

    pub fn value(&self, z: f64) -> f64 {
        match *self {
            Activation::Linear => z,
            Activation::Relu => z.max(0.0),
            Activation::LeakyRelu(a) => {
                if z > 0.0 {
                    z
                } else {
                    a * z
                }
            }
            Activation::Tanh => z.tanh(),
        }
    }

    /// φ′(z). At the ReLU kink the left value is used, so that φ′(0) agrees
    /// with the strict indicator `[z > 0]`.
    pub fn derivative(&self, z: f64) -> f64 {
        match *self {
            Activation::Linear => 1.0,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::LeakyRelu(a) => {
                if z > 0.0 {
                    1.0
                } else {
                    a
                }
            }
            Activation::Tanh => {
                let c = z.cosh();
                1.0 / (c * c)
            }
        }
    }

    /// φ″(z); zero almost everywhere for the piecewise-linear kinds.
    pub fn second_derivative(&self, z: f64) -> f64 {
        match *self {
            Activation::Tanh => {
                let t = z.tanh();
                -2.0 * t * (1.0 - t * t)
            }
            _ => 0.0,
        }
    }

    /// φ⁻¹(y) where defined. Tanh is only invertible on (−1, 1).
    pub fn inverse(&self, y: f64) -> Option<f64> {
        match *self {
            Activation::Linear => Some(y),
            Activation::Relu => None,
            Activation::LeakyRelu(a) => Some(if y > 0.0 { y } else { y / a }),
            Activation::Tanh => {
                if y.abs() < 1.0 {
                    Some(y.atanh())
                } else {
                    None
                }
            }
        }
    }

    /// True when φ is a bijection of ℝ onto ℝ.
    pub fn is_bijective_on_reals(&self) -> bool {
        matches!(self, Activation::Linear | Activation::LeakyRelu(_))
    }

    /// For positively homogeneous kinds (φ(rz) = rφ(z), r > 0) returns
    /// `E φ(z)²` under z ∼ N(0,1); `None` for tanh.
    pub fn homogeneous_second_moment(&self) -> Option<f64> {
        match *self {
            Activation::Linear => Some(1.0),
            Activation::Relu => Some(0.5),
            Activation::LeakyRelu(a) => Some(0.5 * (1.0 + a * a)),
            Activation::Tanh => None,
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Activation::Linear => write!(f, "linear"),
            Activation::Relu => write!(f, "relu"),
            Activation::LeakyRelu(a) => write!(f, "leaky_relu:{a}"),
            Activation::Tanh => write!(f, "tanh"),
        }
    }
}

impl FromStr for Activation {
    type Err = NetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "linear" => Ok(Activation::Linear),
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            _ => {
                if let Some(rest) = s.strip_prefix("leaky_relu:") {
                    let a: f64 = rest
                        .parse()
                        .map_err(|_| NetError::Config(format!("bad leaky_relu slope '{rest}'")))?;
                    Activation::leaky_relu(a)
                } else {
                    Err(NetError::Config(format!("unknown activation '{s}'")))
                }
            }
        }
    }
}
