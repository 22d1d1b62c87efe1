use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::pricing::Transform;

pub const OPTION_A_KNEE: f64 = 0.5;
pub const OPTION_A_SCALE: f64 = 10.0;
pub const OPTION_A_EXPONENT: f64 = 1.0;
pub const OPTION_B_BOUND: f64 = 1.0;
pub const OPTION_B_RATE: f64 = 100.0;

fn default_knee() -> f64 {
    OPTION_A_KNEE
}
fn default_scale() -> f64 {
    OPTION_A_SCALE
}
fn default_exponent() -> f64 {
    OPTION_A_EXPONENT
}
fn default_bound() -> f64 {
    OPTION_B_BOUND
}
fn default_rate() -> f64 {
    OPTION_B_RATE
}

/// An owner's compensation curve `W(ε)`: non-decreasing with `W(0) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Contract {
    /// `c·ε`.
    Linear { c: f64 },
    Transformed { transform: Transform, inner: Vec<Contract> },
    /// Risk-tolerant preset: `min(scale·(ε/knee)^exponent, scale)`. Pays
    /// little for small losses and saturates at a large `scale`.
    OptionA {
        #[serde(default = "default_knee")]
        knee: f64,
        #[serde(default = "default_scale")]
        scale: f64,
        #[serde(default = "default_exponent")]
        exponent: f64,
    },
    /// Risk-averse preset: `(2·bound/π)·atan(rate·ε)`. Pays early but never
    /// more than `bound`.
    OptionB {
        #[serde(default = "default_bound")]
        bound: f64,
        #[serde(default = "default_rate")]
        rate: f64,
    },
}

impl Contract {
    pub fn linear(c: f64) -> Self {
        Contract::Linear { c }
    }

    pub fn option_a() -> Self {
        Contract::OptionA { knee: OPTION_A_KNEE, scale: OPTION_A_SCALE, exponent: OPTION_A_EXPONENT }
    }

    pub fn option_b() -> Self {
        Contract::OptionB { bound: OPTION_B_BOUND, rate: OPTION_B_RATE }
    }

    pub fn transformed(transform: Transform, inner: Vec<Contract>) -> Self {
        Contract::Transformed { transform, inner }
    }

    /// Rewrites presets into `Linear`/`Transformed` nodes.
    pub fn expand(&self) -> Contract {
        match self {
            Contract::Linear { c } => Contract::Linear { c: *c },
            Contract::Transformed { transform, inner } => {
                Contract::transformed(transform.clone(), inner.iter().map(Contract::expand).collect())
            }
            Contract::OptionA { knee, scale, exponent } => Contract::transformed(
                Transform::CutOff { cap: *scale },
                vec![Contract::transformed(
                    Transform::LinearComb { coeffs: vec![*scale] },
                    vec![Contract::transformed(
                        Transform::Power { exponent: *exponent },
                        vec![Contract::linear(1.0 / knee)],
                    )],
                )],
            ),
            Contract::OptionB { bound, rate } => Contract::transformed(
                Transform::Atan { scale: 2.0 * bound / PI },
                vec![Contract::linear(*rate)],
            ),
        }
    }

    pub fn is_valid(&self) -> bool {
        let nonneg = |x: f64| x.is_finite() && x >= 0.0;
        match self {
            Contract::Linear { c } => nonneg(*c),
            Contract::Transformed { transform, inner } => {
                transform.is_valid() && transform.accepts(inner.len()) && inner.iter().all(Contract::is_valid)
            }
            Contract::OptionA { knee, scale, exponent } => {
                knee.is_finite() && *knee > 0.0 && nonneg(*scale) && *exponent > 0.0 && *exponent <= 1.0
            }
            Contract::OptionB { bound, rate } => nonneg(*bound) && nonneg(*rate),
        }
    }

    /// The constant of a linear contract.
    pub fn linear_constant(&self) -> Option<f64> {
        match self {
            Contract::Linear { c } => Some(*c),
            _ => None,
        }
    }

    /// `W(ε)` for an extended non-negative loss.
    pub fn eval(&self, loss: f64) -> f64 {
        match self {
            Contract::Linear { c } => crate::pricing::ext_mul(*c, loss),
            Contract::Transformed { transform, inner } => {
                let args: Vec<f64> = inner.iter().map(|w| w.eval(loss)).collect();
                transform.apply(&args)
            }
            preset => preset.expand().eval(loss),
        }
    }
}
