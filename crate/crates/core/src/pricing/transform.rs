//! Non-decreasing, subadditive maps `f: (R̄⁺)^k → R̄⁺` with `f(0) = 0`.
//!
//! Composing arbitrage-free prices through any of these keeps them
//! arbitrage-free, and the same whitelist drives micro-payment rules and
//! owner contracts. All functions accept `+∞` and map it to the
//! mathematical limit.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

/// `a·x` with `0·∞ = 0`.
pub fn ext_mul(a: f64, x: f64) -> f64 {
    if a == 0.0 || x == 0.0 {
        0.0
    } else {
        a * x
    }
}

pub fn cutoff(x: f64, cap: f64) -> f64 {
    x.min(cap)
}

pub fn power(x: f64, exponent: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.powf(exponent)
    }
}

pub fn log1p(x: f64) -> f64 {
    x.ln_1p()
}

/// `√(a·b)`; a zero argument wins over an infinite one.
pub fn geomean(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        0.0
    } else {
        a.sqrt() * b.sqrt()
    }
}

pub fn atan(x: f64) -> f64 {
    if x.is_infinite() {
        FRAC_PI_2
    } else {
        x.atan()
    }
}

pub fn tanh(x: f64) -> f64 {
    x.tanh()
}

/// `x / √(1 + x²)`, stable for large and infinite `x`.
pub fn alg_sigmoid(x: f64) -> f64 {
    if x.is_infinite() {
        1.0
    } else if x > 1.0 {
        1.0 / (1.0 + 1.0 / (x * x)).sqrt()
    } else {
        x / (1.0 + x * x).sqrt()
    }
}

/// Whitelisted composition functions shared by rules and contracts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    Identity,
    #[serde(rename = "lincomb")]
    LinearComb { coeffs: Vec<f64> },
    Max,
    #[serde(rename = "cutoff")]
    CutOff { cap: f64 },
    Power { exponent: f64 },
    Log1p,
    /// `√(a·b)`. Evaluable but never valid: it is superadditive, not
    /// subadditive, so composing with it can create arbitrage.
    #[serde(rename = "geomean")]
    GeoMean,
    Atan { scale: f64 },
    Tanh { scale: f64 },
    AlgSigmoid { scale: f64 },
}

impl Transform {
    /// Whether the transform accepts `k` arguments.
    pub fn accepts(&self, k: usize) -> bool {
        match self {
            Transform::LinearComb { coeffs } => coeffs.len() == k,
            Transform::Max => k >= 1,
            Transform::GeoMean => k == 2,
            _ => k == 1,
        }
    }

    pub fn is_valid(&self) -> bool {
        let nonneg = |x: &f64| x.is_finite() && *x >= 0.0;
        match self {
            Transform::Identity | Transform::Max | Transform::Log1p => true,
            Transform::GeoMean => false,
            Transform::LinearComb { coeffs } => coeffs.iter().all(nonneg),
            Transform::CutOff { cap } => !cap.is_nan() && *cap >= 0.0,
            Transform::Power { exponent } => *exponent > 0.0 && *exponent <= 1.0,
            Transform::Atan { scale } | Transform::Tanh { scale } | Transform::AlgSigmoid { scale } => nonneg(scale),
        }
    }

    /// Applies the transform. Callers are expected to have checked [`Transform::accepts`].
    pub fn apply(&self, args: &[f64]) -> f64 {
        debug_assert!(self.accepts(args.len()));
        match self {
            Transform::Identity => args[0],
            Transform::LinearComb { coeffs } => coeffs.iter().zip(args).map(|(c, x)| ext_mul(*c, *x)).sum(),
            Transform::Max => args.iter().copied().fold(0.0, f64::max),
            Transform::CutOff { cap } => cutoff(args[0], *cap),
            Transform::Power { exponent } => power(args[0], *exponent),
            Transform::Log1p => log1p(args[0]),
            Transform::GeoMean => geomean(args[0], args[1]),
            Transform::Atan { scale } => ext_mul(*scale, atan(args[0])),
            Transform::Tanh { scale } => ext_mul(*scale, tanh(args[0])),
            Transform::AlgSigmoid { scale } => ext_mul(*scale, alg_sigmoid(args[0])),
        }
    }
}
