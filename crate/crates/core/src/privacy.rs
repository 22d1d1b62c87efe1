//! Data-independent query answering and per-item privacy loss.
//!
//! Queries are answered with the Laplace mechanism: the exact answer plus
//! `Lap(b)` noise with `b = √(v/2)`, so the noise variance `2b²` is exactly
//! the variance the buyer paid for. Privacy loss is accounted through the
//! sensitivity bound `ε_i ≤ γ·|q_i| / b`.

use rand::distributions::Open01;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pricing::ext_mul;
use crate::query::{evaluate, Database, LinearQuery, PricedQuery};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    #[default]
    Laplace,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub scale: f64,
}

impl NoiseSpec {
    /// Laplace noise whose variance equals `variance`.
    pub fn for_variance(variance: f64) -> Self {
        NoiseSpec { kind: NoiseKind::Laplace, scale: (variance / 2.0).sqrt() }
    }

    pub fn variance(&self) -> f64 {
        2.0 * self.scale * self.scale
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.kind {
            NoiseKind::Laplace => sample_laplace(rng, self.scale),
        }
    }
}

/// One draw from `Lap(0, b)` by inverting the CDF of a uniform on (0, 1).
pub fn sample_laplace<R: Rng + ?Sized>(rng: &mut R, b: f64) -> f64 {
    if b == 0.0 {
        return 0.0;
    }
    let u: f64 = rng.sample(Open01);
    if u < 0.5 {
        b * (2.0 * u).ln()
    } else {
        -b * (2.0 * (1.0 - u)).ln()
    }
}

/// Answers `q` on `x` with Laplace noise of variance exactly `v`.
///
/// `v = 0` returns the exact answer without touching `rng`. `v = ∞` is an
/// error: there is nothing to answer with.
pub fn answer<R: Rng + ?Sized>(q: &PricedQuery, x: &Database, rng: &mut R) -> Result<f64> {
    let exact = evaluate(q.query(), x)?;
    let v = q.variance();
    if v.is_infinite() {
        return Err(Error::InvalidQuery("a query with unbounded variance carries no information".into()));
    }
    if v == 0.0 {
        return Ok(exact);
    }
    Ok(exact + NoiseSpec::for_variance(v).sample(rng))
}

/// Personalized sensitivity `s_i = γ·|q_i|`.
pub fn sensitivity(q: &LinearQuery, i: usize, gamma: f64) -> Result<f64> {
    Ok(gamma * q.coefficient(i)?.abs())
}

/// Upper bound on the privacy loss to item `i`: `γ·|q_i| / √(v/2)`.
pub fn loss_bound(q: &PricedQuery, i: usize, gamma: f64) -> Result<f64> {
    let s = sensitivity(q.query(), i, gamma)?;
    if s == 0.0 {
        return Ok(0.0);
    }
    let v = q.variance();
    if v == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(s / (v / 2.0).sqrt())
}

/// Loss of a linear combination of mechanisms: `Σ |c_j|·ε_j`, with `0·∞ = 0`.
pub fn compose_loss(coeffs: &[f64], losses: &[f64]) -> Result<f64> {
    if coeffs.len() != losses.len() {
        return Err(Error::dims(coeffs.len(), losses.len()));
    }
    Ok(coeffs.iter().zip(losses).map(|(c, e)| ext_mul(c.abs(), *e)).sum())
}

/// Per-item loss bounds for one answered query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivacyLoss {
    pub per_owner_bound: Vec<f64>,
}

impl PrivacyLoss {
    pub fn of(q: &PricedQuery, gamma: f64) -> Self {
        let per_owner_bound = (0..q.len()).map(|i| loss_bound(q, i, gamma).expect("index in range")).collect();
        PrivacyLoss { per_owner_bound }
    }
}
