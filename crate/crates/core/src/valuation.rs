//! Randomized prices that keep the owners' contract constants private.
//!
//! With linear contracts `W_i(ε) = c_i·ε`, the deterministic price reveals
//! the `c_i`. Here the price itself is a Laplace mechanism over `c`: its
//! expectation is `γ·b'/(b·(b'−δ))·Σ c_i|q_i|` and each realization adds
//! `Lap(b')`. Micro-payments split every realization exactly, so the market
//! recovers its cost per draw and owners are compensated in expectation.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::payments::{synthesize_price, MicroPaymentRule};
use crate::pricing::{PriceExpr, PriceFunction};
use crate::privacy::sample_laplace;
use crate::query::PricedQuery;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawProfile")]
pub struct ValuationProfile {
    constants: Vec<f64>,
    delta: f64,
    b_prime: f64,
}

#[derive(Deserialize)]
struct RawProfile {
    constants: Vec<f64>,
    delta: f64,
    b_prime: f64,
}

impl TryFrom<RawProfile> for ValuationProfile {
    type Error = Error;

    fn try_from(raw: RawProfile) -> Result<Self> {
        ValuationProfile::new(raw.constants, raw.delta, raw.b_prime)
    }
}

impl ValuationProfile {
    /// Requires `b' > δ` and every `c_i ∈ [0, δ]`.
    pub fn new(constants: Vec<f64>, delta: f64, b_prime: f64) -> Result<Self> {
        if !(delta.is_finite() && delta >= 0.0) {
            return Err(Error::InvalidConfig(format!("delta must be finite and non-negative, got {delta}")));
        }
        if !(b_prime.is_finite() && b_prime > delta) {
            return Err(Error::InvalidConfig(format!(
                "b_prime must exceed delta ({delta}), got {b_prime}; the expected price would be infinite"
            )));
        }
        if constants.is_empty() {
            return Err(Error::InvalidConfig("no contract constants".into()));
        }
        if let Some((i, c)) = constants.iter().enumerate().find(|(_, c)| !(**c >= 0.0 && **c <= delta)) {
            return Err(Error::InvalidConfig(format!("constant c_{i} = {c} lies outside [0, {delta}]")));
        }
        Ok(ValuationProfile { constants, delta, b_prime })
    }

    pub fn constants(&self) -> &[f64] {
        &self.constants
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn b_prime(&self) -> f64 {
        self.b_prime
    }

    pub fn len(&self) -> usize {
        self.constants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constants.is_empty()
    }

    /// `b'/(b'−δ)`, the inflation paid for hiding the constants.
    pub fn inflation(&self) -> f64 {
        self.b_prime / (self.b_prime - self.delta)
    }

    fn check(&self, q: &PricedQuery) -> Result<f64> {
        if q.len() != self.constants.len() {
            return Err(Error::dims(self.constants.len(), q.len()));
        }
        let v = q.variance();
        if v == 0.0 {
            return Err(Error::InvalidQuery("exact answers are not priced under private valuations".into()));
        }
        Ok((v / 2.0).sqrt())
    }
}

/// `E[π(Q)] = γ·b'/(b·(b'−δ))·Σ c_i|q_i|` with `b = √(v/2)`.
pub fn expected_price(q: &PricedQuery, prof: &ValuationProfile, gamma: f64) -> Result<f64> {
    let b = prof.check(q)?;
    let weighted: f64 = prof.constants.iter().zip(q.query().coefficients()).map(|(c, x)| c * x.abs()).sum();
    if weighted == 0.0 {
        return Ok(0.0);
    }
    Ok(gamma * prof.inflation() * weighted / b)
}

/// The price for a given noise draw `rho`. `noisy_price` draws `rho` from `Lap(b')`.
pub fn price_with_noise(q: &PricedQuery, prof: &ValuationProfile, gamma: f64, rho: f64) -> Result<f64> {
    Ok(expected_price(q, prof, gamma)? + rho)
}

/// One realization of the randomized price. May be negative.
pub fn noisy_price<R: Rng + ?Sized>(q: &PricedQuery, prof: &ValuationProfile, gamma: f64, rng: &mut R) -> Result<f64> {
    let expected = expected_price(q, prof, gamma)?;
    Ok(expected + sample_laplace(rng, prof.b_prime))
}

/// `s_i(K') = γ·b'·|q_i|·δ / (b·(b'−δ))`, the sensitivity of the price to `c_i`.
pub fn valuation_sensitivity(q: &PricedQuery, prof: &ValuationProfile, gamma: f64, i: usize) -> Result<f64> {
    let b = prof.check(q)?;
    let qi = q.query().coefficient(i)?.abs();
    if qi == 0.0 {
        return Ok(0.0);
    }
    Ok(gamma * prof.inflation() * qi * prof.delta / b)
}

/// `s_i(K')/b'`, the bound on what one price realization reveals about `c_i`.
pub fn valuation_loss_bound(q: &PricedQuery, prof: &ValuationProfile, gamma: f64, i: usize) -> Result<f64> {
    Ok(valuation_sensitivity(q, prof, gamma, i)? / prof.b_prime)
}

/// `μ_i = (s_i(K)/b + s_i(K')/b')·c_i + (π − E[π])/n` for a realized price `π`.
pub fn micropayment_general(
    q: &PricedQuery,
    prof: &ValuationProfile,
    gamma: f64,
    i: usize,
    realized_price: f64,
) -> Result<f64> {
    let b = prof.check(q)?;
    let s_answer = gamma * q.query().coefficient(i)?.abs();
    let s_price = valuation_sensitivity(q, prof, gamma, i)?;
    let deterministic = if s_answer == 0.0 { 0.0 } else { (s_answer / b + s_price / prof.b_prime) * prof.constants[i] };
    let share = (realized_price - expected_price(q, prof, gamma)?) / prof.len() as f64;
    Ok(deterministic + share)
}

/// All micro-payments for one realization; they sum to `realized_price`.
pub fn micropayments_general(
    q: &PricedQuery,
    prof: &ValuationProfile,
    gamma: f64,
    realized_price: f64,
) -> Result<Vec<f64>> {
    (0..prof.len()).map(|i| micropayment_general(q, prof, gamma, i, realized_price)).collect()
}

/// The expected price as an arbitrage-free price expression: a sum of
/// basic micro-payment terms with constants `c_i·b'/(b'−δ)`.
pub fn expected_price_expr(prof: &ValuationProfile, gamma: f64) -> PriceExpr {
    let rules: Vec<MicroPaymentRule> =
        prof.constants.iter().map(|c| MicroPaymentRule::basic(c * prof.inflation(), gamma)).collect();
    synthesize_price(&rules)
}

/// `E[π]` as a [`PriceFunction`], extended to `v = 0` (infinite unless no
/// weight is on the query) for fuzzing.
#[derive(Debug, Clone)]
pub struct ExpectedPrice {
    pub profile: ValuationProfile,
    pub gamma: f64,
}

impl PriceFunction for ExpectedPrice {
    fn price(&self, q: &PricedQuery) -> f64 {
        if q.variance() == 0.0 {
            let weighted: f64 =
                self.profile.constants.iter().zip(q.query().coefficients()).map(|(c, x)| c * x.abs()).sum();
            return if weighted == 0.0 { 0.0 } else { f64::INFINITY };
        }
        expected_price(q, &self.profile, self.gamma).unwrap_or(f64::NAN)
    }
}
