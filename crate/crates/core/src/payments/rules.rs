use serde::{Deserialize, Serialize};

use super::contract::Contract;
use crate::error::{Error, Result};
use crate::pricing::{ext_mul, PriceExpr, PriceFunction, SemiNorm, Transform};
use crate::privacy::loss_bound;
use crate::query::PricedQuery;

/// How much the owner of one item is paid for a query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MicroPaymentRule {
    /// `c·γ·|q_i| / √(v/2)`: the linear contract `c·ε` applied to the
    /// Laplace loss bound.
    Basic { c: f64, gamma: f64 },
    Transformed { transform: Transform, inner: Vec<MicroPaymentRule> },
}

impl MicroPaymentRule {
    pub fn basic(c: f64, gamma: f64) -> Self {
        MicroPaymentRule::Basic { c, gamma }
    }

    /// The semi-balanced rule for a contract: each linear leaf becomes a
    /// basic rule and every transform is kept.
    pub fn for_contract(contract: &Contract, gamma: f64) -> Self {
        match contract.expand() {
            Contract::Linear { c } => MicroPaymentRule::Basic { c, gamma },
            Contract::Transformed { transform, inner } => MicroPaymentRule::Transformed {
                transform,
                inner: inner.iter().map(|w| MicroPaymentRule::for_contract(w, gamma)).collect(),
            },
            _ => unreachable!("expand removes presets"),
        }
    }

    pub fn is_valid(&self) -> bool {
        match self {
            MicroPaymentRule::Basic { c, gamma } => {
                c.is_finite() && *c >= 0.0 && gamma.is_finite() && *gamma > 0.0
            }
            MicroPaymentRule::Transformed { transform, inner } => {
                transform.is_valid()
                    && transform.accepts(inner.len())
                    && inner.iter().all(MicroPaymentRule::is_valid)
            }
        }
    }

    pub fn eval(&self, q: &PricedQuery, i: usize) -> Result<f64> {
        match self {
            MicroPaymentRule::Basic { c, gamma } => Ok(ext_mul(*c, loss_bound(q, i, *gamma)?)),
            MicroPaymentRule::Transformed { transform, inner } => {
                let args = inner.iter().map(|r| r.eval(q, i)).collect::<Result<Vec<_>>>()?;
                Ok(transform.apply(&args))
            }
        }
    }

    /// The same payment as a price expression over queries of length `n`.
    pub fn to_price_expr(&self, i: usize, n: usize) -> PriceExpr {
        match self {
            MicroPaymentRule::Basic { c, gamma } => {
                let mut weights = vec![0.0; n];
                weights[i] = 2.0 * gamma * gamma * c * c;
                PriceExpr::base(SemiNorm::WeightedL2 { weights }).power(0.5)
            }
            MicroPaymentRule::Transformed { transform, inner } => {
                PriceExpr::from_transform(transform, inner.iter().map(|r| r.to_price_expr(i, n)).collect())
            }
        }
    }
}

/// `μ_i(Q)` for the given rule.
pub fn micropayment(rule: &MicroPaymentRule, q: &PricedQuery, i: usize) -> Result<f64> {
    rule.eval(q, i)
}

/// One item's micro-payment viewed as a price function.
#[derive(Debug, Clone, Copy)]
pub struct ItemPayment<'a> {
    pub rule: &'a MicroPaymentRule,
    pub item: usize,
}

impl PriceFunction for ItemPayment<'_> {
    fn price(&self, q: &PricedQuery) -> f64 {
        self.rule.eval(q, self.item).unwrap_or(f64::NAN)
    }
}

/// The price `π(Q) = Σ_i μ_i(Q)`, one rule per item.
pub fn synthesize_price(rules: &[MicroPaymentRule]) -> PriceExpr {
    let n = rules.len();
    PriceExpr::lincomb(rules.iter().enumerate().map(|(i, r)| (1.0, r.to_price_expr(i, n))).collect())
}

/// Applies `f_i` item-wise to `k` semi-balanced families of rules and
/// contracts: `μ_i = f_i(μ_i¹, …, μ_iᵏ)` and `W_i = f_i(W_i¹, …, W_iᵏ)`.
///
/// `inner_rules[j][i]` is family `j`'s rule for item `i`.
pub fn transform_rules(
    f_specs: &[Transform],
    inner_rules: &[Vec<MicroPaymentRule>],
    inner_contracts: &[Vec<Contract>],
) -> Result<(Vec<MicroPaymentRule>, Vec<Contract>)> {
    let n = f_specs.len();
    if inner_rules.len() != inner_contracts.len() {
        return Err(Error::dims(inner_rules.len(), inner_contracts.len()));
    }
    for family in inner_rules {
        if family.len() != n {
            return Err(Error::dims(n, family.len()));
        }
    }
    for family in inner_contracts {
        if family.len() != n {
            return Err(Error::dims(n, family.len()));
        }
    }
    let k = inner_rules.len();
    let mut rules = Vec::with_capacity(n);
    let mut contracts = Vec::with_capacity(n);
    for (i, f) in f_specs.iter().enumerate() {
        if !f.is_valid() || !f.accepts(k) {
            return Err(Error::InvalidConfig(format!("transform {f:?} for item {i} is not admissible with {k} inputs")));
        }
        rules.push(MicroPaymentRule::Transformed {
            transform: f.clone(),
            inner: inner_rules.iter().map(|fam| fam[i].clone()).collect(),
        });
        contracts.push(Contract::Transformed {
            transform: f.clone(),
            inner: inner_contracts.iter().map(|fam| fam[i].clone()).collect(),
        });
    }
    Ok((rules, contracts))
}
