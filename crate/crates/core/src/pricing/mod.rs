//! Arbitrage-free price functions.
//!
//! Base prices have the form `f(q)²/v` for a semi-norm `f`; anything built
//! from them through the [`Transform`] whitelist stays arbitrage-free. The
//! tree form ([`PriceExpr`]) makes that guarantee checkable by
//! [`validate`] rather than by testing alone.

mod expr;
mod seminorm;
mod transform;

pub use expr::{price, validate, validate_for_dimension, PriceExpr};
pub use seminorm::{seminorm_axioms_hold, SemiNorm};
pub use transform::{alg_sigmoid, atan, cutoff, ext_mul, geomean, log1p, power, tanh, Transform};

use crate::query::PricedQuery;

/// Anything that assigns a price to a priced query.
///
/// Implemented by [`PriceExpr`], by per-item micro-payments, and by plain
/// closures (handy for injecting deliberately broken prices in tests).
pub trait PriceFunction {
    fn price(&self, q: &PricedQuery) -> f64;
}

impl PriceFunction for PriceExpr {
    fn price(&self, q: &PricedQuery) -> f64 {
        self.eval(q)
    }
}

impl<F: Fn(&PricedQuery) -> f64> PriceFunction for F {
    fn price(&self, q: &PricedQuery) -> f64 {
        self(q)
    }
}
