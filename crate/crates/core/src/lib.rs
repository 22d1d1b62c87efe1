//! Pricing noisy linear queries over private data.
//!
//! A buyer asks for a linear query `q` answered with noise of variance `v`.
//! The market prices `(q, v)` so that no combination of cheaper purchases
//! can reproduce it, answers with Laplace noise of exactly that variance,
//! bounds each data owner's privacy loss, and pays every owner according to
//! the contract they signed.
//!
//! The modules follow that flow:
//!
//! - [`query`]: linear queries, priced queries, databases.
//! - [`determinacy`]: when a bundle of answers determines another query.
//! - [`pricing`]: arbitrage-free price expressions.
//! - [`privacy`]: the Laplace mechanism and per-owner loss bounds.
//! - [`payments`]: contracts, micro-payments, balanced frameworks.
//! - [`valuation`]: randomized prices that hide the contract constants.
//! - [`arbitrage`]: determinacy instances and the arbitrage check.
//! - [`market`]: the market maker with its ledger, fuzzer and simulator.

pub mod arbitrage;
pub mod determinacy;
pub mod error;
pub mod market;
pub mod payments;
pub mod pricing;
pub mod privacy;
pub mod query;
pub mod valuation;

pub use error::{Error, Result};
pub use query::{Database, LinearQuery, PricedQuery, QueryBundle};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/queries.md")]
    mod queries {}
    #[doc = include_str!("../../../book/src/determinacy.md")]
    mod determinacy {}
    #[doc = include_str!("../../../book/src/pricing.md")]
    mod pricing {}
    #[doc = include_str!("../../../book/src/privacy.md")]
    mod privacy {}
    #[doc = include_str!("../../../book/src/payments.md")]
    mod payments {}
    #[doc = include_str!("../../../book/src/valuations.md")]
    mod valuations {}
    #[doc = include_str!("../../../book/src/market.md")]
    mod market {}
}
