//! The market maker: configuration, quotes, purchases, the ledger, and the
//! tools built on top of them.
//!
//! Answering is stateless. Each purchase uses a draw index, and the noise
//! for draw `d` comes from a generator determined by `(seed, d)` alone.
//! Accounting is stateful and lives in an append-only [`Ledger`].

mod config;
mod engine;
mod fuzz;
mod ledger;
mod report;
mod sim;

pub use config::{DatabaseSource, MarketConfig, OwnerSpec, PriceDirective, PriceSpec, PrivateValuations};
pub use engine::{draw_rng, Market};
pub use fuzz::{fuzz_arbitrage, FuzzReport, FuzzViolation};
pub use ledger::{payouts, EntryKind, Ledger, LedgerEntry, Payouts, CONSERVATION_TOL};
pub use report::{curve_csv, curve_svg, log_grid, price_curve};
pub use sim::{simulate, Action, Script, SimulationSummary, Step};
