//! Owner contracts, micro-payments, and balanced pricing frameworks.
//!
//! Each owner states a contract `W_i(ε)`: how much they want to be paid
//! for a privacy loss `ε`. A micro-payment rule `μ_i(Q)` is what they are
//! actually paid for a query. A framework is balanced when the payments are
//! fair, arbitrage-free in their own right, covered by the price, and at
//! least what the contracts ask for.

mod balance;
mod contract;
mod rules;

pub use balance::{check_balanced, instances_from_samples, FrameworkReport, BALANCE_TOL};
pub use contract::{
    Contract, OPTION_A_EXPONENT, OPTION_A_KNEE, OPTION_A_SCALE, OPTION_B_BOUND, OPTION_B_RATE,
};
pub use rules::{micropayment, synthesize_price, transform_rules, ItemPayment, MicroPaymentRule};
