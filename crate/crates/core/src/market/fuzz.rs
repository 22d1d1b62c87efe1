use rand::Rng;
use serde::Serialize;

use super::engine::Market;
use crate::arbitrage::{check_instance, InstanceGenerator, Violation};
use crate::payments::{ItemPayment, MicroPaymentRule};
use crate::pricing::PriceFunction;
use crate::valuation::ExpectedPrice;

#[derive(Debug, Clone, Serialize)]
pub struct FuzzViolation {
    /// `"price"` or `"mu_<item>"`.
    pub subject: String,
    #[serde(flatten)]
    pub violation: Violation,
}

#[derive(Debug, Clone, Serialize)]
pub struct FuzzReport {
    pub trials: usize,
    pub checks: usize,
    pub violations: Vec<FuzzViolation>,
}

impl FuzzReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `π(Q) ≤ Σ π(S_i)` for `price` and for every item's micro-payment
/// on `trials` random determinacy instances over `n` items.
///
/// Payments are only checked for items the target touches: an untouched
/// item's payment is zero on the target.
pub fn fuzz_arbitrage<P, R>(price: &P, rules: &[MicroPaymentRule], n: usize, trials: usize, rng: &mut R) -> FuzzReport
where
    P: PriceFunction + ?Sized,
    R: Rng + ?Sized,
{
    let generator = InstanceGenerator::new(n);
    let mut report = FuzzReport { trials, checks: 0, violations: Vec::new() };
    for inst in generator.generate(trials, rng) {
        report.checks += 1;
        if let Some(v) = check_instance(price, &inst) {
            report.violations.push(FuzzViolation { subject: "price".into(), violation: v });
        }
        for (i, &qi) in inst.target.query().coefficients().iter().enumerate() {
            if qi == 0.0 || i >= rules.len() {
                continue;
            }
            report.checks += 1;
            if let Some(v) = check_instance(&ItemPayment { rule: &rules[i], item: i }, &inst) {
                report.violations.push(FuzzViolation { subject: format!("mu_{i}"), violation: v });
            }
        }
    }
    report
}

impl Market {
    /// Fuzzes the market's own price and payments. In private mode the
    /// expected price is checked.
    pub fn fuzz<R: Rng + ?Sized>(&self, trials: usize, rng: &mut R) -> FuzzReport {
        match self.valuation() {
            Some(prof) => {
                let expected = ExpectedPrice { profile: prof.clone(), gamma: self.gamma() };
                fuzz_arbitrage(&expected, &[], self.n(), trials, rng)
            }
            None => fuzz_arbitrage(self.price_expr(), self.rules(), self.n(), trials, rng),
        }
    }
}
