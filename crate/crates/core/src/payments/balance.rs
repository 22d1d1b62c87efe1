use serde::Serialize;

use super::contract::Contract;
use super::rules::{ItemPayment, MicroPaymentRule};
use crate::arbitrage::{averaging_instance, check_instance, combine, is_violation, zero_query_instance, Instance, Origin};
use crate::error::{Error, Result};
use crate::pricing::PriceFunction;
use crate::privacy::loss_bound;
use crate::query::{PricedQuery, QueryBundle};

/// Absolute and relative slack for the balance conditions.
pub const BALANCE_TOL: f64 = 1e-9;

const MAX_FAILURES: usize = 20;

/// Outcome of checking a price together with its micro-payments and
/// contracts on a set of sample queries.
#[derive(Debug, Clone, Serialize)]
pub struct FrameworkReport {
    pub fair: bool,
    pub micro_arbitrage_free: bool,
    pub price_arbitrage_free: bool,
    pub cost_recovering: bool,
    pub compensating: bool,
    /// Smallest `π(Q) − Σ μ_i(Q)` over the samples with a finite, positive
    /// price; `0` when there are none.
    pub margin: f64,
    pub failures: Vec<String>,
}

impl FrameworkReport {
    pub fn balanced(&self) -> bool {
        self.fair && self.micro_arbitrage_free && self.price_arbitrage_free && self.cost_recovering && self.compensating
    }

    fn fail(&mut self, msg: String) {
        if self.failures.len() < MAX_FAILURES {
            self.failures.push(msg);
        }
    }
}

/// Determinacy instances built deterministically around each sample: the
/// zero query, averaging, scaling, relaxation, and sums and combinations with the next
/// sample.
pub fn instances_from_samples(samples: &[PricedQuery]) -> Vec<Instance> {
    let mut out = Vec::with_capacity(samples.len() * 7);
    for (j, q) in samples.iter().enumerate() {
        out.push(zero_query_instance(q.len(), q.variance()));
        out.push(averaging_instance(q, 2));
        out.push(averaging_instance(q, 3));
        for c in [2.0, -0.5] {
            out.push(Instance {
                bundle: QueryBundle::new(vec![q.clone()]),
                target: combine(&[(c, q)]),
                origin: Origin::Scaling,
            });
        }
        out.push(Instance {
            bundle: QueryBundle::new(vec![q.clone()]),
            target: q.with_variance(q.variance() * 2.0).expect("relaxed variance"),
            origin: Origin::Relaxation,
        });
        if samples.len() > 1 {
            let next = &samples[(j + 1) % samples.len()];
            let bundle = QueryBundle::new(vec![q.clone(), next.clone()]);
            out.push(Instance { bundle: bundle.clone(), target: combine(&[(1.0, q), (1.0, next)]), origin: Origin::Summation });
            out.push(Instance { bundle, target: combine(&[(0.5, q), (-1.5, next)]), origin: Origin::Combination });
        }
    }
    out
}

/// Checks fairness, micro arbitrage-freeness, cost recovery and
/// compensation of `(price, rules, contracts)` over `samples`, plus
/// arbitrage-freeness of the price itself.
///
/// Only mismatched dimensions are errors; every violated condition is
/// reported in the returned flags and `failures`.
pub fn check_balanced<P: PriceFunction + ?Sized>(
    price: &P,
    rules: &[MicroPaymentRule],
    contracts: &[Contract],
    gamma: f64,
    samples: &[PricedQuery],
) -> Result<FrameworkReport> {
    let n = rules.len();
    if contracts.len() != n {
        return Err(Error::dims(n, contracts.len()));
    }
    if let Some(bad) = samples.iter().find(|q| q.len() != n) {
        return Err(Error::dims(n, bad.len()));
    }
    let mut report = FrameworkReport {
        fair: true,
        micro_arbitrage_free: true,
        price_arbitrage_free: true,
        cost_recovering: true,
        compensating: true,
        margin: f64::INFINITY,
        failures: Vec::new(),
    };

    for (j, q) in samples.iter().enumerate() {
        let coeffs = q.query().coefficients();
        let mut total = 0.0;
        for i in 0..n {
            let mu = rules[i].eval(q, i)?;
            total += mu;
            if !(mu >= 0.0) {
                report.fair = false;
                report.fail(format!("sample {j}: μ_{i} = {mu} is not a non-negative payment"));
            }
            if coeffs[i] == 0.0 && mu != 0.0 {
                report.fair = false;
                report.fail(format!("sample {j}: q_{i} = 0 but μ_{i} = {mu}"));
            }
            let owed = contracts[i].eval(loss_bound(q, i, gamma)?);
            if !(mu >= owed - BALANCE_TOL * owed.abs().max(1.0)) && !(mu == f64::INFINITY) {
                report.compensating = false;
                report.fail(format!("sample {j}: μ_{i} = {mu} below W_{i}(ε) = {owed}"));
            }
        }
        let pi = price.price(q);
        if is_violation(total, pi) {
            report.cost_recovering = false;
            report.fail(format!("sample {j}: Σμ = {total} exceeds π = {pi}"));
        }
        if pi.is_finite() && pi > 0.0 && total.is_finite() {
            report.margin = report.margin.min(pi - total);
        }

        // Fairness on the sample with one contributing coordinate removed.
        if let Some(i) = coeffs.iter().position(|&c| c != 0.0) {
            let zeroed = PricedQuery::new(q.query().with_coefficient(i, 0.0)?, q.variance())?;
            let mu = rules[i].eval(&zeroed, i)?;
            if mu != 0.0 {
                report.fair = false;
                report.fail(format!("sample {j} with q_{i} zeroed: μ_{i} = {mu}"));
            }
        }
    }
    if !report.margin.is_finite() {
        report.margin = 0.0;
    }

    for inst in instances_from_samples(samples) {
        if let Some(v) = check_instance(price, &inst) {
            report.price_arbitrage_free = false;
            report.fail(format!("{:?}: π(target) = {} > Σ π = {}", v.origin, v.target_price, v.bundle_price));
        }
        let target = inst.target.query().coefficients();
        for (i, rule) in rules.iter().enumerate() {
            if target[i] == 0.0 {
                continue;
            }
            if let Some(v) = check_instance(&ItemPayment { rule, item: i }, &inst) {
                report.micro_arbitrage_free = false;
                report.fail(format!(
                    "{:?}: μ_{i}(target) = {} > Σ μ_{i} = {}",
                    v.origin, v.target_price, v.bundle_price
                ));
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::payments::synthesize_price;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn samples(n: usize, count: usize, seed: u64) -> Vec<PricedQuery> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                let q: Vec<f64> =
                    (0..n).map(|_| if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(-2.0..2.0) }).collect();
                PricedQuery::from_parts(q, 10f64.powf(rng.gen_range(-2.0..4.0))).unwrap()
            })
            .collect()
    }

    fn framework(n: usize) -> (Vec<MicroPaymentRule>, Vec<Contract>) {
        let contracts: Vec<Contract> = (0..n).map(|i| Contract::linear(0.1 * (i + 1) as f64)).collect();
        let rules = contracts.iter().map(|w| MicroPaymentRule::for_contract(w, 2.0)).collect();
        (rules, contracts)
    }

    #[test]
    fn sum_of_basic_rules_is_balanced() {
        let (rules, contracts) = framework(4);
        let price = synthesize_price(&rules);
        let report = check_balanced(&price, &rules, &contracts, 2.0, &samples(4, 200, 1)).unwrap();
        assert!(report.balanced(), "{:?}", report.failures);
        assert!(report.margin.abs() < 1e-9);
    }

    #[test]
    fn doubled_price_keeps_balance_with_positive_margin() {
        let (rules, contracts) = framework(3);
        let price = synthesize_price(&rules).scaled(2.0);
        let report = check_balanced(&price, &rules, &contracts, 2.0, &samples(3, 200, 2)).unwrap();
        assert!(report.balanced(), "{:?}", report.failures);
        assert!(report.margin > 0.0);
    }

    #[test]
    fn constant_price_is_flagged() {
        let (rules, contracts) = framework(3);
        let constant = |_: &PricedQuery| 5.0;
        let report = check_balanced(&constant, &rules, &contracts, 2.0, &samples(3, 200, 3)).unwrap();
        assert!(!report.cost_recovering || !report.micro_arbitrage_free);
        assert!(!report.balanced());
    }

    #[test]
    fn underpaying_rules_are_not_compensating() {
        let (rules, _) = framework(2);
        let greedy: Vec<Contract> = (0..2).map(|_| Contract::linear(10.0)).collect();
        let price = synthesize_price(&rules);
        let report = check_balanced(&price, &rules, &greedy, 2.0, &samples(2, 50, 4)).unwrap();
        assert!(!report.compensating);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let (rules, contracts) = framework(2);
        let price = synthesize_price(&rules);
        assert!(check_balanced(&price, &rules, &contracts[..1], 2.0, &[]).is_err());
        assert!(check_balanced(&price, &rules, &contracts, 2.0, &samples(3, 1, 0)).is_err());
    }
}
