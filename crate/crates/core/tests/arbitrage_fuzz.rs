mod common;

use common::{base_families, random_expr, synthesized_families, worked_example_price};
use privmarket::arbitrage::{averaging_instance, check_instance, find_violations, InstanceGenerator};
use privmarket::market::fuzz_arbitrage;
use privmarket::payments::MicroPaymentRule;
use privmarket::valuation::{ExpectedPrice, ValuationProfile};
use privmarket::PricedQuery;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn price_families_have_no_arbitrage() {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    let instances = InstanceGenerator::new(5).generate(3_000, &mut rng);
    let mut families = base_families(5);
    families.push(("atan".into(), worked_example_price()));
    families.extend(synthesized_families(5, 5.0));
    for (name, expr) in families {
        let found = find_violations(&expr, &instances);
        assert!(found.is_empty(), "{name}: {:?}", found.first());
    }
}

#[test]
fn random_whitelisted_expressions_have_no_arbitrage() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let generator = InstanceGenerator::new(4);
    for _ in 0..100 {
        let expr = random_expr(&mut rng, 4, 4);
        let instances = generator.generate(100, &mut rng);
        let found = find_violations(&expr, &instances);
        assert!(found.is_empty(), "{}: {:?}", serde_json::to_string(&expr).unwrap(), found.first());
    }
}

#[test]
fn constant_price_is_exploitable() {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let constant = |_: &PricedQuery| 5.0;
    let report = fuzz_arbitrage(&constant, &[], 4, 1_000, &mut rng);
    assert!(!report.is_clean());
}

#[test]
fn micro_payments_have_no_arbitrage() {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let rules: Vec<MicroPaymentRule> = common::contract_families(5)
        .into_iter()
        .flat_map(|(_, ws)| common::rules_for(&ws, 5.0))
        .take(5)
        .collect();
    let price = privmarket::payments::synthesize_price(&rules);
    let report = fuzz_arbitrage(&price, &rules, 5, 2_000, &mut rng);
    assert!(report.is_clean(), "{:?}", report.violations.first());
}

#[test]
fn expected_private_price_has_no_arbitrage() {
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let profile = ValuationProfile::new(vec![0.1, 0.0, 0.4, 0.25], 0.5, 0.8).unwrap();
    let report = fuzz_arbitrage(&ExpectedPrice { profile, gamma: 3.0 }, &[], 4, 2_000, &mut rng);
    assert!(report.is_clean(), "{:?}", report.violations.first());
}

#[test]
fn averaging_copies_never_pays_less() {
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    for _ in 0..200 {
        let expr = random_expr(&mut rng, 3, 3);
        let q: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let v = 10f64.powf(rng.gen_range(-2.0..3.0));
        let k = rng.gen_range(2..=10);
        let base = PricedQuery::from_parts(q, v).unwrap();
        assert!(check_instance(&expr, &averaging_instance(&base, k)).is_none());
        let single = expr.eval(&base);
        let averaged = expr.eval(&base.with_variance(v / k as f64).unwrap());
        assert!(k as f64 * single >= averaged * (1.0 - 1e-9));
    }
}
