//! Determinacy instances `S → Q` and the arbitrage inequality `π(Q) ≤ Σ π(S_i)`.
//!
//! Instances come from two sources. Rule-forward instances apply the
//! determinacy rules (summation, scalar multiplication, relaxation,
//! transitivity) symbolically, so they hold by construction. Filtered
//! instances start from a random bundle and target and are kept only when
//! the determinacy solver accepts them.

use rand::seq::index::sample;
use rand::Rng;
use serde::Serialize;

use crate::determinacy::{determines, min_variance};
use crate::pricing::{ext_mul, PriceFunction};
use crate::query::{LinearQuery, PricedQuery, QueryBundle};

/// Relative slack on `Σ π(S_i)` before a price difference counts as arbitrage.
pub const ARBITRAGE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Summation,
    Scaling,
    Relaxation,
    Averaging,
    Combination,
    Transitivity,
    Filtered,
    /// The empty bundle determines the zero query at any variance.
    ZeroQuery,
}

#[derive(Debug, Clone, Serialize)]
pub struct Instance {
    pub bundle: QueryBundle,
    pub target: PricedQuery,
    pub origin: Origin,
}

#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub origin: Origin,
    pub target: PricedQuery,
    pub bundle: QueryBundle,
    pub target_price: f64,
    pub bundle_price: f64,
}

/// `Σ π(S_i)` with the usual extended-real sum.
pub fn bundle_price<F: PriceFunction + ?Sized>(f: &F, bundle: &QueryBundle) -> f64 {
    bundle.iter().map(|q| f.price(q)).sum()
}

/// True when `target` exceeds `total` beyond the relative slack, or either is NaN.
pub fn is_violation(target: f64, total: f64) -> bool {
    if target.is_nan() || total.is_nan() {
        return true;
    }
    if total.is_infinite() {
        return false;
    }
    target > total * (1.0 + ARBITRAGE_SLACK)
}

pub fn check_instance<F: PriceFunction + ?Sized>(f: &F, inst: &Instance) -> Option<Violation> {
    let target_price = f.price(&inst.target);
    let total = bundle_price(f, &inst.bundle);
    is_violation(target_price, total).then(|| Violation {
        origin: inst.origin,
        target: inst.target.clone(),
        bundle: inst.bundle.clone(),
        target_price,
        bundle_price: total,
    })
}

pub fn find_violations<F: PriceFunction + ?Sized>(f: &F, instances: &[Instance]) -> Vec<Violation> {
    instances.iter().filter_map(|i| check_instance(f, i)).collect()
}

/// `k` copies of `(q, v)` answer `(q, v/k)` by averaging.
pub fn averaging_instance(q: &PricedQuery, k: usize) -> Instance {
    let k = k.max(1);
    Instance {
        bundle: QueryBundle::new(vec![q.clone(); k]),
        target: q.with_variance(q.variance() / k as f64).expect("variance stays non-negative"),
        origin: Origin::Averaging,
    }
}

/// `∅ → (0, v)`.
pub fn zero_query_instance(n: usize, v: f64) -> Instance {
    Instance {
        bundle: QueryBundle::new(Vec::new()),
        target: PricedQuery::new(LinearQuery::zero(n), v).expect("valid variance"),
        origin: Origin::ZeroQuery,
    }
}

/// `(Σ c_j q_j, Σ c_j² v_j)`, the query a linear combination answers.
pub fn combine(parts: &[(f64, &PricedQuery)]) -> PricedQuery {
    let n = parts[0].1.len();
    let mut q = vec![0.0; n];
    let mut v = 0.0;
    for (c, p) in parts {
        for (acc, x) in q.iter_mut().zip(p.query().coefficients()) {
            *acc += c * x;
        }
        v += ext_mul(c * c, p.variance());
    }
    PricedQuery::from_parts(q, v).expect("combination of valid queries is valid")
}

/// Random determinacy instances over queries of length `n`.
#[derive(Debug, Clone)]
pub struct InstanceGenerator {
    n: usize,
    max_support: usize,
}

impl InstanceGenerator {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        InstanceGenerator { n, max_support: 6 }
    }

    fn support<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        let size = rng.gen_range(1..=self.n.min(self.max_support));
        sample(rng, self.n, size).into_vec()
    }

    fn coefficient<R: Rng + ?Sized>(rng: &mut R) -> f64 {
        match rng.gen_range(0..5) {
            0 => 0.0,
            1 | 2 => rng.gen_range(-3i32..=3) as f64,
            _ => rng.gen_range(-5.0..5.0),
        }
    }

    fn variance<R: Rng + ?Sized>(rng: &mut R) -> f64 {
        match rng.gen_range(0..20) {
            0 => 0.0,
            1 => f64::INFINITY,
            _ => 10f64.powf(rng.gen_range(-2.0..4.0)),
        }
    }

    fn query_on<R: Rng + ?Sized>(&self, rng: &mut R, support: &[usize]) -> LinearQuery {
        let mut q = vec![0.0; self.n];
        for &i in support {
            q[i] = Self::coefficient(rng);
        }
        LinearQuery::new(q).expect("finite coefficients")
    }

    pub fn base_query<R: Rng + ?Sized>(&self, rng: &mut R) -> PricedQuery {
        let support = self.support(rng);
        PricedQuery::new(self.query_on(rng, &support), Self::variance(rng)).expect("valid variance")
    }

    fn scalar<R: Rng + ?Sized>(rng: &mut R) -> f64 {
        match rng.gen_range(0..8) {
            0 => 0.0,
            1 => rng.gen_range(-3i32..=3) as f64,
            _ => rng.gen_range(-4.0..4.0),
        }
    }

    fn relax<R: Rng + ?Sized>(rng: &mut R, v: f64) -> f64 {
        match rng.gen_range(0..6) {
            0 => f64::INFINITY,
            1 => v,
            _ => v * (1.0 + rng.gen_range(0.0..3.0)),
        }
    }

    fn simple_rule<R: Rng + ?Sized>(&self, rng: &mut R) -> Instance {
        match rng.gen_range(0..5) {
            0 => {
                let k = rng.gen_range(1..=4);
                let bundle: QueryBundle = (0..k).map(|_| self.base_query(rng)).collect();
                let parts: Vec<(f64, &PricedQuery)> = bundle.iter().map(|q| (1.0, q)).collect();
                let target = combine(&parts);
                Instance { bundle, target, origin: Origin::Summation }
            }
            1 => {
                let base = self.base_query(rng);
                let target = combine(&[(Self::scalar(rng), &base)]);
                Instance { bundle: QueryBundle::new(vec![base]), target, origin: Origin::Scaling }
            }
            2 => {
                let base = self.base_query(rng);
                let target = base.with_variance(Self::relax(rng, base.variance())).expect("relaxed variance");
                Instance { bundle: QueryBundle::new(vec![base]), target, origin: Origin::Relaxation }
            }
            3 => averaging_instance(&self.base_query(rng), rng.gen_range(2..=6)),
            _ => {
                let k = rng.gen_range(1..=4);
                let bundle: QueryBundle = (0..k).map(|_| self.base_query(rng)).collect();
                let parts: Vec<(f64, &PricedQuery)> = bundle.iter().map(|q| (Self::scalar(rng), q)).collect();
                let combined = combine(&parts);
                let target = combined.with_variance(Self::relax(rng, combined.variance())).expect("relaxed");
                Instance { bundle, target, origin: Origin::Combination }
            }
        }
    }

    /// An instance produced by applying determinacy rules symbolically.
    pub fn rule_forward<R: Rng + ?Sized>(&self, rng: &mut R) -> Instance {
        if rng.gen_range(0..16) == 0 {
            return zero_query_instance(self.n, Self::variance(rng));
        }
        if rng.gen_range(0..4) > 0 {
            return self.simple_rule(rng);
        }
        // Transitivity: S1 → Q1, S2 → Q2 and {Q1, Q2} → Q give S1 ∪ S2 → Q.
        let first = self.simple_rule(rng);
        let second = self.simple_rule(rng);
        let (a, b) = (Self::scalar(rng), Self::scalar(rng));
        let combined = combine(&[(a, &first.target), (b, &second.target)]);
        let target = combined.with_variance(Self::relax(rng, combined.variance())).expect("relaxed");
        let mut bundle = first.bundle;
        bundle.extend(second.bundle.iter().cloned());
        Instance { bundle, target, origin: Origin::Transitivity }
    }

    /// A random bundle and target, kept only if the solver accepts `S → Q`.
    pub fn filtered_random<R: Rng + ?Sized>(&self, rng: &mut R) -> Instance {
        for _ in 0..64 {
            let support = self.support(rng);
            let m = rng.gen_range(1..=5);
            let bundle: QueryBundle = (0..m)
                .map(|_| PricedQuery::new(self.query_on(rng, &support), Self::variance(rng)).expect("valid"))
                .collect();
            let target = if rng.gen_bool(0.7) {
                let parts: Vec<(f64, &PricedQuery)> = bundle.iter().map(|q| (Self::scalar(rng), q)).collect();
                combine(&parts).query().clone()
            } else {
                self.query_on(rng, &support)
            };
            let Ok(cert) = min_variance(&bundle, &target) else { continue };
            if !cert.feasible {
                continue;
            }
            let v = match rng.gen_range(0..6) {
                0 => cert.min_variance,
                1 => f64::INFINITY,
                _ => cert.min_variance * (1.0 + rng.gen_range(0.0..2.0)),
            };
            let target = PricedQuery::new(target, v).expect("valid variance");
            if determines(&bundle, &target).unwrap_or(false) {
                return Instance { bundle, target, origin: Origin::Filtered };
            }
        }
        self.rule_forward(rng)
    }

    /// `count` instances, alternating rule-forward and filtered-random.
    pub fn generate<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<Instance> {
        (0..count)
            .map(|k| if k % 2 == 0 { self.rule_forward(rng) } else { self.filtered_random(rng) })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pricing::{PriceExpr, SemiNorm};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rule_forward_instances_are_accepted_by_the_solver() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [1, 3, 7] {
            let generator = InstanceGenerator::new(n);
            for _ in 0..400 {
                let inst = generator.rule_forward(&mut rng);
                assert!(
                    determines(&inst.bundle, &inst.target).unwrap(),
                    "{:?}: {:?} -> {}",
                    inst.origin,
                    inst.bundle,
                    inst.target
                );
            }
        }
    }

    #[test]
    fn l2_price_has_no_violations() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let instances = InstanceGenerator::new(4).generate(2_000, &mut rng);
        assert!(find_violations(&PriceExpr::base(SemiNorm::L2), &instances).is_empty());
    }

    #[test]
    fn constant_price_is_caught() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let instances = InstanceGenerator::new(3).generate(500, &mut rng);
        let constant = |_: &PricedQuery| 5.0;
        assert!(!find_violations(&constant, &instances).is_empty());
    }

    #[test]
    fn violation_predicate() {
        assert!(!is_violation(1.0, 1.0));
        assert!(!is_violation(f64::INFINITY, f64::INFINITY));
        assert!(is_violation(f64::INFINITY, 3.0));
        assert!(is_violation(1e-3, 0.0));
        assert!(is_violation(f64::NAN, 1.0));
        assert!(!is_violation(1.0 + 1e-12, 1.0));
    }
}
