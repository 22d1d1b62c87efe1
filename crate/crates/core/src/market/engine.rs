use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::config::{MarketConfig, PriceSpec};
use super::ledger::{EntryKind, Ledger, LedgerEntry};
use crate::arbitrage::is_violation;
use crate::error::{Error, Result};
use crate::payments::{synthesize_price, Contract, MicroPaymentRule};
use crate::pricing::{validate_for_dimension, PriceExpr};
use crate::privacy::{answer, sample_laplace};
use crate::query::{Database, PricedQuery};
use crate::valuation::{expected_price, micropayments_general, ValuationProfile};

/// The generator for draw `draw` of a market seeded with `seed`.
///
/// Every draw gets its own stream, so an answer depends only on
/// `(seed, draw)` and never on what was sold before.
pub fn draw_rng(seed: u64, draw: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(draw);
    rng
}

/// A configured market: data, price, and one contract per owner.
#[derive(Debug, Clone)]
pub struct Market {
    config: MarketConfig,
    database: Database,
    price: PriceExpr,
    rules: Vec<MicroPaymentRule>,
    contracts: Vec<Contract>,
    item_owner: Vec<usize>,
    owners: Vec<String>,
    valuation: Option<ValuationProfile>,
}

impl Market {
    /// Loads the database named by the config and validates everything.
    pub fn new(config: MarketConfig) -> Result<Self> {
        let database = config.load_database()?;
        Market::with_database(config, database)
    }

    pub fn with_database(config: MarketConfig, database: Database) -> Result<Self> {
        let n = config.n;
        let gamma = config.domain_bound;
        if n == 0 {
            return Err(Error::InvalidConfig("n must be at least 1".into()));
        }
        if database.len() != n {
            return Err(Error::InvalidDatabase(format!("expected {n} values, found {}", database.len())));
        }
        if database.domain_bound() != gamma {
            return Err(Error::InvalidConfig("database and config disagree on the domain bound".into()));
        }

        let mut item_owner = vec![usize::MAX; n];
        let mut owners = Vec::with_capacity(config.owners.len());
        for (k, spec) in config.owners.iter().enumerate() {
            if owners.contains(&spec.owner) {
                return Err(Error::InvalidConfig(format!("owner `{}` is listed twice", spec.owner)));
            }
            if !spec.contract.is_valid() {
                return Err(Error::InvalidConfig(format!("owner `{}` has an invalid contract", spec.owner)));
            }
            for &i in &spec.items {
                if i >= n {
                    return Err(Error::InvalidConfig(format!("owner `{}` claims item {i} but n = {n}", spec.owner)));
                }
                if item_owner[i] != usize::MAX {
                    return Err(Error::InvalidConfig(format!("item {i} has more than one owner")));
                }
                item_owner[i] = k;
            }
            owners.push(spec.owner.clone());
        }
        if let Some(i) = item_owner.iter().position(|&o| o == usize::MAX) {
            return Err(Error::InvalidConfig(format!("item {i} has no owner")));
        }

        let contracts: Vec<Contract> = item_owner.iter().map(|&o| config.owners[o].contract.clone()).collect();
        let rules: Vec<MicroPaymentRule> =
            contracts.iter().map(|w| MicroPaymentRule::for_contract(w, gamma)).collect();

        let valuation = match config.private_valuations {
            None => None,
            Some(pv) => {
                let constants = contracts
                    .iter()
                    .map(|w| {
                        w.linear_constant().ok_or_else(|| {
                            Error::InvalidConfig("private valuations require linear contracts".into())
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Some(ValuationProfile::new(constants, pv.delta, pv.b_prime)?)
            }
        };

        let base = match &config.price {
            PriceSpec::Directive(_) => synthesize_price(&rules),
            PriceSpec::Expr(e) => e.clone(),
        };
        if !validate_for_dimension(&base, n) {
            return Err(Error::InvalidConfig("price expression is not a valid arbitrage-free expression".into()));
        }
        let price = if config.cover_payouts && matches!(config.price, PriceSpec::Expr(_)) {
            PriceExpr::max(vec![base, synthesize_price(&rules)])
        } else {
            base
        };

        Ok(Market { config, database, price, rules, contracts, item_owner, owners, valuation })
    }

    pub fn config(&self) -> &MarketConfig {
        &self.config
    }

    pub fn database(&self) -> &Database {
        &self.database
    }

    pub fn n(&self) -> usize {
        self.config.n
    }

    pub fn gamma(&self) -> f64 {
        self.config.domain_bound
    }

    pub fn seed(&self) -> u64 {
        self.config.seed
    }

    /// The effective price expression (standard mode).
    pub fn price_expr(&self) -> &PriceExpr {
        &self.price
    }

    pub fn rules(&self) -> &[MicroPaymentRule] {
        &self.rules
    }

    pub fn contracts(&self) -> &[Contract] {
        &self.contracts
    }

    pub fn owners(&self) -> &[String] {
        &self.owners
    }

    pub fn owner_of(&self, item: usize) -> Option<&str> {
        self.item_owner.get(item).map(|&o| self.owners[o].as_str())
    }

    pub fn valuation(&self) -> Option<&ValuationProfile> {
        self.valuation.as_ref()
    }

    pub fn is_private(&self) -> bool {
        self.valuation.is_some()
    }

    fn check_query(&self, q: &PricedQuery) -> Result<()> {
        if q.len() != self.n() {
            return Err(Error::dims(self.n(), q.len()));
        }
        Ok(())
    }

    /// The deterministic price; in private mode, the expected price.
    pub fn price(&self, q: &PricedQuery) -> Result<f64> {
        self.check_query(q)?;
        match &self.valuation {
            Some(prof) => expected_price(q, prof, self.gamma()),
            None => Ok(self.price.eval(q)),
        }
    }

    /// Micro-payments per owner in standard mode.
    pub fn payments(&self, q: &PricedQuery) -> Result<BTreeMap<String, f64>> {
        self.check_query(q)?;
        let mut out: BTreeMap<String, f64> = self.owners.iter().map(|o| (o.clone(), 0.0)).collect();
        for (i, rule) in self.rules.iter().enumerate() {
            *out.get_mut(&self.owners[self.item_owner[i]]).expect("known owner") += rule.eval(q, i)?;
        }
        Ok(out)
    }

    fn payments_by_owner(&self, per_item: &[f64]) -> BTreeMap<String, f64> {
        let mut out: BTreeMap<String, f64> = self.owners.iter().map(|o| (o.clone(), 0.0)).collect();
        for (i, mu) in per_item.iter().enumerate() {
            *out.get_mut(&self.owners[self.item_owner[i]]).expect("known owner") += mu;
        }
        out
    }

    /// A price quote. Standard quotes are free and leave no trace. Private
    /// quotes disclose a fresh noisy price and are logged as probes.
    pub fn quote(&self, ledger: &mut Ledger, q: &PricedQuery, timestamp: u64) -> Result<f64> {
        self.check_query(q)?;
        let Some(prof) = &self.valuation else {
            return self.price(q);
        };
        let draw = ledger.next_draw();
        let price = expected_price(q, prof, self.gamma())? + sample_laplace(&mut draw_rng(self.seed(), draw), prof.b_prime());
        ledger.append(LedgerEntry {
            seq: ledger.next_seq(),
            timestamp,
            kind: EntryKind::PriceProbe,
            query: q.clone(),
            price,
            answer: None,
            seed: self.seed(),
            answer_draw: None,
            price_draw: Some(draw),
            payments: BTreeMap::new(),
            margin: 0.0,
        })?;
        Ok(price)
    }

    /// Sells `q`: charges the price, answers with fresh noise, pays the
    /// owners, and appends the entry to the ledger.
    ///
    /// Refused when the price is infinite or does not cover the payouts.
    pub fn purchase(&self, ledger: &mut Ledger, q: &PricedQuery, timestamp: u64) -> Result<(f64, LedgerEntry)> {
        let entry = self.sell(q, ledger.next_seq(), ledger.next_draw(), timestamp)?;
        ledger.append(entry.clone())?;
        Ok((entry.answer.expect("purchases carry answers"), entry))
    }

    /// The entry a purchase would produce at the given position, without
    /// recording it.
    pub fn sell(&self, q: &PricedQuery, seq: u64, next_draw: u64, timestamp: u64) -> Result<LedgerEntry> {
        self.check_query(q)?;
        if q.variance().is_infinite() {
            return Err(Error::InvalidQuery("a query with unbounded variance carries no information".into()));
        }
        let (price, payments, margin, answer_draw, price_draw) = match &self.valuation {
            Some(prof) => {
                let price_draw = next_draw;
                let price = expected_price(q, prof, self.gamma())?
                    + sample_laplace(&mut draw_rng(self.seed(), price_draw), prof.b_prime());
                let per_item = micropayments_general(q, prof, self.gamma(), price)?;
                (price, self.payments_by_owner(&per_item), 0.0, next_draw + 1, Some(price_draw))
            }
            None => {
                let price = self.price.eval(q);
                if price.is_nan() {
                    return Err(Error::InvalidConfig(format!("price of {q} is undefined")));
                }
                if price.is_infinite() {
                    return Err(Error::Refused(format!(
                        "the price of {q} is infinite; ask for a positive variance"
                    )));
                }
                let payments = self.payments(q)?;
                let paid: f64 = payments.values().sum();
                if is_violation(paid, price) {
                    return Err(Error::Refused(format!(
                        "micro-payments {paid} exceed the price {price}; the price does not recover its cost"
                    )));
                }
                (price, payments, (price - paid).max(0.0), next_draw, None)
            }
        };
        let value = answer(q, &self.database, &mut draw_rng(self.seed(), answer_draw))?;
        Ok(LedgerEntry {
            seq,
            timestamp,
            kind: EntryKind::Purchase,
            query: q.clone(),
            price,
            answer: Some(value),
            seed: self.seed(),
            answer_draw: Some(answer_draw),
            price_draw,
            payments,
            margin,
        })
    }

    /// Recomputes every entry from `(seed, draw)` and the query and checks
    /// it matches bit for bit.
    pub fn verify_replay(&self, entries: &[LedgerEntry]) -> Result<()> {
        for e in entries {
            e.check()?;
            let mismatch = |what: &str| Error::Integrity { seq: e.seq, reason: format!("replayed {what} differs") };
            if e.seed != self.seed() {
                return Err(mismatch("seed"));
            }
            match e.kind {
                EntryKind::Purchase => {
                    let first = match (e.price_draw, e.answer_draw) {
                        (Some(p), _) => p,
                        (None, Some(a)) => a,
                        (None, None) => return Err(mismatch("draw index")),
                    };
                    let again = self.sell(&e.query, e.seq, first, e.timestamp).map_err(|err| Error::Integrity {
                        seq: e.seq,
                        reason: format!("replay failed: {err}"),
                    })?;
                    if again.price.to_bits() != e.price.to_bits() {
                        return Err(mismatch("price"));
                    }
                    if again.answer.map(f64::to_bits) != e.answer.map(f64::to_bits) {
                        return Err(mismatch("answer"));
                    }
                    if again.answer_draw != e.answer_draw || again.price_draw != e.price_draw {
                        return Err(mismatch("draw index"));
                    }
                    let same_payments = again.payments.len() == e.payments.len()
                        && again.payments.iter().all(|(o, p)| e.payments.get(o).map(|x| x.to_bits()) == Some(p.to_bits()));
                    if !same_payments {
                        return Err(mismatch("payments"));
                    }
                }
                EntryKind::PriceProbe => {
                    let (Some(prof), Some(draw)) = (&self.valuation, e.price_draw) else {
                        return Err(mismatch("price probe"));
                    };
                    let price = expected_price(&e.query, prof, self.gamma())?
                        + sample_laplace(&mut draw_rng(self.seed(), draw), prof.b_prime());
                    if price.to_bits() != e.price.to_bits() {
                        return Err(mismatch("price"));
                    }
                }
            }
        }
        Ok(())
    }
}
