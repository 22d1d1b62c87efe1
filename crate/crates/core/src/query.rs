//! Linear queries, priced queries, databases and bundles.
//!
//! A linear query is a coefficient vector `q`; its exact answer on a
//! database `x` is the dot product `q·x`. Buyers purchase a query together
//! with the variance they are willing to tolerate, as a [`PricedQuery`].

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Coefficients of a linear aggregation query. Never empty, always finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct LinearQuery(Vec<f64>);

impl LinearQuery {
    pub fn new(coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::InvalidQuery("query must have at least one coefficient".into()));
        }
        if let Some(i) = coefficients.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidQuery(format!("coefficient {i} is not finite")));
        }
        Ok(LinearQuery(coefficients))
    }

    /// The all-zero query of length `n`.
    pub fn zero(n: usize) -> Self {
        assert!(n >= 1, "query length must be at least 1");
        LinearQuery(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.0
    }

    pub fn coefficient(&self, i: usize) -> Result<f64> {
        self.0
            .get(i)
            .copied()
            .ok_or(Error::IndexOutOfRange { index: i, len: self.0.len() })
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0.0)
    }

    pub fn scaled(&self, c: f64) -> LinearQuery {
        LinearQuery(self.0.iter().map(|q| c * q).collect())
    }

    pub fn plus(&self, other: &LinearQuery) -> Result<LinearQuery> {
        self.check_len(other.len())?;
        Ok(LinearQuery(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect()))
    }

    /// Copy of this query with coefficient `i` replaced by `value`.
    pub fn with_coefficient(&self, i: usize, value: f64) -> Result<LinearQuery> {
        self.coefficient(i)?;
        let mut out = self.0.clone();
        out[i] = value;
        LinearQuery::new(out)
    }

    pub fn norm_l2(&self) -> f64 {
        self.0.iter().map(|q| q * q).sum::<f64>().sqrt()
    }

    pub(crate) fn check_len(&self, n: usize) -> Result<()> {
        if self.0.len() != n {
            return Err(Error::dims(n, self.0.len()));
        }
        Ok(())
    }
}

impl TryFrom<Vec<f64>> for LinearQuery {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        LinearQuery::new(v)
    }
}

impl From<LinearQuery> for Vec<f64> {
    fn from(q: LinearQuery) -> Self {
        q.0
    }
}

/// A query paired with the variance bound the buyer accepts: the unit of sale.
///
/// The variance is an extended non-negative real; `f64::INFINITY` means the
/// buyer accepts unbounded noise. On the wire it is `{"q":[..],"v":50}` with
/// `"inf"` standing in for infinity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPricedQuery")]
pub struct PricedQuery {
    #[serde(rename = "q")]
    query: LinearQuery,
    #[serde(rename = "v", serialize_with = "ser_ext")]
    variance: f64,
}

#[derive(Deserialize)]
struct RawPricedQuery {
    q: LinearQuery,
    #[serde(deserialize_with = "de_ext")]
    v: f64,
}

impl TryFrom<RawPricedQuery> for PricedQuery {
    type Error = Error;

    fn try_from(raw: RawPricedQuery) -> Result<Self> {
        PricedQuery::new(raw.q, raw.v)
    }
}

impl PricedQuery {
    pub fn new(query: LinearQuery, variance: f64) -> Result<Self> {
        if variance.is_nan() || variance < 0.0 {
            return Err(Error::InvalidQuery(format!("variance must be >= 0, got {variance}")));
        }
        Ok(PricedQuery { query, variance })
    }

    pub fn from_parts(coefficients: Vec<f64>, variance: f64) -> Result<Self> {
        PricedQuery::new(LinearQuery::new(coefficients)?, variance)
    }

    pub fn query(&self) -> &LinearQuery {
        &self.query
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn len(&self) -> usize {
        self.query.len()
    }

    pub fn is_empty(&self) -> bool {
        self.query.is_empty()
    }

    pub fn with_variance(&self, variance: f64) -> Result<PricedQuery> {
        PricedQuery::new(self.query.clone(), variance)
    }
}

impl fmt::Display for PricedQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?}, v={})", self.query.coefficients(), self.variance)
    }
}

pub(crate) fn ser_ext<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_infinite() && *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*v)
    }
}

pub(crate) fn de_ext<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Ext {
        Num(f64),
        Str(String),
    }
    match Ext::deserialize(d)? {
        Ext::Num(v) => Ok(v),
        Ext::Str(s) if matches!(s.as_str(), "inf" | "Infinity" | "infinity") => Ok(f64::INFINITY),
        Ext::Str(s) => Err(serde::de::Error::custom(format!("expected number or \"inf\", got {s:?}"))),
    }
}

/// A vector of real-valued data items, each bounded in magnitude by `domain_bound`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Database {
    items: Vec<f64>,
    domain_bound: f64,
}

impl Database {
    pub fn new(items: Vec<f64>, domain_bound: f64) -> Result<Self> {
        if !(domain_bound.is_finite() && domain_bound > 0.0) {
            return Err(Error::InvalidDatabase(format!(
                "domain bound must be positive and finite, got {domain_bound}"
            )));
        }
        if items.is_empty() {
            return Err(Error::InvalidDatabase("database must hold at least one item".into()));
        }
        if let Some((i, x)) = items.iter().enumerate().find(|(_, x)| !(x.abs() <= domain_bound)) {
            return Err(Error::InvalidDatabase(format!(
                "item {i} = {x} lies outside [-{domain_bound}, {domain_bound}]"
            )));
        }
        Ok(Database { items, domain_bound })
    }

    pub fn items(&self) -> &[f64] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn domain_bound(&self) -> f64 {
        self.domain_bound
    }
}

/// A multiset of priced queries. Duplicates are distinct purchases.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QueryBundle(Vec<PricedQuery>);

impl QueryBundle {
    pub fn new(entries: Vec<PricedQuery>) -> Self {
        QueryBundle(entries)
    }

    pub fn entries(&self) -> &[PricedQuery] {
        &self.0
    }

    pub fn push(&mut self, q: PricedQuery) {
        self.0.push(q);
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &PricedQuery> {
        self.0.iter()
    }
}

impl FromIterator<PricedQuery> for QueryBundle {
    fn from_iter<I: IntoIterator<Item = PricedQuery>>(iter: I) -> Self {
        QueryBundle(iter.into_iter().collect())
    }
}

impl Extend<PricedQuery> for QueryBundle {
    fn extend<I: IntoIterator<Item = PricedQuery>>(&mut self, iter: I) {
        self.0.extend(iter)
    }
}

/// Exact answer `Σ q_i·x_i`, without perturbation.
pub fn evaluate(q: &LinearQuery, x: &Database) -> Result<f64> {
    q.check_len(x.len())?;
    Ok(q.coefficients().iter().zip(x.items()).map(|(q, x)| q * x).sum())
}

/// The database with item `i` removed, i.e. set to zero.
pub fn zeroed(x: &Database, i: usize) -> Result<Database> {
    if i >= x.len() {
        return Err(Error::IndexOutOfRange { index: i, len: x.len() });
    }
    let mut items = x.items.clone();
    items[i] = 0.0;
    Ok(Database { items, domain_bound: x.domain_bound })
}
