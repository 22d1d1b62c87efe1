use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::payments::Contract;
use crate::pricing::PriceExpr;
use crate::privacy::NoiseKind;
use crate::query::Database;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OwnerSpec {
    pub owner: String,
    pub items: Vec<usize>,
    pub contract: Contract,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriceDirective {
    /// Price every query at the sum of its micro-payments.
    Synthesize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PriceSpec {
    Directive(PriceDirective),
    Expr(PriceExpr),
}

impl Default for PriceSpec {
    fn default() -> Self {
        PriceSpec::Directive(PriceDirective::Synthesize)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DatabaseSource {
    Inline(Vec<f64>),
    /// A JSON array of numbers, or a CSV file with one value per field.
    File { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivateValuations {
    pub delta: f64,
    pub b_prime: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketConfig {
    pub n: usize,
    pub domain_bound: f64,
    pub owners: Vec<OwnerSpec>,
    #[serde(default)]
    pub price: PriceSpec,
    /// Charge `max(price, Σ μ_i)` so payouts are always covered.
    #[serde(default)]
    pub cover_payouts: bool,
    #[serde(default)]
    pub noise: NoiseKind,
    pub seed: u64,
    pub database: DatabaseSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub private_valuations: Option<PrivateValuations>,
}

impl MarketConfig {
    /// Reads a config; a relative database path is resolved against the
    /// config file's directory.
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        let mut config: MarketConfig = serde_json::from_str(&text)?;
        if let DatabaseSource::File { path: db } = &mut config.database {
            if db.is_relative() {
                if let Some(dir) = path.parent() {
                    *db = dir.join(&*db);
                }
            }
        }
        Ok(config)
    }

    pub fn load_database(&self) -> Result<Database> {
        let items = match &self.database {
            DatabaseSource::Inline(items) => items.clone(),
            DatabaseSource::File { path } => read_values(path)?,
        };
        if items.len() != self.n {
            return Err(Error::InvalidDatabase(format!("expected {} values, found {}", self.n, items.len())));
        }
        Database::new(items, self.domain_bound)
    }
}

fn read_values(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path)?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        return Ok(serde_json::from_str(&text)?);
    }
    let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(text.as_bytes());
    let mut values = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::InvalidDatabase(format!("{}: {e}", path.display())))?;
        for field in record.iter().map(str::trim).filter(|f| !f.is_empty()) {
            match field.parse::<f64>() {
                Ok(x) => values.push(x),
                Err(_) if row == 0 => {}
                Err(_) => {
                    return Err(Error::InvalidDatabase(format!(
                        "{}: row {}: `{field}` is not a number",
                        path.display(),
                        row + 1
                    )))
                }
            }
        }
    }
    Ok(values)
}
