use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::query::PricedQuery;

/// Slack for `price == Σ payments + margin`, relative to `max(1, |price|)`.
pub const CONSERVATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryKind {
    Purchase,
    /// A randomized price disclosed without a purchase.
    PriceProbe,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub seq: u64,
    pub timestamp: u64,
    pub kind: EntryKind,
    pub query: PricedQuery,
    pub price: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer: Option<f64>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer_draw: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub price_draw: Option<u64>,
    pub payments: BTreeMap<String, f64>,
    pub margin: f64,
}

impl LedgerEntry {
    pub fn paid(&self) -> f64 {
        self.payments.values().sum()
    }

    /// Checks the accounting identities of a single entry.
    pub fn check(&self) -> Result<()> {
        let fail = |reason: String| Err(Error::Integrity { seq: self.seq, reason });
        if !self.price.is_finite() || !self.margin.is_finite() {
            return fail(format!("non-finite price {} or margin {}", self.price, self.margin));
        }
        if let Some((owner, p)) = self.payments.iter().find(|(_, p)| !p.is_finite()) {
            return fail(format!("non-finite payment {p} to {owner}"));
        }
        if self.kind == EntryKind::PriceProbe {
            if self.answer.is_some() || !self.payments.is_empty() || self.margin != 0.0 {
                return fail("price probe carries an answer, payments or margin".into());
            }
            return Ok(());
        }
        let scale = self.price.abs().max(1.0);
        let gap = self.price - self.paid() - self.margin;
        if gap.abs() > CONSERVATION_TOL * scale {
            return fail(format!("price {} != payments {} + margin {}", self.price, self.paid(), self.margin));
        }
        if self.margin < -CONSERVATION_TOL * scale {
            return fail(format!("negative margin {}", self.margin));
        }
        if self.answer.is_none() {
            return fail("purchase without an answer".into());
        }
        Ok(())
    }

    /// Draw indices used by this entry.
    pub fn draws(&self) -> impl Iterator<Item = u64> {
        self.answer_draw.into_iter().chain(self.price_draw)
    }
}

/// Append-only record of purchases and price disclosures, optionally backed
/// by a JSON-lines file.
#[derive(Debug, Default)]
pub struct Ledger {
    path: Option<PathBuf>,
    entries: Vec<LedgerEntry>,
}

impl Ledger {
    pub fn in_memory() -> Self {
        Ledger::default()
    }

    /// Opens (or starts) a ledger file. Every existing line must parse and
    /// sequence numbers must run `0, 1, 2, …`.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut entries = Vec::new();
        if path.exists() {
            let reader = BufReader::new(File::open(&path)?);
            for (line_no, line) in reader.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let entry: LedgerEntry = serde_json::from_str(&line).map_err(|e| Error::Integrity {
                    seq: entries.len() as u64,
                    reason: format!("line {}: {e}", line_no + 1),
                })?;
                if entry.seq != entries.len() as u64 {
                    return Err(Error::Integrity {
                        seq: entry.seq,
                        reason: format!("expected sequence number {}", entries.len()),
                    });
                }
                entries.push(entry);
            }
        }
        Ok(Ledger { path: Some(path), entries })
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn next_seq(&self) -> u64 {
        self.entries.len() as u64
    }

    /// The first draw index not used by any entry.
    pub fn next_draw(&self) -> u64 {
        self.entries.iter().flat_map(LedgerEntry::draws).max().map_or(0, |d| d + 1)
    }

    pub fn append(&mut self, entry: LedgerEntry) -> Result<()> {
        if entry.seq != self.next_seq() {
            return Err(Error::Integrity { seq: entry.seq, reason: format!("expected sequence number {}", self.next_seq()) });
        }
        if let Some(path) = &self.path {
            let mut file = OpenOptions::new().create(true).append(true).open(path)?;
            let line = serde_json::to_string(&entry)?;
            writeln!(file, "{line}")?;
            file.flush()?;
        }
        self.entries.push(entry);
        Ok(())
    }

    /// The whole ledger as JSON lines.
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e)?);
            out.push('\n');
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Payouts {
    pub per_owner: BTreeMap<String, f64>,
    pub total_paid: f64,
    pub margin: f64,
    pub revenue: f64,
    pub purchases: usize,
}

/// Per-owner totals over all purchases, after checking every entry.
///
/// `owners` lists owners to report even if they were never paid.
pub fn payouts(entries: &[LedgerEntry], owners: &[String]) -> Result<Payouts> {
    let mut per_owner: BTreeMap<String, f64> = owners.iter().map(|o| (o.clone(), 0.0)).collect();
    let (mut total_paid, mut margin, mut revenue, mut purchases) = (0.0, 0.0, 0.0, 0);
    for (k, e) in entries.iter().enumerate() {
        if e.seq != k as u64 {
            return Err(Error::Integrity { seq: e.seq, reason: format!("expected sequence number {k}") });
        }
        e.check()?;
        if e.kind != EntryKind::Purchase {
            continue;
        }
        purchases += 1;
        revenue += e.price;
        margin += e.margin;
        for (owner, p) in &e.payments {
            *per_owner.entry(owner.clone()).or_insert(0.0) += p;
            total_paid += p;
        }
    }
    Ok(Payouts { per_owner, total_paid, margin, revenue, purchases })
}
