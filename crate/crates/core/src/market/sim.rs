use serde::{Deserialize, Serialize};

use super::engine::Market;
use super::ledger::Ledger;
use crate::error::{Error, Result};
use crate::query::PricedQuery;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Buy,
    Quote,
}

fn one() -> usize {
    1
}

fn default_step() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub action: Action,
    pub query: PricedQuery,
    #[serde(default = "one")]
    pub repeat: usize,
}

/// A scripted sequence of quotes and purchases with a deterministic clock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Script {
    pub start_timestamp: u64,
    #[serde(default = "default_step")]
    pub step_seconds: u64,
    pub steps: Vec<Step>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SimulationSummary {
    pub purchases: usize,
    pub quotes: usize,
    pub refused: usize,
    pub revenue: f64,
    pub answers: Vec<f64>,
    pub quoted: Vec<f64>,
}

/// Runs `script` against `market`, appending to `ledger`. Refused purchases
/// are counted and skipped; any other error stops the run.
pub fn simulate(market: &Market, ledger: &mut Ledger, script: &Script) -> Result<SimulationSummary> {
    let mut summary = SimulationSummary::default();
    let mut tick = 0u64;
    for step in &script.steps {
        for _ in 0..step.repeat {
            let now = script.start_timestamp + tick * script.step_seconds;
            tick += 1;
            match step.action {
                Action::Quote => {
                    summary.quoted.push(market.quote(ledger, &step.query, now)?);
                    summary.quotes += 1;
                }
                Action::Buy => match market.purchase(ledger, &step.query, now) {
                    Ok((answer, entry)) => {
                        summary.purchases += 1;
                        summary.revenue += entry.price;
                        summary.answers.push(answer);
                    }
                    Err(Error::Refused(_)) => summary.refused += 1,
                    Err(e) => return Err(e),
                },
            }
        }
    }
    Ok(summary)
}
