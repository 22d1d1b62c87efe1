use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::Deserialize;
use serde_json::json;

use privmarket::determinacy::{determines, min_variance};
use privmarket::market::{
    curve_csv, curve_svg, log_grid, payouts, price_curve, simulate, Ledger, Market, MarketConfig, Script,
};
use privmarket::{Error, PricedQuery, QueryBundle};

#[derive(Parser)]
#[command(name = "privmarket", version, about = "Market maker for noisy linear queries over private data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Price a query without buying it.
    Quote {
        #[arg(long)]
        config: PathBuf,
        /// A priced query as JSON (`{"q":[..],"v":..}`) or a path to one.
        #[arg(long)]
        query: String,
        /// Ledger for logging price probes under private valuations.
        #[arg(long)]
        ledger: Option<PathBuf>,
        #[arg(long)]
        timestamp: Option<u64>,
    },
    /// Buy a query: pay, receive a noisy answer, pay the owners.
    Buy {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        query: String,
        #[arg(long)]
        ledger: PathBuf,
        #[arg(long)]
        timestamp: Option<u64>,
    },
    /// Total micro-payments per owner recorded in a ledger.
    Payouts {
        #[arg(long)]
        ledger: PathBuf,
        /// List every owner of this market and replay each entry against it.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Decide whether a bundle of priced queries determines a target.
    CheckDeterminacy {
        /// JSON file with `{"bundle":[..],"target":{..}}`.
        #[arg(long)]
        input: PathBuf,
    },
    /// Search random determinacy instances for arbitrage.
    FuzzArbitrage {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run a scripted sequence of quotes and purchases.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        script: PathBuf,
        #[arg(long)]
        ledger: PathBuf,
    },
    /// Price-versus-variance curve for a query.
    Report {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        query: String,
        /// Write an SVG plot here.
        #[arg(long)]
        plot: Option<PathBuf>,
        /// Write the curve as CSV here.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-1)]
        min_variance: f64,
        #[arg(long, default_value_t = 1e5)]
        max_variance: f64,
        #[arg(long, default_value_t = 61)]
        points: usize,
    },
}

#[derive(Deserialize)]
struct DeterminacyInput {
    bundle: QueryBundle,
    target: PricedQuery,
}

/// Exit status for a failed command.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Refused(_)) => 3,
        Some(Error::Integrity { .. }) => 4,
        _ => 2,
    }
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

fn read_query(arg: &str) -> Result<PricedQuery> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        fs::read_to_string(arg).with_context(|| format!("reading query from {arg}"))?
    };
    Ok(serde_json::from_str(&text).map_err(Error::from)?)
}

fn load_market(path: &Path) -> Result<Market> {
    let config = MarketConfig::from_path(path).with_context(|| format!("loading {}", path.display()))?;
    Ok(Market::new(config)?)
}

fn print(value: &serde_json::Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Quote { config, query, ledger, timestamp } => {
            let market = load_market(&config)?;
            let q = read_query(&query)?;
            let price = match (&ledger, market.is_private()) {
                (Some(path), true) => market.quote(&mut Ledger::open(path)?, &q, timestamp.unwrap_or_else(now))?,
                (None, true) => anyhow::bail!(Error::InvalidConfig(
                    "quotes under private valuations are logged; pass --ledger".into()
                )),
                _ => market.price(&q)?,
            };
            print(&json!({ "price": price }))?;
        }
        Command::Buy { config, query, ledger, timestamp } => {
            let market = load_market(&config)?;
            let q = read_query(&query)?;
            let mut ledger = Ledger::open(&ledger)?;
            let (answer, entry) = market.purchase(&mut ledger, &q, timestamp.unwrap_or_else(now))?;
            print(&json!({ "answer": answer, "entry": entry }))?;
        }
        Command::Payouts { ledger, config } => {
            let ledger = Ledger::open(&ledger)?;
            let owners = match &config {
                Some(path) => {
                    let market = load_market(path)?;
                    market.verify_replay(ledger.entries())?;
                    market.owners().to_vec()
                }
                None => Vec::new(),
            };
            print(&serde_json::to_value(payouts(ledger.entries(), &owners)?)?)?;
        }
        Command::CheckDeterminacy { input } => {
            let text = fs::read_to_string(&input).with_context(|| format!("reading {}", input.display()))?;
            let input: DeterminacyInput = serde_json::from_str(&text).map_err(Error::from)?;
            let cert = min_variance(&input.bundle, input.target.query())?;
            let determined = determines(&input.bundle, &input.target)?;
            print(&json!({ "determines": determined, "certificate": cert }))?;
        }
        Command::FuzzArbitrage { config, trials, seed } => {
            if trials == 0 {
                anyhow::bail!(Error::InvalidConfig("trials must be at least 1".into()));
            }
            let market = load_market(&config)?;
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let report = market.fuzz(trials, &mut rng);
            print(&serde_json::to_value(&report)?)?;
            if !report.is_clean() {
                return Ok(1);
            }
        }
        Command::Simulate { config, script, ledger } => {
            let market = load_market(&config)?;
            let text = fs::read_to_string(&script).with_context(|| format!("reading {}", script.display()))?;
            let script: Script = serde_json::from_str(&text).map_err(Error::from)?;
            let mut ledger = Ledger::open(&ledger)?;
            let summary = simulate(&market, &mut ledger, &script)?;
            print(&serde_json::to_value(&summary)?)?;
        }
        Command::Report { config, query, plot, csv, min_variance, max_variance, points } => {
            let market = load_market(&config)?;
            let q = read_query(&query)?;
            if !(min_variance > 0.0 && max_variance > min_variance) {
                anyhow::bail!(Error::InvalidConfig("need 0 < min-variance < max-variance".into()));
            }
            let curve = price_curve(&market, q.query(), &log_grid(min_variance, max_variance, points))?;
            if let Some(path) = &plot {
                fs::write(path, curve_svg(&curve, "price vs. variance"))?;
            }
            match &csv {
                Some(path) => fs::write(path, curve_csv(&curve))?,
                None if plot.is_none() => print!("{}", curve_csv(&curve)),
                None => {}
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
