use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn fixture(name: &str) -> String {
    configs().join(name).to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_privmarket")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn quote(query: &str) -> f64 {
    let out = run(&["quote", "--config", &fixture("voting.json"), "--query", &fixture(query)]);
    json(&out)["price"].as_f64().unwrap()
}

#[test]
fn quotes_match_the_voting_example() {
    assert!((quote("sum-5000.json") - 1.0).abs() < 0.01);
    assert!((quote("sum-50.json") - 99.94).abs() < 0.01);
}

#[test]
fn inline_query_json_is_accepted() {
    let out = run(&[
        "quote",
        "--config",
        &fixture("voting-private.json"),
        "--query",
        r#"{"q":[1],"v":10}"#,
    ]);
    // Wrong dimension for a 1000-item market.
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn buy_then_payouts_conserves_money() {
    let dir = TempDir::new().unwrap();
    let ledger = dir.path().join("ledger.jsonl");
    let ledger = ledger.to_str().unwrap();
    for ts in 0..3 {
        let out = run(&[
            "buy",
            "--config",
            &fixture("voting.json"),
            "--query",
            &fixture("sum-5000.json"),
            "--ledger",
            ledger,
            "--timestamp",
            &ts.to_string(),
        ]);
        let v = json(&out);
        assert!(v["answer"].as_f64().unwrap().is_finite());
        assert_eq!(v["entry"]["seq"].as_u64(), Some(ts));
    }
    let v = json(&run(&["payouts", "--ledger", ledger, "--config", &fixture("voting.json")]));
    assert_eq!(v["purchases"].as_u64(), Some(3));
    let per_owner = v["per_owner"].as_object().unwrap();
    assert_eq!(per_owner.len(), 10);
    let paid: f64 = per_owner.values().map(|x| x.as_f64().unwrap()).sum();
    let revenue = v["revenue"].as_f64().unwrap();
    let margin = v["margin"].as_f64().unwrap();
    assert!((paid + margin - revenue).abs() < 1e-9 * revenue.max(1.0));
}

#[test]
fn exact_answers_are_refused() {
    let dir = TempDir::new().unwrap();
    let ledger = dir.path().join("ledger.jsonl");
    let out = run(&[
        "buy",
        "--config",
        &fixture("voting.json"),
        "--query",
        &fixture("sum-exact.json"),
        "--ledger",
        ledger.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(fs::read_to_string(&ledger).unwrap_or_default().is_empty());
}

#[test]
fn invalid_input_exits_with_two() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"n": 0, "domain_bound": 5, "owners": [], "seed": 1, "database": []}"#).unwrap();
    let out = run(&["quote", "--config", bad.to_str().unwrap(), "--query", r#"{"q":[],"v":1}"#]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["quote", "--config", &fixture("voting.json"), "--query", r#"{"q":[1,"#]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn tampered_ledger_exits_with_four() {
    let dir = TempDir::new().unwrap();
    let ledger = dir.path().join("ledger.jsonl");
    let path = ledger.to_str().unwrap();
    let out = run(&[
        "buy",
        "--config",
        &fixture("voting.json"),
        "--query",
        &fixture("sum-5000.json"),
        "--ledger",
        path,
        "--timestamp",
        "7",
    ]);
    let entry = json(&out)["entry"].clone();
    let mut forged = entry.clone();
    forged["answer"] = Value::from(entry["answer"].as_f64().unwrap() + 1.0);
    fs::write(&ledger, format!("{forged}\n")).unwrap();
    let out = run(&["payouts", "--ledger", path, "--config", &fixture("voting.json")]);
    assert_eq!(out.status.code(), Some(4));

    fs::write(&ledger, "not json\n").unwrap();
    let out = run(&["payouts", "--ledger", path]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn private_quotes_need_a_ledger() {
    let out = run(&["quote", "--config", &fixture("voting-private.json"), "--query", &fixture("sum-5000.json")]);
    assert_eq!(out.status.code(), Some(2));

    let dir = TempDir::new().unwrap();
    let ledger = dir.path().join("ledger.jsonl");
    let out = run(&[
        "quote",
        "--config",
        &fixture("voting-private.json"),
        "--query",
        &fixture("sum-5000.json"),
        "--ledger",
        ledger.to_str().unwrap(),
    ]);
    assert!(json(&out)["price"].as_f64().unwrap() > 0.0);
    assert_eq!(fs::read_to_string(&ledger).unwrap().lines().count(), 1);
}

#[test]
fn check_determinacy_prints_a_certificate() {
    let v = json(&run(&["check-determinacy", "--input", &fixture("determinacy.json")]));
    assert_eq!(v["determines"], Value::Bool(true));
    let min = v["certificate"]["min_variance"].as_f64().unwrap();
    assert!((min - 20.0 / 9.0).abs() < 1e-9);
}

#[test]
fn fuzz_reports_a_clean_market() {
    let out = run(&["fuzz-arbitrage", "--config", &fixture("voting.json"), "--trials", "200", "--seed", "3"]);
    let v = json(&out);
    assert_eq!(v["violations"].as_array().unwrap().len(), 0);
    let out = run(&["fuzz-arbitrage", "--config", &fixture("voting.json"), "--trials", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let mut ledgers = Vec::new();
    for name in ["a.jsonl", "b.jsonl"] {
        let ledger = dir.path().join(name);
        let v = json(&run(&[
            "simulate",
            "--config",
            &fixture("voting.json"),
            "--script",
            &fixture("buy-100-cheap.json"),
            "--ledger",
            ledger.to_str().unwrap(),
        ]));
        assert_eq!(v["purchases"].as_u64(), Some(100));
        assert_eq!(v["quotes"].as_u64(), Some(1));
        ledgers.push(fs::read_to_string(&ledger).unwrap());
    }
    assert_eq!(ledgers[0], ledgers[1]);
    let replay = json(&run(&[
        "payouts",
        "--ledger",
        dir.path().join("a.jsonl").to_str().unwrap(),
        "--config",
        &fixture("voting.json"),
    ]));
    assert_eq!(replay["purchases"].as_u64(), Some(100));
}

#[test]
fn report_writes_plot_and_csv() {
    let dir = TempDir::new().unwrap();
    let svg = dir.path().join("curve.svg");
    let csv = dir.path().join("curve.csv");
    let out = run(&[
        "report",
        "--config",
        &fixture("voting.json"),
        "--query",
        &fixture("sum-5000.json"),
        "--plot",
        svg.to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
        "--points",
        "11",
    ]);
    assert!(out.status.success());
    assert!(fs::read_to_string(&svg).unwrap().starts_with("<svg"));
    let rows: Vec<(f64, f64)> = fs::read_to_string(&csv)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| {
            let (v, p) = l.split_once(',').unwrap();
            (v.parse().unwrap(), p.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 11);
    assert!(rows.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 >= w[1].1));
}
