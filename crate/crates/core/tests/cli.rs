//! End-to-end runs of the `poolsim` binary.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn poolsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_poolsim"))
        .args(args)
        .output()
        .expect("spawn poolsim")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// `miner -> cumulative + pending` from a replay summary.
fn replay_totals(text: &str) -> HashMap<u32, f64> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    rdr.records()
        .map(|r| {
            let r = r.unwrap();
            let total = r[1].parse::<f64>().unwrap() + r[2].parse::<f64>().unwrap();
            (r[0].parse().unwrap(), total)
        })
        .collect()
}

#[test]
fn oracle_values() {
    let cases: [(&[&str], &str); 5] = [
        (&["oracle", "pps-reserve", "--B", "50", "--f", "0.05", "--delta", "0.001"], "3453.88"),
        (&["oracle", "hop", "--m", "1", "--fallback"], "1.28149"),
        (&["oracle", "e1", "--x", "1"], "0.219384"),
        (&["oracle", "smpps-maturity", "--R=-500", "--B", "50"], "10"),
        (&["oracle", "posterior-difficulty", "--difficulties", "1,2,4,inf"], "2"),
    ];
    for (args, want) in cases {
        assert_eq!(stdout(&poolsim(args)).trim(), want, "{args:?}");
    }
}

#[test]
fn unknown_oracle_lists_the_available_ones() {
    let out = poolsim(&["oracle", "nope"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("available oracles: e1,"));
}

#[test]
fn seeded_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        stdout(&poolsim(&[
            "run", "saturating-hopper", "--seed", "7", "--horizon", "20000", "--replicas", "2", "--out", path(out),
        ]));
    }
    let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.iter().any(|n| n == "manifest.json"));
    for name in names {
        assert_eq!(fs::read(a.join(&name)).unwrap(), fs::read(b.join(&name)).unwrap(), "{name:?}");
    }
}

#[test]
fn criterion_preset_writes_checks_and_table() {
    let dir = tempfile::tempdir().unwrap();
    let text = stdout(&poolsim(&["run", "hop-table", "--out", path(dir.path())]));
    assert!(text.trim_end().ends_with("PASS"), "{text}");
    let table = fs::read_to_string(dir.path().join("hop_table.csv")).unwrap();
    let mut rdr = csv::Reader::from_reader(table.as_bytes());
    let rows: Vec<_> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 13);
    for r in &rows {
        let got: f64 = r[1].parse().unwrap();
        let reference: f64 = r[3].parse().unwrap();
        assert!((got - reference).abs() <= 1e-3, "{r:?}");
    }
    assert!(dir.path().join("checks.csv").exists());
}

#[test]
fn criterion_preset_rejects_overrides() {
    let out = poolsim(&["run", "hop-table", "--replicas", "3"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn replayed_dgm_with_no_offset_matches_geometric() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("log.csv");
    stdout(&poolsim(&[
        "gen-log", "--miners", "1,2,1", "--difficulty", "50", "--shares", "20000", "--seed", "5", "--out", path(&log),
    ]));
    let geometric = replay_totals(&stdout(&poolsim(&[
        "replay", path(&log), r#"{"method":"geometric","f":0.01,"c":0.2}"#,
    ])));
    let dgm = replay_totals(&stdout(&poolsim(&[
        "replay", path(&log), r#"{"method":"dgm","f":0.01,"c":0.2,"o":0}"#,
    ])));
    assert_eq!(geometric.len(), 3);
    for (m, g) in &geometric {
        assert!((g - dgm[m]).abs() <= 1e-9 * g.abs().max(1.0), "miner {m}: {g} vs {}", dgm[m]);
    }
}

#[test]
fn malformed_log_reports_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("bad.csv");
    fs::write(&log, "index,miner,d,p_eff,B,is_block\n0,0,1,0.01,50,0\n1,0,1,zz,50,0\n").unwrap();
    let out = poolsim(&["replay", path(&log), r#"{"method":"pps","f":0}"#]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));
}

#[test]
fn unknown_config_key_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("log.csv");
    stdout(&poolsim(&["gen-log", "--miners", "1", "--difficulty", "10", "--shares", "100", "--out", path(&log)]));
    let out = poolsim(&["replay", path(&log), r#"{"method":"pplns_unit","f":0,"x":1,"bogus":2}"#]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("bogus"), "{}", stderr(&out));
}

#[test]
fn unit_pplns_stays_fair_across_a_difficulty_change() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("log.csv");
    stdout(&poolsim(&[
        "gen-log", "--miners", "3,1", "--difficulty", "0:100,100000:400", "--shares", "300000", "--seed", "9",
        "--out", path(&log),
    ]));
    // Expected payout per miner is the sum of p·B over its shares.
    let mut expected: HashMap<u32, f64> = HashMap::new();
    let mut rdr = csv::Reader::from_path(&log).unwrap();
    for r in rdr.records() {
        let r = r.unwrap();
        let (p, b): (f64, f64) = (r[3].parse().unwrap(), r[4].parse().unwrap());
        *expected.entry(r[1].parse().unwrap()).or_default() += p * b;
    }
    let got = replay_totals(&stdout(&poolsim(&[
        "replay", path(&log), r#"{"method":"pplns_unit","f":0,"x":2}"#,
    ])));
    let ratio = |m: u32| got[&m] / expected[&m];
    assert!((ratio(0) / ratio(1) - 1.0).abs() < 0.1, "{} vs {}", ratio(0), ratio(1));
}

#[test]
fn migration_keeps_pendings() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("log.csv");
    stdout(&poolsim(&["gen-log", "--miners", "1,1", "--difficulty", "100", "--shares", "5000", "--out", path(&log)]));
    for strategy in ["scale", "keep-units"] {
        let out = poolsim(&[
            "migrate", path(&log), "--f", "0.02", "--x", "1", "--to-f", "0.01", "--to-x", "2", "--strategy", strategy,
        ]);
        assert!(stdout(&out).starts_with("U_T0,miner,u,a,paid_fraction"));
        let summary = stderr(&out);
        let change: f64 = summary.trim().rsplit(": ").next().unwrap().parse().unwrap();
        assert!(change <= 1e-12, "{strategy}: {summary}");
    }
}
