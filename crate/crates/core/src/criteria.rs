//! Reproduction runners for the acceptance criteria, one per preset.
//!
//! Each runner returns named checks: a measured value, the reference value
//! and the tolerance it must fall within.

use serde::Serialize;
use serde_json::{json, Value};

use crate::engine::{replay, Engine, EngineConfig, Ledger, UnitPplns};
use crate::engine::MigrationStrategy;
use crate::error::{Error, Result};
use crate::oblivious::oblivious_trial;
use crate::oracles;
use crate::sim::{
    estimate_maturity, estimate_variance_per_share, pps_ruin_mc, run_scenario, Estimate,
    ReplicaResult, RunOutput, ScenarioConfig, TagRecord,
};
use crate::stochastic::{
    generate_stream, DifficultySchedule, MinerId, MinerSpec, RewardSchedule, RngStream, ShareEvent,
};

pub const DEFAULT_SEED: u64 = 1;

/// Tolerances fixed by the acceptance criteria.
pub mod tol {
    pub const HOP_RATIO: f64 = 0.02;
    pub const HOP_TABLE: f64 = 1e-3;
    pub const HONEST_WORST_CASE: f64 = 0.01;
    pub const SIGMAS: f64 = 3.0;
    pub const VARIANCE_REL: f64 = 0.10;
    pub const MATURITY_REL: f64 = 0.10;
    pub const LOG_SCALE_REL: f64 = 1e-9;
    pub const DGM_GEOMETRIC_REL: f64 = 1e-9;
    pub const DGM_FRAMEWORK_REL: f64 = 1e-6;
    pub const UNIT_MATURITY_REL: f64 = 0.05;
    pub const MIGRATION_ABS: f64 = 1e-12;
    pub const FRAMEWORK_UNIT_REL: f64 = 1e-6;
    pub const RUIN_ABS: f64 = 0.03;
    pub const MPPS_LOSS_ABS: f64 = 0.015;
    pub const LIW_REL: f64 = 0.20;
    pub const CHI_SQUARE_P: f64 = 0.01;
}

/// Published reference values the runners are compared against.
pub mod reference {
    /// `(m, with fallback, without fallback)`.
    pub const HOP_TABLE: [(u32, f64, f64); 13] = [
        (1, 1.28149, 1.0),
        (2, 1.5159, 1.38629),
        (3, 1.71404, 1.64792),
        (4, 1.88393, 1.84839),
        (5, 2.03152, 2.0118),
        (6, 2.16131, 2.15011),
        (7, 2.27669, 2.27023),
        (8, 2.38028, 2.3765),
        (9, 2.4741, 2.47188),
        (10, 2.55975, 2.55843),
        (15, 2.90159, 2.90148),
        (20, 3.15341, 3.1534),
        (25, 3.353, 3.353),
    ];
    pub const HOP_RATIO: f64 = 1.28;
    pub const HONEST_WORST_CASE: f64 = 0.565;
    pub const RUIN_FREQUENCY: f64 = 0.82;
    pub const PPS_RESERVE: f64 = 3454.0;
    pub const MPPS_LOSS_10: f64 = 0.126;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `|measured - expected| <= tolerance`.
    Within,
    /// `measured >= expected`.
    AtLeast,
    /// `measured <= expected`.
    AtMost,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub id: String,
    pub description: String,
    pub measured: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub relation: Relation,
    pub passed: bool,
}

impl Check {
    pub fn within(id: &str, description: &str, measured: f64, expected: f64, tolerance: f64) -> Self {
        Check {
            id: id.into(),
            description: description.into(),
            measured,
            expected,
            tolerance,
            relation: Relation::Within,
            passed: (measured - expected).abs() <= tolerance,
        }
    }

    pub fn at_least(id: &str, description: &str, measured: f64, bound: f64) -> Self {
        Check {
            id: id.into(),
            description: description.into(),
            measured,
            expected: bound,
            tolerance: 0.0,
            relation: Relation::AtLeast,
            passed: measured >= bound,
        }
    }

    pub fn at_most(id: &str, description: &str, measured: f64, bound: f64) -> Self {
        Check {
            id: id.into(),
            description: description.into(),
            measured,
            expected: bound,
            tolerance: 0.0,
            relation: Relation::AtMost,
            passed: measured <= bound,
        }
    }
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let verdict = if self.passed { "ok" } else { "FAILED" };
        match self.relation {
            Relation::Within => write!(
                f,
                "{} {}: measured {:.6e}, expected {:.6e} ± {:.3e} [{verdict}]",
                self.id, self.description, self.measured, self.expected, self.tolerance
            ),
            Relation::AtLeast => write!(
                f,
                "{} {}: measured {:.6e}, need >= {:.6e} [{verdict}]",
                self.id, self.description, self.measured, self.expected
            ),
            Relation::AtMost => write!(
                f,
                "{} {}: measured {:.6e}, need <= {:.6e} [{verdict}]",
                self.id, self.description, self.measured, self.expected
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionReport {
    pub number: u8,
    pub preset: &'static str,
    pub title: &'static str,
    pub checks: Vec<Check>,
    pub tables: Vec<Table>,
}

impl CriterionReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// `(number, preset name, title)` for every criterion.
pub const CRITERIA: [(u8, &str, &str); 14] = [
    (1, "hop-table", "hop amplification"),
    (2, "honest-worst-case", "honest miners against saturating hoppers"),
    (3, "proportional-fairness", "proportional fairness and variance"),
    (4, "geometric", "geometric method"),
    (5, "dgm-reductions", "double geometric reductions and fairness"),
    (6, "unit-pplns", "unit PPLNS"),
    (7, "framework", "decay framework"),
    (8, "pps-ruin", "PPS ruin"),
    (9, "mpps-loss", "MPPS loss"),
    (10, "smpps", "SMPPS maturity and buffer trend"),
    (11, "immunity", "immunity theorem"),
    (12, "attacks", "sabotage and lie in wait"),
    (13, "oblivious-shares", "oblivious shares"),
    (14, "slush-contrast", "slush against geometric and DGM"),
];

pub fn criterion_by_preset(name: &str) -> Option<u8> {
    CRITERIA.iter().find(|c| c.1 == name).map(|c| c.0)
}

/// Scenario presets runnable as plain simulations.
pub const SCENARIO_PRESETS: [&str; 10] = [
    "hop-amplification",
    "saturating-hopper",
    "proportional-tagged",
    "geometric-fairness",
    "geometric-difficulty-change",
    "dgm-hopping",
    "unit-pplns-tagged",
    "framework-linear",
    "smpps-constant-buffer",
    "lie-in-wait",
];

fn config(v: Value) -> Result<ScenarioConfig> {
    ScenarioConfig::from_json(&v.to_string())
}

fn constant(pool: usize, hashrate: f64) -> Value {
    json!({"hashrate": hashrate, "policy": {"kind": "constant", "pool": pool}})
}

/// A named scenario with the given seed.
pub fn preset_scenario(name: &str, seed: u64) -> Result<ScenarioConfig> {
    let v = match name {
        "hop-amplification" => json!({
            "name": name,
            "pools": [{"engine": {"method": "proportional", "f": 0.0}}],
            "agents": [
                constant(0, 0.98),
                {"name": "hopper", "hashrate": 0.02, "policy": {"kind": "prop_hopper", "pools": [0]}}
            ],
            "difficulty": 1000, "reward": 50, "horizon": 2_500_000, "replicas": 8
        }),
        "saturating-hopper" => json!({
            "name": name,
            "pools": [{"engine": {"method": "proportional", "f": 0.0}}],
            "agents": [
                constant(0, 1.0),
                {"name": "hoppers", "hashrate": 0.0, "policy": {"kind": "saturating_hopper", "pool": 0}}
            ],
            "difficulty": 1000, "reward": 50, "horizon": 2_000_000, "replicas": 8
        }),
        "proportional-tagged" => json!({
            "name": name,
            "pools": [{"engine": {"method": "proportional", "f": 0.0}}],
            "agents": [constant(0, 0.5), constant(0, 0.5)],
            "difficulty": 1000, "reward": 50, "horizon": 500_000, "replicas": 64,
            "tagging": {"stride": 1, "agents": [0]}
        }),
        "geometric-fairness" => json!({
            "name": name,
            "pools": [{"engine": {"method": "geometric", "f": 0.01, "c": 0.1}}],
            "agents": [constant(0, 0.6), constant(0, 0.4)],
            "difficulty": 1000, "reward": 50, "horizon": 1_000_000, "replicas": 16,
            "tagging": {"stride": 997, "warmup": 20_000, "cooldown": 20_000}
        }),
        "geometric-difficulty-change" => json!({
            "name": name,
            "pools": [{"engine": {"method": "geometric", "f": 0.01, "c": 0.2}}],
            "agents": [constant(0, 0.6), constant(0, 0.4)],
            "difficulty": [[0, 1000], [500_000, 500]], "reward": 50,
            "horizon": 1_000_000, "replicas": 16
        }),
        "dgm-hopping" => json!({
            "name": name,
            "pools": [
                {"engine": {"method": "dgm", "f": 0.0, "c": 0.3, "o": 0.5}},
                {"engine": {"method": "dgm", "f": 0.0, "c": 0.3, "o": 0.5}}
            ],
            "agents": [
                constant(0, 0.45),
                constant(1, 0.45),
                {"name": "hopper", "hashrate": 0.1,
                 "policy": {"kind": "prop_hopper", "pools": [0, 1], "fallback": false}}
            ],
            "difficulty": 1000, "reward": 50, "horizon": 1_000_000, "replicas": 16
        }),
        "unit-pplns-tagged" => json!({
            "name": name,
            "pools": [{"engine": {"method": "pplns_unit", "f": 0.0, "x": 1.0}}],
            "agents": [constant(0, 0.7), constant(0, 0.3)],
            "difficulty": 1000, "reward": 50, "horizon": 1_000_000, "replicas": 16,
            "tagging": {"stride": 1009, "warmup": 5000, "cooldown": 5000}
        }),
        "framework-linear" => json!({
            "name": name,
            "pools": [{"engine": {"method": "framework", "f": 0.0, "decay": {"kind": "linear", "x": 2.0}}}],
            "agents": [constant(0, 0.7), constant(0, 0.3)],
            "difficulty": 1000, "reward": 50, "horizon": 1_000_000, "replicas": 16,
            "tagging": {"stride": 1009, "warmup": 5000, "cooldown": 5000}
        }),
        "smpps-constant-buffer" => json!({
            "name": name,
            "pools": [{"engine": {"method": "smpps", "f": 0.0, "constant_buffer": -500.0}}],
            "agents": [constant(0, 1.0)],
            "difficulty": 100, "reward": 50, "horizon": 400_000, "replicas": 8,
            "tagging": {"stride": 97, "warmup": 2000, "cooldown": 20_000}
        }),
        "lie-in-wait" => json!({
            "name": name,
            "pools": [
                {"engine": {"method": "pplns_unit", "f": 0.0, "x": 1.0}},
                {"engine": {"method": "pplns_unit", "f": 0.0, "x": 1.0}}
            ],
            "agents": [
                constant(0, 0.45),
                constant(1, 0.45),
                {"name": "attacker", "hashrate": 0.1,
                 "policy": {"kind": "lie_in_wait", "pools": [0, 1], "ambush": 333}}
            ],
            "difficulty": 1000, "reward": 50, "horizon": 4_000_000, "replicas": 8
        }),
        _ => {
            return Err(Error::Config {
                path: "preset".into(),
                message: format!(
                    "unknown preset `{name}`; scenario presets: {}; criterion presets: {}",
                    SCENARIO_PRESETS.join(", "),
                    CRITERIA.iter().map(|c| c.1).collect::<Vec<_>>().join(", ")
                ),
            })
        }
    };
    let mut cfg = config(v)?;
    cfg.seed = seed;
    Ok(cfg)
}

fn estimate(xs: &[f64], what: &str) -> Result<Estimate> {
    match Estimate::from_samples(xs) {
        Some(e) if xs.len() >= 2 => Ok(e),
        _ => Err(Error::Numerical(format!("not enough samples for {what}"))),
    }
}

fn per_replica<F: Fn(&ReplicaResult) -> Option<f64>>(out: &RunOutput, what: &str, f: F) -> Result<Estimate> {
    let xs: Vec<f64> = out.replicas.iter().filter_map(f).collect();
    estimate(&xs, what)
}

fn sigmas(e: &Estimate) -> f64 {
    tol::SIGMAS * e.std_error()
}

fn tags_of(r: &ReplicaResult, agent: usize) -> Vec<TagRecord> {
    r.tags.iter().filter(|t| t.agent == agent).cloned().collect()
}

fn stream(seed: u64, d: f64, reward: f64, hashrates: &[f64], n: u64) -> Result<Vec<ShareEvent>> {
    let mut rng = RngStream::new(seed, 0);
    let miners: Vec<MinerSpec> = hashrates
        .iter()
        .enumerate()
        .map(|(i, &h)| MinerSpec::new(i as MinerId, h))
        .collect();
    generate_stream(
        &mut rng,
        &DifficultySchedule::constant(d)?,
        &RewardSchedule::constant(reward)?,
        &miners,
        n,
    )
}

/// Paid plus pending per miner after replaying `events`.
fn totals(events: &[ShareEvent], cfg: &EngineConfig) -> Result<Vec<(MinerId, f64)>> {
    let (engine, ledger) = replay(events, cfg)?;
    Ok(miner_values(&engine, &ledger))
}

fn miner_values(engine: &Engine, ledger: &Ledger) -> Vec<(MinerId, f64)> {
    let mut v: std::collections::BTreeMap<MinerId, f64> = ledger.miner_totals().collect();
    for (m, x) in engine.pending_all() {
        *v.entry(m).or_default() += x;
    }
    v.into_iter().collect()
}

/// Largest per-miner difference relative to the largest value.
fn max_rel_diff(a: &[(MinerId, f64)], b: &[(MinerId, f64)]) -> f64 {
    let get = |v: &[(MinerId, f64)], m: MinerId| v.iter().find(|x| x.0 == m).map_or(0.0, |x| x.1);
    let scale = a.iter().chain(b).map(|x| x.1.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    a.iter()
        .chain(b)
        .map(|x| (get(a, x.0) - get(b, x.0)).abs() / scale)
        .fold(0.0, f64::max)
}

pub fn run_criterion(number: u8, seed: u64) -> Result<CriterionReport> {
    let &(_, preset, title) = CRITERIA
        .iter()
        .find(|c| c.0 == number)
        .ok_or_else(|| Error::param("criterion", format!("no criterion {number}")))?;
    let mut tables = Vec::new();
    let checks = match number {
        1 => c1_hop(seed, &mut tables)?,
        2 => c2_honest(seed)?,
        3 => c3_proportional(seed)?,
        4 => c4_geometric(seed)?,
        5 => c5_dgm(seed)?,
        6 => c6_unit_pplns(seed, &mut tables)?,
        7 => c7_framework(seed)?,
        8 => c8_ruin(seed)?,
        9 => c9_mpps(seed)?,
        10 => c10_smpps(seed)?,
        11 => c11_immunity()?,
        12 => c12_attacks(seed)?,
        13 => c13_oblivious(seed)?,
        _ => c14_slush(seed)?,
    };
    Ok(CriterionReport {
        number,
        preset,
        title,
        checks,
        tables,
    })
}

fn c1_hop(seed: u64, tables: &mut Vec<Table>) -> Result<Vec<Check>> {
    let out = run_scenario(&preset_scenario("hop-amplification", seed)?)?;
    let ratio = per_replica(&out, "hopper ratio", |r| {
        Some(r.agents[1].payout_per_share()? / r.agents[0].payout_per_share()?)
    })?;
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for &(m, with, without) in &reference::HOP_TABLE {
        let a = oracles::hop_amplification(m as f64, true)?;
        let b = oracles::hop_amplification(m as f64, false)?;
        worst = worst.max((a - with).abs()).max((b - without).abs());
        rows.push(vec![m.to_string(), a.to_string(), b.to_string(), with.to_string(), without.to_string()]);
    }
    tables.push(Table {
        name: "hop_table".into(),
        header: ["m", "with_fallback", "without_fallback", "reference_with", "reference_without"]
            .map(String::from)
            .to_vec(),
        rows,
    });
    Ok(vec![
        Check::within(
            "1a",
            "MC hopper/continuous payout ratio, m=1",
            ratio.mean,
            reference::HOP_RATIO,
            tol::HOP_RATIO,
        ),
        Check::at_most("1b", "max |oracle - table| for m <= 25", worst, tol::HOP_TABLE),
    ])
}

fn c2_honest(seed: u64) -> Result<Vec<Check>> {
    let out = run_scenario(&preset_scenario("saturating-hopper", seed)?)?;
    let honest = per_replica(&out, "honest relative payout", |r| r.agents[0].relative_payout())?;
    Ok(vec![Check::within(
        "2a",
        "honest payout per share / pB",
        honest.mean,
        reference::HONEST_WORST_CASE,
        tol::HONEST_WORST_CASE,
    )])
}

fn c3_proportional(seed: u64) -> Result<Vec<Check>> {
    let cfg = preset_scenario("proportional-tagged", seed)?;
    let out = run_scenario(&cfg)?;
    let (p, b) = (1.0 / 1000.0, 50.0);
    let mean = per_replica(&out, "payout per share", |r| r.agents[0].payout_per_share())?;
    let var = per_replica(&out, "tagged variance", |r| estimate_variance_per_share(&tags_of(r, 0)))?;
    let oracle = oracles::prop_share_variance(p, b)?.variance;
    Ok(vec![
        Check::within("3a", "mean payout per share vs pB", mean.mean, p * b, sigmas(&mean)),
        Check::within(
            "3b",
            "tagged-share variance vs closed form",
            var.mean,
            oracle,
            tol::VARIANCE_REL * oracle,
        ),
    ])
}

/// Payout to share `i` of a round closed by share `n`, for `i <= 50`, `n - i <= 50`.
fn geometric_diagonals() -> Result<f64> {
    let (p, c) = (0.01, 0.2);
    let cfg = EngineConfig::Geometric {
        f: 0.0,
        c,
        log_scale: false,
        sentinel: crate::engine::LOG_SENTINEL,
    };
    let mut table = vec![vec![f64::NAN; 51]; 51];
    for n in 1..=100u64 {
        let events: Vec<ShareEvent> = (0..=n).map(|i| ShareEvent::new(i, i as MinerId, p, 1.0, i == n)).collect();
        let (_, ledger) = replay(&events, &cfg)?;
        for i in n.saturating_sub(50)..n.min(51) {
            table[i as usize][(n - i) as usize] = ledger.miner_total(i as MinerId);
        }
    }
    let mut worst: f64 = 0.0;
    for k in 1..=50 {
        let diag: Vec<f64> = (0..=50).map(|i| table[i][k]).collect();
        let hi = diag.iter().cloned().fold(f64::MIN, f64::max);
        let lo = diag.iter().cloned().fold(f64::MAX, f64::min);
        if !(hi > 0.0) {
            return Err(Error::Numerical(format!("empty diagonal {k}")));
        }
        worst = worst.max((hi - lo) / hi);
    }
    Ok(worst)
}

fn c4_geometric(seed: u64) -> Result<Vec<Check>> {
    let spread = geometric_diagonals()?;

    let change = run_scenario(&preset_scenario("geometric-difficulty-change", seed)?)?;
    let (f, c) = (0.01, 0.2);
    let rel = per_replica(&change, "relative payout", |r| r.agents[0].relative_payout())?;

    let cfg = preset_scenario("geometric-fairness", seed)?;
    let out = run_scenario(&cfg)?;
    let stats = oracles::geometric_stats(1.0 / 1000.0, 0.1, 0.01, 50.0)?;
    let var = per_replica(&out, "tagged variance", |r| estimate_variance_per_share(&tags_of(r, 0)))?;
    let mat = per_replica(&out, "maturity", |r| estimate_maturity(&tags_of(r, 0)))?;

    let events = stream(seed, 1000.0, 50.0, &[0.5, 0.3, 0.2], 300_000)?;
    let lin = totals(
        &events,
        &EngineConfig::Geometric { f: 0.01, c: 0.1, log_scale: false, sentinel: crate::engine::LOG_SENTINEL },
    )?;
    let log = totals(
        &events,
        &EngineConfig::Geometric { f: 0.01, c: 0.1, log_scale: true, sentinel: crate::engine::LOG_SENTINEL },
    )?;

    Ok(vec![
        Check::at_most("4a", "max relative spread along table diagonals", spread, 1e-12),
        Check::within(
            "4b",
            "relative payout under difficulty halving vs (1-f)(1-c)",
            rel.mean,
            (1.0 - f) * (1.0 - c),
            rel.half_width,
        ),
        Check::within("4c", "tagged variance vs closed form", var.mean, stats.variance, tol::VARIANCE_REL * stats.variance),
        Check::within("4d", "maturity vs c(1-p)", mat.mean, stats.maturity, tol::MATURITY_REL * stats.maturity),
        Check::at_most("4e", "log-scale vs linear, max relative difference", max_rel_diff(&lin, &log), tol::LOG_SCALE_REL),
    ])
}

fn c5_dgm(seed: u64) -> Result<Vec<Check>> {
    let events = stream(seed, 1000.0, 50.0, &[0.5, 0.3, 0.2], 300_000)?;
    let sentinel = crate::engine::LOG_SENTINEL;
    let geo = totals(&events, &EngineConfig::Geometric { f: 0.01, c: 0.2, log_scale: false, sentinel })?;
    let dgm0 = totals(
        &events,
        &EngineConfig::Dgm { f: 0.01, c: 0.2, o: 0.0, r: None, alpha: None, log_scale: false, sentinel },
    )?;
    let alpha = 1.5;
    let dgm1 = totals(
        &events,
        &EngineConfig::Dgm { f: 0.0, c: 0.5, o: 1.0, r: None, alpha: Some(alpha), log_scale: false, sentinel },
    )?;
    let frame = totals(
        &events,
        &EngineConfig::Framework {
            f: 0.0,
            decay: crate::engine::DecaySpec::Exponential { alpha },
            o: crate::engine::Void(0.0),
        },
    )?;

    let out = run_scenario(&preset_scenario("dgm-hopping", seed)?)?;
    let diff = per_replica(&out, "hopper minus honest", |r| {
        let honest = (r.agents[0].relative_payout()? + r.agents[1].relative_payout()?) / 2.0;
        Some(r.agents[2].relative_payout()? - honest)
    })?;
    Ok(vec![
        Check::at_most("5a", "DGM o=0 vs geometric, max relative difference", max_rel_diff(&geo, &dgm0), tol::DGM_GEOMETRIC_REL),
        Check::at_most(
            "5b",
            "DGM o=1 vs exponential framework, max relative difference",
            max_rel_diff(&dgm1, &frame),
            tol::DGM_FRAMEWORK_REL,
        ),
        Check::within("5c", "hopper minus honest relative payout", diff.mean, 0.0, sigmas(&diff)),
    ])
}

fn poisson_pmf(k: u64) -> f64 {
    (-1.0f64).exp() / (1..=k).map(|i| i as f64).product::<f64>()
}

fn c6_unit_pplns(seed: u64, tables: &mut Vec<Table>) -> Result<Vec<Check>> {
    let (f, d0) = (0.01, 1000.0);
    // Shares within one window before the difficulty halves.
    let halving = config(json!({
        "pools": [{"engine": {"method": "pplns_unit", "f": f, "x": 1.0}}],
        "agents": [constant(0, 1.0)],
        "difficulty": [[0, d0], [1500, d0 / 2.0]], "reward": 50,
        "horizon": 3000, "replicas": 2000, "seed": seed,
        "tagging": {"stride": 1, "warmup": 500, "cooldown": 1500}
    }))?;
    let out = run_scenario(&halving)?;
    let fair = per_replica(&out, "tagged relative value", |r| {
        let v: Vec<f64> = r.tags.iter().map(|t| t.value() / (t.p * t.reward * (1.0 - f))).collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    })?;

    let out = run_scenario(&preset_scenario("unit-pplns-tagged", seed)?)?;
    let p = 1.0 / d0;
    let pb = p * 50.0;
    let mut counts = [0u64; 6];
    let mut n = 0u64;
    for r in &out.replicas {
        for t in r.tags.iter().filter(|t| t.settled) {
            counts[(t.payouts as usize).min(5)] += 1;
            n += 1;
        }
    }
    let mut worst_z: f64 = 0.0;
    let mut rows = Vec::new();
    for k in 0..5u64 {
        let q = poisson_pmf(k);
        let freq = counts[k as usize] as f64 / n as f64;
        let z = (freq - q).abs() / (q * (1.0 - q) / n as f64).sqrt();
        worst_z = worst_z.max(z);
        rows.push(vec![k.to_string(), freq.to_string(), q.to_string(), z.to_string()]);
    }
    tables.push(Table {
        name: "payout_counts".into(),
        header: ["payouts", "frequency", "poisson", "z"].map(String::from).to_vec(),
        rows,
    });
    let var = per_replica(&out, "tagged variance", |r| estimate_variance_per_share(&tags_of(r, 0)))?;
    let mat = per_replica(&out, "maturity", |r| estimate_maturity(&tags_of(r, 0)))?;

    let migration = migration_residual(seed)?;
    Ok(vec![
        Check::within("6a", "relative value of shares before a halving", fair.mean, 1.0, sigmas(&fair)),
        Check::at_most("6b", "payout-count distribution, max |z| over 0..4", worst_z, tol::SIGMAS),
        Check::within(
            "6c",
            "variance x maturity / (pB)^2",
            var.mean * mat.mean / (pb * pb),
            0.5,
            tol::VARIANCE_REL * 0.5,
        ),
        Check::within("6d", "maturity vs X/2", mat.mean, 0.5, tol::UNIT_MATURITY_REL * 0.5),
        Check::at_most("6e", "migration pending residual", migration, tol::MIGRATION_ABS),
    ])
}

/// Max change in any miner's pending plus immediate payout across migrations.
fn migration_residual(seed: u64) -> Result<f64> {
    let events = stream(seed, 100.0, 1.0, &[0.5, 0.3, 0.2], 20_000)?;
    let cfg = EngineConfig::PplnsUnit { f: 0.01, x: 1.0 };
    let mut worst: f64 = 0.0;
    for (f2, x2, strategy) in [
        (0.02, 2.0, MigrationStrategy::Scale),
        (0.0, 0.5, MigrationStrategy::Scale),
        (0.02, 2.0, MigrationStrategy::KeepUnits),
        (0.0, 0.5, MigrationStrategy::KeepUnits),
    ] {
        let (mut engine, _) = replay(&events, &cfg)?;
        let before = engine.pending_all();
        let unit = engine
            .method_mut::<UnitPplns>()
            .ok_or_else(|| Error::Numerical("engine is not unit PPLNS".into()))?;
        let paid = unit.migrate(f2, x2, strategy, events.len() as u64)?;
        let mut after = engine.pending_all();
        for pay in paid {
            if let crate::engine::Recipient::Miner(m) = pay.recipient {
                match after.iter_mut().find(|x| x.0 == m) {
                    Some(x) => x.1 += pay.amount,
                    None => after.push((m, pay.amount)),
                }
            }
        }
        for (m, v) in &before {
            let a = after.iter().find(|x| x.0 == *m).map_or(0.0, |x| x.1);
            worst = worst.max((a - v).abs());
        }
    }
    Ok(worst)
}

fn c7_framework(seed: u64) -> Result<Vec<Check>> {
    let events = stream(seed, 1000.0, 50.0, &[0.5, 0.3, 0.2], 300_000)?;
    let unit = totals(&events, &EngineConfig::PplnsUnit { f: 0.0, x: 1.0 })?;
    let step = totals(
        &events,
        &EngineConfig::Framework {
            f: 0.0,
            decay: crate::engine::DecaySpec::Step { x: 1.0 },
            o: crate::engine::Void(0.0),
        },
    )?;
    let out = run_scenario(&preset_scenario("framework-linear", seed)?)?;
    let pb: f64 = 50.0 / 1000.0;
    let var = per_replica(&out, "tagged variance", |r| estimate_variance_per_share(&tags_of(r, 0)))?;
    let mat = per_replica(&out, "maturity", |r| estimate_maturity(&tags_of(r, 0)))?;
    let target = 4.0 / 9.0;
    Ok(vec![
        Check::at_most("7a", "step framework vs unit PPLNS, max relative difference", max_rel_diff(&unit, &step), tol::FRAMEWORK_UNIT_REL),
        Check::within(
            "7b",
            "linear decay variance x maturity / (pB)^2",
            var.mean * mat.mean / (pb * pb),
            target,
            tol::VARIANCE_REL * target,
        ),
    ])
}

fn c8_ruin(seed: u64) -> Result<Vec<Check>> {
    let (f, r0, b) = (0.01, 500.0, 50.0);
    let mc = pps_ruin_mc(f, r0, b, 1.0 / 1000.0, 100_000, 4000, seed)?;
    let oracle = oracles::pps_ruin_probability(b, f, r0)?;
    let reserve = oracles::pps_reserve(50.0, 0.05, 0.001)?;
    Ok(vec![
        Check::within("8a", "finite-horizon ruin frequency", mc.frequency, reference::RUIN_FREQUENCY, tol::RUIN_ABS),
        Check::within("8b", "ruin oracle exp(-2fR/B)", oracle, reference::RUIN_FREQUENCY, tol::RUIN_ABS),
        Check::within("8c", "rounded reserve for B=50, f=0.05, delta=0.001", reserve.round(), reference::PPS_RESERVE, 0.0),
    ])
}

fn mpps_loss(seed: u64, n: u64, replicas: u32) -> Result<Estimate> {
    let d = 1000u64;
    let cfg = config(json!({
        "pools": [{"engine": {"method": "mpps", "f": 0.0}}],
        "agents": [constant(0, 1.0)],
        "difficulty": d, "reward": 1, "horizon": n * d, "replicas": replicas, "seed": seed
    }))?;
    let out = run_scenario(&cfg)?;
    per_replica(&out, "MPPS loss", |r| Some(1.0 - r.agents[0].paid / r.agents[0].fair))
}

fn c9_mpps(seed: u64) -> Result<Vec<Check>> {
    let l10 = mpps_loss(seed, 10, 4000)?;
    let ns = [4u64, 16, 64];
    let mut pts = Vec::new();
    let mut worst_z: f64 = 0.0;
    for (&n, reps) in ns.iter().zip([4000u32, 2000, 1000]) {
        let e = mpps_loss(seed, n, reps)?;
        let oracle = oracles::mpps_expected_loss_series(n)?;
        worst_z = worst_z.max((e.mean - oracle).abs() / e.std_error());
        pts.push(((n as f64).ln(), e.mean.ln()));
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / 3.0;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / 3.0;
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    Ok(vec![
        Check::within("9a", "loss at n=10", l10.mean, reference::MPPS_LOSS_10, tol::MPPS_LOSS_ABS),
        Check::at_most("9b", "max |z| of MC loss vs oracle at n=4,16,64", worst_z, tol::SIGMAS),
        Check::within("9c", "log-log slope of loss over n=4,16,64", slope, -0.5, 0.05),
    ])
}

/// Mean running minimum of the SMPPS buffer at doubling checkpoints.
fn smpps_min_trace(seed: u64) -> Result<Vec<f64>> {
    let checkpoints = [12_500u64, 25_000, 50_000, 100_000];
    let replicas = 200u64;
    let cfg = EngineConfig::Smpps { f: 0.0, constant_buffer: None };
    let mut sums = vec![0.0; checkpoints.len()];
    let mut buf = Vec::new();
    for rep in 0..replicas {
        let mut rng = RngStream::new(seed, 1000 + rep);
        let mut engine = Engine::new(&cfg)?;
        let mut min = 0.0f64;
        let mut k = 0;
        for i in 0..checkpoints[checkpoints.len() - 1] {
            let ev = ShareEvent::new(i, 0, 0.01, 50.0, rng.draw_share(0.01));
            buf.clear();
            engine.step(&ev, &mut buf)?;
            min = min.min(engine.buffer().unwrap_or(0.0));
            if i + 1 == checkpoints[k] {
                sums[k] += min;
                k += 1;
            }
        }
    }
    Ok(sums.into_iter().map(|s| s / replicas as f64).collect())
}

fn c10_smpps(seed: u64) -> Result<Vec<Check>> {
    let out = run_scenario(&preset_scenario("smpps-constant-buffer", seed)?)?;
    let mat = per_replica(&out, "maturity", |r| estimate_maturity(&tags_of(r, 0)))?;
    let oracle = oracles::smpps_maturity(-500.0, 50.0)?;
    let trace = smpps_min_trace(seed)?;
    let worst_step = trace.windows(2).map(|w| w[1] - w[0]).fold(f64::MIN, f64::max);
    Ok(vec![
        Check::within("10a", "constant-buffer maturity vs -R/B", mat.mean, oracle, tol::MATURITY_REL * oracle),
        Check::at_most("10b", "largest change of mean running-min buffer between checkpoints", worst_step, -f64::EPSILON),
    ])
}

fn c11_immunity() -> Result<Vec<Check>> {
    let mut failures = 0u32;
    for p in [0.1, 0.5, 0.9] {
        for n in 1..=12 {
            if !oracles::immunity_solve(p, n, 1.0)?.is_kronecker_delta() {
                failures += 1;
            }
        }
    }
    Ok(vec![Check::at_most("11a", "tables that are not the Kronecker delta", failures as f64, 0.0)])
}

fn c12_attacks(seed: u64) -> Result<Vec<Check>> {
    let pb = 50.0 / 1000.0;
    let sabotage = |engine: Value, h: f64| -> Result<RunOutput> {
        run_scenario(&config(json!({
            "pools": [{"engine": engine}],
            "agents": [constant(0, 1.0 - h), {"hashrate": h, "policy": {"kind": "saboteur", "pool": 0}}],
            "difficulty": 1000, "reward": 50, "horizon": 1_000_000, "replicas": 16, "seed": seed
        }))?)
    };
    let (f, h) = (0.02, 0.2);
    let out = sabotage(json!({"method": "pplns_unit", "f": f, "x": 1.0}), h)?;
    let honest = per_replica(&out, "honest payout", |r| r.agents[0].payout_per_share())?;
    let (f2, h2) = (0.05, 0.1);
    let out = sabotage(json!({"method": "pps", "f": f2}), h2)?;
    let op = per_replica(&out, "operator net per share", |r| {
        Some(r.pools[0].operator_net / r.pools[0].shares as f64)
    })?;

    let out = run_scenario(&preset_scenario("lie-in-wait", seed)?)?;
    let (m, mh, h0) = (2.0, 0.1, 1.0);
    let amp = per_replica(&out, "attacker amplification", |r| r.agents[2].relative_payout())?;
    let predicted = 1.0 + mh / (4.0 * h0);
    let t0 = 600.0;
    let opt = oracles::liw_optimum(m, mh / m, h0, t0, 1e-3, 50.0)?;
    let best = golden_max(|t| oracles::liw_expected_gain(m, mh / m, t0, t, 1e-3, 50.0), 0.0, t0);
    Ok(vec![
        Check::within(
            "12a",
            "honest payout under sabotage vs (1-f)(1-h/H)pB",
            honest.mean,
            (1.0 - f) * (1.0 - h) * pb,
            sigmas(&honest),
        ),
        Check::within("12b", "PPS operator net per share vs (f-h/H)pB", op.mean, (f2 - h2) * pb, sigmas(&op)),
        Check::within("12c", "lie-in-wait amplification", amp.mean, predicted, tol::LIW_REL * predicted),
        Check::within("12d", "T_opt vs (m-1)/(2m-1) T0", opt.t_opt, (m - 1.0) / (2.0 * m - 1.0) * t0, 0.0),
        Check::within("12e", "T_opt vs numerical maximiser", opt.t_opt, best, 1e-6 * t0),
    ])
}

fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    (a + b) / 2.0
}

fn c13_oblivious(seed: u64) -> Result<Vec<Check>> {
    let (d, shares) = (16u64, 10_000u64);
    let t = oblivious_trial(seed, 4, d, shares)?;
    let p = 1.0 / d as f64;
    let rate = t.blocks as f64 / t.shares as f64;
    let sd = (p * (1.0 - p) / t.shares as f64).sqrt();

    let out = run_scenario(&config(json!({
        "pools": [{"engine": {"method": "pplns_unit", "f": 0.0, "x": 1.0}, "oblivious": true}],
        "agents": [constant(0, 0.8), {"hashrate": 0.2, "policy": {"kind": "saboteur", "pool": 0}}],
        "difficulty": 1000, "reward": 50, "horizon": 1_000_000, "replicas": 16, "seed": seed
    }))?)?;
    let honest = per_replica(&out, "honest relative payout", |r| r.agents[0].relative_payout())?;
    Ok(vec![
        Check::at_least("13a", "chi-square p-value, miner guess vs block", t.p_value, tol::CHI_SQUARE_P),
        Check::within("13b", "operator block rate among shares vs 1/D", rate, p, tol::SIGMAS * sd),
        Check::within("13c", "honest relative payout with a saboteur on oblivious work", honest.mean, 1.0, sigmas(&honest)),
    ])
}

/// Per-replica mean relative value of early minus late tagged shares.
fn early_minus_late(out: &RunOutput, early: f64, late: f64) -> Result<Estimate> {
    per_replica(out, "early minus late", |r| {
        let mean = |keep: &dyn Fn(&TagRecord) -> bool| {
            let v: Vec<f64> = r
                .tags
                .iter()
                .filter(|t| t.settled && keep(t))
                .map(|t| t.value() / (t.p * t.reward))
                .collect();
            (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
        };
        Some(mean(&|t| t.round_age < early)? - mean(&|t| t.round_age > late)?)
    })
}

fn c14_slush(seed: u64) -> Result<Vec<Check>> {
    let run = |engine: Value| -> Result<RunOutput> {
        run_scenario(&config(json!({
            "pools": [{"engine": engine}],
            "agents": [constant(0, 1.0)],
            "difficulty": 1000, "reward": 50, "horizon": 1_000_000, "replicas": 16, "seed": seed,
            "tagging": {"stride": 7, "warmup": 10_000, "cooldown": 10_000}
        }))?)
    };
    let (early, late) = (0.2, 1.0);
    let slush = early_minus_late(&run(json!({"method": "slush", "f": 0.0, "c": 300.0}))?, early, late)?;
    let geo = early_minus_late(&run(json!({"method": "geometric", "f": 0.0, "c": 0.1}))?, early, late)?;
    let dgm = early_minus_late(&run(json!({"method": "dgm", "f": 0.0, "c": 0.3, "o": 0.5}))?, early, late)?;
    Ok(vec![
        Check::at_least("14a", "slush early minus late, in standard errors", slush.mean / slush.std_error(), tol::SIGMAS),
        Check::within("14b", "geometric early minus late", geo.mean, 0.0, sigmas(&geo)),
        Check::within("14c", "DGM early minus late", dgm.mean, 0.0, sigmas(&dgm)),
    ])
}
