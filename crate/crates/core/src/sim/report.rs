use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use crate::engine::RunManifest;
use crate::error::{Error, Result};
use crate::stochastic::write_replay_log;

use super::{Estimate, RunOutput, ScenarioConfig};

fn io(e: impl std::fmt::Display) -> Error {
    Error::Io(e.to_string())
}

fn writer(dir: &Path, name: &str) -> Result<csv::Writer<File>> {
    csv::Writer::from_path(dir.join(name)).map_err(io)
}

fn est(e: &Option<Estimate>) -> [String; 2] {
    match e {
        Some(e) => [e.mean.to_string(), e.half_width.to_string()],
        None => [String::new(), String::new()],
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Write summary, per-replica, trace and manifest files into `dir`.
pub fn write_bundle(dir: &Path, cfg: &ScenarioConfig, out: &RunOutput) -> Result<()> {
    fs::create_dir_all(dir).map_err(io)?;

    let mut w = writer(dir, "summary.csv")?;
    w.write_record([
        "agent",
        "policy",
        "payout_per_share",
        "payout_per_share_ci",
        "relative_payout",
        "relative_payout_ci",
        "variance_per_share",
        "variance_per_share_ci",
        "maturity",
        "maturity_ci",
        "total_payout",
        "total_payout_ci",
        "shares",
        "shares_ci",
        "ambushes",
        "ambush_successes",
        "ambush_voids",
        "blocks_withheld",
    ])
    .map_err(io)?;
    for a in &out.summary.agents {
        let mut row = vec![a.name.clone(), a.policy.clone()];
        for e in [
            &a.payout_per_share,
            &a.relative_payout,
            &a.variance_per_share,
            &a.maturity,
            &a.total_payout,
            &a.shares,
        ] {
            row.extend(est(e));
        }
        for n in [a.ambushes, a.ambush_successes, a.ambush_voids, a.blocks_withheld] {
            row.push(n.to_string());
        }
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(io)?;

    let mut w = writer(dir, "pools.csv")?;
    w.write_record([
        "pool",
        "method",
        "operator_net",
        "operator_net_ci",
        "operator_net_per_share",
        "operator_net_per_share_ci",
        "operator_net_variance",
        "revenue",
        "revenue_ci",
        "blocks",
        "blocks_ci",
        "conservation_failures",
    ])
    .map_err(io)?;
    for p in &out.summary.pools {
        let mut row = vec![p.name.clone(), p.method.clone()];
        row.extend(est(&p.operator_net));
        row.extend(est(&p.operator_net_per_share));
        row.push(p.operator_net_variance.to_string());
        row.extend(est(&p.revenue));
        row.extend(est(&p.blocks));
        row.push(p.conservation_failures.to_string());
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(io)?;

    let mut w = writer(dir, "agents.csv")?;
    w.write_record([
        "replica",
        "agent",
        "pool_shares",
        "solo_shares",
        "idle_shares",
        "unsettled",
        "paid",
        "pending",
        "fair",
        "blocks_found",
        "blocks_withheld",
        "ambushes",
        "ambush_successes",
        "ambush_voids",
    ])
    .map_err(io)?;
    for r in &out.replicas {
        for (i, a) in r.agents.iter().enumerate() {
            w.write_record([
                r.replica.to_string(),
                cfg.agent_name(i),
                a.pool_shares.to_string(),
                a.solo_shares.to_string(),
                a.idle_shares.to_string(),
                a.unsettled.to_string(),
                a.paid.to_string(),
                a.pending.to_string(),
                a.fair.to_string(),
                a.blocks_found.to_string(),
                a.blocks_withheld.to_string(),
                a.ambushes.to_string(),
                a.ambush_successes.to_string(),
                a.ambush_voids.to_string(),
            ])
            .map_err(io)?;
        }
    }
    w.flush().map_err(io)?;

    let mut w = writer(dir, "pool_replicas.csv")?;
    w.write_record([
        "replica",
        "pool",
        "shares",
        "blocks",
        "revenue",
        "paid",
        "operator_net",
        "min_operator_net",
        "buffer",
        "conservation",
    ])
    .map_err(io)?;
    for r in &out.replicas {
        for (k, p) in r.pools.iter().enumerate() {
            w.write_record([
                r.replica.to_string(),
                cfg.pool_name(k),
                p.shares.to_string(),
                p.blocks.to_string(),
                p.revenue.to_string(),
                p.paid.to_string(),
                p.operator_net.to_string(),
                p.min_operator_net.to_string(),
                opt(p.buffer),
                if p.conservation_passed { "ok".into() } else { p.conservation_message.clone() },
            ])
            .map_err(io)?;
        }
    }
    w.flush().map_err(io)?;

    if let Some(first) = out.replicas.first() {
        for (k, trace) in first.buffer_traces.iter().enumerate() {
            if trace.is_empty() {
                continue;
            }
            let mut w = writer(dir, &format!("buffer_{}.csv", cfg.pool_name(k)))?;
            w.write_record(["index", "buffer"]).map_err(io)?;
            for (i, r) in trace {
                w.write_record([i.to_string(), r.to_string()]).map_err(io)?;
            }
            w.flush().map_err(io)?;
        }
        for (k, log) in first.event_logs.iter().enumerate() {
            if !cfg.outputs.event_log {
                break;
            }
            let f = File::create(dir.join(format!("events_{}.csv", cfg.pool_name(k)))).map_err(io)?;
            write_replay_log(log, BufWriter::new(f))?;
        }
        for (k, snap) in first.snapshots.iter().enumerate() {
            let f = File::create(dir.join(format!("snapshot_{}.csv", cfg.pool_name(k)))).map_err(io)?;
            snap.write_csv(BufWriter::new(f))?;
        }
    }

    if cfg.outputs.tags {
        let mut w = writer(dir, "tags.csv")?;
        w.write_record([
            "replica",
            "agent",
            "pool",
            "index",
            "step",
            "round_age",
            "buffer",
            "p",
            "reward",
            "paid",
            "pending",
            "weighted_delay",
            "payouts",
            "settled",
        ])
        .map_err(io)?;
        for r in &out.replicas {
            for t in &r.tags {
                w.write_record([
                    r.replica.to_string(),
                    cfg.agent_name(t.agent),
                    cfg.pool_name(t.pool),
                    t.index.to_string(),
                    t.step.to_string(),
                    t.round_age.to_string(),
                    opt(t.buffer),
                    t.p.to_string(),
                    t.reward.to_string(),
                    t.paid.to_string(),
                    t.pending.to_string(),
                    t.weighted_delay.to_string(),
                    t.payouts.to_string(),
                    t.settled.to_string(),
                ])
                .map_err(io)?;
            }
        }
        w.flush().map_err(io)?;
    }

    let f = File::create(dir.join("manifest.json")).map_err(io)?;
    RunManifest::new(cfg, Some(cfg.seed))?.write(BufWriter::new(f))
}
