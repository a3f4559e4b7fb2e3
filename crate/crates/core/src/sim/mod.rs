//! Multi-pool, multi-agent event loop with replication and statistics.
//!
//! All pools share one global share clock: each step one share is produced
//! by an agent (or by outside hashrate) chosen with probability proportional
//! to hashrate over share difficulty, and the agent's policy routes it.

mod config;
mod report;
mod stats;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::accum::CompensatedSum;
use crate::agents::{AgentState, HeldBlock, LiwPhase, PoolObservation, Policy, Target};
use crate::engine::{conservation_check, Engine, Ledger, LedgerSnapshot, PayoutEvent, Recipient};
use crate::error::{Error, Result};
use crate::stochastic::{DifficultySchedule, MinerId, RewardSchedule, RngStream, ShareEvent};

pub use config::{AgentConfig, Outputs, PoolConfig, ScenarioConfig, Schedule, Tagging};
pub use report::write_bundle;
pub use stats::{
    estimate_maturity, estimate_variance_per_share, pps_ruin_mc, sample_variance, Estimate,
    RuinEstimate,
};

/// Miner ids at or above this belong to tagged shares.
pub const TAG_BASE: MinerId = 1 << 31;

/// One individually followed share.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TagRecord {
    pub agent: usize,
    pub pool: usize,
    /// Pool event index of the share.
    pub index: u64,
    pub step: u64,
    /// Pool cumulative units just after the share.
    pub end: f64,
    /// Round age `p·I` when the share was submitted.
    pub round_age: f64,
    /// Pool buffer when the share was submitted, if the method has one.
    pub buffer: Option<f64>,
    pub p: f64,
    pub reward: f64,
    pub paid: f64,
    /// Still expected at the end of the run.
    pub pending: f64,
    /// `Σ amount·delay` over payments, delay in difficulty units.
    pub weighted_delay: f64,
    pub payouts: u64,
    /// False when the share sits in a round that had not ended by the end
    /// of the run and the method gives no pending estimate for it.
    pub settled: bool,
}

impl TagRecord {
    pub fn value(&self) -> f64 {
        self.paid + self.pending
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AgentOutcome {
    pub pool_shares: u64,
    pub solo_shares: u64,
    pub idle_shares: u64,
    /// Shares whose reward was still undetermined at the end.
    pub unsettled: u64,
    pub paid: f64,
    pub pending: f64,
    /// `Σ pB` over every pool and solo share.
    pub fair: f64,
    pub unsettled_fair: f64,
    pub blocks_found: u64,
    pub blocks_withheld: u64,
    pub ambushes: u64,
    pub ambush_successes: u64,
    pub ambush_voids: u64,
}

impl AgentOutcome {
    pub fn settled_shares(&self) -> u64 {
        (self.pool_shares + self.solo_shares).saturating_sub(self.unsettled)
    }

    /// (paid + pending) per settled share.
    pub fn payout_per_share(&self) -> Option<f64> {
        let n = self.settled_shares();
        (n > 0).then(|| (self.paid + self.pending) / n as f64)
    }

    /// (paid + pending) over the fair value `Σ pB` of settled shares.
    pub fn relative_payout(&self) -> Option<f64> {
        let fair = self.fair - self.unsettled_fair;
        (fair > 0.0).then(|| (self.paid + self.pending) / fair)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PoolOutcome {
    pub shares: u64,
    pub blocks: u64,
    pub revenue: f64,
    pub paid: f64,
    pub operator_net: f64,
    pub min_operator_net: f64,
    pub buffer: Option<f64>,
    pub conservation_passed: bool,
    pub conservation_message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicaResult {
    pub replica: u32,
    pub agents: Vec<AgentOutcome>,
    pub pools: Vec<PoolOutcome>,
    pub tags: Vec<TagRecord>,
    /// Per pool `(pool event index, R)`; replica 0 only.
    pub buffer_traces: Vec<Vec<(u64, f64)>>,
    /// Per pool event logs and final snapshots; replica 0 only.
    pub event_logs: Vec<Vec<ShareEvent>>,
    pub snapshots: Vec<LedgerSnapshot>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSummary {
    pub name: String,
    pub policy: String,
    pub payout_per_share: Option<Estimate>,
    pub relative_payout: Option<Estimate>,
    pub variance_per_share: Option<Estimate>,
    pub maturity: Option<Estimate>,
    pub total_payout: Option<Estimate>,
    pub shares: Option<Estimate>,
    pub ambushes: u64,
    pub ambush_successes: u64,
    pub ambush_voids: u64,
    pub blocks_withheld: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolSummary {
    pub name: String,
    pub method: String,
    pub operator_net: Option<Estimate>,
    pub operator_net_per_share: Option<Estimate>,
    /// Sample variance of the operator net across replicas.
    pub operator_net_variance: f64,
    pub revenue: Option<Estimate>,
    pub blocks: Option<Estimate>,
    pub conservation_failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatSummary {
    pub replicas: usize,
    pub agents: Vec<AgentSummary>,
    pub pools: Vec<PoolSummary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub summary: StatSummary,
    pub replicas: Vec<ReplicaResult>,
}

struct PoolRt {
    engine: Engine,
    ledger: Ledger,
    next_index: u64,
    units: CompensatedSum,
    round_shares: u64,
    oblivious: bool,
    eligible: u64,
    saturators: Vec<usize>,
    trace: Vec<(u64, f64)>,
    log: Vec<ShareEvent>,
}

struct World<'a> {
    cfg: &'a ScenarioConfig,
    diff: DifficultySchedule,
    reward: RewardSchedule,
    pools: Vec<PoolRt>,
    agents: Vec<AgentState>,
    out: Vec<AgentOutcome>,
    tags: Vec<TagRecord>,
    obs: Vec<PoolObservation>,
    buf: Vec<PayoutEvent>,
    liw: Vec<usize>,
    step: u64,
    detail: bool,
}

impl World<'_> {
    fn eligible_for_tag(&self, agent: usize) -> bool {
        let Some(t) = &self.cfg.tagging else { return false };
        self.step >= t.warmup
            && self.step.saturating_add(t.cooldown) < self.cfg.horizon
            && t.agents.as_ref().map_or(true, |a| a.contains(&agent))
    }

    fn submit(&mut self, pool: usize, agent: usize, d: f64, is_block: bool) -> Result<()> {
        let big_d = self.diff.difficulty_at(self.step);
        let p = (d / big_d).min(1.0);
        let b = self.reward.reward_at(self.step);
        let mut miner = agent as MinerId;
        let mut tag = None;
        if self.eligible_for_tag(agent) {
            let pr = &mut self.pools[pool];
            pr.eligible += 1;
            let stride = self.cfg.tagging.as_ref().map_or(1, |t| t.stride);
            if pr.eligible % stride == 0 {
                let k = self.tags.len();
                if k as u64 >= (u32::MAX - TAG_BASE) as u64 {
                    return Err(Error::Numerical("too many tagged shares".into()));
                }
                miner = TAG_BASE + k as MinerId;
                tag = Some(k);
                self.tags.push(TagRecord {
                    agent,
                    pool,
                    index: pr.next_index,
                    step: self.step,
                    end: 0.0,
                    round_age: p * pr.round_shares as f64,
                    buffer: pr.engine.buffer(),
                    p,
                    reward: b,
                    paid: 0.0,
                    pending: 0.0,
                    weighted_delay: 0.0,
                    payouts: 0,
                    settled: true,
                });
            }
        }
        let pr = &mut self.pools[pool];
        let ev = ShareEvent {
            index: pr.next_index,
            miner,
            d,
            p_eff: p,
            reward: b,
            is_block,
            sim_time: Some(self.step as f64 / self.cfg.share_rate),
        };
        pr.next_index += 1;
        let u_before = pr.units.value();
        pr.units.add(p);
        if let Some(k) = tag {
            self.tags[k].end = pr.units.value();
        }
        self.buf.clear();
        pr.engine.step(&ev, &mut self.buf)?;
        pr.ledger.record(&ev, &self.buf);
        for pay in &self.buf {
            let Recipient::Miner(m) = pay.recipient else { continue };
            let owner = if m >= TAG_BASE {
                let t = &mut self.tags[(m - TAG_BASE) as usize];
                t.paid += pay.amount;
                t.weighted_delay += pay.amount * (u_before - t.end).max(0.0);
                t.payouts += 1;
                t.agent
            } else {
                m as usize
            };
            self.out[owner].paid += pay.amount;
        }
        let o = &mut self.out[agent];
        o.pool_shares += 1;
        o.fair += p * b;
        if is_block {
            o.blocks_found += 1;
            pr.round_shares = 0;
        } else {
            pr.round_shares += 1;
        }
        if self.detail {
            if let (Some(every), Some(r)) = (self.cfg.outputs.buffer_trace, pr.engine.buffer()) {
                if ev.index % every.max(1) == 0 {
                    pr.trace.push((ev.index, r));
                }
            }
            if self.cfg.outputs.event_log {
                pr.log.push(ev);
            }
        }
        self.obs[pool] = PoolObservation {
            round_shares: pr.round_shares,
            x: pr.round_shares as f64 / big_d,
            buffer: pr.engine.buffer(),
            p: 1.0 / big_d,
            reward: b,
        };
        if is_block {
            self.void_ambushes()?;
            self.saturate(pool)?;
        }
        Ok(())
    }

    /// Any block other than a held one invalidates every held block.
    fn void_ambushes(&mut self) -> Result<()> {
        for i in 0..self.liw.len() {
            let a = self.liw[i];
            if let LiwPhase::Ambush(h) = self.agents[a].liw {
                self.agents[a].liw = LiwPhase::Waiting { next: 0 };
                self.out[a].ambush_voids += 1;
                self.submit(h.pool, a, h.d, false)?;
            }
        }
        Ok(())
    }

    /// Saturating hoppers fill a fresh round with `round(x0·D)` shares.
    fn saturate(&mut self, pool: usize) -> Result<()> {
        for i in 0..self.pools[pool].saturators.len() {
            let a = self.pools[pool].saturators[i];
            let n = (self.agents[a].x0() * self.diff.difficulty_at(self.step)).round() as u64;
            for _ in 0..n {
                self.submit(pool, a, 1.0, false)?;
            }
        }
        Ok(())
    }

    fn release_due(&mut self) -> Result<()> {
        for i in 0..self.liw.len() {
            let a = self.liw[i];
            if let LiwPhase::Ambush(h) = self.agents[a].liw {
                if self.step >= h.deadline {
                    self.agents[a].liw = LiwPhase::Waiting { next: 0 };
                    self.out[a].ambush_successes += 1;
                    self.submit(h.pool, a, h.d, true)?;
                }
            }
        }
        Ok(())
    }

    fn agent_share(&mut self, a: usize, rng: &mut RngStream) -> Result<()> {
        let d = self.cfg.agents[a].share_difficulty;
        let big_d = self.diff.difficulty_at(self.step);
        let p = (d / big_d).min(1.0);
        let target = self.agents[a].decide(&self.obs);
        let is_block = rng.draw_share(p);
        match target {
            Target::Pool(k) => match &self.agents[a].policy {
                Policy::Saboteur { .. } => {
                    let oblivious = self.pools[k].oblivious;
                    if is_block && !oblivious {
                        self.out[a].blocks_withheld += 1;
                    }
                    self.submit(k, a, d, is_block && oblivious)
                }
                Policy::LieInWait { ambush, .. } => {
                    let ambush = *ambush;
                    if matches!(self.agents[a].liw, LiwPhase::Ambush(_)) {
                        if is_block {
                            self.out[a].blocks_withheld += 1;
                        }
                        self.submit(k, a, d, false)
                    } else if is_block && ambush > 0 {
                        self.agents[a].liw = LiwPhase::Ambush(HeldBlock {
                            pool: k,
                            deadline: self.step + ambush,
                            d,
                        });
                        self.out[a].ambushes += 1;
                        Ok(())
                    } else {
                        self.submit(k, a, d, is_block)
                    }
                }
                _ => self.submit(k, a, d, is_block),
            },
            Target::Solo => {
                let o = &mut self.out[a];
                let v = p * self.reward.reward_at(self.step);
                o.solo_shares += 1;
                o.paid += v;
                o.fair += v;
                if is_block {
                    self.void_ambushes()?;
                }
                Ok(())
            }
            Target::Idle => {
                self.out[a].idle_shares += 1;
                Ok(())
            }
        }
    }

    fn finish(mut self, replica: u32) -> ReplicaResult {
        let big_d = self.diff.difficulty_at(self.cfg.horizon.saturating_sub(1));
        let b = self.reward.reward_at(self.cfg.horizon.saturating_sub(1));
        let n_agents = self.out.len();
        let mut pools = Vec::new();
        let mut snapshots = Vec::new();
        for pr in &self.pools {
            for (m, v) in pr.engine.pending_all() {
                if m >= TAG_BASE {
                    let t = &mut self.tags[(m - TAG_BASE) as usize];
                    t.pending += v;
                    self.out[t.agent].pending += v;
                } else if (m as usize) < n_agents {
                    self.out[m as usize].pending += v;
                }
            }
            for a in 0..n_agents {
                let n = pr.engine.unsettled_shares(a as MinerId);
                let d = self.cfg.agents[a].share_difficulty;
                self.out[a].unsettled += n;
                self.out[a].unsettled_fair += n as f64 * (d / big_d).min(1.0) * b;
            }
            let rep = conservation_check(&pr.ledger, &pr.engine);
            pools.push(PoolOutcome {
                shares: pr.ledger.shares(),
                blocks: pr.ledger.blocks(),
                revenue: pr.ledger.revenue(),
                paid: pr.ledger.paid(),
                operator_net: pr.ledger.operator_net(),
                min_operator_net: rep.min_operator_net,
                buffer: pr.engine.buffer(),
                conservation_passed: rep.passed,
                conservation_message: rep.message,
            });
            if self.detail && self.cfg.outputs.event_log {
                snapshots.push(pr.ledger.snapshot(&pr.engine));
            }
        }
        for (i, t) in self.tags.iter_mut().enumerate() {
            let engine = &self.pools[t.pool].engine;
            if engine.unsettled_shares(TAG_BASE + i as MinerId) > 0 {
                t.settled = false;
                let o = &mut self.out[t.agent];
                o.unsettled += 1;
                o.unsettled_fair += t.p * t.reward;
            }
        }
        ReplicaResult {
            replica,
            agents: self.out,
            pools,
            tags: self.tags,
            buffer_traces: self.pools.iter_mut().map(|p| std::mem::take(&mut p.trace)).collect(),
            event_logs: self.pools.iter_mut().map(|p| std::mem::take(&mut p.log)).collect(),
            snapshots,
        }
    }
}

/// Run one replica with its own random stream.
pub fn run_replica(cfg: &ScenarioConfig, replica: u32) -> Result<ReplicaResult> {
    let mut rng = RngStream::new(cfg.seed, replica as u64);
    let mut pools = Vec::with_capacity(cfg.pools.len());
    for pc in &cfg.pools {
        pools.push(PoolRt {
            engine: Engine::new(&pc.engine)?,
            ledger: Ledger::new(),
            next_index: 0,
            units: CompensatedSum::new(),
            round_shares: 0,
            oblivious: pc.oblivious,
            eligible: 0,
            saturators: Vec::new(),
            trace: Vec::new(),
            log: Vec::new(),
        });
    }
    let mut agents = Vec::with_capacity(cfg.agents.len());
    let mut liw = Vec::new();
    for (i, ac) in cfg.agents.iter().enumerate() {
        match &ac.policy {
            Policy::SaturatingHopper { pool, .. } => pools[*pool].saturators.push(i),
            Policy::LieInWait { .. } => liw.push(i),
            _ => {}
        }
        agents.push(AgentState::new(ac.policy.clone())?);
    }
    let diff = cfg.difficulty.difficulty()?;
    let reward = cfg.reward.reward()?;
    let d0 = diff.difficulty_at(0);
    let obs = vec![
        PoolObservation {
            p: 1.0 / d0,
            reward: reward.reward_at(0),
            ..Default::default()
        };
        cfg.pools.len()
    ];
    let mut world = World {
        cfg,
        diff,
        reward,
        pools,
        agents,
        out: vec![AgentOutcome::default(); cfg.agents.len()],
        tags: Vec::new(),
        obs,
        buf: Vec::new(),
        liw,
        step: 0,
        detail: replica == 0,
    };
    for k in 0..world.pools.len() {
        world.obs[k].buffer = world.pools[k].engine.buffer();
        world.saturate(k)?;
    }

    // Cumulative share-rate weights; the last slot is outside hashrate.
    let mut cum = Vec::with_capacity(cfg.agents.len() + 1);
    let mut total = 0.0;
    for ac in &cfg.agents {
        total += ac.hashrate / ac.share_difficulty;
        cum.push(total);
    }
    total += cfg.outside_hashrate;
    cum.push(total);
    if total > 0.0 {
        for step in 0..cfg.horizon {
            world.step = step;
            world.release_due()?;
            let u = rng.uniform() * total;
            let who = cum.partition_point(|&c| c <= u).min(cum.len() - 1);
            if who == cfg.agents.len() {
                if !world.liw.is_empty() {
                    let p = 1.0 / world.diff.difficulty_at(step);
                    if rng.draw_share(p) {
                        world.void_ambushes()?;
                    }
                }
                continue;
            }
            world.agent_share(who, &mut rng)?;
        }
    }
    Ok(world.finish(replica))
}

fn thread_count() -> Option<usize> {
    std::env::var("POOLSIM_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// Run every replica (in parallel, capped by `POOLSIM_THREADS`) and
/// aggregate. Results do not depend on the worker count.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let work = || -> Result<Vec<ReplicaResult>> {
        (0..cfg.replicas)
            .into_par_iter()
            .map(|r| run_replica(cfg, r))
            .collect()
    };
    let replicas = match thread_count() {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Io(e.to_string()))?
            .install(work)?,
        None => work()?,
    };
    let summary = summarize(cfg, &replicas);
    Ok(RunOutput { summary, replicas })
}

fn policy_name(p: &Policy) -> String {
    serde_json::to_value(p)
        .ok()
        .and_then(|v| v.get("kind").and_then(|k| k.as_str()).map(str::to_string))
        .unwrap_or_default()
}

fn method_name(e: &crate::engine::EngineConfig) -> String {
    serde_json::to_value(e)
        .ok()
        .and_then(|v| v.get("method").and_then(|k| k.as_str()).map(str::to_string))
        .unwrap_or_default()
}

/// Aggregate replica results into means with confidence intervals.
pub fn summarize(cfg: &ScenarioConfig, replicas: &[ReplicaResult]) -> StatSummary {
    let per = |f: &dyn Fn(&ReplicaResult) -> Option<f64>| -> Option<Estimate> {
        let xs: Vec<f64> = replicas.iter().filter_map(f).collect();
        Estimate::from_samples(&xs)
    };
    let agents = (0..cfg.agents.len())
        .map(|a| {
            let tags_of = |r: &ReplicaResult| -> Vec<TagRecord> {
                r.tags.iter().filter(|t| t.agent == a).cloned().collect()
            };
            let sum = |f: fn(&AgentOutcome) -> u64| replicas.iter().map(|r| f(&r.agents[a])).sum();
            AgentSummary {
                name: cfg.agent_name(a),
                policy: policy_name(&cfg.agents[a].policy),
                payout_per_share: per(&|r| r.agents[a].payout_per_share()),
                relative_payout: per(&|r| r.agents[a].relative_payout()),
                variance_per_share: per(&|r| estimate_variance_per_share(&tags_of(r))),
                maturity: per(&|r| estimate_maturity(&tags_of(r))),
                total_payout: per(&|r| Some(r.agents[a].paid + r.agents[a].pending)),
                shares: per(&|r| Some((r.agents[a].pool_shares + r.agents[a].solo_shares) as f64)),
                ambushes: sum(|o| o.ambushes),
                ambush_successes: sum(|o| o.ambush_successes),
                ambush_voids: sum(|o| o.ambush_voids),
                blocks_withheld: sum(|o| o.blocks_withheld),
            }
        })
        .collect();
    let pools = (0..cfg.pools.len())
        .map(|k| {
            let nets: Vec<f64> = replicas.iter().map(|r| r.pools[k].operator_net).collect();
            PoolSummary {
                name: cfg.pool_name(k),
                method: method_name(&cfg.pools[k].engine),
                operator_net: Estimate::from_samples(&nets),
                operator_net_per_share: per(&|r| {
                    let p = &r.pools[k];
                    (p.shares > 0).then(|| p.operator_net / p.shares as f64)
                }),
                operator_net_variance: sample_variance(&nets),
                revenue: per(&|r| Some(r.pools[k].revenue)),
                blocks: per(&|r| Some(r.pools[k].blocks as f64)),
                conservation_failures: replicas
                    .iter()
                    .filter(|r| !r.pools[k].conservation_passed)
                    .count(),
            }
        })
        .collect();
    StatSummary {
        replicas: replicas.len(),
        agents,
        pools,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario(engine: &str, extra: &str) -> ScenarioConfig {
        ScenarioConfig::from_json(&format!(
            r#"{{
                "pools": [{{"engine": {engine}}}],
                "agents": [
                    {{"name": "a", "hashrate": 0.7, "policy": {{"kind": "constant", "pool": 0}}}},
                    {{"name": "b", "hashrate": 0.3, "policy": {{"kind": "constant", "pool": 0}}}}
                ],
                "difficulty": 100, "reward": 50, "horizon": 20000, "replicas": 4, "seed": 3
                {extra}
            }}"#
        ))
        .unwrap()
    }

    #[test]
    fn pps_maturity_and_variance_are_zero() {
        let cfg = scenario(
            r#"{"method": "pps", "f": 0.02}"#,
            r#", "tagging": {"stride": 10}"#,
        );
        let out = run_scenario(&cfg).unwrap();
        let a = &out.summary.agents[0];
        assert_eq!(a.maturity.unwrap().mean, 0.0);
        assert!(a.variance_per_share.unwrap().mean < 1e-20);
        assert!((a.payout_per_share.unwrap().mean - 0.98 * 0.5).abs() < 1e-12);
        assert_eq!(out.summary.pools[0].conservation_failures, 0);
    }

    #[test]
    fn deterministic_and_thread_independent() {
        let cfg = scenario(r#"{"method": "pplns_unit", "f": 0.0, "x": 1.0}"#, "");
        let a = run_scenario(&cfg).unwrap();
        let b = run_replica(&cfg, 2).unwrap();
        assert_eq!(a.replicas[2], b);
        let c = run_scenario(&cfg).unwrap();
        assert_eq!(a.summary, c.summary);
    }

    #[test]
    fn empty_agent_list_runs_nothing() {
        let mut cfg = scenario(r#"{"method": "pps", "f": 0.0}"#, "");
        cfg.agents.clear();
        let out = run_scenario(&cfg).unwrap();
        assert!(out.summary.agents.is_empty());
        assert_eq!(out.replicas[0].pools[0].shares, 0);
    }

    #[test]
    fn proportional_open_round_excluded() {
        let cfg = scenario(
            r#"{"method": "proportional", "f": 0.0}"#,
            r#", "tagging": {"stride": 7}"#,
        );
        let out = run_scenario(&cfg).unwrap();
        for r in &out.replicas {
            let total: u64 = r.agents.iter().map(|a| a.pool_shares).sum();
            assert_eq!(total, 20000);
            let paid: f64 = r.agents.iter().map(|a| a.paid).sum();
            assert!((paid - r.pools[0].revenue).abs() < 1e-6);
            assert!(r.tags.iter().any(|t| !t.settled) || r.agents.iter().all(|a| a.unsettled == 0));
        }
    }

    #[test]
    fn saboteur_withholds() {
        let mut cfg = scenario(r#"{"method": "pps", "f": 0.0}"#, "");
        cfg.agents[1].policy = Policy::Saboteur { pool: 0 };
        let out = run_scenario(&cfg).unwrap();
        assert!(out.summary.agents[1].blocks_withheld > 0);
        assert!(out.replicas.iter().all(|r| r.agents[1].blocks_found == 0));
        cfg.pools[0].oblivious = true;
        let out = run_scenario(&cfg).unwrap();
        assert_eq!(out.summary.agents[1].blocks_withheld, 0);
    }
}
