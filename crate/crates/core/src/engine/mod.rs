//! The uniform engine contract, payout and ledger types, and conservation
//! accounting shared by every reward method.

mod buffer;
mod config;
mod framework;
mod round;
mod window;

use std::any::Any;
use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::accum::CompensatedSum;
use crate::error::{Error, Result};
use crate::stochastic::{MinerId, ShareEvent};

pub use buffer::{Esmpps, Mpps, MppsBalance, Smpps};
pub use config::{DecaySpec, EngineConfig, Void};
pub use framework::{Decay, Framework};
pub use round::{Dgm, DgmLog, Geometric, GeometricLog, Pps, Proportional, Slush};
pub use window::{MigrationStrategy, PayOnce, ShiftPplns, SimplePplns, UnitPplns, UnitShare};

/// Default stand-in for `ln 0` in log-scale engines.
pub const LOG_SENTINEL: f64 = -1e6;

/// Scores are rescaled once the score unit `s` passes this value.
pub(crate) const RESCALE_AT: f64 = 1e100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Recipient {
    Miner(MinerId),
    Operator,
}

/// What triggered a payment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Cause {
    /// The block found by the share with this index.
    Block(u64),
    Immediate,
    /// The end of the shift with this sequence number.
    ShiftEnd(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PayoutEvent {
    pub recipient: Recipient,
    pub amount: f64,
    pub cause: Cause,
    pub at_index: u64,
}

impl PayoutEvent {
    pub fn miner(miner: MinerId, amount: f64, cause: Cause, at_index: u64) -> Self {
        PayoutEvent {
            recipient: Recipient::Miner(miner),
            amount,
            cause,
            at_index,
        }
    }

    pub fn operator(amount: f64, cause: Cause, at_index: u64) -> Self {
        PayoutEvent {
            recipient: Recipient::Operator,
            amount,
            cause,
            at_index,
        }
    }
}

/// A reward method driven one share at a time.
pub trait RewardMethod: Send {
    fn step(&mut self, ev: &ShareEvent, out: &mut Vec<PayoutEvent>) -> Result<()>;

    /// Expected future payout for the miner's current holdings.
    fn pending(&self, miner: MinerId) -> f64;

    /// `(miner, pending)` for every miner with state, ordered by miner id.
    fn pending_all(&self) -> Vec<(MinerId, f64)>;

    /// Shares whose payout is not yet determined and has no pending
    /// estimate (the open round of a proportional-style method).
    fn unsettled_shares(&self, _miner: MinerId) -> u64 {
        0
    }

    /// Pool buffer for *MPPS-style methods.
    fn buffer(&self) -> Option<f64> {
        None
    }

    /// True when each block's reward is split completely at that block, with
    /// the operator's part emitted explicitly.
    fn settles_rounds(&self) -> bool {
        false
    }

    /// True when the method never pays out more than it has received.
    fn risk_free(&self) -> bool {
        false
    }

    fn as_any(&self) -> &dyn Any;
    fn as_any_mut(&mut self) -> &mut dyn Any;
}

/// Dense per-miner storage with deterministic (first-seen) iteration order.
#[derive(Debug, Clone)]
pub(crate) struct MinerMap<T> {
    index: HashMap<MinerId, usize>,
    entries: Vec<(MinerId, T)>,
}

impl<T> Default for MinerMap<T> {
    fn default() -> Self {
        MinerMap {
            index: HashMap::new(),
            entries: Vec::new(),
        }
    }
}

impl<T: Default> MinerMap<T> {
    pub fn entry(&mut self, miner: MinerId) -> &mut T {
        self.entry_with(miner, T::default)
    }
}

impl<T> MinerMap<T> {
    pub fn entry_with(&mut self, miner: MinerId, init: impl FnOnce() -> T) -> &mut T {
        let i = match self.index.get(&miner) {
            Some(&i) => i,
            None => {
                self.entries.push((miner, init()));
                self.index.insert(miner, self.entries.len() - 1);
                self.entries.len() - 1
            }
        };
        &mut self.entries[i].1
    }

    pub fn get(&self, miner: MinerId) -> Option<&T> {
        self.index.get(&miner).map(|&i| &self.entries[i].1)
    }

    pub fn iter(&self) -> impl Iterator<Item = (MinerId, &T)> {
        self.entries.iter().map(|(m, v)| (*m, v))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (MinerId, &mut T)> {
        self.entries.iter_mut().map(|(m, v)| (*m, v))
    }

    pub fn clear(&mut self) {
        self.index.clear();
        self.entries.clear();
    }

    /// Drop entries failing `keep`, preserving order.
    pub fn retain(&mut self, mut keep: impl FnMut(&T) -> bool) {
        self.entries.retain(|(_, v)| keep(v));
        self.index.clear();
        for (i, (m, _)) in self.entries.iter().enumerate() {
            self.index.insert(*m, i);
        }
    }

    /// Entries sorted by miner id, for reports.
    pub fn sorted<U>(&self, f: impl Fn(&T) -> U) -> Vec<(MinerId, U)> {
        let mut v: Vec<_> = self.entries.iter().map(|(m, t)| (*m, f(t))).collect();
        v.sort_by_key(|e| e.0);
        v
    }
}

/// A configured reward method plus the event-ordering guard.
pub struct Engine {
    config: EngineConfig,
    method: Box<dyn RewardMethod>,
    last_index: Option<u64>,
}

impl std::fmt::Debug for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Engine")
            .field("config", &self.config)
            .field("last_index", &self.last_index)
            .finish()
    }
}

impl Engine {
    pub fn new(config: &EngineConfig) -> Result<Self> {
        Ok(Engine {
            config: config.clone(),
            method: config.build()?,
            last_index: None,
        })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    /// Feed one share; payments it triggers are appended to `out`.
    pub fn step(&mut self, ev: &ShareEvent, out: &mut Vec<PayoutEvent>) -> Result<()> {
        if let Some(last) = self.last_index {
            if ev.index <= last {
                return Err(Error::OutOfOrder {
                    last,
                    got: ev.index,
                });
            }
        }
        if !(ev.p_eff > 0.0 && ev.p_eff <= 1.0) {
            return Err(Error::param("p_eff", format!("{} outside (0, 1]", ev.p_eff)));
        }
        if !(ev.reward >= 0.0) || !ev.reward.is_finite() {
            return Err(Error::param("B", "block reward must be finite and >= 0"));
        }
        self.method.step(ev, out)?;
        self.last_index = Some(ev.index);
        Ok(())
    }

    pub fn pending(&self, miner: MinerId) -> f64 {
        self.method.pending(miner)
    }

    pub fn pending_all(&self) -> Vec<(MinerId, f64)> {
        self.method.pending_all()
    }

    pub fn unsettled_shares(&self, miner: MinerId) -> u64 {
        self.method.unsettled_shares(miner)
    }

    pub fn buffer(&self) -> Option<f64> {
        self.method.buffer()
    }

    pub fn settles_rounds(&self) -> bool {
        self.method.settles_rounds()
    }

    pub fn risk_free(&self) -> bool {
        self.method.risk_free()
    }

    pub fn last_index(&self) -> Option<u64> {
        self.last_index
    }

    /// Concrete method state, e.g. `engine.method::<UnitPplns>()`.
    pub fn method<T: 'static>(&self) -> Option<&T> {
        self.method.as_any().downcast_ref()
    }

    pub fn method_mut<T: 'static>(&mut self) -> Option<&mut T> {
        self.method.as_any_mut().downcast_mut()
    }
}

/// Weighted mix of two engines, both fed every share.
pub struct Hybrid {
    weights: [f64; 2],
    parts: [Box<dyn RewardMethod>; 2],
    scratch: Vec<PayoutEvent>,
}

impl Hybrid {
    pub fn new(weights: [f64; 2], first: Box<dyn RewardMethod>, second: Box<dyn RewardMethod>) -> Result<Self> {
        if weights.iter().any(|w| !(*w >= 0.0)) || ((weights[0] + weights[1]) - 1.0).abs() > 1e-12 {
            return Err(Error::param("weights", "must be nonnegative and sum to 1"));
        }
        Ok(Hybrid {
            weights,
            parts: [first, second],
            scratch: Vec::new(),
        })
    }
}

impl RewardMethod for Hybrid {
    fn step(&mut self, ev: &ShareEvent, out: &mut Vec<PayoutEvent>) -> Result<()> {
        for (w, part) in self.weights.iter().zip(self.parts.iter_mut()) {
            self.scratch.clear();
            part.step(ev, &mut self.scratch)?;
            if *w > 0.0 {
                out.extend(self.scratch.iter().map(|p| PayoutEvent {
                    amount: p.amount * w,
                    ..*p
                }));
            }
        }
        Ok(())
    }

    fn pending(&self, miner: MinerId) -> f64 {
        self.weights[0] * self.parts[0].pending(miner) + self.weights[1] * self.parts[1].pending(miner)
    }

    fn pending_all(&self) -> Vec<(MinerId, f64)> {
        let mut merged: BTreeMap<MinerId, f64> = BTreeMap::new();
        for (w, part) in self.weights.iter().zip(self.parts.iter()) {
            for (m, v) in part.pending_all() {
                *merged.entry(m).or_default() += w * v;
            }
        }
        merged.into_iter().collect()
    }

    fn unsettled_shares(&self, miner: MinerId) -> u64 {
        self.parts
            .iter()
            .map(|p| p.unsettled_shares(miner))
            .max()
            .unwrap_or(0)
    }

    fn settles_rounds(&self) -> bool {
        self.parts.iter().all(|p| p.settles_rounds())
    }

    fn risk_free(&self) -> bool {
        self.parts.iter().all(|p| p.risk_free())
    }

    fn as_any(&self) -> &dyn Any {
        self
    }

    fn as_any_mut(&mut self) -> &mut dyn Any {
        self
    }
}

/// Build a hybrid engine from two configs.
pub fn hybrid_engine(weights: (f64, f64), e1: &EngineConfig, e2: &EngineConfig) -> Result<Engine> {
    Engine::new(&EngineConfig::Hybrid {
        weights: [weights.0, weights.1],
        engines: vec![e1.clone(), e2.clone()],
    })
}

/// Running money totals for one engine.
#[derive(Debug, Clone, Default)]
pub struct Ledger {
    miners: BTreeMap<MinerId, CompensatedSum>,
    operator_explicit: CompensatedSum,
    revenue: CompensatedSum,
    paid: CompensatedSum,
    blocks: u64,
    shares: u64,
    max_reward: f64,
    worst_block_residual: f64,
    min_cash: f64,
    negative_payout: bool,
    out_of_order_payout: bool,
    last_at_index: u64,
}

impl Ledger {
    pub fn new() -> Self {
        Ledger::default()
    }

    /// Account for one processed share and the payouts it produced.
    pub fn record(&mut self, ev: &ShareEvent, payouts: &[PayoutEvent]) {
        self.shares += 1;
        if ev.is_block {
            self.blocks += 1;
            self.revenue.add(ev.reward);
            self.max_reward = self.max_reward.max(ev.reward);
        }
        let mut block_sum = CompensatedSum::new();
        for p in payouts {
            if p.at_index < self.last_at_index {
                self.out_of_order_payout = true;
            }
            self.last_at_index = p.at_index;
            match p.recipient {
                Recipient::Miner(m) => {
                    if p.amount < 0.0 {
                        self.negative_payout = true;
                    }
                    self.miners.entry(m).or_default().add(p.amount);
                    self.paid.add(p.amount);
                }
                Recipient::Operator => self.operator_explicit.add(p.amount),
            }
            if p.cause == Cause::Block(ev.index) {
                block_sum.add(p.amount);
            }
        }
        if ev.is_block {
            let r = (block_sum.value() - ev.reward).abs();
            self.worst_block_residual = self.worst_block_residual.max(r);
        }
        self.min_cash = self.min_cash.min(self.operator_net());
    }

    pub fn miner_total(&self, miner: MinerId) -> f64 {
        self.miners.get(&miner).map_or(0.0, |s| s.value())
    }

    pub fn miner_totals(&self) -> impl Iterator<Item = (MinerId, f64)> + '_ {
        self.miners.iter().map(|(m, s)| (*m, s.value()))
    }

    /// Revenue minus everything paid to miners.
    pub fn operator_net(&self) -> f64 {
        self.revenue.value() - self.paid.value()
    }

    /// Sum of the operator payout events emitted by the engine.
    pub fn operator_explicit(&self) -> f64 {
        self.operator_explicit.value()
    }

    pub fn revenue(&self) -> f64 {
        self.revenue.value()
    }

    pub fn paid(&self) -> f64 {
        self.paid.value()
    }

    pub fn blocks(&self) -> u64 {
        self.blocks
    }

    pub fn shares(&self) -> u64 {
        self.shares
    }

    pub fn snapshot(&self, engine: &Engine) -> LedgerSnapshot {
        let mut rows: BTreeMap<MinerId, MinerRow> = self
            .miners
            .iter()
            .map(|(m, s)| {
                (
                    *m,
                    MinerRow {
                        cumulative: s.value(),
                        pending: 0.0,
                    },
                )
            })
            .collect();
        for (m, v) in engine.pending_all() {
            rows.entry(m).or_default().pending = v;
        }
        LedgerSnapshot {
            miners: rows,
            operator_net: self.operator_net(),
            blocks: self.blocks,
            shares: self.shares,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MinerRow {
    pub cumulative: f64,
    pub pending: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerSnapshot {
    pub miners: BTreeMap<MinerId, MinerRow>,
    pub operator_net: f64,
    pub blocks: u64,
    pub shares: u64,
}

impl LedgerSnapshot {
    /// CSV with columns `miner,cumulative,pending`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(["miner", "cumulative", "pending"]).map_err(io)?;
        for (m, r) in &self.miners {
            w.write_record([m.to_string(), r.cumulative.to_string(), r.pending.to_string()])
                .map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConservationReport {
    pub passed: bool,
    /// Largest `|Σ block payouts - B|` over blocks (round-settled methods).
    pub block_residual: f64,
    /// `|operator net + miner payouts - revenue|`, recomputed from per-miner totals.
    pub identity_residual: f64,
    /// Lowest operator net seen during the run.
    pub min_operator_net: f64,
    pub message: String,
}

/// Check that no money was created or lost. Tolerance is `1e-9·B` per block.
pub fn conservation_check(ledger: &Ledger, engine: &Engine) -> ConservationReport {
    let b = ledger.max_reward.max(1.0);
    let tol = 1e-9 * b;
    let per_miner: CompensatedSum = ledger.miners.values().map(|s| s.value()).collect();
    let identity = (ledger.operator_net() + per_miner.value() - ledger.revenue()).abs();
    let mut problems = Vec::new();
    if identity > tol * (ledger.blocks.max(1) as f64) {
        problems.push(format!("ledger identity residual {identity:e}"));
    }
    if engine.settles_rounds() {
        if ledger.worst_block_residual > tol {
            problems.push(format!("block residual {:e}", ledger.worst_block_residual));
        }
        let explicit = (ledger.operator_explicit() - ledger.operator_net()).abs();
        if explicit > tol * (ledger.blocks.max(1) as f64) {
            problems.push(format!("operator events differ from net by {explicit:e}"));
        }
    }
    if engine.risk_free() && ledger.min_cash < -tol * (ledger.blocks.max(1) as f64) {
        problems.push(format!("paid out more than received: {:e}", ledger.min_cash));
    }
    if ledger.negative_payout {
        problems.push("negative miner payout".into());
    }
    if ledger.out_of_order_payout {
        problems.push("payout at_index went backwards".into());
    }
    ConservationReport {
        passed: problems.is_empty(),
        block_residual: ledger.worst_block_residual,
        identity_residual: identity,
        min_operator_net: ledger.min_cash,
        message: problems.join("; "),
    }
}

/// Re-execute a recorded stream against `config`.
pub fn replay(events: &[ShareEvent], config: &EngineConfig) -> Result<(Engine, Ledger)> {
    let mut engine = Engine::new(config)?;
    let mut ledger = Ledger::new();
    let mut buf = Vec::new();
    for ev in events {
        buf.clear();
        engine.step(ev, &mut buf)?;
        ledger.record(ev, &buf);
    }
    Ok((engine, ledger))
}

/// Run a stream and return every payout in order.
pub fn payout_trail(events: &[ShareEvent], config: &EngineConfig) -> Result<Vec<PayoutEvent>> {
    let mut engine = Engine::new(config)?;
    let mut out = Vec::new();
    for ev in events {
        engine.step(ev, &mut out)?;
    }
    Ok(out)
}

/// Manifest written next to a snapshot: the config echo, seed and version.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunManifest {
    pub version: String,
    pub seed: Option<u64>,
    pub config: serde_json::Value,
}

impl RunManifest {
    pub fn new<C: Serialize>(config: &C, seed: Option<u64>) -> Result<Self> {
        Ok(RunManifest {
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config: serde_json::to_value(config).map_err(|e| Error::Io(e.to_string()))?,
        })
    }

    pub fn write<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self).map_err(|e| Error::Io(e.to_string()))
    }
}
