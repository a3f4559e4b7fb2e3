//! Share and block event generation.
//!
//! Everything here is indexed by share count rather than wall-clock time:
//! a share with inverse difficulty `p_eff` is a block with probability
//! `p_eff`, independently of every other share. Difficulty and block reward
//! are piecewise-constant functions of the global share index.

use std::io::{BufRead, Write};

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

pub type MinerId = u32;

/// Hashes per difficulty-1 share.
pub const HASHES_PER_SHARE: f64 = 4_294_967_296.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Segments(Vec<(u64, f64)>);

impl Segments {
    fn validate(segments: Vec<(u64, f64)>, min: f64, what: &str) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::Schedule(format!("{what} schedule has no segments")));
        }
        if segments[0].0 != 0 {
            return Err(Error::Schedule(format!(
                "{what} schedule must start at share index 0"
            )));
        }
        for w in segments.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::Schedule(format!(
                    "{what} segments must have strictly increasing start indices"
                )));
            }
        }
        for &(start, v) in &segments {
            if !v.is_finite() || v < min {
                return Err(Error::Schedule(format!(
                    "{what} value {v} at index {start} must be finite and >= {min}"
                )));
            }
        }
        Ok(Segments(segments))
    }

    fn at(&self, index: u64) -> f64 {
        let pos = self.0.partition_point(|&(start, _)| start <= index);
        self.0[pos - 1].1
    }

    fn is_constant(&self) -> bool {
        self.0.iter().all(|&(_, v)| v == self.0[0].1)
    }
}

/// Network difficulty `D` as a function of the share index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(u64, f64)>", into = "Vec<(u64, f64)>")]
pub struct DifficultySchedule(Segments);

impl DifficultySchedule {
    pub fn new(segments: Vec<(u64, f64)>) -> Result<Self> {
        Segments::validate(segments, 1.0, "difficulty").map(DifficultySchedule)
    }

    pub fn constant(difficulty: f64) -> Result<Self> {
        Self::new(vec![(0, difficulty)])
    }

    pub fn difficulty_at(&self, index: u64) -> f64 {
        self.0.at(index)
    }

    /// Inverse difficulty `p = 1/D` at `index`.
    pub fn p_at(&self, index: u64) -> f64 {
        1.0 / self.0.at(index)
    }

    pub fn is_constant(&self) -> bool {
        self.0.is_constant()
    }

    pub fn segments(&self) -> &[(u64, f64)] {
        &self.0 .0
    }
}

impl TryFrom<Vec<(u64, f64)>> for DifficultySchedule {
    type Error = Error;
    fn try_from(v: Vec<(u64, f64)>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<DifficultySchedule> for Vec<(u64, f64)> {
    fn from(s: DifficultySchedule) -> Self {
        s.0 .0
    }
}

/// Block reward `B` (BTC) as a function of the share index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(u64, f64)>", into = "Vec<(u64, f64)>")]
pub struct RewardSchedule(Segments);

impl RewardSchedule {
    pub fn new(segments: Vec<(u64, f64)>) -> Result<Self> {
        Segments::validate(segments, 0.0, "reward").map(RewardSchedule)
    }

    pub fn constant(reward: f64) -> Result<Self> {
        Self::new(vec![(0, reward)])
    }

    pub fn reward_at(&self, index: u64) -> f64 {
        self.0.at(index)
    }

    pub fn is_constant(&self) -> bool {
        self.0.is_constant()
    }

    pub fn segments(&self) -> &[(u64, f64)] {
        &self.0 .0
    }
}

impl TryFrom<Vec<(u64, f64)>> for RewardSchedule {
    type Error = Error;
    fn try_from(v: Vec<(u64, f64)>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<RewardSchedule> for Vec<(u64, f64)> {
    fn from(s: RewardSchedule) -> Self {
        s.0 .0
    }
}

/// One submitted share.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShareEvent {
    pub index: u64,
    pub miner: MinerId,
    /// Share difficulty `d`.
    pub d: f64,
    /// Probability that this share is a block, `d/D` at submission.
    pub p_eff: f64,
    /// Block reward current at submission.
    pub reward: f64,
    pub is_block: bool,
    /// Seconds since the start of the run, when the scenario models time.
    pub sim_time: Option<f64>,
}

impl ShareEvent {
    /// A difficulty-1 share at `index` with the given inverse difficulty and reward.
    pub fn new(index: u64, miner: MinerId, p_eff: f64, reward: f64, is_block: bool) -> Self {
        ShareEvent {
            index,
            miner,
            d: 1.0,
            p_eff,
            reward,
            is_block,
            sim_time: None,
        }
    }

    pub fn with_time(mut self, t: f64) -> Self {
        self.sim_time = Some(t);
        self
    }
}

/// Seeded random stream. ChaCha8 keyed by `seed` with the 64-bit ChaCha
/// stream id set to `stream`; replicas take distinct stream ids so their
/// sequences never overlap.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        RngStream { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }

    /// Bernoulli trial for a share with block probability `p_eff`.
    pub fn draw_share(&mut self, p_eff: f64) -> bool {
        debug_assert!(p_eff > 0.0 && p_eff <= 1.0);
        self.uniform() < p_eff
    }

    /// Number of trials up to and including the first success, success probability `p`.
    pub fn geometric(&mut self, p: f64) -> u64 {
        debug_assert!(p > 0.0 && p <= 1.0);
        if p >= 1.0 {
            return 1;
        }
        // 1 - u lies in (0, 1]
        let u = 1.0 - self.uniform();
        (u.ln() / (-p).ln_1p()).floor() as u64 + 1
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }
    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }
    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
        self.rng.try_fill_bytes(dest)
    }
}

/// Free-function form of [`RngStream::draw_share`].
pub fn draw_share(rng: &mut RngStream, p_eff: f64) -> bool {
    rng.draw_share(p_eff)
}

/// A miner in a generated stream: its hashrate and share difficulty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinerSpec {
    pub id: MinerId,
    pub hashrate: f64,
    #[serde(default = "one")]
    pub share_difficulty: f64,
}

fn one() -> f64 {
    1.0
}

impl MinerSpec {
    pub fn new(id: MinerId, hashrate: f64) -> Self {
        MinerSpec {
            id,
            hashrate,
            share_difficulty: 1.0,
        }
    }
}

/// Lazily generated share stream; see [`generate_stream`].
pub struct ShareStream<'a> {
    rng: &'a mut RngStream,
    difficulty: &'a DifficultySchedule,
    reward: &'a RewardSchedule,
    miners: &'a [MinerSpec],
    pick: WeightedIndex<f64>,
    next: u64,
    end: u64,
}

impl<'a> ShareStream<'a> {
    pub fn new(
        rng: &'a mut RngStream,
        difficulty: &'a DifficultySchedule,
        reward: &'a RewardSchedule,
        miners: &'a [MinerSpec],
        n_shares: u64,
    ) -> Result<Self> {
        if miners.is_empty() {
            return Err(Error::param("miners", "miner list is empty"));
        }
        for m in miners {
            if !(m.hashrate > 0.0) || !m.hashrate.is_finite() {
                return Err(Error::param("hashrate", "weights must be positive"));
            }
            if !(m.share_difficulty >= 1.0) {
                return Err(Error::param("share_difficulty", "must be >= 1"));
            }
        }
        // Share arrival rate is hashrate / share difficulty.
        let pick = WeightedIndex::new(miners.iter().map(|m| m.hashrate / m.share_difficulty))
            .map_err(|e| Error::param("hashrate", e.to_string()))?;
        Ok(ShareStream {
            rng,
            difficulty,
            reward,
            miners,
            pick,
            next: 0,
            end: n_shares,
        })
    }
}

impl Iterator for ShareStream<'_> {
    type Item = Result<ShareEvent>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.next >= self.end {
            return None;
        }
        let index = self.next;
        self.next += 1;
        let m = &self.miners[self.pick.sample(self.rng)];
        let p_eff = m.share_difficulty / self.difficulty.difficulty_at(index);
        if p_eff > 1.0 {
            return Some(Err(Error::param(
                "share_difficulty",
                format!("share difficulty {} exceeds network difficulty", m.share_difficulty),
            )));
        }
        let is_block = self.rng.draw_share(p_eff);
        Some(Ok(ShareEvent {
            index,
            miner: m.id,
            d: m.share_difficulty,
            p_eff,
            reward: self.reward.reward_at(index),
            is_block,
            sim_time: None,
        }))
    }
}

/// Generate `n_shares` events, attributing each to a miner with probability
/// proportional to its share rate.
pub fn generate_stream(
    rng: &mut RngStream,
    difficulty: &DifficultySchedule,
    reward: &RewardSchedule,
    miners: &[MinerSpec],
    n_shares: u64,
) -> Result<Vec<ShareEvent>> {
    ShareStream::new(rng, difficulty, reward, miners, n_shares)?.collect()
}

/// Expected number of blocks found by hashrate `h` (hash/s) over `t` seconds.
pub fn expected_blocks(h: f64, t: f64, difficulty: f64) -> Result<f64> {
    if !(difficulty >= 1.0) {
        return Err(Error::param("D", "difficulty must be >= 1"));
    }
    if !(h >= 0.0) || !(t >= 0.0) {
        return Err(Error::param("h,t", "must be nonnegative"));
    }
    Ok(h * t / (HASHES_PER_SHARE * difficulty))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SoloStats {
    pub lambda: f64,
    pub mean: f64,
    pub variance: f64,
    pub rel_stddev: f64,
    pub p_any_payment: f64,
}

/// Payout statistics of solo mining: block count is Poisson(λ).
pub fn solo_payout_stats(h: f64, t: f64, difficulty: f64, reward: f64) -> Result<SoloStats> {
    let lambda = expected_blocks(h, t, difficulty)?;
    Ok(SoloStats {
        lambda,
        mean: lambda * reward,
        variance: lambda * reward * reward,
        rel_stddev: 1.0 / lambda.sqrt(),
        p_any_payment: -(-lambda).exp_m1(),
    })
}

pub fn pmf_poisson(lambda: f64, k: u64) -> Result<f64> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::param("lambda", "must be finite and >= 0"));
    }
    if lambda == 0.0 {
        return Ok(if k == 0 { 1.0 } else { 0.0 });
    }
    let k = k as f64;
    Ok((k * lambda.ln() - lambda - ln_gamma(k + 1.0)).exp())
}

/// Probability that the first success happens on trial `n` (n >= 1).
pub fn pmf_geometric(p: f64, n: u64) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::param("p", "must lie in (0, 1]"));
    }
    if n == 0 {
        return Err(Error::param("N", "must be >= 1"));
    }
    Ok(p * (1.0 - p).powf((n - 1) as f64))
}

/// Write events as a replay log: `index,miner,d,p_eff,B,is_block`.
pub fn write_replay_log<W: Write>(events: &[ShareEvent], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["index", "miner", "d", "p_eff", "B", "is_block"])
        .map_err(|e| Error::Io(e.to_string()))?;
    for e in events {
        w.write_record([
            e.index.to_string(),
            e.miner.to_string(),
            e.d.to_string(),
            e.p_eff.to_string(),
            e.reward.to_string(),
            u8::from(e.is_block).to_string(),
        ])
        .map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Parse a replay log. Errors name the 1-based line of the offending row.
pub fn read_replay_log<R: BufRead>(input: R) -> Result<Vec<ShareEvent>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(input);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Replay {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let expected = ["index", "miner", "d", "p_eff", "B", "is_block"];
    if headers.iter().ne(expected.iter().copied()) {
        return Err(Error::Replay {
            line: 1,
            message: format!("expected header {}", expected.join(",")),
        });
    }
    let mut out = Vec::new();
    let mut last: Option<u64> = None;
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let bad = |message: String| Error::Replay { line, message };
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let field = |j: usize| rec.get(j).unwrap_or("").trim();
        let index: u64 = field(0)
            .parse()
            .map_err(|_| bad(format!("bad index `{}`", field(0))))?;
        let miner: MinerId = field(1)
            .parse()
            .map_err(|_| bad(format!("bad miner `{}`", field(1))))?;
        let d: f64 = field(2)
            .parse()
            .map_err(|_| bad(format!("bad d `{}`", field(2))))?;
        let p_eff: f64 = field(3)
            .parse()
            .map_err(|_| bad(format!("bad p_eff `{}`", field(3))))?;
        let reward: f64 = field(4)
            .parse()
            .map_err(|_| bad(format!("bad B `{}`", field(4))))?;
        let is_block = match field(5) {
            "1" | "true" => true,
            "0" | "false" => false,
            other => return Err(bad(format!("bad is_block `{other}`"))),
        };
        if !(p_eff > 0.0 && p_eff <= 1.0) {
            return Err(bad(format!("p_eff {p_eff} outside (0, 1]")));
        }
        if !(reward >= 0.0) || !(d >= 1.0) {
            return Err(bad("B must be >= 0 and d >= 1".into()));
        }
        if let Some(l) = last {
            if index <= l {
                return Err(bad(format!("index {index} not after {l}")));
            }
        }
        last = Some(index);
        out.push(ShareEvent {
            index,
            miner,
            d,
            p_eff,
            reward,
            is_block,
            sim_time: None,
        });
    }
    Ok(out)
}
