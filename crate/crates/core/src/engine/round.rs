//! Round-based methods: PPS, proportional, slush, geometric and double
//! geometric (each of the last two in linear and log-scale form).

use std::any::Any;

use super::config::DgmParams;
use super::{Cause, MinerMap, PayoutEvent, RewardMethod, RESCALE_AT};
use crate::error::{Error, Result};
use crate::stochastic::{MinerId, ShareEvent};

macro_rules! any_impl {
    () => {
        fn as_any(&self) -> &dyn Any {
            self
        }
        fn as_any_mut(&mut self) -> &mut dyn Any {
            self
        }
    };
}

/// Pay each miner its entry of `amounts`, then the operator the rest of `reward`.
fn settle_round(
    ev: &ShareEvent,
    amounts: impl Iterator<Item = (MinerId, f64)>,
    out: &mut Vec<PayoutEvent>,
) {
    let cause = Cause::Block(ev.index);
    let mut paid = 0.0;
    for (m, a) in amounts {
        if a > 0.0 {
            out.push(PayoutEvent::miner(m, a, cause, ev.index));
            paid += a;
        }
    }
    out.push(PayoutEvent::operator(ev.reward - paid, cause, ev.index));
}

/// Pay-per-share: `(1-f)pB` immediately for every share; the operator keeps
/// every block.
#[derive(Debug, Clone)]
pub struct Pps {
    f: f64,
}

impl Pps {
    pub fn new(f: f64) -> Self {
        Pps { f }
    }
}

impl RewardMethod for Pps {
    fn step(&mut self, ev: &ShareEvent, out: &mut Vec<PayoutEvent>) -> Result<()> {
        let amount = (1.0 - self.f) * ev.p_eff * ev.reward;
        out.push(PayoutEvent::miner(ev.miner, amount, Cause::Immediate, ev.index));
        if ev.is_block {
            out.push(PayoutEvent::operator(ev.reward, Cause::Block(ev.index), ev.index));
        }
        Ok(())
    }

    fn pending(&self, _miner: MinerId) -> f64 {
        0.0
    }

    fn pending_all(&self) -> Vec<(MinerId, f64)> {
        Vec::new()
    }

    any_impl!();
}

/// Proportional: the round's `(1-f)B` split by share count.
#[derive(Debug, Clone, Default)]
pub struct Proportional {
    f: f64,
    counts: MinerMap<u64>,
    total: u64,
}

impl Proportional {
    pub fn new(f: f64) -> Self {
        Proportional {
            f,
            ..Default::default()
        }
    }

    pub fn round_shares(&self) -> u64 {
        self.total
    }
}

impl RewardMethod for Proportional {
    fn step(&mut self, ev: &ShareEvent, out: &mut Vec<PayoutEvent>) -> Result<()> {
        *self.counts.entry(ev.miner) += 1;
        self.total += 1;
        if ev.is_block {
            let pot = (1.0 - self.f) * ev.reward;
            let n = self.total as f64;
            settle_round(
                ev,
                self.counts.iter().map(|(m, &k)| (m, pot * k as f64 / n)),
                out,
            );
            self.counts.clear();
            self.total = 0;
        }
        Ok(())
    }

    fn pending(&self, _miner: MinerId) -> f64 {
        0.0
    }

    fn pending_all(&self) -> Vec<(MinerId, f64)> {
        Vec::new()
    }

    fn unsettled_shares(&self, miner: MinerId) -> u64 {
        self.counts.get(miner).copied().unwrap_or(0)
    }

    fn settles_rounds(&self) -> bool {
        true
    }

    fn risk_free(&self) -> bool {
        true
    }

    any_impl!();
}

/// Slush's method: each share scores `exp(T/C)`, the round's `(1-f)B` is
/// split by score.
#[derive(Debug, Clone)]
pub struct Slush {
    f: f64,
    c: f64,
    /// Scores are stored relative to `exp(t_ref/C)`.
    t_ref: Option<f64>,
    scores: MinerMap<(f64, u64)>,
}

/// Rebase scores once exponents pass this, well before `exp` overflows.
const SLUSH_REBASE: f64 = 500.0;

impl Slush {
    pub fn new(f: f64, c: f64) -> Self {
        Slush {
            f,
            c,
            t_ref: None,
            scores: MinerMap::default(),
        }
    }
}

impl RewardMethod for Slush {
    fn step(&mut self, ev: &ShareEvent, out: &mut Vec<PayoutEvent>) -> Result<()> {
        let t = ev.sim_time.ok_or(Error::MissingTime)?;
        let t_ref = *self.t_ref.get_or_insert(t);
        let mut z = (t - t_ref) / self.c;
        if z > SLUSH_REBASE {
            let k = (-z).exp();
            for (_, (s, _)) in self.scores.iter_mut() {
                *s *= k;
            }
            self.t_ref = Some(t);
            z = 0.0;
        }
        let e = self.scores.entry(ev.miner);
        e.0 += z.exp();
        e.1 += 1;
        if ev.is_block {
            let total: f64 = self.scores.iter().map(|(_, s)| s.0).sum();
            let pot = (1.0 - self.f) * ev.reward;
            settle_round(
                ev,
                self.scores.iter().map(|(m, s)| (m, pot * s.0 / total)),
                out,
            );
            self.scores.clear();
            self.t_ref = None;
        }
        Ok(())
    }

    fn pending(&self, _miner: MinerId) -> f64 {
        0.0
    }

    fn pending_all(&self) -> Vec<(MinerId, f64)> {
        Vec::new()
    }

    fn unsettled_shares(&self, miner: MinerId) -> u64 {
        self.scores.get(miner).map_or(0, |s| s.1)
    }

    fn settles_rounds(&self) -> bool {
        true
    }

    fn risk_free(&self) -> bool {
        true
    }

    any_impl!();
}

/// Geometric method with linear scores and periodic rescaling.
#[derive(Debug, Clone)]
pub struct Geometric {
    f: f64,
    c: f64,
    s: f64,
    scores: MinerMap<f64>,
}

impl Geometric {
    pub fn new(f: f64, c: f64) -> Self {
        Geometric {
            f,
            c,
            s: 1.0,
            scores: MinerMap::default(),
        }
    }

    pub fn r(&self, p: f64) -> f64 {
        1.0 - p + p / self.c
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn score(&self, miner: MinerId) -> f64 {
        self.scores.get(miner).copied().unwrap_or(0.0)
    }

    /// Divide `s` and every score by `divisor`; payouts are unaffected.
    pub fn rescale_scores(&mut self, divisor: f64) -> Result<()> {
        if !(divisor > 0.0) || !divisor.is_finite() {
            return Err(Error::param("divisor", "must be positive and finite"));
        }
        self.s /= divisor;
        for (_, v) in self.scores.iter_mut() {
            *v /= divisor;
        }
        Ok(())
    }
}

impl RewardMethod for Geometric {
    fn step(&mut self, ev: &ShareEvent, out: &mut Vec<PayoutEvent>) -> Result<()> {
        let p = ev.p_eff;
        let r = self.r(p);
        *self.scores.entry(ev.miner) += self.s * p * ev.reward;
        self.s *= r;
        if ev.is_block {
            let k = (1.0 - self.f) * (r - 1.0) / (self.s * p);
            settle_round(ev, self.scores.iter().map(|(m, &sc)| (m, k * sc)), out);
            self.scores.clear();
            self.s = 1.0;
        } else if self.s > RESCALE_AT {
            let s = self.s;
            self.rescale_scores(s)?;
        }
        Ok(())
    }

    fn pending(&self, miner: MinerId) -> f64 {
        (1.0 - self.f) * (1.0 - self.c) * self.score(miner) / self.s
    }

    fn pending_all(&self) -> Vec<(MinerId, f64)> {
        let k = (1.0 - self.f) * (1.0 - self.c) / self.s;
        self.scores.sorted(|v| k * v)
    }

    fn settles_rounds(&self) -> bool {
        true
    }

    any_impl!();
}

/// `ls + ln(exp(l - ls) + v)`.
fn log_add(l: f64, ls: f64, v: f64) -> f64 {
    ls + ((l - ls).exp() + v).ln()
}

/// Geometric method on a logarithmic scale; no rescaling is ever needed.
#[derive(Debug, Clone)]
pub struct GeometricLog {
    f: f64,
    c: f64,
    sentinel: f64,
    ls: f64,
    scores: MinerMap<f64>,
}

impl GeometricLog {
    pub fn new(f: f64, c: f64, sentinel: f64) -> Self {
        GeometricLog {
            f,
            c,
            sentinel,
            ls: 0.0,
            scores: MinerMap::default(),
        }
    }

    pub fn ls(&self) -> f64 {
        self.ls
    }

    pub fn log_score(&self, miner: MinerId) -> f64 {
        self.scores.get(miner).copied().unwrap_or(self.sentinel)
    }
}

impl RewardMethod for GeometricLog {
    fn step(&mut self, ev: &ShareEvent, out: &mut Vec<PayoutEvent>) -> Result<()> {
        let p = ev.p_eff;
        let r = 1.0 - p + p / self.c;
        let ls = self.ls;
        let sentinel = self.sentinel;
        let l = self.scores.entry_with(ev.miner, || sentinel);
        *l = log_add(*l, ls, p * ev.reward);
        self.ls += r.ln();
        if ev.is_block {
            let k = (1.0 - self.f) * (r - 1.0) / p;
            let ls = self.ls;
            settle_round(
                ev,
                self.scores.iter().map(|(m, &l)| (m, k * (l - ls).exp())),
                out,
            );
            self.scores.clear();
            self.ls = 0.0;
        }
        Ok(())
    }

    fn pending(&self, miner: MinerId) -> f64 {
        (1.0 - self.f) * (1.0 - self.c) * (self.log_score(miner) - self.ls).exp()
    }

    fn pending_all(&self) -> Vec<(MinerId, f64)> {
        let k = (1.0 - self.f) * (1.0 - self.c);
        let ls = self.ls;
        self.scores.sorted(|l| k * (l - ls).exp())
    }

    fn settles_rounds(&self) -> bool {
        true
    }

    any_impl!();
}

/// Scores whose pending value falls below this fraction of `B` after a
/// block are dropped; their dust stays with the operator.
pub const DGM_DUST: f64 = 1e-18;

/// Double geometric method; scores persist across blocks.
#[derive(Debug, Clone)]
pub struct Dgm {
    params: DgmParams,
    s: f64,
    scores: MinerMap<f64>,
}

impl Dgm {
    pub(crate) fn new(params: DgmParams) -> Self {
        Dgm {
            params,
            s: 1.0,
            scores: MinerMap::default(),
        }
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn score(&self, miner: MinerId) -> f64 {
        self.scores.get(miner).copied().unwrap_or(0.0)
    }

    /// Change `c`, `o` or `f` mid-run; `r` follows on the next share.
    pub fn set_parameters(&mut self, f: f64, c: f64, o: f64) -> Result<()> {
        if !(o >= 0.0 && o < 1.0) || !(c > 0.0 && c < 1.0) || !(f < 1.0) {
            return Err(Error::param("o", "need 0 <= o < 1, 0 < c < 1, f < 1"));
        }
        self.params.f = f;
        self.params.c = c;
        self.params.o = o;
        Ok(())
    }

    pub fn rescale_scores(&mut self, divisor: f64) -> Result<()> {
        if !(divisor > 0.0) || !divisor.is_finite() {
            return Err(Error::param("divisor", "must be positive and finite"));
        }
        self.s /= divisor;
        for (_, v) in self.scores.iter_mut() {
            *v /= divisor;
        }
        Ok(())
    }
}

impl RewardMethod for Dgm {
    fn step(&mut self, ev: &ShareEvent, out: &mut Vec<PayoutEvent>) -> Result<()> {
        let DgmParams { f, c, o, .. } = self.params;
        let p = ev.p_eff;
        let r = self.params.r(p);
        *self.scores.entry(ev.miner) += (1.0 - f) * (1.0 - c) * self.s * p * ev.reward;
        self.s *= r;
        if ev.is_block {
            let k = if o < 1.0 {
                (1.0 - o) / (c * self.s)
            } else {
                (r - 1.0) / ((1.0 - c) * p * self.s)
            };
            let cause = Cause::Block(ev.index);
            for (m, sc) in self.scores.iter_mut() {
                if *sc > 0.0 {
                    out.push(PayoutEvent::miner(m, k * *sc, cause, ev.index));
                }
                *sc *= o;
            }
            if o == 0.0 {
                self.scores.clear();
            } else {
                let floor = DGM_DUST * ev.reward * self.s;
                self.scores.retain(|v| *v > floor);
            }
        }
        if self.s > RESCALE_AT {
            let s = self.s;
            self.rescale_scores(s)?;
        }
        Ok(())
    }

    fn pending(&self, miner: MinerId) -> f64 {
        self.score(miner) / self.s
    }

    fn pending_all(&self) -> Vec<(MinerId, f64)> {
        let s = self.s;
        self.scores.sorted(|v| v / s)
    }

    any_impl!();
}

/// Double geometric method on a logarithmic scale.
#[derive(Debug, Clone)]
pub struct DgmLog {
    params: DgmParams,
    sentinel: f64,
    ls: f64,
    scores: MinerMap<f64>,
}

impl DgmLog {
    pub(crate) fn new(params: DgmParams, sentinel: f64) -> Self {
        DgmLog {
            params,
            sentinel,
            ls: 0.0,
            scores: MinerMap::default(),
        }
    }
}

impl RewardMethod for DgmLog {
    fn step(&mut self, ev: &ShareEvent, out: &mut Vec<PayoutEvent>) -> Result<()> {
        let DgmParams { f, c, o, .. } = self.params;
        let p = ev.p_eff;
        let ls = self.ls;
        let sentinel = self.sentinel;
        let l = self.scores.entry_with(ev.miner, || sentinel);
        *l = log_add(*l, ls, (1.0 - f) * (1.0 - c) * p * ev.reward);
        self.ls += self.params.ln_r(p);
        if ev.is_block {
            let ls = self.ls;
            let k = if o < 1.0 {
                (1.0 - o) / c
            } else {
                self.params.ln_r(p).exp_m1() / ((1.0 - c) * p)
            };
            let ln_o = if o > 0.0 { o.ln() } else { f64::NEG_INFINITY };
            let cause = Cause::Block(ev.index);
            for (m, l) in self.scores.iter_mut() {
                let amount = k * (*l - ls).exp();
                if amount > 0.0 {
                    out.push(PayoutEvent::miner(m, amount, cause, ev.index));
                }
                *l = (*l + ln_o).max(sentinel);
            }
            if o == 0.0 {
                self.scores.clear();
            } else {
                let floor = (DGM_DUST * ev.reward).ln() + ls;
                self.scores.retain(|l| *l > floor);
            }
        }
        Ok(())
    }

    fn pending(&self, miner: MinerId) -> f64 {
        let l = self.scores.get(miner).copied().unwrap_or(self.sentinel);
        (l - self.ls).exp()
    }

    fn pending_all(&self) -> Vec<(MinerId, f64)> {
        let ls = self.ls;
        self.scores.sorted(|l| (l - ls).exp())
    }

    any_impl!();
}
