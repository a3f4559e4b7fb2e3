//! Windowed methods: simple PPLNS, unit-PPLNS, shift-PPLNS and pay-once.

use std::any::Any;
use std::collections::VecDeque;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{Cause, MinerMap, PayoutEvent, RewardMethod};
use crate::accum::CompensatedSum;
use crate::error::{Error, Result};
use crate::stochastic::{MinerId, ShareEvent};

/// Clamp fractions below this are treated as exactly zero, so rounding in
/// the cumulative counter cannot produce dust payments.
const CLAMP_FLOOR: f64 = 1e-9;

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

/// Collects per-miner amounts in first-seen order.
#[derive(Default)]
struct Tally(MinerMap<f64>);

impl Tally {
    fn add(&mut self, miner: MinerId, amount: f64) {
        *self.0.entry(miner) += amount;
    }

    fn emit(self, cause: Cause, at: u64, out: &mut Vec<PayoutEvent>) -> f64 {
        let mut paid = 0.0;
        for (m, &a) in self.0.iter() {
            if a > 0.0 {
                out.push(PayoutEvent::miner(m, a, cause, at));
                paid += a;
            }
        }
        paid
    }
}

/// Pays `(1-f)B/N` to the owner of each of the last `N` shares.
#[derive(Debug, Clone)]
pub struct SimplePplns {
    f: f64,
    n: u64,
    assume_constant: bool,
    /// `(p, B)` of the first share, to detect schedule changes.
    first: Option<(f64, f64)>,
    last: (f64, f64),
    ring: VecDeque<MinerId>,
}

impl SimplePplns {
    pub fn new(f: f64, n: u64, assume_constant: bool) -> Self {
        SimplePplns {
            f,
            n,
            assume_constant,
            first: None,
            last: (0.0, 0.0),
            ring: VecDeque::new(),
        }
    }
}

impl RewardMethod for SimplePplns {
    fn step(&mut self, ev: &ShareEvent, out: &mut Vec<PayoutEvent>) -> Result<()> {
        let here = (ev.p_eff, ev.reward);
        let first = *self.first.get_or_insert(here);
        if !self.assume_constant && first != here {
            return Err(Error::NonConstantSchedule);
        }
        self.last = here;
        self.ring.push_back(ev.miner);
        if self.ring.len() as u64 > self.n {
            self.ring.pop_front();
        }
        if ev.is_block {
            let each = (1.0 - self.f) * ev.reward / self.n as f64;
            let mut tally = Tally::default();
            for &m in &self.ring {
                tally.add(m, each);
            }
            let cause = Cause::Block(ev.index);
            let paid = tally.emit(cause, ev.index, out);
            out.push(PayoutEvent::operator(ev.reward - paid, cause, ev.index));
        }
        Ok(())
    }

    fn pending(&self, miner: MinerId) -> f64 {
        self.pending_all()
            .into_iter()
            .find(|e| e.0 == miner)
            .map_or(0.0, |e| e.1)
    }

    /// A share with `j` later shares has `N-1-j` more chances to be paid.
    fn pending_all(&self) -> Vec<(MinerId, f64)> {
        let (p, b) = self.last;
        let per_chance = (1.0 - self.f) * b * p / self.n as f64;
        let len = self.ring.len();
        let mut map: MinerMap<f64> = MinerMap::default();
        for (i, &m) in self.ring.iter().enumerate() {
            let later = (len - 1 - i) as u64;
            let left = self.n.saturating_sub(1 + later);
            *map.entry(m) += per_chance * left as f64;
        }
        map.sorted(|v| *v)
    }

    fn settles_rounds(&self) -> bool {
        true
    }

    fn risk_free(&self) -> bool {
        true
    }

    any_impl!();
}

/// One share on the unit-PPLNS timeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitShare {
    pub miner: MinerId,
    /// Units, `p` at submission.
    pub u: f64,
    /// Amplifier, `B` at submission.
    pub a: f64,
    /// Cumulative units when the share was submitted.
    pub u_t0: f64,
    /// Amount paid so far over `(1-f)·u·a`.
    pub paid_fraction: f64,
    end: f64,
}

impl UnitShare {
    /// Cumulative units just after this share.
    pub fn end(&self) -> f64 {
        self.end
    }
}

/// How shares are adjusted when the window `X` changes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MigrationStrategy {
    /// Units `×X₂/X₁`, amplifier `×X₁/X₂`.
    #[default]
    Scale,
    /// Keep units, rescale the amplifier so the pending value is unchanged;
    /// shares that fall outside the new window are paid out at once.
    KeepUnits,
}

/// Unit-based PPLNS over a window of `X` difficulty units.
#[derive(Debug, Clone)]
pub struct UnitPplns {
    f: f64,
    x: f64,
    total: CompensatedSum,
    shares: VecDeque<UnitShare>,
}

impl UnitPplns {
    pub fn new(f: f64, x: f64) -> Self {
        UnitPplns {
            f,
            x,
            total: CompensatedSum::new(),
            shares: VecDeque::new(),
        }
    }

    pub fn fee(&self) -> f64 {
        self.f
    }

    pub fn window(&self) -> f64 {
        self.x
    }

    /// Cumulative units submitted so far.
    pub fn cumulative_units(&self) -> f64 {
        self.total.value()
    }

    pub fn shares(&self) -> impl Iterator<Item = &UnitShare> {
        self.shares.iter()
    }

    fn share_pending(&self, s: &UnitShare, now: f64) -> f64 {
        let u_after = now - s.end;
        (1.0 - self.f) * s.u * s.a * (self.x - u_after).max(0.0) / self.x
    }

    /// Pending value of every live share, oldest first.
    pub fn share_pendings(&self) -> Vec<f64> {
        let now = self.total.value();
        self.shares.iter().map(|s| self.share_pending(s, now)).collect()
    }

    fn prune(&mut self) {
        let now = self.total.value();
        while let Some(s) = self.shares.front() {
            if now - s.end >= self.x {
                self.shares.pop_front();
            } else {
                break;
            }
        }
    }

    /// Switch to fee `f2` and window `x2` keeping every pending value. Shares
    /// that cannot keep their value inside the new window are paid it now;
    /// those payouts are returned.
    pub fn migrate(
        &mut self,
        f2: f64,
        x2: f64,
        strategy: MigrationStrategy,
        at_index: u64,
    ) -> Result<Vec<PayoutEvent>> {
        if !(f2 < 1.0) {
            return Err(Error::param("f", "fee must be < 1"));
        }
        if !(x2 > 0.0) || !x2.is_finite() {
            return Err(Error::param("x", "window must be positive"));
        }
        let now = self.total.value();
        let fee_k = (1.0 - self.f) / (1.0 - f2);
        let (f1, x1) = (self.f, self.x);
        let k = x2 / x1;
        let mut immediate = Tally::default();
        for s in self.shares.iter_mut().rev() {
            s.a *= fee_k;
            if x2 == x1 {
                continue;
            }
            let u_after = now - s.end;
            match strategy {
                MigrationStrategy::Scale => {
                    s.u *= k;
                    s.a /= k;
                    s.end = now - u_after * k;
                    s.u_t0 = s.end - s.u;
                }
                MigrationStrategy::KeepUnits => {
                    if u_after >= x2 {
                        let value = (1.0 - f1) * s.u * (s.a / fee_k) * (x1 - u_after).max(0.0) / x1;
                        if value > 0.0 {
                            immediate.add(s.miner, value);
                            s.paid_fraction += value / ((1.0 - f1) * s.u * s.a / fee_k);
                        }
                        s.a = 0.0;
                    } else {
                        s.a *= (x1 - u_after).max(0.0) / x1 * x2 / (x2 - u_after);
                    }
                }
            }
        }
        self.f = f2;
        self.x = x2;
        let mut out = Vec::new();
        immediate.emit(Cause::Immediate, at_index, &mut out);
        self.shares.retain(|s| s.a > 0.0);
        self.prune();
        Ok(out)
    }

    /// CSV with columns `U_T0,miner,u,a,paid_fraction`.
    pub fn write_timeline<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(["U_T0", "miner", "u", "a", "paid_fraction"]).map_err(io)?;
        for s in &self.shares {
            w.write_record([
                s.u_t0.to_string(),
                s.miner.to_string(),
                s.u.to_string(),
                s.a.to_string(),
                s.paid_fraction.to_string(),
            ])
            .map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }
}

impl RewardMethod for UnitPplns {
    fn step(&mut self, ev: &ShareEvent, out: &mut Vec<PayoutEvent>) -> Result<()> {
        let u_t0 = self.total.value();
        self.total.add(ev.p_eff);
        let now = self.total.value();
        if ev.is_block {
            let u1 = ev.p_eff;
            let mut tally = Tally::default();
            let scale = (1.0 - self.f) / self.x;
            for s in self.shares.iter_mut().rev() {
                let u_after = now - s.end;
                let mut frac = ((self.x - u_after + u1) / u1).clamp(0.0, 1.0);
                if frac < CLAMP_FLOOR {
                    frac = 0.0;
                }
                if frac == 0.0 {
                    break;
                }
                let amount = scale * s.a * s.u * frac;
                tally.add(s.miner, amount);
                s.paid_fraction += amount / ((1.0 - self.f) * s.u * s.a);
            }
            let cause = Cause::Block(ev.index);
            let paid = tally.emit(cause, ev.index, out);
            out.push(PayoutEvent::operator(ev.reward - paid, cause, ev.index));
        }
        self.shares.push_back(UnitShare {
            miner: ev.miner,
            u: ev.p_eff,
            a: ev.reward,
            u_t0,
            paid_fraction: 0.0,
            end: now,
        });
        self.prune();
        Ok(())
    }

    fn pending(&self, miner: MinerId) -> f64 {
        let now = self.total.value();
        self.shares
            .iter()
            .filter(|s| s.miner == miner)
            .map(|s| self.share_pending(s, now))
            .sum()
    }

    fn pending_all(&self) -> Vec<(MinerId, f64)> {
        let now = self.total.value();
        let mut map: MinerMap<f64> = MinerMap::default();
        for s in &self.shares {
            *map.entry(s.miner) += self.share_pending(s, now);
        }
        map.sorted(|v| *v)
    }

    fn settles_rounds(&self) -> bool {
        true
    }

    any_impl!();
}

#[derive(Debug, Clone, Default)]
struct Shift {
    units: CompensatedSum,
    blocks: u64,
    scores: MinerMap<f64>,
}

/// Shares are grouped into shifts of `X` units; at each shift end the
/// participants of the last `N` shifts are paid `S·L/(N·X₁)`.
#[derive(Debug, Clone)]
pub struct ShiftPplns {
    f: f64,
    x: f64,
    n: usize,
    current: Shift,
    /// Up to `N-1` completed shifts, oldest first.
    past: VecDeque<Shift>,
    seq: u64,
}

impl ShiftPplns {
    pub fn new(f: f64, x: f64, n: usize) -> Self {
        ShiftPplns {
            f,
            x,
            n,
            current: Shift::default(),
            past: VecDeque::new(),
            seq: 0,
        }
    }

    /// Completed shifts so far.
    pub fn shifts_completed(&self) -> u64 {
        self.seq
    }

    /// Number of shifts held in memory, at most `N`.
    pub fn stored_shifts(&self) -> usize {
        self.past.len() + 1
    }

    fn close_shift(&mut self, at: u64, out: &mut Vec<PayoutEvent>) {
        let ended = std::mem::take(&mut self.current);
        let x1 = ended.units.value();
        let seq = self.seq;
        self.seq += 1;
        if ended.blocks > 0 {
            let k = ended.blocks as f64 / (self.n as f64 * x1);
            let mut tally = Tally::default();
            for shift in self.past.iter().chain(std::iter::once(&ended)) {
                for (m, &s) in shift.scores.iter() {
                    tally.add(m, s * k);
                }
            }
            tally.emit(Cause::ShiftEnd(seq), at, out);
        }
        self.past.push_back(ended);
        while self.past.len() >= self.n {
            self.past.pop_front();
        }
    }
}

impl RewardMethod for ShiftPplns {
    fn step(&mut self, ev: &ShareEvent, out: &mut Vec<PayoutEvent>) -> Result<()> {
        *self.current.scores.entry(ev.miner) += (1.0 - self.f) * ev.p_eff * ev.reward;
        self.current.units.add(ev.p_eff);
        if ev.is_block {
            self.current.blocks += 1;
        }
        if self.current.units.value() >= self.x {
            self.close_shift(ev.index, out);
        }
        Ok(())
    }

    fn pending(&self, miner: MinerId) -> f64 {
        self.pending_all()
            .into_iter()
            .find(|e| e.0 == miner)
            .map_or(0.0, |e| e.1)
    }

    /// Score times the fraction of the `N` shift ends still ahead.
    fn pending_all(&self) -> Vec<(MinerId, f64)> {
        let n = self.n as f64;
        let mut map: MinerMap<f64> = MinerMap::default();
        let len = self.past.len();
        for (i, shift) in self.past.iter().enumerate() {
            let done = (len - i) as f64;
            for (m, &s) in shift.scores.iter() {
                *map.entry(m) += s * (n - done) / n;
            }
        }
        for (m, &s) in self.current.scores.iter() {
            *map.entry(m) += s;
        }
        map.sorted(|v| *v)
    }

    any_impl!();
}

#[derive(Debug, Clone, Copy)]
struct Backlog {
    miner: MinerId,
    a: f64,
    /// Units not yet paid.
    left: f64,
}

/// Each share is paid at most once: a block pays the newest `X` units of the
/// backlog and deletes them.
#[derive(Debug, Clone)]
pub struct PayOnce {
    f: f64,
    x: f64,
    backlog: VecDeque<Backlog>,
}

impl PayOnce {
    pub fn new(f: f64, x: f64) -> Self {
        PayOnce {
            f,
            x,
            backlog: VecDeque::new(),
        }
    }

    /// Units waiting to be paid.
    pub fn backlog_units(&self) -> f64 {
        self.backlog.iter().map(|s| s.left).sum()
    }

    pub fn backlog_len(&self) -> usize {
        self.backlog.len()
    }
}

impl RewardMethod for PayOnce {
    fn step(&mut self, ev: &ShareEvent, out: &mut Vec<PayoutEvent>) -> Result<()> {
        if ev.is_block {
            let mut budget = self.x;
            let mut tally = Tally::default();
            let k = (1.0 - self.f) / self.x;
            while budget > 0.0 {
                let Some(s) = self.backlog.back_mut() else { break };
                let take = s.left.min(budget);
                tally.add(s.miner, k * s.a * take);
                budget -= take;
                s.left -= take;
                if s.left <= 0.0 {
                    self.backlog.pop_back();
                }
            }
            let cause = Cause::Block(ev.index);
            let paid = tally.emit(cause, ev.index, out);
            out.push(PayoutEvent::operator(ev.reward - paid, cause, ev.index));
        }
        self.backlog.push_back(Backlog {
            miner: ev.miner,
            a: ev.reward,
            left: ev.p_eff,
        });
        Ok(())
    }

    /// Outstanding entitlement: what the share would get if fully covered.
    fn pending(&self, miner: MinerId) -> f64 {
        let k = (1.0 - self.f) / self.x;
        self.backlog
            .iter()
            .filter(|s| s.miner == miner)
            .map(|s| k * s.a * s.left)
            .sum()
    }

    fn pending_all(&self) -> Vec<(MinerId, f64)> {
        let k = (1.0 - self.f) / self.x;
        let mut map: MinerMap<f64> = MinerMap::default();
        for s in &self.backlog {
            *map.entry(s.miner) += k * s.a * s.left;
        }
        map.sorted(|v| *v)
    }

    fn settles_rounds(&self) -> bool {
        true
    }

    fn risk_free(&self) -> bool {
        true
    }

    any_impl!();
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{payout_trail, replay, conservation_check, EngineConfig, Recipient};

    fn ev(i: u64, miner: MinerId, p: f64, block: bool) -> ShareEvent {
        ShareEvent::new(i, miner, p, 50.0, block)
    }

    fn miner_sum(trail: &[PayoutEvent]) -> f64 {
        trail
            .iter()
            .filter(|p| matches!(p.recipient, Recipient::Miner(_)))
            .map(|p| p.amount)
            .sum()
    }

    #[test]
    fn simple_pplns_last_ten() {
        let cfg = EngineConfig::PplnsSimple {
            f: 0.0,
            n: 10,
            assume_constant: false,
        };
        let events: Vec<_> = (0..25).map(|i| ev(i, i as MinerId, 0.01, i == 24)).collect();
        let trail = payout_trail(&events, &cfg).unwrap();
        assert_eq!(trail.len(), 11);
        for p in &trail[..10] {
            assert_eq!(p.amount, 5.0);
        }
        let miners: Vec<_> = trail[..10].iter().map(|p| p.recipient).collect();
        assert_eq!(miners[0], Recipient::Miner(15));
        assert_eq!(miners[9], Recipient::Miner(24));
        assert_eq!(trail[10].amount, 0.0);
    }

    #[test]
    fn simple_pplns_short_history_operator_keeps_rest() {
        let cfg = EngineConfig::PplnsSimple {
            f: 0.0,
            n: 10,
            assume_constant: false,
        };
        let trail = payout_trail(&[ev(0, 1, 0.01, false), ev(1, 1, 0.01, true)], &cfg).unwrap();
        assert_eq!(trail[0].amount, 10.0);
        assert_eq!(trail[1], PayoutEvent::operator(40.0, Cause::Block(1), 1));
    }

    #[test]
    fn simple_pplns_rejects_changing_schedule() {
        let cfg = EngineConfig::PplnsSimple {
            f: 0.0,
            n: 10,
            assume_constant: false,
        };
        let events = [ev(0, 1, 0.01, false), ev(1, 1, 0.005, false)];
        assert_eq!(payout_trail(&events, &cfg), Err(Error::NonConstantSchedule));
        let ok = EngineConfig::PplnsSimple {
            f: 0.0,
            n: 10,
            assume_constant: true,
        };
        assert!(payout_trail(&events, &ok).is_ok());
    }

    #[test]
    fn unit_pplns_full_window_share() {
        // p=0.01, X=0.1: the ten shares before the block are each fully inside.
        let cfg = EngineConfig::PplnsUnit { f: 0.0, x: 0.1 };
        let events: Vec<_> = (0..21).map(|i| ev(i, i as MinerId, 0.01, i == 20)).collect();
        let trail = payout_trail(&events, &cfg).unwrap();
        let paid: Vec<_> = trail
            .iter()
            .filter_map(|p| match p.recipient {
                Recipient::Miner(m) => Some((m, p.amount)),
                _ => None,
            })
            .collect();
        assert_eq!(paid.len(), 10);
        for (m, a) in &paid {
            assert!((10..20).contains(m));
            assert!((a - 5.0).abs() < 1e-9, "{a}");
        }
        assert!(miner_sum(&trail) <= 50.0 + 1e-9);
    }

    #[test]
    fn unit_pplns_pending_new_share_is_fair_value() {
        let mut u = UnitPplns::new(0.02, 1.0);
        let mut out = Vec::new();
        u.step(&ev(0, 4, 0.01, false), &mut out).unwrap();
        assert!((u.pending(4) - 0.98 * 0.5).abs() < 1e-12);
    }

    #[test]
    fn unit_pplns_pending_drops_by_payouts() {
        let mut u = UnitPplns::new(0.0, 0.05);
        let mut out = Vec::new();
        for i in 0..3 {
            u.step(&ev(i, 1, 0.01, false), &mut out).unwrap();
        }
        let before = u.pending(1);
        u.step(&ev(3, 2, 0.01, false), &mut out).unwrap();
        assert!((before - u.pending(1) - 3.0 * 0.01 * 50.0 * 0.01 / 0.05).abs() < 1e-12);
    }

    fn filled(f: f64, x: f64) -> UnitPplns {
        let mut u = UnitPplns::new(f, x);
        let mut out = Vec::new();
        for i in 0..400u64 {
            let p = if i % 3 == 0 { 0.004 } else { 0.01 };
            u.step(&ev(i, (i % 7) as MinerId, p, i % 97 == 96), &mut out).unwrap();
        }
        u
    }

    fn close(a: &[f64], b: &[f64]) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0), "{x} vs {y}");
        }
    }

    #[test]
    fn migrate_fee_keeps_pendings() {
        let mut u = filled(0.02, 1.0);
        let before = u.share_pendings();
        let a0: Vec<_> = u.shares().map(|s| s.a).collect();
        assert!(u.migrate(0.05, 1.0, MigrationStrategy::Scale, 400).unwrap().is_empty());
        close(&before, &u.share_pendings());
        for (a, s) in a0.iter().zip(u.shares()) {
            assert!((s.a - a * 0.98 / 0.95).abs() < 1e-12);
        }
    }

    #[test]
    fn migrate_window_scale_keeps_pendings() {
        let mut u = filled(0.0, 1.0);
        let before = u.share_pendings();
        let s0: Vec<_> = u.shares().copied().collect();
        u.migrate(0.0, 2.0, MigrationStrategy::Scale, 400).unwrap();
        close(&before, &u.share_pendings());
        for (old, new) in s0.iter().zip(u.shares()) {
            assert!((new.u - 2.0 * old.u).abs() < 1e-15);
            assert!((new.a - 0.5 * old.a).abs() < 1e-12);
        }
        let mut out = Vec::new();
        u.step(&ev(400, 1, 0.01, false), &mut out).unwrap();
    }

    #[test]
    fn migrate_window_keep_units_pays_outside_shares() {
        let mut u = filled(0.0, 2.0);
        let now = u.cumulative_units();
        let before: f64 = u.share_pendings().iter().sum();
        let outside: f64 = u
            .shares()
            .zip(u.share_pendings())
            .filter(|(s, _)| now - s.end() >= 0.5)
            .map(|(_, v)| v)
            .sum();
        assert!(outside > 0.0);
        let paid = u.migrate(0.0, 0.5, MigrationStrategy::KeepUnits, 400).unwrap();
        let paid_sum: f64 = paid.iter().map(|p| p.amount).sum();
        assert!((paid_sum - outside).abs() < 1e-9);
        let after: f64 = u.share_pendings().iter().sum();
        assert!((before - after - paid_sum).abs() < 1e-9);
        assert!(paid.iter().all(|p| p.cause == Cause::Immediate));
    }

    #[test]
    fn migrate_rejects_bad_parameters() {
        let mut u = filled(0.0, 1.0);
        assert!(u.migrate(1.0, 1.0, MigrationStrategy::Scale, 0).is_err());
        assert!(u.migrate(0.0, 0.0, MigrationStrategy::Scale, 0).is_err());
    }

    #[test]
    fn timeline_csv_header() {
        let u = filled(0.0, 0.3);
        let mut buf = Vec::new();
        u.write_timeline(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("U_T0,miner,u,a,paid_fraction\n"));
        assert_eq!(text.lines().count(), u.shares().count() + 1);
    }

    #[test]
    fn unit_pplns_prunes_old_shares() {
        let u = filled(0.0, 0.3);
        let now = u.cumulative_units();
        assert!(u.shares().all(|s| now - s.end() < 0.3));
    }

    #[test]
    fn shift_zero_blocks_pays_nothing() {
        let cfg = EngineConfig::PplnsShift { f: 0.0, x: 0.05, n: 3 };
        let events: Vec<_> = (0..20).map(|i| ev(i, 1, 0.01, false)).collect();
        assert!(payout_trail(&events, &cfg).unwrap().is_empty());
    }

    #[test]
    fn shift_payout_formula() {
        let mut s = ShiftPplns::new(0.0, 1.0, 2);
        let mut out = Vec::new();
        for i in 0..8 {
            s.step(&ev(i, (i % 2) as MinerId, 0.25, i == 7), &mut out).unwrap();
        }
        // Shift 1 (shares 4..7) holds the block; shifts 0 and 1 are paid S/(N·X₁).
        assert_eq!(s.shifts_completed(), 2);
        let total: f64 = out.iter().map(|p| p.amount).sum();
        assert!((total - 8.0 * 0.25 * 50.0 / 2.0).abs() < 1e-9);
        assert!(out.iter().all(|p| p.cause == Cause::ShiftEnd(1)));
        assert!(s.stored_shifts() <= 2);
    }

    #[test]
    fn pay_once_empty_backlog_operator_keeps() {
        let cfg = EngineConfig::PplnsPayOnce { f: 0.0, x: 0.5 };
        let trail = payout_trail(&[ev(0, 1, 0.01, true)], &cfg).unwrap();
        assert_eq!(trail, vec![PayoutEvent::operator(50.0, Cause::Block(0), 0)]);
    }

    #[test]
    fn pay_once_reaches_older_shares_on_rapid_blocks() {
        let mut po = PayOnce::new(0.0, 0.02);
        let mut out = Vec::new();
        for i in 0..5 {
            po.step(&ev(i, i as MinerId, 0.01, false), &mut out).unwrap();
        }
        po.step(&ev(5, 9, 0.01, true), &mut out).unwrap();
        let first: Vec<_> = out.drain(..).filter(|p| p.recipient != Recipient::Operator).collect();
        assert_eq!(first.iter().map(|p| p.recipient).collect::<Vec<_>>(), vec![Recipient::Miner(4), Recipient::Miner(3)]);
        po.step(&ev(6, 9, 0.01, true), &mut out).unwrap();
        let second: Vec<_> = out.iter().filter(|p| p.recipient != Recipient::Operator).map(|p| p.recipient).collect();
        assert_eq!(second, vec![Recipient::Miner(9), Recipient::Miner(2)]);
        assert!((po.backlog_units() - 0.03).abs() < 1e-12);
    }

    #[test]
    fn windowed_methods_conserve() {
        let events: Vec<_> = (0..3000)
            .map(|i| ev(i, (i % 5) as MinerId, if i < 1500 { 0.01 } else { 0.005 }, i % 83 == 82))
            .collect();
        for cfg in [
            EngineConfig::PplnsUnit { f: 0.01, x: 2.0 },
            EngineConfig::PplnsPayOnce { f: 0.01, x: 0.5 },
            EngineConfig::PplnsShift { f: 0.01, x: 0.5, n: 4 },
        ] {
            let (engine, ledger) = replay(&events, &cfg).unwrap();
            let rep = conservation_check(&ledger, &engine);
            assert!(rep.passed, "{cfg:?}: {}", rep.message);
        }
    }
}
