//! Best-effort PPS methods: MPPS, SMPPS and ESMPPS.

use std::any::Any;
use std::collections::BTreeMap;

use super::{Cause, MinerMap, PayoutEvent, RewardMethod};
use crate::error::Result;
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

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MppsBalance {
    pub pps: f64,
    pub prop: f64,
    pub paid: f64,
}

/// Maximum PPS: a miner is paid the smaller of its PPS and proportional
/// balances, released as soon as that minimum rises.
#[derive(Debug, Clone, Default)]
pub struct Mpps {
    f: f64,
    balances: MinerMap<MppsBalance>,
    round: MinerMap<u64>,
    round_total: u64,
}

impl Mpps {
    pub fn new(f: f64) -> Self {
        Mpps {
            f,
            ..Default::default()
        }
    }

    pub fn balance(&self, miner: MinerId) -> MppsBalance {
        self.balances.get(miner).copied().unwrap_or_default()
    }
}

fn release(b: &mut MppsBalance) -> f64 {
    let due = b.pps.min(b.prop) - b.paid;
    if due > 0.0 {
        b.paid += due;
        due
    } else {
        0.0
    }
}

impl RewardMethod for Mpps {
    fn step(&mut self, ev: &ShareEvent, out: &mut Vec<PayoutEvent>) -> Result<()> {
        let b = self.balances.entry(ev.miner);
        b.pps += (1.0 - self.f) * ev.p_eff * ev.reward;
        let now = release(b);
        if now > 0.0 {
            out.push(PayoutEvent::miner(ev.miner, now, Cause::Immediate, ev.index));
        }
        *self.round.entry(ev.miner) += 1;
        self.round_total += 1;
        if ev.is_block {
            let pot = (1.0 - self.f) * ev.reward;
            let n = self.round_total as f64;
            for (m, &k) in self.round.iter() {
                let b = self.balances.entry(m);
                b.prop += pot * k as f64 / n;
                let now = release(b);
                if now > 0.0 {
                    out.push(PayoutEvent::miner(m, now, Cause::Block(ev.index), ev.index));
                }
            }
            self.round.clear();
            self.round_total = 0;
        }
        Ok(())
    }

    fn pending(&self, _miner: MinerId) -> f64 {
        0.0
    }

    fn pending_all(&self) -> Vec<(MinerId, f64)> {
        Vec::new()
    }

    fn risk_free(&self) -> bool {
        true
    }

    any_impl!();
}

/// Shared maximum PPS: PPS out of a common buffer `R`; when `R < 0` each
/// block is split in proportion to the outstanding dues.
#[derive(Debug, Clone)]
pub struct Smpps {
    f: f64,
    dues: MinerMap<f64>,
    r: f64,
    constant_buffer: Option<f64>,
}

impl Smpps {
    /// With `constant_buffer = Some(R0)` the buffer is pinned at `R0 < 0` and
    /// every block pays each due `wB/(-R0)`.
    pub fn new(f: f64, constant_buffer: Option<f64>) -> Self {
        Smpps {
            f,
            dues: MinerMap::default(),
            r: constant_buffer.unwrap_or(0.0),
            constant_buffer,
        }
    }

    pub fn due(&self, miner: MinerId) -> f64 {
        self.dues.get(miner).copied().unwrap_or(0.0)
    }

    pub fn total_dues(&self) -> f64 {
        self.dues.iter().map(|(_, w)| *w).sum()
    }
}

impl RewardMethod for Smpps {
    fn step(&mut self, ev: &ShareEvent, out: &mut Vec<PayoutEvent>) -> Result<()> {
        let v = (1.0 - self.f) * ev.p_eff * ev.reward;
        let w = self.dues.entry(ev.miner);
        if self.constant_buffer.is_some() {
            *w += v;
        } else {
            let before = self.r;
            self.r -= v;
            let now = if before > 0.0 { v.min(before) } else { 0.0 };
            *w += v - now;
            if now > 0.0 {
                out.push(PayoutEvent::miner(ev.miner, now, Cause::Immediate, ev.index));
            }
        }
        if ev.is_block {
            let cause = Cause::Block(ev.index);
            let b = ev.reward;
            let scale = match self.constant_buffer {
                Some(r0) => b / -r0,
                None => {
                    let total = self.total_dues();
                    self.r += b;
                    if total > 0.0 {
                        b.min(total) / total
                    } else {
                        0.0
                    }
                }
            };
            if scale > 0.0 {
                for (m, w) in self.dues.iter_mut() {
                    let pay = (*w * scale).min(*w);
                    if pay > 0.0 {
                        out.push(PayoutEvent::miner(m, pay, cause, ev.index));
                        *w -= pay;
                    }
                }
                self.dues.retain(|w| *w > 0.0);
            }
        }
        Ok(())
    }

    fn pending(&self, miner: MinerId) -> f64 {
        self.due(miner)
    }

    fn pending_all(&self) -> Vec<(MinerId, f64)> {
        self.dues.sorted(|w| *w)
    }

    fn buffer(&self) -> Option<f64> {
        Some(self.r)
    }

    fn risk_free(&self) -> bool {
        self.constant_buffer.is_none()
    }

    any_impl!();
}

#[derive(Debug, Clone, Default)]
struct Level {
    worth: f64,
    members: MinerMap<f64>,
}

/// Equalized SMPPS: revenue raises the lowest paid fraction first.
#[derive(Debug, Clone)]
pub struct Esmpps {
    f: f64,
    /// Groups of shares keyed by paid fraction (as `f64` bits, which sort
    /// like the values for nonnegative floats).
    levels: BTreeMap<u64, Level>,
    cash: f64,
}

impl Esmpps {
    pub fn new(f: f64) -> Self {
        Esmpps {
            f,
            levels: BTreeMap::new(),
            cash: 0.0,
        }
    }

    /// Unspent revenue held by the pool.
    pub fn cash(&self) -> f64 {
        self.cash
    }

    /// `(paid fraction, total worth)` of every level, lowest first.
    pub fn levels(&self) -> Vec<(f64, f64)> {
        self.levels
            .iter()
            .map(|(k, l)| (f64::from_bits(*k), l.worth))
            .collect()
    }

    fn merge_into(&mut self, key: u64, level: Level) {
        let dst = self.levels.entry(key).or_default();
        dst.worth += level.worth;
        for (m, &w) in level.members.iter() {
            *dst.members.entry(m) += w;
        }
    }

    /// Spend cash raising the lowest levels; returns per-miner payments.
    fn fill(&mut self) -> MinerMap<f64> {
        let mut paid: MinerMap<f64> = MinerMap::default();
        while self.cash > 0.0 {
            let Some((&key, _)) = self.levels.iter().next() else { break };
            let phi = f64::from_bits(key);
            let next = self
                .levels
                .keys()
                .nth(1)
                .map_or(1.0, |k| f64::from_bits(*k));
            let level = self.levels.remove(&key).unwrap();
            let cost = level.worth * (next - phi);
            let (rise, target) = if cost <= self.cash {
                self.cash -= cost;
                (next - phi, next)
            } else {
                let d = self.cash / level.worth;
                self.cash = 0.0;
                (d, (phi + d).min(1.0))
            };
            for (m, &w) in level.members.iter() {
                *paid.entry(m) += w * rise;
            }
            if target < 1.0 {
                self.merge_into(target.to_bits(), level);
            }
        }
        paid
    }
}

impl RewardMethod for Esmpps {
    fn step(&mut self, ev: &ShareEvent, out: &mut Vec<PayoutEvent>) -> Result<()> {
        let v = (1.0 - self.f) * ev.p_eff * ev.reward;
        if v > 0.0 {
            let mut fresh = Level::default();
            fresh.worth = v;
            *fresh.members.entry(ev.miner) = v;
            self.merge_into(0f64.to_bits(), fresh);
        }
        let cause = if ev.is_block {
            self.cash += ev.reward;
            Cause::Block(ev.index)
        } else {
            Cause::Immediate
        };
        if self.cash > 0.0 {
            for (m, &a) in self.fill().iter() {
                if a > 0.0 {
                    out.push(PayoutEvent::miner(m, a, cause, ev.index));
                }
            }
        }
        Ok(())
    }

    fn pending(&self, miner: MinerId) -> f64 {
        self.levels
            .iter()
            .filter_map(|(k, l)| l.members.get(miner).map(|w| w * (1.0 - f64::from_bits(*k))))
            .sum()
    }

    fn pending_all(&self) -> Vec<(MinerId, f64)> {
        let mut map: MinerMap<f64> = MinerMap::default();
        for (k, l) in &self.levels {
            let left = 1.0 - f64::from_bits(*k);
            for (m, &w) in l.members.iter() {
                *map.entry(m) += w * left;
            }
        }
        map.sorted(|v| *v)
    }

    fn risk_free(&self) -> bool {
        true
    }

    any_impl!();
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{conservation_check, payout_trail, replay, EngineConfig};

    fn ev(i: u64, miner: MinerId, block: bool) -> ShareEvent {
        ShareEvent::new(i, miner, 0.01, 50.0, block)
    }

    #[test]
    fn mpps_lucky_start_capped_by_pps() {
        let trail = payout_trail(&[ev(0, 1, true)], &EngineConfig::Mpps { f: 0.0 }).unwrap();
        let total: f64 = trail.iter().map(|p| p.amount).sum();
        assert!((total - 0.5).abs() < 1e-12);
    }

    #[test]
    fn mpps_paid_never_exceeds_min_balance() {
        let mut m = Mpps::new(0.01);
        let mut out = Vec::new();
        for i in 0..500 {
            m.step(&ev(i, (i % 3) as MinerId, i % 41 == 40), &mut out).unwrap();
            for k in 0..3 {
                let b = m.balance(k);
                assert!(b.paid <= b.pps.min(b.prop) + 1e-12);
            }
        }
    }

    #[test]
    fn smpps_positive_buffer_is_pps() {
        let mut s = Smpps::new(0.0, None);
        let mut out = Vec::new();
        s.step(&ev(0, 1, true), &mut out).unwrap();
        out.clear();
        for i in 1..20 {
            s.step(&ev(i, 2, false), &mut out).unwrap();
        }
        assert_eq!(out.len(), 19);
        assert!(out.iter().all(|p| (p.amount - 0.5).abs() < 1e-12 && p.cause == Cause::Immediate));
    }

    #[test]
    fn smpps_dues_plus_buffer_identity() {
        let events: Vec<_> = (0..2000).map(|i| ev(i, (i % 4) as MinerId, i % 137 == 5)).collect();
        let (engine, ledger) = replay(&events, &EngineConfig::Smpps { f: 0.0, constant_buffer: None }).unwrap();
        let s = engine.method::<Smpps>().unwrap();
        let lhs = s.total_dues() + engine.buffer().unwrap();
        assert!((lhs - (ledger.revenue() - ledger.paid())).abs() < 1e-9);
        assert!((s.total_dues() - (-engine.buffer().unwrap()).max(0.0)).abs() < 1e-9);
        assert!(conservation_check(&ledger, &engine).passed);
    }

    #[test]
    fn smpps_constant_buffer_pays_fraction() {
        let mut s = Smpps::new(0.0, Some(-500.0));
        let mut out = Vec::new();
        s.step(&ev(0, 1, false), &mut out).unwrap();
        s.step(&ev(1, 2, true), &mut out).unwrap();
        assert!(out.iter().all(|p| (p.amount - 0.05).abs() < 1e-12));
        assert_eq!(s.buffer(), Some(-500.0));
    }

    #[test]
    fn esmpps_water_fill_example() {
        // Two shares worth 1 at fractions 0.2 and 0.8; budget 0.4 lifts the
        // lower one to 0.6.
        let mut e = Esmpps::new(0.0);
        let mut a = Level::default();
        a.worth = 1.0;
        *a.members.entry(1) = 1.0;
        let mut b = Level::default();
        b.worth = 1.0;
        *b.members.entry(2) = 1.0;
        e.merge_into(0.2f64.to_bits(), a);
        e.merge_into(0.8f64.to_bits(), b);
        e.cash = 0.4;
        let paid = e.fill();
        assert!((paid.get(1).unwrap() - 0.4).abs() < 1e-12);
        assert!(paid.get(2).is_none());
        let lv = e.levels();
        assert!((lv[0].0 - 0.6).abs() < 1e-12 && (lv[1].0 - 0.8).abs() < 1e-12);
    }

    #[test]
    fn esmpps_ample_budget_pays_all() {
        let events: Vec<_> = (0..10).map(|i| ev(i, 1, i == 9)).collect();
        let (engine, ledger) = replay(&events, &EngineConfig::Esmpps { f: 0.0 }).unwrap();
        assert!((ledger.miner_total(1) - 5.0).abs() < 1e-12);
        assert_eq!(engine.pending(1), 0.0);
        let e = engine.method::<Esmpps>().unwrap();
        assert!((e.cash() - 45.0).abs() < 1e-12);
        let next = payout_trail(&[ev(0, 3, false)], &EngineConfig::Esmpps { f: 0.0 }).unwrap();
        assert!(next.is_empty());
    }

    #[test]
    fn buffer_methods_conserve() {
        let events: Vec<_> = (0..5000).map(|i| ev(i, (i % 6) as MinerId, i % 113 == 50 || i % 89 == 3)).collect();
        for cfg in [
            EngineConfig::Mpps { f: 0.01 },
            EngineConfig::Smpps { f: 0.01, constant_buffer: None },
            EngineConfig::Esmpps { f: 0.01 },
        ] {
            let (engine, ledger) = replay(&events, &cfg).unwrap();
            let rep = conservation_check(&ledger, &engine);
            assert!(rep.passed, "{cfg:?}: {}", rep.message);
        }
    }
}
