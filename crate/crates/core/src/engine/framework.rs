//! The general unit-based framework: every share is paid from each later
//! block according to a decay function `r` of the units between them.

use std::any::Any;
use std::collections::VecDeque;

use super::config::DecaySpec;
use super::{Cause, MinerMap, PayoutEvent, RewardMethod};
use crate::accum::CompensatedSum;
use crate::error::{Error, Result};
use crate::stochastic::{MinerId, ShareEvent};

/// Exponential decay weight below which a share is dropped.
const EXP_NEGLIGIBLE: f64 = 1e-20;

/// A decay function `r` with `r(x) = 0` for `x < 0` and `∫r = 1`, together
/// with its first and second antiderivatives `R1`, `R2` (both 0 at 0).
#[derive(Debug, Clone, PartialEq)]
pub enum Decay {
    Step { x: f64 },
    Exponential { alpha: f64 },
    Linear { x: f64 },
    /// Piecewise linear through the knots; zero past the last one.
    Custom { knots: Vec<(f64, f64)>, r1: Vec<f64>, r2: Vec<f64> },
}

impl Decay {
    pub fn new(spec: &DecaySpec) -> Result<Self> {
        let positive = |name: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(v)
            } else {
                Err(Error::param(name, "must be positive and finite"))
            }
        };
        Ok(match spec {
            DecaySpec::Step { x } => Decay::Step { x: positive("x", *x)? },
            DecaySpec::Exponential { alpha } => Decay::Exponential {
                alpha: positive("alpha", *alpha)?,
            },
            DecaySpec::Linear { x } => Decay::Linear { x: positive("x", *x)? },
            DecaySpec::Custom { points } => Self::custom(points)?,
        })
    }

    fn custom(points: &[(f64, f64)]) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::param("points", "need at least two knots"));
        }
        if points[0].0 != 0.0 {
            return Err(Error::param("points", "first knot must be at x = 0"));
        }
        if points.iter().any(|&(x, r)| !x.is_finite() || !(r >= 0.0) || !r.is_finite()) {
            return Err(Error::param("points", "knots must be finite with r >= 0"));
        }
        if points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::param("points", "x must be strictly increasing"));
        }
        let mut r1 = vec![0.0];
        let mut r2 = vec![0.0];
        for w in points.windows(2) {
            let (h, a, b) = (w[1].0 - w[0].0, w[0].1, w[1].1);
            let (p1, p2) = (*r1.last().unwrap(), *r2.last().unwrap());
            r1.push(p1 + h * (a + b) / 2.0);
            r2.push(p2 + p1 * h + h * h * (2.0 * a + b) / 6.0);
        }
        let total = *r1.last().unwrap();
        if (total - 1.0).abs() > 1e-6 {
            return Err(Error::param("points", format!("integral of r is {total}, not 1")));
        }
        Ok(Decay::Custom {
            knots: points.to_vec(),
            r1,
            r2,
        })
    }

    /// Units beyond which `r` vanishes (infinite for exponential decay).
    pub fn support(&self) -> f64 {
        match self {
            Decay::Step { x } | Decay::Linear { x } => *x,
            Decay::Exponential { .. } => f64::INFINITY,
            Decay::Custom { knots, .. } => knots.last().unwrap().0,
        }
    }

    pub fn r(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        match self {
            Decay::Step { x } => {
                if t <= *x {
                    1.0 / x
                } else {
                    0.0
                }
            }
            Decay::Exponential { alpha } => alpha * (-alpha * t).exp(),
            Decay::Linear { x } => 2.0 * (x - t).max(0.0) / (x * x),
            Decay::Custom { knots, .. } => {
                let i = knots.partition_point(|k| k.0 <= t);
                if i >= knots.len() {
                    return 0.0;
                }
                let (x0, a) = knots[i - 1];
                let (x1, b) = knots[i];
                a + (b - a) * (t - x0) / (x1 - x0)
            }
        }
    }

    pub fn r2(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self {
            Decay::Step { x } => {
                if t <= *x {
                    t * t / (2.0 * x)
                } else {
                    t - x / 2.0
                }
            }
            Decay::Exponential { alpha } => t + (-alpha * t).exp_m1() / alpha,
            Decay::Linear { x } => {
                if t <= *x {
                    (x * t * t - t * t * t / 3.0) / (x * x)
                } else {
                    2.0 * x / 3.0 + (t - x)
                }
            }
            Decay::Custom { knots, r1, r2 } => {
                let i = knots.partition_point(|k| k.0 <= t) - 1;
                let d = t - knots[i].0;
                if i + 1 >= knots.len() {
                    return r2[i] + r1[i] * d;
                }
                let (x0, a) = knots[i];
                let (x1, b) = knots[i + 1];
                let h = x1 - x0;
                r2[i] + r1[i] * d + a * d * d / 2.0 + (b - a) * d * d * d / (6.0 * h)
            }
        }
    }

    /// `∫₀^{p1}∫₀^{p2} r(x+u+v) du dv`.
    pub fn delta2(&self, x: f64, p1: f64, p2: f64) -> f64 {
        if let Decay::Exponential { alpha } = self {
            if x >= 0.0 {
                return (-alpha * x).exp() / alpha * (-alpha * p1).exp_m1() * (-alpha * p2).exp_m1();
            }
        }
        let v = self.r2(x + p1 + p2) - self.r2(x + p1) - self.r2(x + p2) + self.r2(x);
        v.max(0.0)
    }

    /// True once a share `y` units behind the head can never be paid again.
    fn exhausted(&self, y: f64) -> bool {
        match self {
            Decay::Exponential { alpha } => (-alpha * y).exp() < EXP_NEGLIGIBLE,
            _ => y >= self.support(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Slot {
    miner: MinerId,
    start: f64,
    width: f64,
    /// Amplifier, `(1-f)B` per unit of the share.
    amp: f64,
}

/// Unit-based framework with decay `r` and a void of `O` units after each
/// block.
#[derive(Debug, Clone)]
pub struct Framework {
    f: f64,
    decay: Decay,
    o: f64,
    head: CompensatedSum,
    slots: VecDeque<Slot>,
    void_fallbacks: u64,
}

impl Framework {
    pub fn new(f: f64, decay: Decay, o: f64) -> Self {
        Framework {
            f,
            decay,
            o,
            head: CompensatedSum::new(),
            slots: VecDeque::new(),
            void_fallbacks: 0,
        }
    }

    pub fn decay(&self) -> &Decay {
        &self.decay
    }

    /// Blocks where `0 < O < p` made the winning-share split impossible, so
    /// the share was kept whole before the void.
    pub fn void_fallbacks(&self) -> u64 {
        self.void_fallbacks
    }

    pub fn timeline_len(&self) -> usize {
        self.slots.len()
    }

    fn slot_pending(&self, s: &Slot, head: f64) -> f64 {
        let y = head - (s.start + s.width);
        if self.decay.exhausted(y) {
            return 0.0;
        }
        let rest = s.width - (self.decay.r2(y + s.width) - self.decay.r2(y));
        s.amp * rest.max(0.0)
    }

    fn prune(&mut self) {
        let head = self.head.value();
        while let Some(s) = self.slots.front() {
            let y = head - (s.start + s.width);
            if self.decay.exhausted(y) {
                self.slots.pop_front();
            } else {
                break;
            }
        }
    }
}

impl RewardMethod for Framework {
    fn step(&mut self, ev: &ShareEvent, out: &mut Vec<PayoutEvent>) -> Result<()> {
        let start = self.head.value();
        let p = ev.p_eff;
        let amp = (1.0 - self.f) * ev.reward;
        if ev.is_block {
            let mut tally: MinerMap<f64> = MinerMap::default();
            for s in self.slots.iter().rev() {
                let x = start - (s.start + s.width);
                if self.decay.exhausted(x) {
                    break;
                }
                let v = s.amp / p * self.decay.delta2(x, s.width, p);
                *tally.entry(s.miner) += v;
            }
            *tally.entry(ev.miner) += amp / p * self.decay.delta2(-p, p, p);
            let cause = Cause::Block(ev.index);
            let mut paid = 0.0;
            for (m, &v) in tally.iter() {
                if v > 0.0 {
                    out.push(PayoutEvent::miner(m, v, cause, ev.index));
                    paid += v;
                }
            }
            out.push(PayoutEvent::operator(ev.reward - paid, cause, ev.index));

            if self.o.is_infinite() {
                self.slots.clear();
                self.head.add(p);
            } else if self.o == 0.0 {
                self.push(ev.miner, start, p, amp);
            } else if self.o < p {
                self.void_fallbacks += 1;
                self.push(ev.miner, start, p, amp);
                self.head.add(self.o);
            } else {
                self.push(ev.miner, start, p, amp / 2.0);
                self.head.add(self.o - p);
                let second = self.head.value();
                self.push(ev.miner, second, p, amp / 2.0);
            }
        } else {
            self.push(ev.miner, start, p, amp);
        }
        self.prune();
        Ok(())
    }

    fn pending(&self, miner: MinerId) -> f64 {
        let head = self.head.value();
        self.slots
            .iter()
            .filter(|s| s.miner == miner)
            .map(|s| self.slot_pending(s, head))
            .sum()
    }

    fn pending_all(&self) -> Vec<(MinerId, f64)> {
        let head = self.head.value();
        let mut map: MinerMap<f64> = MinerMap::default();
        for s in &self.slots {
            *map.entry(s.miner) += self.slot_pending(s, head);
        }
        map.sorted(|v| *v)
    }

    fn settles_rounds(&self) -> bool {
        true
    }

    fn as_any(&self) -> &dyn Any {
        self
    }

    fn as_any_mut(&mut self) -> &mut dyn Any {
        self
    }
}

impl Framework {
    fn push(&mut self, miner: MinerId, start: f64, width: f64, amp: f64) {
        self.slots.push_back(Slot {
            miner,
            start,
            width,
            amp,
        });
        self.head.add(width);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{payout_trail, EngineConfig, Recipient, Void};
    use crate::oracles::quad::integrate;

    fn decays() -> Vec<Decay> {
        vec![
            Decay::Step { x: 0.7 },
            Decay::Exponential { alpha: 2.5 },
            Decay::Linear { x: 1.3 },
            Decay::new(&DecaySpec::Custom {
                points: vec![(0.0, 1.0), (0.5, 1.0), (1.5, 0.0)],
            })
            .unwrap(),
        ]
    }

    #[test]
    fn custom_integral_validated() {
        let bad = DecaySpec::Custom {
            points: vec![(0.0, 1.0), (2.0, 1.0)],
        };
        assert!(Decay::new(&bad).is_err());
        let shifted = DecaySpec::Custom {
            points: vec![(0.1, 1.0), (1.1, 1.0)],
        };
        assert!(Decay::new(&shifted).is_err());
        let negative = DecaySpec::Custom {
            points: vec![(0.0, 2.0), (1.0, -0.5), (2.0, 0.0)],
        };
        assert!(Decay::new(&negative).is_err());
    }

    const BREAKS: [f64; 5] = [0.0, 0.5, 0.7, 1.3, 1.5];

    /// Adaptive quadrature split at the kinks of the test decays.
    fn piecewise(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        shifted(f, a, b, 0.0, tol)
    }

    fn shifted(f: impl Fn(f64) -> f64, a: f64, b: f64, off: f64, tol: f64) -> f64 {
        let mut pts = vec![a];
        pts.extend(BREAKS.iter().map(|x| x - off).filter(|&x| x > a && x < b));
        pts.push(b);
        pts.windows(2)
            .map(|w| integrate(&f, w[0], w[1], tol, tol).unwrap().value)
            .sum()
    }

    #[test]
    fn r2_matches_quadrature() {
        for d in decays() {
            for &t in &[0.05, 0.4, 0.7, 1.0, 1.6, 3.0] {
                let r1 = |s: f64| piecewise(|u| d.r(u), 0.0, s, 1e-14);
                let q = piecewise(r1, 0.0, t, 1e-12);
                assert!((d.r2(t) - q).abs() < 1e-9, "{d:?} t={t}: {} vs {q}", d.r2(t));
            }
        }
    }

    #[test]
    fn delta2_matches_double_integral() {
        for d in decays() {
            for &(x, p1, p2) in &[(0.0, 0.1, 0.05), (0.3, 0.2, 0.1), (-0.05, 0.05, 0.05), (0.6, 0.08, 0.05)] {
                let inner = |u: f64| shifted(|v| d.r(x + u + v), 0.0, p2, x + u, 1e-15);
                let q = shifted(inner, 0.0, p1, x, 1e-13);
                assert!((d.delta2(x, p1, p2) - q).abs() < 1e-9, "{d:?} {x} {p1} {p2}");
            }
        }
    }

    fn fw(decay: DecaySpec, o: f64) -> EngineConfig {
        EngineConfig::Framework {
            f: 0.0,
            decay,
            o: Void(o),
        }
    }

    #[test]
    fn winner_paid_half_window_for_step() {
        let trail = payout_trail(
            &[ShareEvent::new(0, 3, 0.01, 50.0, true)],
            &fw(DecaySpec::Step { x: 1.0 }, 0.0),
        )
        .unwrap();
        assert!((trail[0].amount - 50.0 * 0.01 / 2.0).abs() < 1e-12);
    }

    #[test]
    fn inside_window_share_paid_a_p1_over_x() {
        let events = [
            ShareEvent::new(0, 1, 0.01, 50.0, false),
            ShareEvent::new(1, 2, 0.01, 50.0, false),
            ShareEvent::new(2, 3, 0.01, 50.0, true),
        ];
        let trail = payout_trail(&events, &fw(DecaySpec::Step { x: 1.0 }, 0.0)).unwrap();
        let first = trail.iter().find(|p| p.recipient == Recipient::Miner(1)).unwrap();
        assert!((first.amount - 0.5).abs() < 1e-9);
    }

    #[test]
    fn void_fallback_flagged() {
        let mut f = Framework::new(0.0, Decay::Step { x: 1.0 }, 0.005);
        let mut out = Vec::new();
        f.step(&ShareEvent::new(0, 1, 0.01, 50.0, true), &mut out).unwrap();
        assert_eq!(f.void_fallbacks(), 1);
        let mut g = Framework::new(0.0, Decay::Step { x: 1.0 }, 0.5);
        g.step(&ShareEvent::new(0, 1, 0.01, 50.0, true), &mut out).unwrap();
        assert_eq!(g.void_fallbacks(), 0);
        assert_eq!(g.timeline_len(), 2);
    }

    #[test]
    fn infinite_void_clears_timeline() {
        let mut f = Framework::new(0.0, Decay::Exponential { alpha: 1.0 }, f64::INFINITY);
        let mut out = Vec::new();
        for i in 0..10 {
            f.step(&ShareEvent::new(i, 1, 0.01, 50.0, i == 9), &mut out).unwrap();
        }
        assert_eq!(f.timeline_len(), 0);
        assert_eq!(f.pending(1), 0.0);
    }

    #[test]
    fn fresh_share_value_is_fair() {
        // Pending after a non-block share plus the chance it had of being the
        // block adds up to (1-f)pB.
        let p = 0.02;
        for d in decays() {
            let a = 0.9 * 50.0;
            let own = a / p * d.delta2(-p, p, p);
            let mut f = Framework::new(0.1, d, 0.0);
            let mut out = Vec::new();
            f.step(&ShareEvent::new(0, 1, p, 50.0, false), &mut out).unwrap();
            assert!((f.pending(1) + p * own - a * p).abs() < 1e-12);
        }
    }

    #[test]
    fn pruned_beyond_support() {
        let mut f = Framework::new(0.0, Decay::Step { x: 0.1 }, 0.0);
        let mut out = Vec::new();
        for i in 0..100 {
            f.step(&ShareEvent::new(i, 1, 0.01, 50.0, false), &mut out).unwrap();
        }
        assert!(f.timeline_len() <= 11);
    }
}
