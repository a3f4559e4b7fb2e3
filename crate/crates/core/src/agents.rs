//! Miner behavior policies. Every share an agent produces is routed to one
//! destination, so an agent never spends more than its hashrate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracles;
use crate::stochastic::ShareEvent;

/// Where an agent sends one share.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Pool(usize),
    /// Mined alone; credited its expected value `pB`.
    Solo,
    /// Hashrate switched off for this share.
    Idle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Policy {
    /// Always mine for one pool.
    Constant { pool: usize },
    /// Mine `on` shares, then idle for `off` shares, repeating.
    Intermittent { pool: usize, on: u64, off: u64 },
    /// Mine for the pool with the youngest round; once every round is older
    /// than `x0` (in difficulty units) go solo if `fallback`.
    PropHopper {
        pools: Vec<usize>,
        #[serde(default)]
        x0: Option<f64>,
        #[serde(default = "yes")]
        fallback: bool,
    },
    /// Worst case for honest miners: at every round start the pool instantly
    /// receives `round(x0·D)` shares owned by this agent.
    SaturatingHopper {
        pool: usize,
        #[serde(default)]
        x0: Option<f64>,
    },
    /// Mine while the pool buffer is positive, solo otherwise.
    BufferHopper { pool: usize },
    /// Mine for the pool but never submit a block it can recognise.
    Saboteur { pool: usize },
    /// Split work over `pools`; on finding a block, hold it and mine only
    /// for that pool for `ambush` global share steps, then release it.
    LieInWait { pools: Vec<usize>, ambush: u64 },
    Solo {},
}

fn yes() -> bool {
    true
}

impl Policy {
    pub fn validate(&self, n_pools: usize) -> Result<()> {
        let check = |p: usize| {
            if p < n_pools {
                Ok(())
            } else {
                Err(Error::param("pool", format!("index {p} but only {n_pools} pools")))
            }
        };
        match self {
            Policy::Constant { pool }
            | Policy::BufferHopper { pool }
            | Policy::Saboteur { pool } => check(*pool),
            Policy::Intermittent { pool, on, .. } => {
                if *on == 0 {
                    return Err(Error::param("on", "must be at least 1"));
                }
                check(*pool)
            }
            Policy::SaturatingHopper { pool, x0 } => {
                if let Some(x) = x0 {
                    if !(*x >= 0.0) {
                        return Err(Error::param("x0", "must be >= 0"));
                    }
                }
                check(*pool)
            }
            Policy::PropHopper { pools, x0, .. } => {
                if pools.is_empty() {
                    return Err(Error::param("pools", "need at least one pool"));
                }
                if let Some(x) = x0 {
                    if !(*x > 0.0) {
                        return Err(Error::param("x0", "must be positive"));
                    }
                }
                pools.iter().try_for_each(|p| check(*p))
            }
            Policy::LieInWait { pools, .. } => {
                if pools.is_empty() {
                    return Err(Error::param("pools", "need at least one pool"));
                }
                pools.iter().try_for_each(|p| check(*p))
            }
            Policy::Solo {} => Ok(()),
        }
    }

    /// Hopping threshold, defaulting to the optimal one for a single pool.
    pub fn threshold(&self) -> Result<f64> {
        match self {
            Policy::PropHopper { x0: Some(x), .. } | Policy::SaturatingHopper { x0: Some(x), .. } => Ok(*x),
            _ => oracles::prop_hop_threshold(),
        }
    }
}

/// What an agent may see of a pool.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PoolObservation {
    /// Shares since the pool's last block.
    pub round_shares: u64,
    /// Round age in difficulty units, `p·I`.
    pub x: f64,
    pub buffer: Option<f64>,
    pub p: f64,
    pub reward: f64,
}

pub fn prop_hopper_decide(obs: &[PoolObservation], pools: &[usize], x0: f64, fallback: bool) -> Target {
    let best = pools
        .iter()
        .copied()
        .min_by(|a, b| obs[*a].x.total_cmp(&obs[*b].x))
        .expect("hopper needs a pool");
    if fallback && obs[best].x > x0 {
        Target::Solo
    } else {
        Target::Pool(best)
    }
}

/// Mine iff the buffer is positive.
pub fn buffer_hopper_decide(obs: &PoolObservation) -> bool {
    obs.buffer.is_some_and(|r| r > 0.0)
}

/// The pool only learns of a saboteur's block if the saboteur cannot tell
/// blocks from shares.
pub fn saboteur_filter(mut ev: ShareEvent, oblivious: bool) -> ShareEvent {
    if !oblivious {
        ev.is_block = false;
    }
    ev
}

/// A block held back by a lie-in-wait agent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeldBlock {
    pub pool: usize,
    pub deadline: u64,
    pub d: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LiwPhase {
    Waiting { next: usize },
    Ambush(HeldBlock),
}

/// Per-agent runtime state.
#[derive(Debug, Clone)]
pub struct AgentState {
    pub policy: Policy,
    pub shares_seen: u64,
    pub liw: LiwPhase,
    x0: f64,
}

impl AgentState {
    pub fn new(policy: Policy) -> Result<Self> {
        let x0 = match policy {
            Policy::PropHopper { .. } | Policy::SaturatingHopper { .. } => policy.threshold()?,
            _ => f64::NAN,
        };
        Ok(AgentState {
            policy,
            shares_seen: 0,
            liw: LiwPhase::Waiting { next: 0 },
            x0,
        })
    }

    /// Hopping threshold in difficulty units (NaN for non-hoppers).
    pub fn x0(&self) -> f64 {
        self.x0
    }

    /// Route the agent's next share.
    pub fn decide(&mut self, obs: &[PoolObservation]) -> Target {
        let k = self.shares_seen;
        self.shares_seen += 1;
        match &self.policy {
            Policy::Constant { pool } | Policy::Saboteur { pool } => Target::Pool(*pool),
            Policy::Intermittent { pool, on, off } => {
                if k % (on + off) < *on {
                    Target::Pool(*pool)
                } else {
                    Target::Idle
                }
            }
            Policy::PropHopper { pools, fallback, .. } => {
                prop_hopper_decide(obs, pools, self.x0, *fallback)
            }
            Policy::SaturatingHopper { .. } => Target::Idle,
            Policy::BufferHopper { pool } => {
                if buffer_hopper_decide(&obs[*pool]) {
                    Target::Pool(*pool)
                } else {
                    Target::Solo
                }
            }
            Policy::LieInWait { pools, .. } => match &mut self.liw {
                LiwPhase::Ambush(h) => Target::Pool(h.pool),
                LiwPhase::Waiting { next } => {
                    let p = pools[*next % pools.len()];
                    *next = (*next + 1) % pools.len();
                    Target::Pool(p)
                }
            },
            Policy::Solo {} => Target::Solo,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(x: f64) -> PoolObservation {
        PoolObservation {
            x,
            ..Default::default()
        }
    }

    #[test]
    fn hopper_below_threshold_mines() {
        assert_eq!(prop_hopper_decide(&[obs(0.2)], &[0], 0.4348, true), Target::Pool(0));
        assert_eq!(prop_hopper_decide(&[obs(0.6)], &[0], 0.4348, true), Target::Solo);
        assert_eq!(prop_hopper_decide(&[obs(0.6)], &[0], 0.4348, false), Target::Pool(0));
        assert_eq!(
            prop_hopper_decide(&[obs(0.6), obs(0.1), obs(0.3)], &[0, 1, 2], 0.4348, true),
            Target::Pool(1)
        );
    }

    #[test]
    fn buffer_hopper_sign() {
        let mut o = obs(0.0);
        o.buffer = Some(10.0);
        assert!(buffer_hopper_decide(&o));
        o.buffer = Some(-10.0);
        assert!(!buffer_hopper_decide(&o));
    }

    #[test]
    fn saboteur_hides_blocks_unless_oblivious() {
        let ev = ShareEvent::new(0, 1, 0.01, 50.0, true);
        assert!(!saboteur_filter(ev, false).is_block);
        assert!(saboteur_filter(ev, true).is_block);
    }

    #[test]
    fn intermittent_duty_cycle() {
        let mut a = AgentState::new(Policy::Intermittent { pool: 0, on: 2, off: 1 }).unwrap();
        let got: Vec<_> = (0..6).map(|_| a.decide(&[obs(0.0)])).collect();
        use Target::*;
        assert_eq!(got, vec![Pool(0), Pool(0), Idle, Pool(0), Pool(0), Idle]);
    }

    #[test]
    fn lie_in_wait_round_robin() {
        let mut a = AgentState::new(Policy::LieInWait { pools: vec![0, 2], ambush: 5 }).unwrap();
        let o = [obs(0.0); 3];
        let got: Vec<_> = (0..4).map(|_| a.decide(&o)).collect();
        assert_eq!(got, vec![Target::Pool(0), Target::Pool(2), Target::Pool(0), Target::Pool(2)]);
        a.liw = LiwPhase::Ambush(HeldBlock { pool: 2, deadline: 9, d: 1.0 });
        assert_eq!(a.decide(&o), Target::Pool(2));
    }

    #[test]
    fn policy_json_and_validation() {
        let p: Policy = serde_json::from_str(r#"{"kind":"prop_hopper","pools":[0]}"#).unwrap();
        assert!(matches!(p, Policy::PropHopper { fallback: true, x0: None, .. }));
        assert!((p.threshold().unwrap() - 0.4348).abs() < 1e-3);
        assert!(p.validate(1).is_ok());
        assert!(p.validate(0).is_err());
        assert!(serde_json::from_str::<Policy>(r#"{"kind":"solo","x":1}"#).is_err());
    }
}
