use serde::{Deserialize, Serialize};

use crate::agents::Policy;
use crate::engine::EngineConfig;
use crate::error::{Error, Result};
use crate::stochastic::{DifficultySchedule, RewardSchedule};

/// A constant or a list of `[start_index, value]` segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Schedule {
    Constant(f64),
    Segments(Vec<(u64, f64)>),
}

impl Schedule {
    fn segments(&self) -> Vec<(u64, f64)> {
        match self {
            Schedule::Constant(v) => vec![(0, *v)],
            Schedule::Segments(s) => s.clone(),
        }
    }

    pub fn difficulty(&self) -> Result<DifficultySchedule> {
        DifficultySchedule::new(self.segments())
    }

    pub fn reward(&self) -> Result<RewardSchedule> {
        RewardSchedule::new(self.segments())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoolConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub engine: EngineConfig,
    /// Miners cannot tell blocks from shares (see `oblivious`).
    #[serde(default)]
    pub oblivious: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub hashrate: f64,
    #[serde(default = "one")]
    pub share_difficulty: f64,
    pub policy: Policy,
}

/// Single-share sampling: every `stride`-th eligible pool share between
/// global steps `warmup` and `horizon - cooldown` is followed individually.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tagging {
    pub stride: u64,
    #[serde(default)]
    pub warmup: u64,
    #[serde(default)]
    pub cooldown: u64,
    /// Restrict to shares from these agents.
    #[serde(default)]
    pub agents: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    /// Record `(pool event index, R)` every this many pool events (replica 0).
    #[serde(default)]
    pub buffer_trace: Option<u64>,
    /// Keep every pool's event log (replica 0) for replay.
    #[serde(default)]
    pub event_log: bool,
    /// Write per-tag rows.
    #[serde(default)]
    pub tags: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub pools: Vec<PoolConfig>,
    pub agents: Vec<AgentConfig>,
    /// Hashrate outside every simulated pool and agent; its blocks only
    /// matter to agents that hold blocks back.
    #[serde(default)]
    pub outside_hashrate: f64,
    pub difficulty: Schedule,
    pub reward: Schedule,
    /// Global share steps per replica.
    pub horizon: u64,
    #[serde(default = "one_u32")]
    pub replicas: u32,
    #[serde(default)]
    pub seed: u64,
    /// Network shares per second, for methods that use time.
    #[serde(default = "one")]
    pub share_rate: f64,
    #[serde(default)]
    pub tagging: Option<Tagging>,
    #[serde(default)]
    pub outputs: Outputs,
}

fn one() -> f64 {
    1.0
}

fn one_u32() -> u32 {
    1
}

fn at(path: String, e: Error) -> Error {
    let message = match e {
        Error::InvalidParameter { name, reason } => format!("`{name}` {reason}"),
        other => other.to_string(),
    };
    Error::Config { path, message }
}

impl ScenarioConfig {
    /// Parse and validate; errors name the offending field.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ScenarioConfig = serde_path_to_error::deserialize(de).map_err(|e| Error::Config {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.difficulty
            .difficulty()
            .map_err(|e| at("difficulty".into(), e))?;
        self.reward.reward().map_err(|e| at("reward".into(), e))?;
        for (i, p) in self.pools.iter().enumerate() {
            p.engine
                .validate()
                .map_err(|e| at(format!("pools[{i}].engine"), e))?;
        }
        for (i, a) in self.agents.iter().enumerate() {
            if !(a.hashrate >= 0.0) || !a.hashrate.is_finite() {
                return Err(at(
                    format!("agents[{i}].hashrate"),
                    Error::param("hashrate", "must be finite and >= 0"),
                ));
            }
            if !(a.share_difficulty >= 1.0) || !a.share_difficulty.is_finite() {
                return Err(at(
                    format!("agents[{i}].share_difficulty"),
                    Error::param("share_difficulty", "must be >= 1"),
                ));
            }
            a.policy
                .validate(self.pools.len())
                .map_err(|e| at(format!("agents[{i}].policy"), e))?;
        }
        if !(self.outside_hashrate >= 0.0) || !self.outside_hashrate.is_finite() {
            return Err(at(
                "outside_hashrate".into(),
                Error::param("outside_hashrate", "must be finite and >= 0"),
            ));
        }
        if self.replicas == 0 {
            return Err(at("replicas".into(), Error::param("replicas", "must be at least 1")));
        }
        if !(self.share_rate > 0.0) {
            return Err(at("share_rate".into(), Error::param("share_rate", "must be positive")));
        }
        if let Some(t) = &self.tagging {
            if t.stride == 0 {
                return Err(at("tagging.stride".into(), Error::param("stride", "must be at least 1")));
            }
            for &a in t.agents.iter().flatten() {
                if a >= self.agents.len() {
                    return Err(at(
                        "tagging.agents".into(),
                        Error::param("agents", format!("no agent {a}")),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn agent_name(&self, i: usize) -> String {
        self.agents[i].name.clone().unwrap_or_else(|| format!("agent{i}"))
    }

    pub fn pool_name(&self, i: usize) -> String {
        self.pools[i].name.clone().unwrap_or_else(|| format!("pool{i}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{
        "pools": [{"engine": {"method": "pps", "f": 0.01}}],
        "agents": [{"hashrate": 1.0, "policy": {"kind": "constant", "pool": 0}}],
        "difficulty": 1000, "reward": 50, "horizon": 100
    }"#;

    #[test]
    fn parses_minimal() {
        let c = ScenarioConfig::from_json(BASE).unwrap();
        assert_eq!(c.replicas, 1);
        assert_eq!(c.agent_name(0), "agent0");
    }

    #[test]
    fn errors_name_the_field() {
        let bad = BASE.replace("\"pool\": 0", "\"pool\": 3");
        match ScenarioConfig::from_json(&bad) {
            Err(Error::Config { path, .. }) => assert_eq!(path, "agents[0].policy"),
            other => panic!("{other:?}"),
        }
        let typo = BASE.replace("\"horizon\"", "\"horizn\"");
        assert!(matches!(ScenarioConfig::from_json(&typo), Err(Error::Config { .. })));
        let deep = BASE.replace("\"f\": 0.01", "\"f\": \"x\"");
        match ScenarioConfig::from_json(&deep) {
            Err(Error::Config { path, .. }) => assert!(path.starts_with("pools[0].engine"), "{path}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn segment_schedule() {
        let c = ScenarioConfig::from_json(&BASE.replace("\"difficulty\": 1000", "\"difficulty\": [[0, 1000], [50, 500]]")).unwrap();
        assert_eq!(c.difficulty.difficulty().unwrap().difficulty_at(60), 500.0);
    }
}
