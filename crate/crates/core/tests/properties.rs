//! Invariants over random share streams and parameters.

use proptest::prelude::*;

use poolsim::engine::{
    conservation_check, payout_trail, replay, DecaySpec, EngineConfig, MigrationStrategy, UnitPplns, Void,
};
use poolsim::oblivious::{MinerWork, ObliviousWorkPackage, Submission};
use poolsim::oracles;
use poolsim::stochastic::{
    generate_stream, read_replay_log, write_replay_log, DifficultySchedule, MinerSpec, RewardSchedule,
    RngStream, ShareEvent,
};

#[derive(Debug, Clone)]
struct StreamSpec {
    seed: u64,
    weights: Vec<f64>,
    shares: u64,
    difficulty: Vec<(u64, f64)>,
    reward: Vec<(u64, f64)>,
}

impl StreamSpec {
    fn events(&self) -> Vec<ShareEvent> {
        let miners: Vec<MinerSpec> = self
            .weights
            .iter()
            .enumerate()
            .map(|(i, &w)| MinerSpec::new(i as u32, w))
            .collect();
        let mut events = generate_stream(
            &mut RngStream::new(self.seed, 0),
            &DifficultySchedule::new(self.difficulty.clone()).unwrap(),
            &RewardSchedule::new(self.reward.clone()).unwrap(),
            &miners,
            self.shares,
        )
        .unwrap();
        for e in &mut events {
            *e = e.with_time(e.index as f64);
        }
        events
    }
}

/// Difficulty always changes mid-stream; `reward_drop` also halves `B` early.
fn stream(reward_drop: bool) -> impl Strategy<Value = StreamSpec> {
    (
        any::<u64>(),
        prop::collection::vec(0.1f64..1.0, 1..5),
        200u64..3000,
        prop::sample::select(vec![10.0, 50.0, 100.0]),
        prop::sample::select(vec![0.5, 2.0]),
        100u64..2000,
    )
        .prop_map(move |(seed, weights, shares, d, k, at)| {
            let difficulty = vec![(0, d), (at, d * k)];
            let reward = if reward_drop {
                vec![(0, 50.0), (at / 2, 25.0)]
            } else {
                vec![(0, 50.0)]
            };
            StreamSpec {
                seed,
                weights,
                shares,
                difficulty,
                reward,
            }
        })
}

/// Every engine that accepts changing `p` and `B`.
fn engines(f: f64, c: f64, x: f64) -> Vec<EngineConfig> {
    let geometric = |log_scale| EngineConfig::Geometric {
        f,
        c,
        log_scale,
        sentinel: -1e6,
    };
    vec![
        EngineConfig::Pps { f },
        EngineConfig::Proportional { f },
        EngineConfig::Slush { f, c: 50.0 },
        geometric(false),
        geometric(true),
        EngineConfig::Dgm {
            f,
            c,
            o: 0.5,
            r: None,
            alpha: None,
            log_scale: false,
            sentinel: -1e6,
        },
        EngineConfig::PplnsUnit { f, x },
        EngineConfig::PplnsShift { f, x, n: 3 },
        EngineConfig::PplnsPayOnce { f, x: x / 4.0 },
        EngineConfig::Framework {
            f,
            decay: DecaySpec::Linear { x },
            o: Void(0.0),
        },
        EngineConfig::Framework {
            f,
            decay: DecaySpec::Exponential { alpha: 1.0 / x },
            o: Void(f64::INFINITY),
        },
        EngineConfig::Mpps { f },
        EngineConfig::Smpps {
            f,
            constant_buffer: None,
        },
        EngineConfig::Esmpps { f },
        EngineConfig::Hybrid {
            weights: [0.6, 0.4],
            engines: vec![EngineConfig::PplnsUnit { f, x }, EngineConfig::Pps { f }],
        },
    ]
}

fn totals(events: &[ShareEvent], cfg: &EngineConfig) -> Vec<(u32, f64)> {
    let (engine, ledger) = replay(events, cfg).unwrap();
    let mut out: Vec<(u32, f64)> = ledger
        .miner_totals()
        .map(|(m, v)| (m, v + engine.pending(m)))
        .collect();
    out.sort_by_key(|x| x.0);
    out
}

fn max_rel_diff(a: &[(u32, f64)], b: &[(u32, f64)]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            assert_eq!(x.0, y.0);
            (x.1 - y.1).abs() / x.1.abs().max(1e-9)
        })
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn engines_conserve_money(spec in stream(false), f in 0.0f64..0.05, c in 0.05f64..0.5, x in 0.3f64..3.0) {
        let events = spec.events();
        for cfg in engines(f, c, x) {
            let (engine, ledger) = replay(&events, &cfg).unwrap();
            let report = conservation_check(&ledger, &engine);
            prop_assert!(report.passed, "{cfg:?}: {}", report.message);
            for (m, v) in engine.pending_all() {
                prop_assert!(v.is_finite() && v >= -1e-9, "{cfg:?}: miner {m} pending {v}");
            }
        }
    }

    #[test]
    fn reward_drops_keep_the_ledger_balanced(spec in stream(true), f in 0.0f64..0.05, x in 0.3f64..3.0) {
        // Shares carry the reward current at submission, so a lower block
        // reward can leave a risk-free pool briefly lending; nothing else moves.
        let events = spec.events();
        for cfg in engines(f, 0.2, x) {
            let (engine, ledger) = replay(&events, &cfg).unwrap();
            let report = conservation_check(&ledger, &engine);
            let other: Vec<&str> = report
                .message
                .split("; ")
                .filter(|m| !m.is_empty() && !m.starts_with("paid out more than received"))
                .collect();
            prop_assert!(other.is_empty(), "{cfg:?}: {other:?}");
        }
    }

    #[test]
    fn replay_is_deterministic_and_prefix_stable(spec in stream(true), cut in 0.0f64..1.0) {
        let events = spec.events();
        let k = (events.len() as f64 * cut) as usize;
        for cfg in engines(0.01, 0.2, 1.0) {
            let full = payout_trail(&events, &cfg).unwrap();
            prop_assert_eq!(&full, &payout_trail(&events, &cfg).unwrap());
            let prefix = payout_trail(&events[..k], &cfg).unwrap();
            prop_assert_eq!(&prefix[..], &full[..prefix.len()]);
            if let Some(next) = full.get(prefix.len()) {
                prop_assert!(next.at_index >= k as u64);
            }
        }
    }

    #[test]
    fn log_scale_and_dgm_reduce_to_geometric(spec in stream(true), c in 0.05f64..0.5) {
        let events = spec.events();
        let linear = totals(&events, &EngineConfig::Geometric { f: 0.0, c, log_scale: false, sentinel: -1e6 });
        let log = totals(&events, &EngineConfig::Geometric { f: 0.0, c, log_scale: true, sentinel: -1e6 });
        let dgm = totals(&events, &EngineConfig::Dgm {
            f: 0.0, c, o: 0.0, r: None, alpha: None, log_scale: false, sentinel: -1e6,
        });
        prop_assert!(max_rel_diff(&linear, &log) <= 1e-9);
        prop_assert!(max_rel_diff(&linear, &dgm) <= 1e-9);
    }

    #[test]
    fn unit_pplns_migration_keeps_pendings(
        spec in stream(false),
        f2 in 0.0f64..0.1,
        x2 in 0.2f64..4.0,
        keep_units in any::<bool>(),
    ) {
        let events = spec.events();
        let (mut engine, _) = replay(&events, &EngineConfig::PplnsUnit { f: 0.02, x: 1.0 }).unwrap();
        let before = engine.pending_all();
        let strategy = if keep_units { MigrationStrategy::KeepUnits } else { MigrationStrategy::Scale };
        let paid = engine
            .method_mut::<UnitPplns>()
            .unwrap()
            .migrate(f2, x2, strategy, events.len() as u64)
            .unwrap();
        for (m, v) in before {
            let now: f64 = engine.pending(m)
                + paid
                    .iter()
                    .filter(|p| p.recipient == poolsim::engine::Recipient::Miner(m))
                    .map(|p| p.amount)
                    .sum::<f64>();
            prop_assert!((now - v).abs() <= 1e-12 * v.max(1.0), "miner {m}: {v} -> {now}");
        }
    }

    #[test]
    fn replay_log_round_trips(spec in stream(true)) {
        let events: Vec<ShareEvent> = spec
            .events()
            .into_iter()
            .map(|mut e| { e.sim_time = None; e })
            .collect();
        let mut buf = Vec::new();
        write_replay_log(&events, &mut buf).unwrap();
        prop_assert_eq!(read_replay_log(&buf[..]).unwrap(), events);
    }

    #[test]
    fn oblivious_records_round_trip(
        seed in any::<[u8; 32]>(),
        prefix in prop::collection::vec(any::<u8>(), 0..64),
        bits in 0u32..16,
        nonce in any::<u64>(),
    ) {
        let pkg = ObliviousWorkPackage::new(seed, prefix, bits).unwrap();
        let work = pkg.miner_work();
        prop_assert_eq!(MinerWork::decode(&work.encode()).unwrap(), work.clone());
        let sub = work.submission(nonce);
        prop_assert_eq!(Submission::decode(&sub.encode()).unwrap(), sub);
    }

    #[test]
    fn immunity_table_is_always_delta(p in 0.01f64..0.99, n_max in 1usize..=12) {
        prop_assert!(oracles::immunity_solve(p, n_max, 1.0).unwrap().is_kronecker_delta());
    }

    #[test]
    fn reserve_and_ruin_are_inverse(b in 1.0f64..100.0, f in 0.001f64..0.2, delta in 1e-6f64..0.5) {
        let r = oracles::pps_reserve(b, f, delta).unwrap();
        let back = oracles::pps_ruin_probability(b, f, r).unwrap();
        prop_assert!((back - delta).abs() <= 1e-12 * delta.max(1e-3));
    }

    #[test]
    fn amplification_is_monotone(x in 0.01f64..5.0, dx in 0.01f64..1.0, m in 1u32..20) {
        let f = |x| oracles::prop_amplification(x).unwrap();
        prop_assert!(f(x + dx) < f(x));
        for fallback in [true, false] {
            let a = oracles::hop_amplification(m as f64, fallback).unwrap();
            let b = oracles::hop_amplification(m as f64 + 1.0, fallback).unwrap();
            prop_assert!(b > a);
        }
    }
}
