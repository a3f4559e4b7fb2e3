//! Library values checked against independently computed oracles.

use microlp::{ComparisonOp, OptimizationDirection, Problem};
use serde_json::json;

use poolsim::oracles;
use poolsim::sim::{run_scenario, Estimate, RunOutput, ScenarioConfig};
use poolsim::stochastic::{generate_stream, DifficultySchedule, MinerSpec, RewardSchedule, RngStream};

fn scenario(v: serde_json::Value) -> RunOutput {
    let cfg = ScenarioConfig::from_json(&v.to_string()).unwrap();
    run_scenario(&cfg).unwrap()
}

fn within_sigmas(e: &Estimate, expected: f64, k: f64) -> bool {
    (e.mean - expected).abs() <= k * e.std_error()
}

/// Solve the relaxed constraints (nonnegative, each round pays 1, truncated
/// share expectation <= p) as an LP maximising the off-diagonal mass. A zero
/// optimum means the Kronecker delta is the only feasible table.
fn lp_immunity(p: f64, n_max: usize) -> (f64, Vec<f64>) {
    let idx = |i: usize, n: usize| n * (n - 1) / 2 + (i - 1);
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let mut vars = Vec::new();
    for n in 1..=n_max {
        for i in 1..=n {
            vars.push(lp.add_var(if i == n { 0.0 } else { 1.0 }, (0.0, f64::INFINITY)));
        }
    }
    for n in 1..=n_max {
        let row: Vec<_> = (1..=n).map(|i| (vars[idx(i, n)], 1.0)).collect();
        lp.add_constraint(&row, ComparisonOp::Eq, 1.0);
    }
    for i in 1..=n_max {
        let row: Vec<_> = (i..=n_max)
            .map(|n| (vars[idx(i, n)], (1.0 - p).powi((n - i) as i32)))
            .collect();
        lp.add_constraint(&row, ComparisonOp::Le, 1.0);
    }
    let sol = lp.solve().unwrap();
    let values = (1..=n_max)
        .flat_map(|n| (1..=n).map(move |i| (i, n)))
        .map(|(i, n)| sol[vars[idx(i, n)]])
        .collect();
    (sol.objective(), values)
}

#[test]
fn immunity_table_matches_independent_lp() {
    // At p = 0.9 the weights (1-p)^(n-i) reach 1e-8 past eight rounds and the
    // floating-point LP turns singular; the induction itself is exact there.
    for (p, n_max) in [(0.1, 12), (0.5, 12), (0.9, 8)] {
        let table = oracles::immunity_solve(p, n_max, 1.0).unwrap();
        assert!(table.is_kronecker_delta());
        let (off_diagonal, values) = lp_immunity(p, n_max);
        assert!(off_diagonal.abs() < 1e-9, "p={p}: off-diagonal mass {off_diagonal}");
        let mut k = 0;
        for n in 1..=n_max {
            for i in 1..=n {
                assert!((values[k] - table.get(i, n)).abs() < 1e-9, "p={p} f({i},{n})");
                k += 1;
            }
        }
    }
}

/// `E1(x) = ∫_0^1 exp(-x/u)/u du` by composite Simpson.
fn e1_simpson(x: f64) -> f64 {
    let n = 400_000;
    let h = 1.0 / n as f64;
    let g = |u: f64| if u <= 0.0 { 0.0 } else { (-x / u).exp() / u };
    let mut s = g(0.0) + g(1.0);
    for k in 1..n {
        s += g(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn e1_matches_quadrature() {
    assert!((oracles::exp_integral_e1(1.0).unwrap() - 0.2193839).abs() < 5e-8);
    for x in [0.05, 0.3, 1.0, 2.5, 8.0] {
        let q = e1_simpson(x);
        let v = oracles::exp_integral_e1(x).unwrap();
        assert!((v - q).abs() < 1e-9 * q.max(1.0), "E1({x}) = {v}, quadrature {q}");
    }
}

#[test]
fn closed_forms_evaluate_to_reference_values() {
    assert!((oracles::mpps_expected_loss(1).unwrap() - (-1f64).exp()).abs() < 1e-12);
    assert_eq!(oracles::smpps_maturity(-500.0, 50.0).unwrap(), 10.0);
    let liw = oracles::liw_optimum(3.0, 1.0, 100.0, 600.0, 1e-3, 50.0).unwrap();
    assert!((liw.t_opt - 240.0).abs() < 1e-12);
    let d = [1.0, 2.0, 4.0, f64::INFINITY];
    assert!((oracles::posterior_difficulty_amplification(&d).unwrap() - 2.0).abs() < 1e-15);
    let g = oracles::geometric_stats(0.01, 0.1, 0.0, 50.0).unwrap();
    assert!((g.mean - 0.45).abs() < 1e-12);
    assert!((oracles::pps_reserve(50.0, 0.05, 0.001).unwrap().round() - 3454.0).abs() < 1e-12);
}

#[test]
fn mpps_loss_matches_poisson_series() {
    for n in [1u64, 4, 10, 16, 64, 200] {
        let closed = oracles::mpps_expected_loss(n).unwrap();
        let series = oracles::mpps_expected_loss_series(n).unwrap();
        assert!((closed - series).abs() < 1e-10, "n={n}: {closed} vs {series}");
    }
}

#[test]
fn block_draws_match_binomial() {
    let (p, n) = (0.01, 1_000_000u32);
    let mut rng = RngStream::new(11, 0);
    let hits = (0..n).filter(|_| rng.draw_share(p)).count() as f64;
    let sd = (n as f64 * p * (1.0 - p)).sqrt();
    assert!((hits - n as f64 * p).abs() <= 3.0 * sd, "{hits}");
}

#[test]
fn stream_attribution_matches_weights() {
    let n = 1_000_000u64;
    let miners = [MinerSpec::new(0, 3.0), MinerSpec::new(1, 1.0)];
    let events = generate_stream(
        &mut RngStream::new(12, 0),
        &DifficultySchedule::constant(100.0).unwrap(),
        &RewardSchedule::constant(50.0).unwrap(),
        &miners,
        n,
    )
    .unwrap();
    let zeros = events.iter().filter(|e| e.miner == 0).count() as f64;
    let sd = (n as f64 * 0.75 * 0.25).sqrt();
    assert!((zeros - 0.75 * n as f64).abs() <= 3.0 * sd);
}

fn tagged(engine: serde_json::Value, seed: u64) -> RunOutput {
    scenario(json!({
        "pools": [{"engine": engine}],
        "agents": [
            {"hashrate": 0.5, "policy": {"kind": "constant", "pool": 0}},
            {"hashrate": 0.5, "policy": {"kind": "constant", "pool": 0}}
        ],
        "difficulty": 100, "reward": 1, "horizon": 200_000, "replicas": 8, "seed": seed,
        "tagging": {"stride": 7, "warmup": 2_000, "cooldown": 2_000}
    }))
}

#[test]
fn hybrid_is_fair_with_intermediate_variance() {
    let pplns = json!({"method": "pplns_unit", "f": 0.0, "x": 1.0});
    let pps = json!({"method": "pps", "f": 0.0});
    let hybrid = json!({"method": "hybrid", "weights": [0.7, 0.3], "engines": [pplns, pps]});
    let var = |out: &RunOutput| out.summary.agents[0].variance_per_share.clone().unwrap().mean;

    let h = tagged(hybrid, 5);
    let mean = h.summary.agents[0].payout_per_share.clone().unwrap();
    assert!(within_sigmas(&mean, 0.01, 3.0), "{mean:?}");
    let (vh, vp, vs) = (var(&h), var(&tagged(pplns, 5)), var(&tagged(pps, 5)));
    assert!(vs < vh && vh < vp, "pps {vs}, hybrid {vh}, pplns {vp}");
    // Payout is linear in the weights, so the variance scales by 0.7².
    assert!((vh / (0.49 * vp) - 1.0).abs() < 0.15, "{}", vh / vp);
}

#[test]
fn honest_payout_decreases_with_injected_shares() {
    let honest = |x0: f64| {
        let out = scenario(json!({
            "pools": [{"engine": {"method": "proportional", "f": 0.0}}],
            "agents": [
                {"hashrate": 1.0, "policy": {"kind": "constant", "pool": 0}},
                {"hashrate": 0.0, "policy": {"kind": "saturating_hopper", "pool": 0, "x0": x0}}
            ],
            "difficulty": 100, "reward": 1, "horizon": 400_000, "replicas": 4, "seed": 21
        }));
        out.summary.agents[0].relative_payout.clone().unwrap()
    };
    let sweep: Vec<Estimate> = [0.0, 0.25, 0.5, 1.0].into_iter().map(honest).collect();
    assert!(within_sigmas(&sweep[0], 1.0, 3.0), "{:?}", sweep[0]);
    for w in sweep.windows(2) {
        assert!(w[1].mean + 3.0 * w[1].std_error() < w[0].mean, "{sweep:?}");
    }
}

#[test]
fn buffer_hopper_matures_faster_than_continuous_miner() {
    let out = scenario(json!({
        "pools": [{"engine": {"method": "smpps", "f": 0.0}}],
        "agents": [
            {"hashrate": 0.5, "policy": {"kind": "constant", "pool": 0}},
            {"hashrate": 0.5, "policy": {"kind": "buffer_hopper", "pool": 0}}
        ],
        "difficulty": 100, "reward": 1, "horizon": 300_000, "replicas": 8, "seed": 8,
        "tagging": {"stride": 5, "warmup": 1_000, "cooldown": 20_000}
    }));
    let m = |i: usize| out.summary.agents[i].maturity.clone().unwrap();
    let (honest, hopper) = (m(0), m(1));
    assert!(hopper.mean + 3.0 * hopper.std_error() < honest.mean, "{hopper:?} vs {honest:?}");
}

#[test]
fn pps_operator_net_follows_the_random_walk() {
    let (f, p, b, n) = (0.02, 0.01, 50.0, 20_000.0);
    let out = scenario(json!({
        "pools": [{"engine": {"method": "pps", "f": f}}],
        "agents": [{"hashrate": 1.0, "policy": {"kind": "constant", "pool": 0}}],
        "difficulty": 100, "reward": b, "horizon": 20_000, "replicas": 200, "seed": 4
    }));
    let pool = &out.summary.pools[0];
    let net = pool.operator_net.clone().unwrap();
    // Per share the operator gains B with probability p and pays (1-f)pB.
    assert!(within_sigmas(&net, n * f * p * b, 3.0), "{net:?}");
    let var = n * b * b * p * (1.0 - p);
    assert!((pool.operator_net_variance / var - 1.0).abs() < 0.3, "{}", pool.operator_net_variance / var);
}

#[test]
fn unit_pplns_operator_never_lends() {
    let out = scenario(json!({
        "pools": [{"engine": {"method": "pplns_unit", "f": 0.0, "x": 2.0}}],
        "agents": [
            {"hashrate": 0.7, "policy": {"kind": "constant", "pool": 0}},
            {"hashrate": 0.3, "policy": {"kind": "constant", "pool": 0}}
        ],
        "difficulty": 100, "reward": 50, "horizon": 100_000, "replicas": 4, "seed": 2
    }));
    for r in &out.replicas {
        let pool = &r.pools[0];
        assert!(pool.conservation_passed, "{}", pool.conservation_message);
        assert!(pool.min_operator_net >= -1e-9, "{}", pool.min_operator_net);
        assert!((pool.operator_net - (pool.revenue - pool.paid)).abs() < 1e-9 * pool.revenue);
    }
}
