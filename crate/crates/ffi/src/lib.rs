//! C ABI over the poolsim reward engines, scenario runner and oracles.
//!
//! Every fallible function returns a [`PoolsimStatus`]; on failure the
//! message is available from [`poolsim_last_error`] on the same thread.
//! Handles are opaque and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use poolsim::engine::{Cause, Engine, EngineConfig, Ledger, PayoutEvent, Recipient};
use poolsim::oracles;
use poolsim::sim::{run_scenario, Estimate, RunOutput, ScenarioConfig};
use poolsim::stochastic::ShareEvent;
use poolsim::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoolsimStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Runtime = 4,
    OutOfRange = 5,
    Panic = 6,
}

/// One share submitted to an engine. `sim_time` is ignored when negative.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PoolsimShare {
    pub index: u64,
    pub miner: u32,
    pub d: f64,
    pub p_eff: f64,
    pub reward: f64,
    pub is_block: bool,
    pub sim_time: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoolsimRecipientKind {
    Miner = 0,
    Operator = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoolsimCauseKind {
    Block = 0,
    Immediate = 1,
    ShiftEnd = 2,
}

/// `miner` is meaningful only for miner payouts; `cause_index` is the block
/// share index or shift number, 0 for immediate payouts.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PoolsimPayout {
    pub recipient: PoolsimRecipientKind,
    pub miner: u32,
    pub amount: f64,
    pub cause: PoolsimCauseKind,
    pub cause_index: u64,
    pub at_index: u64,
}

/// Mean and 95% confidence half-width across replicas.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct PoolsimEstimate {
    pub mean: f64,
    pub half_width: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct PoolsimGeometricStats {
    pub mean: f64,
    pub variance: f64,
    pub maturity: f64,
    pub fee_mean: f64,
    pub fee_variance: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct PoolsimLiwOptimum {
    pub t_opt: f64,
    pub amplification: f64,
    pub gain_per_block: f64,
}

/// A reward engine with its ledger.
pub struct PoolsimEngine {
    engine: Engine,
    ledger: Ledger,
    last: Vec<PayoutEvent>,
}

/// The result of a scenario run.
pub struct PoolsimRun {
    output: RunOutput,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn fail(status: PoolsimStatus, msg: impl Into<String>) -> PoolsimStatus {
    set_error(msg);
    status
}

fn from_error(e: Error) -> PoolsimStatus {
    let status = match e {
        Error::Config { .. } | Error::Replay { .. } => PoolsimStatus::Config,
        Error::InvalidParameter { .. } | Error::Schedule(_) => PoolsimStatus::InvalidArgument,
        _ => PoolsimStatus::Runtime,
    };
    fail(status, e.to_string())
}

/// Run `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), PoolsimStatus>) -> PoolsimStatus {
    set_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PoolsimStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(PoolsimStatus::Panic, "internal panic"),
    }
}

fn check<T>(r: poolsim::Result<T>) -> Result<T, PoolsimStatus> {
    r.map_err(from_error)
}

unsafe fn out_ref<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, PoolsimStatus> {
    p.as_mut()
        .ok_or_else(|| fail(PoolsimStatus::NullPointer, format!("`{name}` is null")))
}

unsafe fn in_ref<'a, T>(p: *const T, name: &str) -> Result<&'a T, PoolsimStatus> {
    p.as_ref()
        .ok_or_else(|| fail(PoolsimStatus::NullPointer, format!("`{name}` is null")))
}

unsafe fn in_str<'a>(p: *const c_char, name: &str) -> Result<&'a str, PoolsimStatus> {
    if p.is_null() {
        return Err(fail(
            PoolsimStatus::NullPointer,
            format!("`{name}` is null"),
        ));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        fail(
            PoolsimStatus::InvalidArgument,
            format!("`{name}` is not UTF-8"),
        )
    })
}

fn parse_engine(json: &str) -> Result<EngineConfig, PoolsimStatus> {
    let de = &mut serde_json::Deserializer::from_str(json);
    let cfg: EngineConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        fail(
            PoolsimStatus::Config,
            format!("config error at `{}`: {}", e.path(), e.inner()),
        )
    })?;
    check(cfg.validate())?;
    Ok(cfg)
}

fn convert(p: &PayoutEvent) -> PoolsimPayout {
    let (recipient, miner) = match p.recipient {
        Recipient::Miner(m) => (PoolsimRecipientKind::Miner, m),
        Recipient::Operator => (PoolsimRecipientKind::Operator, 0),
    };
    let (cause, cause_index) = match p.cause {
        Cause::Block(i) => (PoolsimCauseKind::Block, i),
        Cause::Immediate => (PoolsimCauseKind::Immediate, 0),
        Cause::ShiftEnd(i) => (PoolsimCauseKind::ShiftEnd, i),
    };
    PoolsimPayout {
        recipient,
        miner,
        amount: p.amount,
        cause,
        cause_index,
        at_index: p.at_index,
    }
}

/// Message of the last failed call on this thread, empty after a success.
/// The pointer stays valid until the next poolsim call on the same thread.
#[no_mangle]
pub extern "C" fn poolsim_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn poolsim_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Create an engine from a JSON config such as
/// `{"method": "pplns_unit", "f": 0.0, "x": 1.0}`.
///
/// # Safety
/// `config_json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn poolsim_engine_new(
    config_json: *const c_char,
    out: *mut *mut PoolsimEngine,
) -> PoolsimStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = ptr::null_mut();
        let cfg = parse_engine(in_str(config_json, "config_json")?)?;
        let engine = check(Engine::new(&cfg))?;
        *out = Box::into_raw(Box::new(PoolsimEngine {
            engine,
            ledger: Ledger::new(),
            last: Vec::new(),
        }));
        Ok(())
    })
}

/// # Safety
/// `engine` must come from [`poolsim_engine_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn poolsim_engine_free(engine: *mut PoolsimEngine) {
    if !engine.is_null() {
        drop(Box::from_raw(engine));
    }
}

/// Submit one share. The number of payouts it triggered is written to
/// `n_payouts`; fetch them with [`poolsim_engine_payout`].
///
/// # Safety
/// `engine` and `share` must be valid; `n_payouts` may be null.
#[no_mangle]
pub unsafe extern "C" fn poolsim_engine_step(
    engine: *mut PoolsimEngine,
    share: *const PoolsimShare,
    n_payouts: *mut usize,
) -> PoolsimStatus {
    guard(|| {
        let h = out_ref(engine, "engine")?;
        let s = in_ref(share, "share")?;
        let ev = ShareEvent {
            index: s.index,
            miner: s.miner,
            d: s.d,
            p_eff: s.p_eff,
            reward: s.reward,
            is_block: s.is_block,
            sim_time: (s.sim_time >= 0.0).then_some(s.sim_time),
        };
        h.last.clear();
        check(h.engine.step(&ev, &mut h.last))?;
        h.ledger.record(&ev, &h.last);
        if let Some(n) = n_payouts.as_mut() {
            *n = h.last.len();
        }
        Ok(())
    })
}

/// Payout `i` from the most recent step.
///
/// # Safety
/// `engine` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn poolsim_engine_payout(
    engine: *const PoolsimEngine,
    i: usize,
    out: *mut PoolsimPayout,
) -> PoolsimStatus {
    guard(|| {
        let h = in_ref(engine, "engine")?;
        let out = out_ref(out, "out")?;
        let p = h.last.get(i).ok_or_else(|| {
            fail(
                PoolsimStatus::OutOfRange,
                format!("payout {i} of {}", h.last.len()),
            )
        })?;
        *out = convert(p);
        Ok(())
    })
}

/// Reward the miner would still receive if no further shares arrived.
///
/// # Safety
/// `engine` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn poolsim_engine_pending(
    engine: *const PoolsimEngine,
    miner: u32,
    out: *mut f64,
) -> PoolsimStatus {
    guard(|| {
        *out_ref(out, "out")? = in_ref(engine, "engine")?.engine.pending(miner);
        Ok(())
    })
}

/// Total paid to the miner so far.
///
/// # Safety
/// `engine` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn poolsim_engine_miner_total(
    engine: *const PoolsimEngine,
    miner: u32,
    out: *mut f64,
) -> PoolsimStatus {
    guard(|| {
        *out_ref(out, "out")? = in_ref(engine, "engine")?.ledger.miner_total(miner);
        Ok(())
    })
}

/// Block revenue minus miner payouts so far.
///
/// # Safety
/// `engine` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn poolsim_engine_operator_net(
    engine: *const PoolsimEngine,
    out: *mut f64,
) -> PoolsimStatus {
    guard(|| {
        *out_ref(out, "out")? = in_ref(engine, "engine")?.ledger.operator_net();
        Ok(())
    })
}

/// Run a scenario given as JSON.
///
/// # Safety
/// `config_json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn poolsim_run_scenario(
    config_json: *const c_char,
    out: *mut *mut PoolsimRun,
) -> PoolsimStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = ptr::null_mut();
        let cfg = check(ScenarioConfig::from_json(in_str(
            config_json,
            "config_json",
        )?))?;
        let output = check(run_scenario(&cfg))?;
        *out = Box::into_raw(Box::new(PoolsimRun { output }));
        Ok(())
    })
}

/// # Safety
/// `run` must come from [`poolsim_run_scenario`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn poolsim_run_free(run: *mut PoolsimRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Number of agents in the run.
///
/// # Safety
/// `run` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn poolsim_run_agent_count(
    run: *const PoolsimRun,
    out: *mut usize,
) -> PoolsimStatus {
    guard(|| {
        *out_ref(out, "out")? = in_ref(run, "run")?.output.summary.agents.len();
        Ok(())
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoolsimAgentStat {
    PayoutPerShare = 0,
    RelativePayout = 1,
    VariancePerShare = 2,
    Maturity = 3,
    TotalPayout = 4,
}

/// One statistic of agent `agent`. Fails with `OutOfRange` for an unknown
/// agent and with `Runtime` when the statistic is undefined (no shares).
///
/// # Safety
/// `run` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn poolsim_run_agent_stat(
    run: *const PoolsimRun,
    agent: usize,
    stat: PoolsimAgentStat,
    out: *mut PoolsimEstimate,
) -> PoolsimStatus {
    guard(|| {
        let run = in_ref(run, "run")?;
        let out = out_ref(out, "out")?;
        let agents = &run.output.summary.agents;
        let a = agents.get(agent).ok_or_else(|| {
            fail(
                PoolsimStatus::OutOfRange,
                format!("agent {agent} of {}", agents.len()),
            )
        })?;
        let e: &Option<Estimate> = match stat {
            PoolsimAgentStat::PayoutPerShare => &a.payout_per_share,
            PoolsimAgentStat::RelativePayout => &a.relative_payout,
            PoolsimAgentStat::VariancePerShare => &a.variance_per_share,
            PoolsimAgentStat::Maturity => &a.maturity,
            PoolsimAgentStat::TotalPayout => &a.total_payout,
        };
        let e = e.as_ref().ok_or_else(|| {
            fail(
                PoolsimStatus::Runtime,
                format!("{stat:?} is undefined for agent {agent}"),
            )
        })?;
        *out = PoolsimEstimate {
            mean: e.mean,
            half_width: e.half_width,
        };
        Ok(())
    })
}

unsafe fn scalar(out: *mut f64, f: impl FnOnce() -> poolsim::Result<f64>) -> PoolsimStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = check(f())?;
        Ok(())
    })
}

/// Exponential integral E1(x).
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn poolsim_exp_integral_e1(x: f64, out: *mut f64) -> PoolsimStatus {
    scalar(out, || oracles::exp_integral_e1(x))
}

/// exp(x) E1(x).
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn poolsim_prop_amplification(x: f64, out: *mut f64) -> PoolsimStatus {
    scalar(out, || oracles::prop_amplification(x))
}

/// Round age at which a proportional share is worth exactly pB.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn poolsim_prop_hop_threshold(out: *mut f64) -> PoolsimStatus {
    scalar(out, || oracles::prop_hop_threshold())
}

/// Hopper amplification among `m` proportional pools.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn poolsim_hop_amplification(
    m: f64,
    fallback: bool,
    out: *mut f64,
) -> PoolsimStatus {
    scalar(out, || oracles::hop_amplification(m, fallback))
}

/// Honest payout fraction against saturating hoppers.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn poolsim_prop_honest_loss(out: *mut f64) -> PoolsimStatus {
    scalar(out, || oracles::prop_honest_loss().map(|l| l.integral))
}

/// PPS reserve for lifetime ruin probability `delta`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn poolsim_pps_reserve(
    reward: f64,
    f: f64,
    delta: f64,
    out: *mut f64,
) -> PoolsimStatus {
    scalar(out, || oracles::pps_reserve(reward, f, delta))
}

/// PPS lifetime ruin probability with reserve `r`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn poolsim_pps_ruin_probability(
    reward: f64,
    f: f64,
    r: f64,
    out: *mut f64,
) -> PoolsimStatus {
    scalar(out, || oracles::pps_ruin_probability(reward, f, r))
}

/// Expected MPPS loss fraction over `n` expected blocks.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn poolsim_mpps_expected_loss(n: u64, out: *mut f64) -> PoolsimStatus {
    scalar(out, || oracles::mpps_expected_loss(n))
}

/// SMPPS maturity in blocks for a constant negative buffer.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn poolsim_smpps_maturity(
    r: f64,
    reward: f64,
    out: *mut f64,
) -> PoolsimStatus {
    scalar(out, || oracles::smpps_maturity(r, reward))
}

/// Amplification from choosing share difficulty after the hash is known.
/// `difficulties` is increasing and ends with `INFINITY`.
///
/// # Safety
/// `difficulties` must point to `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn poolsim_posterior_difficulty_amplification(
    difficulties: *const f64,
    len: usize,
    out: *mut f64,
) -> PoolsimStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        if difficulties.is_null() {
            return Err(fail(PoolsimStatus::NullPointer, "`difficulties` is null"));
        }
        let d = std::slice::from_raw_parts(difficulties, len);
        *out = check(oracles::posterior_difficulty_amplification(d))?;
        Ok(())
    })
}

/// Geometric method per-share and per-block statistics.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn poolsim_geometric_stats(
    p: f64,
    c: f64,
    f: f64,
    reward: f64,
    out: *mut PoolsimGeometricStats,
) -> PoolsimStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let g = check(oracles::geometric_stats(p, c, f, reward))?;
        *out = PoolsimGeometricStats {
            mean: g.mean,
            variance: g.variance,
            maturity: g.maturity,
            fee_mean: g.fee_mean,
            fee_variance: g.fee_variance,
        };
        Ok(())
    })
}

/// Optimal lie-in-wait ambush and its amplification.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn poolsim_liw_optimum(
    m: f64,
    h: f64,
    h0: f64,
    t0: f64,
    p: f64,
    reward: f64,
    out: *mut PoolsimLiwOptimum,
) -> PoolsimStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let l = check(oracles::liw_optimum(m, h, h0, t0, p, reward))?;
        *out = PoolsimLiwOptimum {
            t_opt: l.t_opt,
            amplification: l.amplification,
            gain_per_block: l.gain_per_block,
        };
        Ok(())
    })
}

/// Hopping-immune reward table, row-major over `N = 1..=n_max`,
/// `I = 1..=N`: `n_max (n_max + 1) / 2` values, written to `out` when it
/// holds at least that many. The required length goes to `needed`.
///
/// # Safety
/// `out` must point to `cap` writable doubles or be null with `cap = 0`;
/// `needed` must be writable.
#[no_mangle]
pub unsafe extern "C" fn poolsim_immunity_solve(
    p: f64,
    n_max: usize,
    total: f64,
    out: *mut f64,
    cap: usize,
    needed: *mut usize,
) -> PoolsimStatus {
    guard(|| {
        let needed = out_ref(needed, "needed")?;
        *needed = n_max * (n_max + 1) / 2;
        let t = check(oracles::immunity_solve(p, n_max, total))?;
        if cap < *needed {
            return Err(fail(
                PoolsimStatus::OutOfRange,
                format!("buffer holds {cap} values, need {}", *needed),
            ));
        }
        if out.is_null() {
            return Err(fail(PoolsimStatus::NullPointer, "`out` is null"));
        }
        let buf = std::slice::from_raw_parts_mut(out, *needed);
        let mut k = 0;
        for n in 1..=n_max {
            for i in 1..=n {
                buf[k] = t.get(i, n);
                k += 1;
            }
        }
        Ok(())
    })
}
