//! Closed-form and quadrature evaluations of the reward-system formulas.
//! These are the ground truth the simulator is checked against.

mod fluctuation;
mod immunity;
pub mod quad;
pub mod roots;
pub mod special;

pub use fluctuation::{effective_average_rate, fluctuation_amplification};
pub use immunity::{immunity_solve, ImmunityTable};
pub use special::{exp_integral_e1, scaled_exp_integral_e1, EULER_GAMMA};

use crate::error::{Error, Result};
use statrs::function::gamma::ln_gamma;

const QUAD_TOL: f64 = 1e-10;

/// Amplification `f(x) = exp(x) E1(x)` for a proportional share submitted
/// when `x·D` shares of the round have already been submitted.
pub fn prop_amplification(x: f64) -> Result<f64> {
    scaled_exp_integral_e1(x)
}

/// Root of `f(x) = 1` by bisection.
pub fn prop_hop_threshold() -> Result<f64> {
    roots::bisect(|x| scaled_exp_integral_e1(x).unwrap_or(f64::NAN) - 1.0, 0.1, 1.0, 1e-12)
}

/// The same root by the secant method, as an independent cross-check.
pub fn prop_hop_threshold_secant() -> Result<f64> {
    roots::secant(|x| scaled_exp_integral_e1(x).unwrap_or(f64::NAN) - 1.0, 0.4, 0.5, 1e-13)
}

fn check_pools(m: f64) -> Result<()> {
    if !(m >= 1.0) || !m.is_finite() {
        return Err(Error::param("m", "pool count must be >= 1"));
    }
    Ok(())
}

/// Expected amplification of a hopper among `m` proportional pools who
/// always mines the youngest round, optionally falling back to solo when
/// every round is older than `x0`.
pub fn hop_amplification(m: f64, fallback: bool) -> Result<f64> {
    check_pools(m)?;
    // exp(-m x) f(x) = exp(-(m-1) x) E1(x)
    let g = |x: f64| {
        if x <= 0.0 {
            return 0.0;
        }
        (-(m - 1.0) * x).exp() * exp_integral_e1(x).unwrap_or(0.0)
    };
    if fallback {
        let x0 = prop_hop_threshold()?;
        let body = quad::integrate(g, 0.0, x0, QUAD_TOL, 0.0)?;
        Ok(m * body.value + (-m * x0).exp())
    } else {
        // E1(x) < exp(-x)/x, so the tail past L is below exp(-m L)/(m L).
        let cutoff = 40.0 / m;
        let tail = (-m * cutoff).exp() / (m * cutoff);
        let q = quad::integrate_truncated(g, 0.0, cutoff, tail, QUAD_TOL)?;
        Ok(m * q.value)
    }
}

/// `m ln m / (m - 1)`, with the limit 1 at `m = 1`.
pub fn hop_amplification_no_fallback_closed(m: f64) -> Result<f64> {
    check_pools(m)?;
    if (m - 1.0).abs() < 1e-12 {
        return Ok(1.0);
    }
    Ok(m * m.ln() / (m - 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopTableRow {
    pub m: u32,
    pub amp_with_fallback: f64,
    pub amp_without_fallback: f64,
}

pub fn hop_table(m_max: u32) -> Result<Vec<HopTableRow>> {
    (1..=m_max)
        .map(|m| {
            Ok(HopTableRow {
                m,
                amp_with_fallback: hop_amplification(m as f64, true)?,
                amp_without_fallback: hop_amplification(m as f64, false)?,
            })
        })
        .collect()
}

/// Honest-miner payout fraction when hoppers keep a proportional pool at age
/// `x0`: the quadrature value and the closed form `1 - x0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HonestLoss {
    pub integral: f64,
    pub closed_form: f64,
}

pub fn prop_honest_loss() -> Result<HonestLoss> {
    let x0 = prop_hop_threshold()?;
    let cutoff = 60.0;
    let tail = (-cutoff as f64).exp() * (cutoff + 1.0);
    let q = quad::integrate_truncated(
        |x| x * (-x).exp() / (x + x0),
        0.0,
        cutoff,
        tail,
        QUAD_TOL,
    )?;
    Ok(HonestLoss {
        integral: q.value,
        closed_form: 1.0 - x0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropVariance {
    pub mean: f64,
    pub variance: f64,
    pub solo_variance: f64,
    /// `solo_variance / variance`.
    pub improvement: f64,
}

/// Per-share payout statistics of a proportional pool with a fixed roster.
pub fn prop_share_variance(p: f64, reward: f64) -> Result<PropVariance> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::param("p", "must lie in (0, 1)"));
    }
    let b2 = reward * reward;
    let variance = -p * p * b2 * (1.0 + p.ln() / (1.0 - p));
    let solo_variance = p * (1.0 - p) * b2;
    Ok(PropVariance {
        mean: p * reward,
        variance,
        solo_variance,
        improvement: solo_variance / variance,
    })
}

fn check_fee(f: f64) -> Result<()> {
    if !(f > 0.0 && f < 1.0) {
        return Err(Error::param("f", "must lie in (0, 1)"));
    }
    Ok(())
}

/// Reserve keeping the PPS operator's lifetime ruin probability at `delta`.
pub fn pps_reserve(reward: f64, f: f64, delta: f64) -> Result<f64> {
    check_fee(f)?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::param("delta", "must lie in (0, 1)"));
    }
    Ok(reward * (1.0 / delta).ln() / (2.0 * f))
}

/// Lifetime ruin probability of a PPS operator holding reserve `r`.
pub fn pps_ruin_probability(reward: f64, f: f64, r: f64) -> Result<f64> {
    check_fee(f)?;
    if !(r >= 0.0) {
        return Err(Error::param("R", "reserve must be >= 0"));
    }
    Ok((-2.0 * f * r / reward).exp())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometricStats {
    pub mean: f64,
    pub variance: f64,
    /// In multiples of the difficulty.
    pub maturity: f64,
    pub fee_mean: f64,
    pub fee_variance: f64,
}

pub fn geometric_stats(p: f64, c: f64, f: f64, reward: f64) -> Result<GeometricStats> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::param("p", "must lie in (0, 1)"));
    }
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::param("c", "must lie in (0, 1)"));
    }
    if !(f < 1.0) {
        return Err(Error::param("f", "must be < 1"));
    }
    let denom = p + c * (2.0 - c) * (1.0 - p);
    let (q, g) = (1.0 - c, 1.0 - f);
    Ok(GeometricStats {
        mean: g * q * p * reward,
        variance: q.powi(4) * g * g * (1.0 - p) * p * p * reward * reward / denom,
        maturity: c * (1.0 - p),
        fee_mean: (c + f - c * f) * reward,
        fee_variance: q * q * g * g * (1.0 - p) * c * c * reward * reward / denom,
    })
}

/// Expected fraction of the fair reward lost in MPPS over `n` expected blocks.
pub fn mpps_expected_loss(n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::param("n", "must be >= 1"));
    }
    let nf = n as f64;
    Ok((nf * nf.ln() - nf - ln_gamma(nf + 1.0)).exp())
}

/// `1 - E[min(n, L)]/n` for `L ~ Poisson(n)` by direct summation.
pub fn mpps_expected_loss_series(n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::param("n", "must be >= 1"));
    }
    let nf = n as f64;
    let upper = (nf + 40.0 * nf.sqrt() + 60.0) as u64;
    let mut sum = 0.0;
    let mut pmf = (-nf).exp();
    for l in 0..=upper {
        if l > 0 {
            pmf *= nf / l as f64;
        }
        sum += pmf * (l.min(n) as f64);
    }
    Ok(1.0 - sum / nf)
}

/// Blocks until a share's due reward is paid under SMPPS with a constant
/// negative buffer `r`.
pub fn smpps_maturity(r: f64, reward: f64) -> Result<f64> {
    if !(r < 0.0) {
        return Err(Error::param("R", "buffer must be negative"));
    }
    if !(reward > 0.0) {
        return Err(Error::param("B", "must be positive"));
    }
    Ok(-r / reward)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiwOptimum {
    /// Best ambush length in seconds.
    pub t_opt: f64,
    /// Expected reward per attacker share relative to `pB`.
    pub amplification: f64,
    /// `pB h 2^-32 (m-1)^2/(4m-2) T0`, the gain per ambush at `t_opt`.
    pub gain_per_block: f64,
}

/// Expected gain from one ambush of length `t`, in BTC.
pub fn liw_expected_gain(m: f64, h: f64, t0: f64, t: f64, p: f64, reward: f64) -> f64 {
    let k = p * reward * h / crate::stochastic::HASHES_PER_SHARE;
    k * ((1.0 - t / t0) * (m * t - t) - (t / t0) * t / 2.0)
}

pub fn liw_optimum(m: f64, h: f64, h0: f64, t0: f64, p: f64, reward: f64) -> Result<LiwOptimum> {
    check_pools(m)?;
    if !(h >= 0.0 && h0 > 0.0 && t0 > 0.0) {
        return Err(Error::param("h", "hashrates and T0 must be positive"));
    }
    let t_opt = (m - 1.0) / (2.0 * m - 1.0) * t0;
    Ok(LiwOptimum {
        t_opt,
        amplification: 1.0 + m * h / (4.0 * h0),
        gain_per_block: liw_expected_gain(m, h, t0, t_opt, p, reward),
    })
}

/// Amplification available to a miner who picks, after finding a hash, the
/// largest share difficulty it satisfies from `difficulties` (the last entry
/// must be infinite).
pub fn posterior_difficulty_amplification(difficulties: &[f64]) -> Result<f64> {
    if difficulties.len() < 2 || difficulties.last() != Some(&f64::INFINITY) {
        return Err(Error::param("difficulties", "need at least two entries ending at infinity"));
    }
    if !(difficulties[0] > 0.0) {
        return Err(Error::param("difficulties", "must be positive"));
    }
    let mut amp = 0.0;
    for w in difficulties.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::param("difficulties", "must be strictly increasing"));
        }
        amp += 1.0 - w[0] / w[1];
    }
    Ok(amp)
}
