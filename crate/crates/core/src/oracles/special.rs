//! Exponential integral E1.

use crate::error::{Error, Result};

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const SERIES_LIMIT: f64 = 1.0;

fn e1_series(x: f64) -> f64 {
    // E1(x) = -gamma - ln x - sum_{k>=1} (-x)^k / (k k!)
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 1..200 {
        let kf = k as f64;
        term *= -x / kf;
        let add = term / kf;
        sum += add;
        if add.abs() < 1e-17 * sum.abs().max(1e-300) {
            break;
        }
    }
    -EULER_GAMMA - x.ln() - sum
}

/// exp(x) E1(x) by modified Lentz evaluation of the continued fraction
/// 1/(x+1- 1/(x+3- 4/(x+5- ...))). Converges quickly for x >= 1.
fn scaled_e1_cf(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let a = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (a * d + b);
        c = b + a / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

fn check(x: f64) -> Result<()> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::param("x", format!("E1 needs finite x > 0, got {x}")));
    }
    Ok(())
}

/// E1(x) = ∫₁^∞ exp(-x t)/t dt for x > 0.
pub fn exp_integral_e1(x: f64) -> Result<f64> {
    check(x)?;
    Ok(if x < SERIES_LIMIT {
        e1_series(x)
    } else {
        scaled_e1_cf(x) * (-x).exp()
    })
}

/// exp(x) E1(x), evaluated without underflow for large x.
pub fn scaled_exp_integral_e1(x: f64) -> Result<f64> {
    check(x)?;
    Ok(if x < SERIES_LIMIT {
        x.exp() * e1_series(x)
    } else {
        scaled_e1_cf(x)
    })
}
