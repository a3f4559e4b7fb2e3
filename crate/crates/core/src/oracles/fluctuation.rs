//! Hopping amplification of a time-decayed (slush-style) score under
//! hashrate fluctuations.

use super::quad;
use crate::error::{Error, Result};

/// Expected payout of a share, relative to `pB`, submitted when the block
/// rate is `lambda0`, the exponentially weighted past rate is `lambda_bar`,
/// and the score decays with time constant `c`. The future rate is assumed
/// to stay at `lambda0`.
pub fn fluctuation_amplification(lambda0: f64, lambda_bar: f64, c: f64) -> Result<f64> {
    for (name, v) in [("lambda0", lambda0), ("lambda_bar", lambda_bar), ("C", c)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::param(name, "must be positive and finite"));
        }
    }
    let g = |t: f64| {
        let grow = (t / c).exp_m1();
        lambda0 * (-lambda0 * t).exp() / (c * lambda_bar + c * lambda0 * grow)
    };
    // Denominator ≥ C·min(λ0, λ̄)·e^{T/C}, so the integrand is below
    // λ0/(C μ) e^{-κT} with κ = λ0 + 1/C.
    let mu = lambda0.min(lambda_bar);
    let kappa = lambda0 + 1.0 / c;
    let scale = lambda0 / (c * mu * kappa);
    let target = 1e-14;
    let cutoff = ((scale / target).ln() / kappa).max(10.0 / kappa);
    let tail = scale * (-kappa * cutoff).exp();
    // Split into panels so narrow features near T = 1/λ0 and T = C ln(λ̄/λ0)
    // are seen by the first pass.
    let panels = 64;
    let mut total = 0.0;
    for k in 0..panels {
        let a = cutoff * k as f64 / panels as f64;
        let b = cutoff * (k + 1) as f64 / panels as f64;
        total += quad::integrate(g, a, b, 1e-13 / panels as f64, 1e-12)?.value;
    }
    if !total.is_finite() || tail > 1e-6 {
        return Err(Error::Numerical("fluctuation integral diverged".into()));
    }
    Ok(total)
}

/// `λ̄ = (1/C)∫_{-∞}^0 λ(T) e^{T/C} dT` for a bounded past rate history.
pub fn effective_average_rate<F: Fn(f64) -> f64>(rate: F, c: f64) -> Result<f64> {
    if !(c > 0.0) {
        return Err(Error::param("C", "must be positive"));
    }
    // substitute T = -C s
    let q = quad::integrate(|s| rate(-c * s) * (-s).exp(), 0.0, 50.0, 1e-12, 1e-12)?;
    Ok(q.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::{prop_amplification, prop_hop_threshold};

    #[test]
    fn large_rate_reduces_to_proportional() {
        let x0 = prop_hop_threshold().unwrap();
        let a = fluctuation_amplification(1e7, x0, 1.0).unwrap();
        assert!((a - 1.0).abs() < 1e-5, "{a}");
        let a = fluctuation_amplification(1e7, 2.0, 1.0).unwrap();
        assert!((a - prop_amplification(2.0).unwrap()).abs() < 1e-5);
    }

    #[test]
    fn steady_state_closed_form() {
        // With λ0 = λ̄ the integral is (1/C)∫e^{-(λ+1/C)T} dT = 1/(1 + Cλ).
        for x in [0.5, 1.0, 2.0, 5.0] {
            let a = fluctuation_amplification(x, x, 1.0).unwrap();
            assert!((a - 1.0 / (1.0 + x)).abs() < 1e-10, "{x}: {a}");
        }
    }

    #[test]
    fn small_rate_asymptote() {
        let eps = 1e-6;
        let a = fluctuation_amplification(eps, 1.0, 3.0).unwrap();
        let asym = eps * (1.0 / eps).ln();
        assert!((a / asym - 1.0).abs() < 0.01, "{a} vs {asym}");
    }

    #[test]
    fn constant_history_average() {
        let l = effective_average_rate(|_| 2.5, 4.0).unwrap();
        assert!((l - 2.5).abs() < 1e-12);
    }
}
