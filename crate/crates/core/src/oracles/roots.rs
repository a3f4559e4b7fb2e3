//! Bracketing and open root finders for scalar functions.

use crate::error::{Error, Result};

/// Bisection on a sign-changing bracket `[lo, hi]` until the bracket is
/// narrower than `tol`.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::Numerical(format!(
            "no sign change on [{lo}, {hi}]"
        )));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Secant iteration from two starting points.
pub fn secant<F: FnMut(f64) -> f64>(mut f: F, mut x0: f64, mut x1: f64, tol: f64) -> Result<f64> {
    let mut f0 = f(x0);
    let mut f1 = f(x1);
    for _ in 0..200 {
        if f1 == f0 {
            break;
        }
        let x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
        x0 = x1;
        f0 = f1;
        x1 = x2;
        f1 = f(x1);
        if (x1 - x0).abs() < tol {
            return Ok(x1);
        }
    }
    if f1.abs() < 1e-14 {
        Ok(x1)
    } else {
        Err(Error::Numerical("secant iteration did not converge".into()))
    }
}
