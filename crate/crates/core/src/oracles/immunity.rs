//! Forward-induction solver for the reward table of a fixed-reward,
//! hopping-proof, round-based method.

use crate::error::{Error, Result};

/// `table[n-1][i-1]` is the reward to share `i` in a round of length `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImmunityTable {
    pub p: f64,
    pub total: f64,
    pub rows: Vec<Vec<f64>>,
}

impl ImmunityTable {
    pub fn get(&self, i: usize, n: usize) -> f64 {
        self.rows[n - 1][i - 1]
    }

    pub fn n_max(&self) -> usize {
        self.rows.len()
    }

    /// True when every reward goes to the last share of its round.
    pub fn is_kronecker_delta(&self) -> bool {
        self.rows.iter().enumerate().all(|(n, row)| {
            row.iter()
                .enumerate()
                .all(|(i, &v)| if i == n { v == self.total } else { v == 0.0 })
        })
    }
}

/// Solve the constraints (nonnegative rewards, each round pays out `total`,
/// each share's expectation at submission is `p·total`) for rounds of length
/// up to `n_max`, inducting on the share index.
pub fn immunity_solve(p: f64, n_max: usize, total: f64) -> Result<ImmunityTable> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::param("p", "must lie in (0, 1)"));
    }
    if n_max == 0 || n_max > 12 {
        return Err(Error::param("N_max", "must lie in 1..=12"));
    }
    if !(total > 0.0) {
        return Err(Error::param("total", "must be positive"));
    }
    let tol = 1e-12 * total;
    let mut rows: Vec<Vec<f64>> = (1..=n_max).map(|n| vec![f64::NAN; n]).collect();
    for i in 1..=n_max {
        // Row i: all earlier shares are already fixed.
        let earlier: f64 = rows[i - 1][..i - 1].iter().sum();
        let last = total - earlier;
        if last < -tol {
            return Err(Error::Numerical(format!(
                "round {i}: earlier shares already exceed the reward"
            )));
        }
        rows[i - 1][i - 1] = last;
        // Σ_{n>i} p(1-p)^{n-i} f(i,n) must equal p·total - p·f(i,i).
        let residual = p * total - p * last;
        if residual.abs() > tol {
            return Err(Error::Numerical(format!(
                "share {i}: expectation residual {residual:e} leaves the system infeasible or underdetermined"
            )));
        }
        // Positive weights with a zero sum force every later reward to zero.
        for row in rows.iter_mut().skip(i) {
            row[i - 1] = 0.0;
        }
    }
    Ok(ImmunityTable { p, total, rows })
}
