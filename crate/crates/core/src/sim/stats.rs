use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::stochastic::RngStream;

use super::TagRecord;

/// Mean across replicas with a 95% Student-t half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub half_width: f64,
    pub n: usize,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Option<Estimate> {
        let n = xs.len();
        if n == 0 {
            return None;
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let half_width = if n < 2 {
            f64::INFINITY
        } else {
            let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
                .map(|d| d.inverse_cdf(0.975))
                .unwrap_or(f64::INFINITY);
            t * (sample_variance(xs) / n as f64).sqrt()
        };
        Some(Estimate { mean, half_width, n })
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        if self.n < 2 {
            return f64::INFINITY;
        }
        let t = StudentsT::new(0.0, 1.0, (self.n - 1) as f64)
            .map(|d| d.inverse_cdf(0.975))
            .unwrap_or(f64::INFINITY);
        self.half_width / t
    }

    pub fn contains(&self, x: f64) -> bool {
        (self.mean - x).abs() <= self.half_width
    }
}

/// Unbiased sample variance (0 for fewer than two samples).
pub fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
}

/// Payout-weighted mean delay between share and payment, in difficulty
/// units. `None` when nothing was paid.
pub fn estimate_maturity(tags: &[TagRecord]) -> Option<f64> {
    let paid: f64 = tags.iter().map(|t| t.paid).sum();
    if !(paid > 0.0) {
        return None;
    }
    Some(tags.iter().map(|t| t.weighted_delay).sum::<f64>() / paid)
}

/// Sample variance of settled tagged-share rewards (paid plus pending).
pub fn estimate_variance_per_share(tags: &[TagRecord]) -> Option<f64> {
    let values: Vec<f64> = tags.iter().filter(|t| t.settled).map(|t| t.value()).collect();
    if values.len() < 2 {
        return None;
    }
    Some(sample_variance(&values))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuinEstimate {
    pub ruined: u64,
    pub replicas: u64,
    pub frequency: f64,
    /// Binomial standard error of `frequency`.
    pub std_error: f64,
}

/// Monte Carlo ruin frequency of a PPS pool: start with reserve `r0`, pay
/// `(1-f)pB` per share, receive `B` per block, for `horizon_blocks` blocks.
/// Ruin means the reserve dropped below zero. Replicas whose reserve is so
/// large that the remaining ruin chance is below 1e-12 stop early.
pub fn pps_ruin_mc(
    f: f64,
    r0: f64,
    reward: f64,
    p: f64,
    horizon_blocks: u64,
    replicas: u64,
    seed: u64,
) -> Result<RuinEstimate> {
    if !(f > 0.0 && f < 1.0) || !(r0 >= 0.0) || !(reward > 0.0) || !(p > 0.0 && p <= 1.0) {
        return Err(Error::param("f", "need 0 < f < 1, R >= 0, B > 0, 0 < p <= 1"));
    }
    if replicas == 0 {
        return Err(Error::param("replicas", "must be at least 1"));
    }
    let cost = (1.0 - f) * p * reward;
    let safe = reward * 12.0 * std::f64::consts::LN_10 / (2.0 * f);
    let ruined: u64 = (0..replicas)
        .into_par_iter()
        .map(|i| {
            let mut rng = RngStream::new(seed, i);
            let mut r = r0;
            for _ in 0..horizon_blocks {
                let k = rng.geometric(p);
                r -= k as f64 * cost;
                if r < 0.0 {
                    return 1;
                }
                r += reward;
                if r > safe {
                    break;
                }
            }
            0
        })
        .sum();
    let frequency = ruined as f64 / replicas as f64;
    Ok(RuinEstimate {
        ruined,
        replicas,
        frequency,
        std_error: (frequency * (1.0 - frequency) / replicas as f64).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn t_interval() {
        let e = Estimate::from_samples(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(e.mean, 2.5);
        // t(3) 97.5% = 3.182446; s = 1.290994; /2
        assert!((e.half_width - 3.182446305 * 1.290994449 / 2.0).abs() < 1e-6);
        assert!((e.std_error() - 1.290994449 / 2.0).abs() < 1e-9);
        assert!(Estimate::from_samples(&[]).is_none());
        assert!(Estimate::from_samples(&[1.0]).unwrap().half_width.is_infinite());
    }

    #[test]
    fn ruin_mc_is_deterministic() {
        let a = pps_ruin_mc(0.01, 100.0, 50.0, 0.01, 2000, 64, 5).unwrap();
        let b = pps_ruin_mc(0.01, 100.0, 50.0, 0.01, 2000, 64, 5).unwrap();
        assert_eq!(a, b);
        assert!(a.frequency > 0.5);
        assert!(pps_ruin_mc(0.0, 100.0, 50.0, 0.01, 10, 1, 0).is_err());
    }
}
