use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{
    buffer::{Esmpps, Mpps, Smpps},
    framework::{Decay, Framework},
    round::{Dgm, DgmLog, Geometric, GeometricLog, Pps, Proportional, Slush},
    window::{PayOnce, ShiftPplns, SimplePplns, UnitPplns},
    Hybrid, RewardMethod, LOG_SENTINEL,
};
use crate::error::{Error, Result};

fn sentinel() -> f64 {
    LOG_SENTINEL
}

/// Engine selection and parameters. In JSON the variant is chosen by the
/// `method` field, e.g. `{"method": "geometric", "f": 0.0, "c": 0.1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
pub enum EngineConfig {
    Pps {
        f: f64,
    },
    Proportional {
        f: f64,
    },
    /// Score `exp(T/C)` with `C` in seconds.
    Slush {
        f: f64,
        c: f64,
    },
    Geometric {
        f: f64,
        c: f64,
        #[serde(default)]
        log_scale: bool,
        #[serde(default = "sentinel")]
        sentinel: f64,
    },
    /// Double geometric. With `o = 1` the decay is set by either a fixed `r`
    /// or `alpha`, giving `r = exp(alpha·p)` per share.
    Dgm {
        f: f64,
        c: f64,
        o: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        r: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha: Option<f64>,
        #[serde(default)]
        log_scale: bool,
        #[serde(default = "sentinel")]
        sentinel: f64,
    },
    PplnsSimple {
        f: f64,
        n: u64,
        /// Accept (and ignore) changes in `p` and `B`; otherwise they are errors.
        #[serde(default)]
        assume_constant: bool,
    },
    PplnsUnit {
        f: f64,
        x: f64,
    },
    PplnsShift {
        f: f64,
        x: f64,
        n: usize,
    },
    PplnsPayOnce {
        f: f64,
        x: f64,
    },
    Framework {
        f: f64,
        decay: DecaySpec,
        #[serde(default)]
        o: Void,
    },
    Mpps {
        f: f64,
    },
    Smpps {
        f: f64,
        /// Hold the buffer at this level (an analysis harness, not a real pool).
        #[serde(default, skip_serializing_if = "Option::is_none")]
        constant_buffer: Option<f64>,
    },
    Esmpps {
        f: f64,
    },
    Hybrid {
        weights: [f64; 2],
        engines: Vec<EngineConfig>,
    },
}

/// Decay function `r(x)` for the unit-based framework.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DecaySpec {
    Step { x: f64 },
    Exponential { alpha: f64 },
    Linear { x: f64 },
    /// Piecewise-linear `r` through `(x, r(x))` knots starting at `x = 0`;
    /// zero past the last knot.
    Custom { points: Vec<(f64, f64)> },
}

/// Round-separation void in units; `"inf"` in JSON for complete reset.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Void(pub f64);

impl Serialize for Void {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Void {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Void(v)),
            Raw::Text(t) if t == "inf" || t == "infinity" => Ok(Void(f64::INFINITY)),
            Raw::Text(t) => Err(serde::de::Error::custom(format!(
                "expected a number or \"inf\", got \"{t}\""
            ))),
        }
    }
}

fn check_fee(f: f64) -> Result<()> {
    if !(f < 1.0) || !f.is_finite() {
        return Err(Error::param("f", "fee must be finite and < 1"));
    }
    Ok(())
}

fn check_unit_interval(name: &'static str, v: f64) -> Result<()> {
    if !(v > 0.0 && v < 1.0) {
        return Err(Error::param(name, format!("{v} outside (0, 1)")));
    }
    Ok(())
}

impl EngineConfig {
    /// The fixed fee.
    pub fn fee(&self) -> f64 {
        match self {
            EngineConfig::Pps { f }
            | EngineConfig::Proportional { f }
            | EngineConfig::Slush { f, .. }
            | EngineConfig::Geometric { f, .. }
            | EngineConfig::Dgm { f, .. }
            | EngineConfig::PplnsSimple { f, .. }
            | EngineConfig::PplnsUnit { f, .. }
            | EngineConfig::PplnsShift { f, .. }
            | EngineConfig::PplnsPayOnce { f, .. }
            | EngineConfig::Framework { f, .. }
            | EngineConfig::Mpps { f }
            | EngineConfig::Smpps { f, .. }
            | EngineConfig::Esmpps { f } => *f,
            EngineConfig::Hybrid { weights, engines } => engines
                .iter()
                .zip(weights)
                .map(|(e, w)| w * e.fee())
                .sum(),
        }
    }

    /// Expected payout per share relative to `pB`, for a fair pool.
    pub fn fair_fraction(&self) -> f64 {
        match self {
            EngineConfig::Geometric { f, c, .. } => (1.0 - f) * (1.0 - c),
            EngineConfig::Dgm { f, c, o, .. } => {
                if *o >= 1.0 {
                    1.0 - f
                } else {
                    (1.0 - f) * (1.0 - c)
                }
            }
            EngineConfig::Hybrid { weights, engines } => engines
                .iter()
                .zip(weights)
                .map(|(e, w)| w * e.fair_fraction())
                .sum(),
            other => 1.0 - other.fee(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.build().map(|_| ())
    }

    pub(crate) fn build(&self) -> Result<Box<dyn RewardMethod>> {
        check_fee(self.fee())?;
        Ok(match self {
            EngineConfig::Pps { f } => Box::new(Pps::new(*f)),
            EngineConfig::Proportional { f } => Box::new(Proportional::new(*f)),
            EngineConfig::Slush { f, c } => {
                if !(*c > 0.0) {
                    return Err(Error::param("c", "time constant must be positive"));
                }
                Box::new(Slush::new(*f, *c))
            }
            EngineConfig::Geometric {
                f,
                c,
                log_scale,
                sentinel,
            } => {
                check_unit_interval("c", *c)?;
                if *log_scale {
                    Box::new(GeometricLog::new(*f, *c, *sentinel))
                } else {
                    Box::new(Geometric::new(*f, *c))
                }
            }
            EngineConfig::Dgm {
                f,
                c,
                o,
                r,
                alpha,
                log_scale,
                sentinel,
            } => {
                if !(*o >= 0.0 && *o <= 1.0) {
                    return Err(Error::param("o", "must lie in [0, 1]"));
                }
                let decay = if *o < 1.0 {
                    check_unit_interval("c", *c)?;
                    if r.is_some() || alpha.is_some() {
                        return Err(Error::param("r", "r and alpha are only free when o = 1"));
                    }
                    DgmDecay::Formula
                } else {
                    if !(*c >= 0.0 && *c < 1.0) {
                        return Err(Error::param("c", "must lie in [0, 1) when o = 1"));
                    }
                    match (r, alpha) {
                        (Some(r), None) if *r > 1.0 => DgmDecay::Fixed(*r),
                        (None, Some(a)) if *a > 0.0 => DgmDecay::PerUnit(*a),
                        _ => {
                            return Err(Error::param(
                                "r",
                                "o = 1 needs exactly one of r > 1 or alpha > 0",
                            ))
                        }
                    }
                };
                let params = DgmParams {
                    f: *f,
                    c: *c,
                    o: *o,
                    decay,
                };
                if *log_scale {
                    Box::new(DgmLog::new(params, *sentinel))
                } else {
                    Box::new(Dgm::new(params))
                }
            }
            EngineConfig::PplnsSimple {
                f,
                n,
                assume_constant,
            } => {
                if *n == 0 {
                    return Err(Error::param("n", "window must hold at least one share"));
                }
                Box::new(SimplePplns::new(*f, *n, *assume_constant))
            }
            EngineConfig::PplnsUnit { f, x } => {
                if !(*x > 0.0) || !x.is_finite() {
                    return Err(Error::param("x", "window must be positive"));
                }
                Box::new(UnitPplns::new(*f, *x))
            }
            EngineConfig::PplnsShift { f, x, n } => {
                if !(*x > 0.0) || *n == 0 {
                    return Err(Error::param("x", "shift length and count must be positive"));
                }
                Box::new(ShiftPplns::new(*f, *x, *n))
            }
            EngineConfig::PplnsPayOnce { f, x } => {
                if !(*x > 0.0 && *x < 1.0) {
                    return Err(Error::param("x", "pay-once window must lie in (0, 1)"));
                }
                Box::new(PayOnce::new(*f, *x))
            }
            EngineConfig::Framework { f, decay, o } => {
                if !(o.0 >= 0.0) {
                    return Err(Error::param("o", "void must be >= 0"));
                }
                Box::new(Framework::new(*f, Decay::new(decay)?, o.0))
            }
            EngineConfig::Mpps { f } => Box::new(Mpps::new(*f)),
            EngineConfig::Smpps { f, constant_buffer } => {
                if let Some(r) = constant_buffer {
                    if !(*r < 0.0) {
                        return Err(Error::param("constant_buffer", "must be negative"));
                    }
                }
                Box::new(Smpps::new(*f, *constant_buffer))
            }
            EngineConfig::Esmpps { f } => Box::new(Esmpps::new(*f)),
            EngineConfig::Hybrid { weights, engines } => {
                if engines.len() != 2 {
                    return Err(Error::param("engines", "hybrid takes exactly two engines"));
                }
                Box::new(Hybrid::new(*weights, engines[0].build()?, engines[1].build()?)?)
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum DgmDecay {
    /// `r = 1 + p(1-c)(1-o)/c`.
    Formula,
    Fixed(f64),
    /// `r = exp(alpha·p)`.
    PerUnit(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct DgmParams {
    pub f: f64,
    pub c: f64,
    pub o: f64,
    pub decay: DgmDecay,
}

impl DgmParams {
    pub fn r(&self, p: f64) -> f64 {
        match self.decay {
            DgmDecay::Formula => 1.0 + p * (1.0 - self.c) * (1.0 - self.o) / self.c,
            DgmDecay::Fixed(r) => r,
            DgmDecay::PerUnit(a) => (a * p).exp(),
        }
    }

    pub fn ln_r(&self, p: f64) -> f64 {
        match self.decay {
            DgmDecay::Formula => (p * (1.0 - self.c) * (1.0 - self.o) / self.c).ln_1p(),
            DgmDecay::Fixed(r) => r.ln(),
            DgmDecay::PerUnit(a) => a * p,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_tagged_json() {
        let c: EngineConfig =
            serde_json::from_str(r#"{"method":"geometric","f":0.01,"c":0.2}"#).unwrap();
        assert_eq!(
            c,
            EngineConfig::Geometric {
                f: 0.01,
                c: 0.2,
                log_scale: false,
                sentinel: LOG_SENTINEL
            }
        );
        let fw: EngineConfig = serde_json::from_str(
            r#"{"method":"framework","f":0,"decay":{"kind":"step","x":1},"o":"inf"}"#,
        )
        .unwrap();
        match fw {
            EngineConfig::Framework { o, .. } => assert!(o.0.is_infinite()),
            _ => unreachable!(),
        }
    }

    #[test]
    fn unknown_fields_rejected() {
        let r: std::result::Result<EngineConfig, _> =
            serde_json::from_str(r#"{"method":"pps","f":0.01,"bogus":1}"#);
        assert!(r.is_err());
    }

    #[test]
    fn parameter_ranges() {
        let bad = [
            EngineConfig::Geometric {
                f: 0.0,
                c: 1.0,
                log_scale: false,
                sentinel: LOG_SENTINEL,
            },
            EngineConfig::Pps { f: 1.0 },
            EngineConfig::PplnsPayOnce { f: 0.0, x: 1.0 },
            EngineConfig::Dgm {
                f: 0.0,
                c: 0.1,
                o: 1.5,
                r: None,
                alpha: None,
                log_scale: false,
                sentinel: LOG_SENTINEL,
            },
            EngineConfig::Dgm {
                f: 0.0,
                c: 0.0,
                o: 1.0,
                r: None,
                alpha: None,
                log_scale: false,
                sentinel: LOG_SENTINEL,
            },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }
}
