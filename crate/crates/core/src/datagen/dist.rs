use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Exp, LogNormal, Uniform};
use statrs::distribution::{ContinuousCDF, LogNormal as LogNormalCdf};

/// Bid or cost distribution with a known CDF and quantile function.
///
/// Text form: `uniform:LO,HI`, `exp:RATE`, `lognormal:MU,SIGMA`, `const:V`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BidDistribution {
    Uniform { lo: f64, hi: f64 },
    Exponential { rate: f64 },
    LogNormal { mu: f64, sigma: f64 },
    PointMass { value: f64 },
}

impl BidDistribution {
    pub fn validate(&self) -> Result<(), String> {
        let finite = |x: f64, name: &str| {
            if x.is_finite() {
                Ok(())
            } else {
                Err(format!("{name} must be finite"))
            }
        };
        match *self {
            BidDistribution::Uniform { lo, hi } => {
                finite(lo, "lo")?;
                finite(hi, "hi")?;
                if lo < 0.0 || lo >= hi {
                    return Err(format!("uniform needs 0 <= lo < hi, got [{lo}, {hi}]"));
                }
            }
            BidDistribution::Exponential { rate } => {
                if !(rate.is_finite() && rate > 0.0) {
                    return Err(format!("exponential rate must be > 0, got {rate}"));
                }
            }
            BidDistribution::LogNormal { mu, sigma } => {
                finite(mu, "mu")?;
                if !(sigma.is_finite() && sigma > 0.0) {
                    return Err(format!("lognormal sigma must be > 0, got {sigma}"));
                }
            }
            BidDistribution::PointMass { value } => {
                if !(value.is_finite() && value >= 0.0) {
                    return Err(format!("point mass must be finite and >= 0, got {value}"));
                }
            }
        }
        Ok(())
    }

    /// Right-continuous CDF.
    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            BidDistribution::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            BidDistribution::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
            BidDistribution::LogNormal { mu, sigma } => {
                if x <= 0.0 {
                    0.0
                } else {
                    lognormal(mu, sigma).cdf(x)
                }
            }
            BidDistribution::PointMass { value } => {
                if x >= value {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Generalized inverse `inf{x : F(x) >= q}` for `q` in `[0, 1]`.
    pub fn quantile(&self, q: f64) -> f64 {
        let q = q.clamp(0.0, 1.0);
        match *self {
            BidDistribution::Uniform { lo, hi } => lo + q * (hi - lo),
            BidDistribution::Exponential { rate } => {
                if q >= 1.0 {
                    f64::INFINITY
                } else {
                    -(-q).ln_1p() / rate
                }
            }
            BidDistribution::LogNormal { mu, sigma } => {
                if q <= 0.0 {
                    0.0
                } else if q >= 1.0 {
                    f64::INFINITY
                } else {
                    lognormal(mu, sigma).inverse_cdf(q)
                }
            }
            BidDistribution::PointMass { value } => value,
        }
    }

    /// Smallest and largest points of the support (upper may be infinite).
    pub fn support(&self) -> (f64, f64) {
        match *self {
            BidDistribution::Uniform { lo, hi } => (lo, hi),
            BidDistribution::Exponential { .. } | BidDistribution::LogNormal { .. } => (0.0, f64::INFINITY),
            BidDistribution::PointMass { value } => (value, value),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            BidDistribution::Uniform { lo, hi } => 0.5 * (lo + hi),
            BidDistribution::Exponential { rate } => 1.0 / rate,
            BidDistribution::LogNormal { mu, sigma } => (mu + 0.5 * sigma * sigma).exp(),
            BidDistribution::PointMass { value } => value,
        }
    }

    /// Draws one value. Parameters must already be validated.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            BidDistribution::Uniform { lo, hi } => Uniform::new(lo, hi).expect("validated").sample(rng),
            BidDistribution::Exponential { rate } => Exp::new(rate).expect("validated").sample(rng),
            BidDistribution::LogNormal { mu, sigma } => LogNormal::new(mu, sigma).expect("validated").sample(rng),
            BidDistribution::PointMass { value } => value,
        }
    }
}

fn lognormal(mu: f64, sigma: f64) -> LogNormalCdf {
    LogNormalCdf::new(mu, sigma).expect("validated lognormal parameters")
}

impl fmt::Display for BidDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BidDistribution::Uniform { lo, hi } => write!(f, "uniform:{lo},{hi}"),
            BidDistribution::Exponential { rate } => write!(f, "exp:{rate}"),
            BidDistribution::LogNormal { mu, sigma } => write!(f, "lognormal:{mu},{sigma}"),
            BidDistribution::PointMass { value } => write!(f, "const:{value}"),
        }
    }
}

impl FromStr for BidDistribution {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (family, params) = s.split_once(':').ok_or_else(|| format!("expected FAMILY:PARAMS, got '{s}'"))?;
        let params: Vec<f64> = params
            .split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|_| format!("bad number '{p}' in '{s}'")))
            .collect::<Result<_, _>>()?;
        let dist = match (family.trim(), params.as_slice()) {
            ("uniform", &[lo, hi]) => BidDistribution::Uniform { lo, hi },
            ("exp" | "exponential", &[rate]) => BidDistribution::Exponential { rate },
            ("lognormal", &[mu, sigma]) => BidDistribution::LogNormal { mu, sigma },
            ("const" | "point", &[value]) => BidDistribution::PointMass { value },
            (family, params) => {
                return Err(format!("unknown distribution '{family}' with {} parameter(s)", params.len()))
            }
        };
        dist.validate()?;
        Ok(dist)
    }
}
