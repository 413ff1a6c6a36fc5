use std::fmt;
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Uniform;
use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Law of a single coordinate; vectors are drawn i.i.d. coordinate-wise.
///
/// Exponential and gamma laws use the rate parameterization
/// (`Exp(rate)` has mean `1/rate`; `Gamma(shape, rate)` has mean `shape/rate`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DistributionSpec {
    Gaussian { mean: f64, std: f64 },
    Uniform { low: f64, high: f64 },
    Laplace { loc: f64, scale: f64 },
    Exponential { rate: f64 },
    Gamma { shape: f64, rate: f64 },
    /// Integers `−bound..=bound` with the given weights (`2·bound + 1` of them).
    DiscreteInteger { bound: u32, weights: Vec<f64> },
}

impl DistributionSpec {
    pub fn standard_normal() -> Self {
        DistributionSpec::Gaussian { mean: 0.0, std: 1.0 }
    }

    pub fn symmetric_uniform() -> Self {
        DistributionSpec::Uniform { low: -1.0, high: 1.0 }
    }

    /// Uniform law on `[−B, B] ∩ ℤ`.
    pub fn uniform_integers(bound: u32) -> Self {
        let n = 2 * bound as usize + 1;
        DistributionSpec::DiscreteInteger {
            bound,
            weights: vec![1.0 / n as f64; n],
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            DistributionSpec::Gaussian { .. } => "gaussian",
            DistributionSpec::Uniform { .. } => "uniform",
            DistributionSpec::Laplace { .. } => "laplace",
            DistributionSpec::Exponential { .. } => "exponential",
            DistributionSpec::Gamma { .. } => "gamma",
            DistributionSpec::DiscreteInteger { .. } => "discrete_integer",
        }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, DistributionSpec::DiscreteInteger { .. })
    }

    /// Bound `B` of a discrete-integer law.
    pub fn integer_bound(&self) -> Option<u32> {
        match self {
            DistributionSpec::DiscreteInteger { bound, .. } => Some(*bound),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite_pos = |x: f64| x.is_finite() && x > 0.0;
        let ok = match self {
            DistributionSpec::Gaussian { mean, std } => mean.is_finite() && finite_pos(*std),
            DistributionSpec::Uniform { low, high } => {
                low.is_finite() && high.is_finite() && high > low
            }
            DistributionSpec::Laplace { loc, scale } => loc.is_finite() && finite_pos(*scale),
            DistributionSpec::Exponential { rate } => finite_pos(*rate),
            // Log-concavity requires shape ≥ 1.
            DistributionSpec::Gamma { shape, rate } => {
                shape.is_finite() && *shape >= 1.0 && finite_pos(*rate)
            }
            DistributionSpec::DiscreteInteger { bound, weights } => {
                let sum: f64 = weights.iter().sum();
                weights.len() == 2 * *bound as usize + 1
                    && weights.iter().all(|w| w.is_finite() && *w >= 0.0)
                    && (sum - 1.0).abs() <= 1e-9
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid distribution parameters: {self}")))
        }
    }

    pub fn sampler(&self) -> Result<Sampler> {
        self.validate()?;
        let s = match self {
            DistributionSpec::Gaussian { mean, std } => {
                Sampler::Gaussian(Normal::new(*mean, *std).expect("validated"))
            }
            DistributionSpec::Uniform { low, high } => {
                Sampler::Uniform(Uniform::new(*low, *high).expect("validated"))
            }
            DistributionSpec::Laplace { loc, scale } => Sampler::Laplace {
                loc: *loc,
                scale: *scale,
            },
            DistributionSpec::Exponential { rate } => {
                Sampler::Exponential(Exp::new(*rate).expect("validated"))
            }
            DistributionSpec::Gamma { shape, rate } => {
                Sampler::Gamma(Gamma::new(*shape, 1.0 / *rate).expect("validated"))
            }
            DistributionSpec::DiscreteInteger { bound, weights } => Sampler::Discrete {
                bound: *bound as i64,
                index: WeightedIndex::new(weights)
                    .map_err(|e| Error::invalid(format!("discrete weights: {e}")))?,
            },
        };
        Ok(s)
    }
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistributionSpec::Gaussian { mean, std } => write!(f, "gaussian:{mean},{std}"),
            DistributionSpec::Uniform { low, high } => write!(f, "uniform:{low},{high}"),
            DistributionSpec::Laplace { loc, scale } => write!(f, "laplace:{loc},{scale}"),
            DistributionSpec::Exponential { rate } => write!(f, "exponential:{rate}"),
            DistributionSpec::Gamma { shape, rate } => write!(f, "gamma:{shape},{rate}"),
            DistributionSpec::DiscreteInteger { bound, weights } => {
                write!(f, "discrete:{bound}:")?;
                for (i, w) in weights.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{w}")?;
                }
                Ok(())
            }
        }
    }
}

fn parse_params(s: Option<&str>, n: usize, defaults: &[f64]) -> Result<Vec<f64>> {
    match s {
        None => Ok(defaults.to_vec()),
        Some(s) => {
            let vals = s
                .split(',')
                .map(|p| p.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::invalid(format!("bad distribution parameter {s:?}: {e}")))?;
            if vals.len() != n {
                return Err(Error::invalid(format!("expected {n} parameters, got {s:?}")));
            }
            Ok(vals)
        }
    }
}

/// Parses `family[:params]`, e.g. `gaussian`, `uniform:-1,1`, `gamma:2,1`,
/// `discrete:1` (uniform weights) or `discrete:1:0.25,0.5,0.25`.
impl FromStr for DistributionSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (family, rest) = match s.split_once(':') {
            Some((f, r)) => (f, Some(r)),
            None => (s, None),
        };
        let spec = match family.trim() {
            "gaussian" | "normal" => {
                let p = parse_params(rest, 2, &[0.0, 1.0])?;
                DistributionSpec::Gaussian { mean: p[0], std: p[1] }
            }
            "uniform" => {
                let p = parse_params(rest, 2, &[-1.0, 1.0])?;
                DistributionSpec::Uniform { low: p[0], high: p[1] }
            }
            "laplace" => {
                let p = parse_params(rest, 2, &[0.0, 1.0])?;
                DistributionSpec::Laplace { loc: p[0], scale: p[1] }
            }
            "exponential" => {
                let p = parse_params(rest, 1, &[1.0])?;
                DistributionSpec::Exponential { rate: p[0] }
            }
            "gamma" => {
                let p = parse_params(rest, 2, &[2.0, 1.0])?;
                DistributionSpec::Gamma { shape: p[0], rate: p[1] }
            }
            "discrete" | "discrete_integer" => {
                let rest = rest.ok_or_else(|| Error::invalid("discrete law needs a bound, e.g. discrete:1"))?;
                let (b, w) = match rest.split_once(':') {
                    Some((b, w)) => (b, Some(w)),
                    None => (rest, None),
                };
                let bound: u32 = b
                    .trim()
                    .parse()
                    .map_err(|e| Error::invalid(format!("bad discrete bound {b:?}: {e}")))?;
                match w {
                    None => DistributionSpec::uniform_integers(bound),
                    Some(w) => DistributionSpec::DiscreteInteger {
                        bound,
                        weights: parse_params(Some(w), 2 * bound as usize + 1, &[])?,
                    },
                }
            }
            other => return Err(Error::Unsupported(other.to_string())),
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Ready-to-draw form of a [`DistributionSpec`].
#[derive(Debug, Clone)]
pub enum Sampler {
    Gaussian(Normal<f64>),
    Uniform(Uniform<f64>),
    Laplace { loc: f64, scale: f64 },
    Exponential(Exp<f64>),
    Gamma(Gamma<f64>),
    Discrete { bound: i64, index: WeightedIndex<f64> },
}

impl Distribution<f64> for Sampler {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Sampler::Gaussian(d) => d.sample(rng),
            Sampler::Uniform(d) => d.sample(rng),
            Sampler::Laplace { loc, scale } => {
                // Inverse CDF on u ∈ (−1/2, 1/2).
                let u: f64 = rng.random::<f64>() - 0.5;
                loc - scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
            }
            Sampler::Exponential(d) => d.sample(rng),
            Sampler::Gamma(d) => d.sample(rng),
            Sampler::Discrete { bound, index } => (index.sample(rng) as i64 - bound) as f64,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display() {
        let g: DistributionSpec = "gaussian".parse().unwrap();
        assert_eq!(g, DistributionSpec::standard_normal());
        let u: DistributionSpec = "uniform:-1,1".parse().unwrap();
        assert_eq!(u, DistributionSpec::symmetric_uniform());
        let d: DistributionSpec = "discrete:1".parse().unwrap();
        assert_eq!(d, DistributionSpec::uniform_integers(1));
        let w: DistributionSpec = "discrete:1:0.25,0.5,0.25".parse().unwrap();
        assert_eq!(w.to_string(), "discrete:1:0.25,0.5,0.25");
        assert_eq!(w.to_string().parse::<DistributionSpec>().unwrap(), w);
        assert!("cauchy".parse::<DistributionSpec>().is_err());
        assert!("gamma:0.5,1".parse::<DistributionSpec>().is_err());
        assert!("discrete:1:0.5,0.5".parse::<DistributionSpec>().is_err());
    }

    #[test]
    fn serde_tagging() {
        let g = DistributionSpec::standard_normal();
        assert_eq!(
            serde_json::to_string(&g).unwrap(),
            r#"{"family":"gaussian","mean":0.0,"std":1.0}"#
        );
    }
}
