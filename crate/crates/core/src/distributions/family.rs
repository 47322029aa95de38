//! Config-facing family descriptors and the runtime laws they build.

use super::{Band, Deterministic, Discrete, Exponential, Gamma, InterArrivalModel, Lognormal, MarkModel, ShiftedExponential, Uniform};
use crate::error::Result;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Inter-arrival family with its parameters, as written in a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum InterArrivalFamily {
    Exponential { rate: f64 },
    Gamma { shape: f64, rate: f64 },
    ShiftedExponential { shift: f64, rate: f64 },
    Deterministic { value: f64 },
}

/// Mark family with its parameters, as written in a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum MarkFamily {
    Lognormal { location: f64, scale: f64 },
    Exponential { rate: f64 },
    Gamma { shape: f64, rate: f64 },
    Uniform { low: f64, high: f64 },
    Deterministic { value: f64 },
    Discrete { values: Vec<f64>, weights: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum AnyInterArrival {
    Exponential(Exponential),
    Gamma(Gamma),
    ShiftedExponential(ShiftedExponential),
    Deterministic(Deterministic),
}

#[derive(Debug, Clone, PartialEq)]
pub enum AnyMark {
    Lognormal(Lognormal),
    Exponential(Exponential),
    Gamma(Gamma),
    Uniform(Uniform),
    Deterministic(Deterministic),
    Discrete(Discrete),
}

impl InterArrivalFamily {
    pub fn build(&self) -> Result<AnyInterArrival> {
        Ok(match *self {
            Self::Exponential { rate } => AnyInterArrival::Exponential(Exponential::new(rate)?),
            Self::Gamma { shape, rate } => AnyInterArrival::Gamma(Gamma::new(shape, rate)?),
            Self::ShiftedExponential { shift, rate } => AnyInterArrival::ShiftedExponential(ShiftedExponential::new(shift, rate)?),
            Self::Deterministic { value } => AnyInterArrival::Deterministic(Deterministic::new(value)?),
        })
    }

    /// Poisson arrivals, for which closed-form queue answers exist.
    pub fn is_exponential(&self) -> bool {
        matches!(self, Self::Exponential { .. })
    }
}

impl MarkFamily {
    pub fn build(&self) -> Result<AnyMark> {
        Ok(match self {
            Self::Lognormal { location, scale } => AnyMark::Lognormal(Lognormal::new(*location, *scale)?),
            Self::Exponential { rate } => AnyMark::Exponential(Exponential::new(*rate)?),
            Self::Gamma { shape, rate } => AnyMark::Gamma(Gamma::new(*shape, *rate)?),
            Self::Uniform { low, high } => AnyMark::Uniform(Uniform::new(*low, *high)?),
            Self::Deterministic { value } => AnyMark::Deterministic(Deterministic::new(*value)?),
            Self::Discrete { values, weights } => AnyMark::Discrete(Discrete::new(values.clone(), weights.clone())?),
        })
    }
}

macro_rules! arrival_dispatch {
    ($self:ident, $m:ident => $e:expr) => {
        match $self {
            AnyInterArrival::Exponential($m) => $e,
            AnyInterArrival::Gamma($m) => $e,
            AnyInterArrival::ShiftedExponential($m) => $e,
            AnyInterArrival::Deterministic($m) => $e,
        }
    };
}

macro_rules! mark_dispatch {
    ($self:ident, $m:ident => $e:expr) => {
        match $self {
            AnyMark::Lognormal($m) => $e,
            AnyMark::Exponential($m) => $e,
            AnyMark::Gamma($m) => $e,
            AnyMark::Uniform($m) => $e,
            AnyMark::Deterministic($m) => $e,
            AnyMark::Discrete($m) => $e,
        }
    };
}

impl InterArrivalModel for AnyInterArrival {
    fn mean(&self) -> f64 {
        arrival_dispatch!(self, m => InterArrivalModel::mean(m))
    }
    fn variance(&self) -> f64 {
        arrival_dispatch!(self, m => m.variance())
    }
    fn cdf(&self, x: f64) -> f64 {
        arrival_dispatch!(self, m => InterArrivalModel::cdf(m, x))
    }
    fn survival(&self, x: f64) -> f64 {
        arrival_dispatch!(self, m => m.survival(x))
    }
    fn cumulant_bound(&self) -> f64 {
        arrival_dispatch!(self, m => m.cumulant_bound())
    }
    fn cumulant_unchecked(&self, theta: f64) -> f64 {
        arrival_dispatch!(self, m => m.cumulant_unchecked(theta))
    }
    fn cumulant_slope_unchecked(&self, theta: f64) -> f64 {
        arrival_dispatch!(self, m => m.cumulant_slope_unchecked(theta))
    }
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        arrival_dispatch!(self, m => InterArrivalModel::sample(m, rng))
    }
    fn sample_tilted<R: Rng + ?Sized>(&self, theta: f64, rng: &mut R) -> Result<f64> {
        arrival_dispatch!(self, m => m.sample_tilted(theta, rng))
    }
    fn sample_length_biased<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        arrival_dispatch!(self, m => m.sample_length_biased(rng))
    }
    fn sample_equilibrium<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        arrival_dispatch!(self, m => m.sample_equilibrium(rng))
    }
    fn equilibrium_cdf(&self, x: f64) -> f64 {
        arrival_dispatch!(self, m => InterArrivalModel::equilibrium_cdf(m, x))
    }
    fn sample_residual<R: Rng + ?Sized>(&self, age: f64, rng: &mut R) -> Result<f64> {
        arrival_dispatch!(self, m => m.sample_residual(age, rng))
    }
    fn is_memoryless(&self) -> bool {
        arrival_dispatch!(self, m => m.is_memoryless())
    }
}

impl MarkModel for AnyMark {
    fn cdf(&self, x: f64) -> f64 {
        mark_dispatch!(self, m => MarkModel::cdf(m, x))
    }
    fn abs_tail(&self, c: f64) -> f64 {
        mark_dispatch!(self, m => MarkModel::abs_tail(m, c))
    }
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        mark_dispatch!(self, m => MarkModel::sample(m, rng))
    }
    fn sample_band<R: Rng + ?Sized>(&self, band: Band, rng: &mut R) -> Result<f64> {
        mark_dispatch!(self, m => MarkModel::sample_band(m, band, rng))
    }
    fn abs_moment(&self, p: f64) -> f64 {
        mark_dispatch!(self, m => MarkModel::abs_moment(m, p))
    }
    fn abs_sup(&self) -> Option<f64> {
        mark_dispatch!(self, m => MarkModel::abs_sup(m))
    }
    fn stop_loss(&self, x: f64) -> f64 {
        mark_dispatch!(self, m => MarkModel::stop_loss(m, x))
    }
    fn tail_integral_bound(&self, alpha: f64, k: f64) -> f64 {
        mark_dispatch!(self, m => MarkModel::tail_integral_bound(m, alpha, k))
    }
    fn mean(&self) -> f64 {
        mark_dispatch!(self, m => MarkModel::mean(m))
    }
    fn equilibrium_cdf(&self, x: f64) -> f64 {
        mark_dispatch!(self, m => MarkModel::equilibrium_cdf(m, x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn built_laws_delegate_to_their_family() {
        let g = InterArrivalFamily::Gamma { shape: 2.0, rate: 2.0 }.build().unwrap();
        assert_eq!(g.mean(), 1.0);
        assert!((g.cumulant(1.0).unwrap() - 2.0 * 2f64.ln()).abs() < 1e-14);
        let m = MarkFamily::Lognormal {
            location: -0.25,
            scale: 0.5,
        }
        .build()
        .unwrap();
        assert!((m.mean() - (-0.125f64).exp()).abs() < 1e-15);
        assert!(InterArrivalFamily::Exponential { rate: -1.0 }.build().is_err());
        assert!(MarkFamily::Uniform { low: 2.0, high: 1.0 }.build().is_err());
    }
}
