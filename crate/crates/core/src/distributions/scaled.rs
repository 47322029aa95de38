use super::{Band, InterArrivalModel, MarkModel};
use crate::error::{Error, Result};
use rand::Rng;

/// Gaps `X / lambda`: the base renewal process run `lambda` times faster.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeScaled<A> {
    base: A,
    lambda: f64,
}

impl<A: InterArrivalModel> TimeScaled<A> {
    pub fn new(base: A, lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidParameter(format!("arrival scale must be positive, got {lambda}")));
        }
        Ok(Self { base, lambda })
    }

    pub fn base(&self) -> &A {
        &self.base
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

impl<A: InterArrivalModel> InterArrivalModel for TimeScaled<A> {
    fn mean(&self) -> f64 {
        self.base.mean() / self.lambda
    }

    fn variance(&self) -> f64 {
        self.base.variance() / (self.lambda * self.lambda)
    }

    fn cdf(&self, x: f64) -> f64 {
        self.base.cdf(x * self.lambda)
    }

    fn survival(&self, x: f64) -> f64 {
        self.base.survival(x * self.lambda)
    }

    fn cumulant_bound(&self) -> f64 {
        self.base.cumulant_bound() * self.lambda
    }

    fn cumulant_unchecked(&self, theta: f64) -> f64 {
        self.base.cumulant_unchecked(theta / self.lambda)
    }

    fn cumulant_slope_unchecked(&self, theta: f64) -> f64 {
        self.base.cumulant_slope_unchecked(theta / self.lambda) / self.lambda
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.base.sample(rng) / self.lambda
    }

    fn sample_tilted<R: Rng + ?Sized>(&self, theta: f64, rng: &mut R) -> Result<f64> {
        self.check_domain(theta)?;
        Ok(self.base.sample_tilted(theta / self.lambda, rng)? / self.lambda)
    }

    fn sample_length_biased<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.base.sample_length_biased(rng) / self.lambda
    }

    fn sample_equilibrium<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.base.sample_equilibrium(rng) / self.lambda
    }

    fn equilibrium_cdf(&self, x: f64) -> f64 {
        self.base.equilibrium_cdf(x * self.lambda)
    }

    fn sample_residual<R: Rng + ?Sized>(&self, age: f64, rng: &mut R) -> Result<f64> {
        Ok(self.base.sample_residual(age * self.lambda, rng)? / self.lambda)
    }

    fn is_memoryless(&self) -> bool {
        self.base.is_memoryless()
    }
}

/// Marks `V / nu`: service requirements processed `nu` times faster.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkScaled<M> {
    base: M,
    nu: f64,
}

impl<M: MarkModel> MarkScaled<M> {
    pub fn new(base: M, nu: f64) -> Result<Self> {
        if !(nu.is_finite() && nu > 0.0) {
            return Err(Error::InvalidParameter(format!("service scale must be positive, got {nu}")));
        }
        Ok(Self { base, nu })
    }

    pub fn base(&self) -> &M {
        &self.base
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }
}

impl<M: MarkModel> MarkModel for MarkScaled<M> {
    fn cdf(&self, x: f64) -> f64 {
        self.base.cdf(x * self.nu)
    }

    fn abs_tail(&self, c: f64) -> f64 {
        self.base.abs_tail(c * self.nu)
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.base.sample(rng) / self.nu
    }

    fn sample_band<R: Rng + ?Sized>(&self, band: Band, rng: &mut R) -> Result<f64> {
        let scaled = match band {
            Band::AtMost(c) => Band::AtMost(c * self.nu),
            Band::Above(c) => Band::Above(c * self.nu),
            Band::Within { lower, upper } => Band::Within {
                lower: lower * self.nu,
                upper: upper * self.nu,
            },
        };
        let v = self.base.sample_band(scaled, rng)? / self.nu;
        // undo rounding of the rescale at the band edges
        let (lo, hi) = band.bounds();
        Ok(if v.abs() > hi {
            hi.copysign(v)
        } else if v.abs() <= lo {
            super::special::next_up(lo).copysign(v)
        } else {
            v
        })
    }

    fn abs_moment(&self, p: f64) -> f64 {
        self.base.abs_moment(p) / self.nu.powf(p)
    }

    fn abs_sup(&self) -> Option<f64> {
        self.base.abs_sup().map(|s| s / self.nu)
    }

    fn stop_loss(&self, x: f64) -> f64 {
        self.base.stop_loss(x * self.nu) / self.nu
    }

    fn tail_integral_bound(&self, alpha: f64, k: f64) -> f64 {
        let s = self.nu.powf(1.0 / alpha);
        self.base.tail_integral_bound(alpha, k * s) / s
    }

    fn mean(&self) -> f64 {
        self.base.mean() / self.nu
    }

    fn equilibrium_cdf(&self, x: f64) -> f64 {
        self.base.equilibrium_cdf(x * self.nu)
    }
}
