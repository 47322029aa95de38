//! Inter-arrival and mark laws.
//!
//! Everything downstream is generic over two traits. [`InterArrivalModel`]
//! carries what the arrival-side construction needs from the law of the gaps
//! `X_n`: the cumulant `psi(theta) = log E exp(theta X)`, samplers for the
//! nominal, exponentially tilted, length-biased and equilibrium laws, and the
//! residual law given an age. [`MarkModel`] carries what the mark side needs:
//! tail probabilities of `|V|`, exact conditional draws on bands of `|V|`,
//! and a certified bound on the tail integral of `|V|^(1/alpha)`.

mod family;
mod interarrival;
mod marks;
mod scaled;
pub mod special;

pub use family::{AnyInterArrival, AnyMark, InterArrivalFamily, MarkFamily};
pub use interarrival::{Deterministic, Exponential, Gamma, ShiftedExponential};
pub use marks::{Discrete, Lognormal, Uniform};
pub use scaled::{MarkScaled, TimeScaled};

use crate::error::{Error, Result};
use rand::Rng;

pub trait InterArrivalModel: std::fmt::Debug + Send + Sync {
    fn mean(&self) -> f64;

    fn variance(&self) -> f64;

    fn cdf(&self, x: f64) -> f64;

    fn survival(&self, x: f64) -> f64 {
        1.0 - self.cdf(x)
    }

    /// Supremum of the set where `psi` is finite. Every positive `theta`
    /// strictly below it is admissible; nonpositive `theta` always is.
    fn cumulant_bound(&self) -> f64;

    /// `psi(theta)` without the domain check.
    fn cumulant_unchecked(&self, theta: f64) -> f64;

    /// `psi'(theta)` without the domain check.
    fn cumulant_slope_unchecked(&self, theta: f64) -> f64;

    fn cumulant(&self, theta: f64) -> Result<f64> {
        self.check_domain(theta)?;
        Ok(self.cumulant_unchecked(theta))
    }

    fn cumulant_slope(&self, theta: f64) -> Result<f64> {
        self.check_domain(theta)?;
        Ok(self.cumulant_slope_unchecked(theta))
    }

    fn check_domain(&self, theta: f64) -> Result<()> {
        let bound = self.cumulant_bound();
        if theta.is_nan() || (theta > 0.0 && theta >= bound) {
            Err(Error::CumulantDomain { theta, bound })
        } else {
            Ok(())
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64;

    /// Draw from `G_theta(dx) = exp(theta x - psi(theta)) G(dx)`.
    fn sample_tilted<R: Rng + ?Sized>(&self, theta: f64, rng: &mut R) -> Result<f64>;

    /// Draw from the length-biased law `x G(dx) / mu`: the law of the gap
    /// that straddles a fixed time in a stationary renewal process.
    fn sample_length_biased<R: Rng + ?Sized>(&self, rng: &mut R) -> f64;

    /// Draw from the equilibrium law with density `(1 - G(x)) / mu`, the
    /// forward recurrence time of the stationary process.
    ///
    /// A uniformly split length-biased gap has exactly this law, so no family
    /// needs its own inversion.
    fn sample_equilibrium<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        special::open01(rng) * self.sample_length_biased(rng)
    }

    /// `G_eq(x) = mu^{-1} int_0^x (1 - G(t)) dt`.
    fn equilibrium_cdf(&self, x: f64) -> f64;

    /// Draw `X - age` conditional on `X > age`.
    fn sample_residual<R: Rng + ?Sized>(&self, age: f64, rng: &mut R) -> Result<f64>;

    /// True when the gaps are exponential, so the arrival process is Poisson.
    fn is_memoryless(&self) -> bool {
        false
    }
}

/// A set of values of `|V|`, used to condition mark draws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Band {
    /// `|V| <= c`
    AtMost(f64),
    /// `|V| > c`
    Above(f64),
    /// `lower < |V| <= upper`
    Within { lower: f64, upper: f64 },
}

impl Band {
    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            Band::AtMost(c) => (f64::NEG_INFINITY, c),
            Band::Above(c) => (c, f64::INFINITY),
            Band::Within { lower, upper } => (lower, upper),
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        let (lo, hi) = self.bounds();
        let a = v.abs();
        a > lo && a <= hi
    }
}

pub trait MarkModel: std::fmt::Debug + Send + Sync {
    /// `F(x) = P(V <= x)`.
    fn cdf(&self, x: f64) -> f64;

    /// `P(|V| > c)`.
    fn abs_tail(&self, c: f64) -> f64;

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64;

    /// Exact draw of `V` conditional on `|V|` lying in `band`.
    fn sample_band<R: Rng + ?Sized>(&self, band: Band, rng: &mut R) -> Result<f64>;

    /// `E|V|^p`, possibly infinite.
    fn abs_moment(&self, p: f64) -> f64;

    /// Largest value `|V|` can take, when bounded.
    fn abs_sup(&self) -> Option<f64> {
        None
    }

    /// `E(|V| - x)^+`.
    fn stop_loss(&self, x: f64) -> f64;

    /// A bound `u(k) >= int_k^inf P(|V|^(1/alpha) > y) dy` that vanishes as
    /// `k` grows. Families override this with the exact integral where one
    /// is available; the fallback is Markov's inequality on the integrand,
    /// `E|V|^(2/alpha) / k`, capped by `u(0) = E|V|^(1/alpha)`.
    fn tail_integral_bound(&self, alpha: f64, k: f64) -> f64 {
        if alpha == 1.0 {
            return self.stop_loss(k.max(0.0));
        }
        markov_tail_bound(self, alpha, k)
    }

    /// `E|V|^(1/alpha)`.
    fn shape_moment(&self, alpha: f64) -> f64 {
        self.abs_moment(1.0 / alpha)
    }

    fn mean(&self) -> f64;

    /// CDF of the equilibrium (residual-life) law of `|V|`, i.e. of the
    /// residual service times seen in an M/G/inf queue in steady state.
    fn equilibrium_cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let m = self.stop_loss(0.0);
        (1.0 - self.stop_loss(x) / m).clamp(0.0, 1.0)
    }
}

pub(crate) fn markov_tail_bound<M: MarkModel + ?Sized>(model: &M, alpha: f64, k: f64) -> f64 {
    if let Some(sup) = model.abs_sup() {
        if k >= sup.powf(1.0 / alpha) {
            return 0.0;
        }
    }
    let cap = model.shape_moment(alpha);
    if k <= 0.0 {
        return cap;
    }
    (model.abs_moment(2.0 / alpha) / k).min(cap)
}

/// Shared argument check for band draws: the band must carry mass.
pub(crate) fn band_mass<M: MarkModel + ?Sized>(model: &M, band: Band) -> Result<f64> {
    let (lo, hi) = band.bounds();
    let mass = if lo < 0.0 { 1.0 } else { model.abs_tail(lo) } - if hi.is_finite() { model.abs_tail(hi) } else { 0.0 };
    if mass > 0.0 && lo < hi {
        Ok(mass)
    } else {
        Err(Error::NullEvent(format!("P(|V| in {band:?}) = 0")))
    }
}
