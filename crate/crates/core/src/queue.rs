//! The GI/GI/inf queue in steady state.
//!
//! Customer `n` of the backward half-line arrived `A_n` ago and brought work
//! `V_n`; it is still in service at time 0 exactly when `V_n > A_n`, which is
//! membership in the cone with `alpha = 1`. Sampling that cone exactly
//! therefore samples the stationary queue.
//!
//! Systems are indexed by `(lambda, nu)`: gaps are `X / lambda` and service
//! requirements `V / nu` for fixed base laws.

use crate::distributions::{InterArrivalModel, MarkModel, MarkScaled, TimeScaled};
use crate::error::{Error, Result};
use crate::mark_sequence::{FillLaw, MarkSampler};
use crate::region::{sample_half_line, MarkedProcess};
use crate::rng::Streams;
use crate::stats::Summary;
use serde::{Deserialize, Serialize};

/// Base laws with the `(lambda, nu)` scaling applied.
#[derive(Debug, Clone)]
pub struct ScaledSystem<A, M> {
    base_arrivals: A,
    base_marks: M,
    lambda: f64,
    nu: f64,
    epsilon_fraction: f64,
    process: MarkedProcess<TimeScaled<A>, MarkScaled<M>>,
}

impl<A, M> ScaledSystem<A, M>
where
    A: InterArrivalModel + Clone,
    M: MarkModel + Clone,
{
    /// `epsilon_fraction` sets the drift margin `eps` as a fraction of the
    /// scaled mean gap.
    pub fn new(base_arrivals: A, base_marks: M, lambda: f64, nu: f64, epsilon_fraction: f64) -> Result<Self> {
        if base_marks.cdf(0.0) > 0.0 {
            return Err(Error::InvalidParameter("service requirements must be positive".into()));
        }
        if !base_marks.mean().is_finite() {
            return Err(Error::InvalidParameter("service requirements need a finite mean".into()));
        }
        let arrivals = TimeScaled::new(base_arrivals.clone(), lambda)?;
        let marks = MarkScaled::new(base_marks.clone(), nu)?;
        let process = MarkedProcess::new(arrivals, marks, 1.0, epsilon_fraction)?;
        Ok(Self {
            base_arrivals,
            base_marks,
            lambda,
            nu,
            epsilon_fraction,
            process,
        })
    }

    /// The same base laws at another `(lambda, nu)`.
    pub fn at(&self, lambda: f64, nu: f64) -> Result<Self> {
        Self::new(
            self.base_arrivals.clone(),
            self.base_marks.clone(),
            lambda,
            nu,
            self.epsilon_fraction,
        )
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn epsilon_fraction(&self) -> f64 {
        self.epsilon_fraction
    }

    pub fn base_arrivals(&self) -> &A {
        &self.base_arrivals
    }

    pub fn base_marks(&self) -> &M {
        &self.base_marks
    }

    pub fn process(&self) -> &MarkedProcess<TimeScaled<A>, MarkScaled<M>> {
        &self.process
    }

    pub fn arrival_rate(&self) -> f64 {
        self.lambda / self.base_arrivals.mean()
    }

    pub fn mean_service(&self) -> f64 {
        self.base_marks.mean() / self.nu
    }

    /// `E_pi Q(0, 0)`, the mean number in system.
    pub fn offered_load(&self) -> f64 {
        self.arrival_rate() * self.mean_service()
    }
}

/// Deliberate defects, kept only so the validation battery can show that it
/// notices them.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mutation {
    #[default]
    None,
    /// Stop the marks at `kappa(V) + 1` instead of extending them to `kappa`.
    SkipMarkExtension,
    /// Fill between records from the nominal mark law.
    NominalFill,
}

/// A customer in service at time 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PresentCustomer {
    /// Position `n` in the backward arrival sequence.
    pub index: usize,
    /// `A_n`, time since arrival, which is also service received so far.
    pub elapsed: f64,
    /// `V_n`.
    pub total: f64,
}

impl PresentCustomer {
    pub fn residual(&self) -> f64 {
        self.total - self.elapsed
    }
}

/// Horizons reached while building one state.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub kappa_a: usize,
    pub kappa_v: usize,
    /// Excursions proposed on the arrival walk.
    pub segments: usize,
}

impl Diagnostics {
    pub fn kappa(&self) -> usize {
        self.kappa_a.max(self.kappa_v)
    }
}

/// The queue at time 0: who is in service and how long ago the last arrival
/// came.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueueState {
    /// `E(0) = A_1`.
    pub age: f64,
    /// Ordered by increasing elapsed time.
    pub customers: Vec<PresentCustomer>,
    pub diagnostics: Diagnostics,
}

/// Keeps the pairs with `V_n > A_n` among indices `1..=kappa`.
pub fn project(pairs: impl IntoIterator<Item = (usize, f64, f64)>, kappa: usize) -> Vec<PresentCustomer> {
    pairs
        .into_iter()
        .take_while(|&(n, _, _)| n <= kappa)
        .filter(|&(_, a, v)| v > a)
        .map(|(index, elapsed, total)| PresentCustomer { index, elapsed, total })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Functionals {
    pub q: usize,
    /// `R-bar`, recorded as 0 when the queue is empty.
    pub mean_residual: f64,
    /// `R-inf = inf{y >= 0 : Q(0, y) = 0}`, so 0 when empty.
    pub max_residual: f64,
}

impl Functionals {
    pub fn is_empty(&self) -> bool {
        self.q == 0
    }
}

/// What the derivative estimators need from one state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivitySample {
    pub q: usize,
    pub mean_elapsed: f64,
    pub mean_total: f64,
    pub mean_residual: f64,
    pub max_residual: f64,
    /// Elapsed and total work of the customer with the largest residual.
    pub argmax_elapsed: f64,
    pub argmax_total: f64,
}

impl SensitivitySample {
    pub fn is_empty(&self) -> bool {
        self.q == 0
    }
}

fn identity_holds(elapsed: f64, residual: f64, total: f64) -> bool {
    (elapsed + residual - total).abs() <= 8.0 * f64::EPSILON * total.abs().max(elapsed.abs())
}

impl QueueState {
    pub fn count(&self) -> usize {
        self.customers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.customers.is_empty()
    }

    pub fn residuals(&self) -> impl Iterator<Item = f64> + '_ {
        self.customers.iter().map(PresentCustomer::residual)
    }

    pub fn functionals(&self) -> Functionals {
        let s = self.sensitivity();
        Functionals {
            q: s.q,
            mean_residual: s.mean_residual,
            max_residual: s.max_residual,
        }
    }

    /// Panics if some customer breaks `elapsed + residual = total`.
    pub fn sensitivity(&self) -> SensitivitySample {
        let q = self.customers.len();
        let (mut elapsed, mut total, mut residual) = (0.0, 0.0, 0.0);
        let mut best: Option<(f64, &PresentCustomer)> = None;
        for c in &self.customers {
            let r = c.residual();
            assert!(
                identity_holds(c.elapsed, r, c.total),
                "customer {} breaks elapsed + residual = total",
                c.index
            );
            elapsed += c.elapsed;
            total += c.total;
            residual += r;
            // strict comparison: the lowest index wins ties
            if best.is_none_or(|(b, _)| r > b) {
                best = Some((r, c));
            }
        }
        let (max_residual, argmax_elapsed, argmax_total) = best.map_or((0.0, 0.0, 0.0), |(r, c)| (r, c.elapsed, c.total));
        let per = if q == 0 { 0.0 } else { 1.0 / q as f64 };
        SensitivitySample {
            q,
            mean_elapsed: elapsed * per,
            mean_total: total * per,
            mean_residual: residual * per,
            max_residual,
            argmax_elapsed,
            argmax_total,
        }
    }

    /// The state of the `to` system on the same base path, given this state
    /// of the `from` system. Only valid when every customer present under
    /// `to` is present under `from`, i.e. `nu' / lambda' >= nu / lambda`.
    pub fn rescaled(&self, from: (f64, f64), to: (f64, f64)) -> Result<Self> {
        let ((l0, n0), (l1, n1)) = (from, to);
        if n1 * l0 < n0 * l1 * (1.0 - 1e-12) {
            return Err(Error::InvalidParameter(format!(
                "({l1}, {n1}) admits customers that ({l0}, {n0}) does not; sample at the larger nu / lambda"
            )));
        }
        let (time, work) = (l0 / l1, n0 / n1);
        let customers = self
            .customers
            .iter()
            .map(|c| PresentCustomer {
                index: c.index,
                elapsed: c.elapsed * time,
                total: c.total * work,
            })
            .filter(|c| c.total > c.elapsed)
            .collect();
        Ok(Self {
            age: self.age * time,
            customers,
            diagnostics: self.diagnostics,
        })
    }
}

/// Builds exact stationary states of one system; keep one per thread.
pub struct QueueSampler<'s, A, M: MarkModel> {
    system: &'s ScaledSystem<A, M>,
    marks: MarkSampler<'s, MarkScaled<M>>,
    mutation: Mutation,
}

impl<'s, A, M> QueueSampler<'s, A, M>
where
    A: InterArrivalModel + Clone,
    M: MarkModel + Clone,
{
    pub fn new(system: &'s ScaledSystem<A, M>) -> Self {
        Self::with_mutation(system, Mutation::None)
    }

    pub fn with_mutation(system: &'s ScaledSystem<A, M>, mutation: Mutation) -> Self {
        let fill = if mutation == Mutation::NominalFill {
            FillLaw::Nominal
        } else {
            FillLaw::Conditioned
        };
        let marks = system.process.mark_sampler().with_fill(fill);
        Self { system, marks, mutation }
    }

    pub fn system(&self) -> &ScaledSystem<A, M> {
        self.system
    }

    /// Replication `replication` of the run keyed by `seed`.
    pub fn sample(&mut self, seed: u64, replication: u64) -> Result<QueueState> {
        self.sample_with(&mut Streams::for_replication(seed, replication))
    }

    pub fn sample_with(&mut self, streams: &mut Streams) -> Result<QueueState> {
        let extend = self.mutation != Mutation::SkipMarkExtension;
        let half = sample_half_line(
            &self.system.process,
            &mut self.marks,
            None,
            extend,
            &mut streams.arrivals,
            &mut streams.marks,
        )?;
        let diagnostics = Diagnostics {
            kappa_a: half.kappa_a(),
            kappa_v: half.kappa_v(),
            segments: half.arrivals.segments(),
        };
        let customers = project(half.pairs(), half.kappa());
        Ok(QueueState {
            age: half.arrivals.epoch(1),
            customers,
            diagnostics,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

impl Estimate {
    pub fn from_summary(s: &Summary, scale: f64) -> Self {
        Self {
            value: s.mean * scale,
            std_error: s.std_error * scale.abs(),
        }
    }

    /// `|a - b| <= k sqrt(se_a^2 + se_b^2)`.
    pub fn agrees_with(&self, other: &Estimate, k: f64) -> bool {
        (self.value - other.value).abs() <= k * self.std_error.hypot(other.std_error)
    }
}

/// Estimates of the four derivatives of `E_pi R-bar` and `E_pi R-inf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Derivatives {
    pub d_lambda_mean_residual: Estimate,
    pub d_nu_mean_residual: Estimate,
    pub d_lambda_max_residual: Estimate,
    pub d_nu_max_residual: Estimate,
    pub replications: usize,
    /// Replications with an empty queue; they are left out of the `R-bar`
    /// rows.
    pub empty_replications: usize,
}

impl Derivatives {
    pub fn rows(&self) -> [(&'static str, Estimate); 4] {
        [
            ("d_lambda_mean_residual", self.d_lambda_mean_residual),
            ("d_nu_mean_residual", self.d_nu_mean_residual),
            ("d_lambda_max_residual", self.d_lambda_max_residual),
            ("d_nu_max_residual", self.d_nu_max_residual),
        ]
    }
}

/// Pathwise estimators: `d/d lambda = mean(Xi) / lambda` and
/// `d/d nu = -mean(V) / nu`, with the averages taken over present customers
/// for `R-bar` and over the argmax customer for `R-inf`.
pub fn ipa_estimates(samples: &[SensitivitySample], lambda: f64, nu: f64) -> Derivatives {
    let occupied: Vec<&SensitivitySample> = samples.iter().filter(|s| !s.is_empty()).collect();
    let of = |xs: Vec<f64>| Summary::of(&xs);
    let xi_bar = of(occupied.iter().map(|s| s.mean_elapsed).collect());
    let v_bar = of(occupied.iter().map(|s| s.mean_total).collect());
    let xi_inf = of(samples.iter().map(|s| s.argmax_elapsed).collect());
    let v_inf = of(samples.iter().map(|s| s.argmax_total).collect());
    Derivatives {
        d_lambda_mean_residual: Estimate::from_summary(&xi_bar, 1.0 / lambda),
        d_nu_mean_residual: Estimate::from_summary(&v_bar, -1.0 / nu),
        d_lambda_max_residual: Estimate::from_summary(&xi_inf, 1.0 / lambda),
        d_nu_max_residual: Estimate::from_summary(&v_inf, -1.0 / nu),
        replications: samples.len(),
        empty_replications: samples.len() - occupied.len(),
    }
}

/// Functionals of one base path at `theta - h` and `theta + h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DifferencePair {
    pub minus: Functionals,
    pub plus: Functionals,
}

impl DifferencePair {
    /// Rescales a state sampled at `sampled_at` to both endpoints; see
    /// [`difference_anchor`].
    pub fn from_state(state: &QueueState, sampled_at: (f64, f64), minus: (f64, f64), plus: (f64, f64)) -> Result<Self> {
        Ok(Self {
            minus: state.rescaled(sampled_at, minus)?.functionals(),
            plus: state.rescaled(sampled_at, plus)?.functionals(),
        })
    }
}

/// Central differences `(f(theta + h) - f(theta - h)) / 2h` with common
/// random numbers. Returns the `R-bar` and `R-inf` estimates and the number
/// of pairs dropped from the `R-bar` average because either end was empty.
pub fn central_difference(pairs: &[DifferencePair], h: f64) -> (Estimate, Estimate, usize) {
    let scale = 1.0 / (2.0 * h);
    let mean: Vec<f64> = pairs
        .iter()
        .filter(|p| !p.minus.is_empty() && !p.plus.is_empty())
        .map(|p| p.plus.mean_residual - p.minus.mean_residual)
        .collect();
    let max: Vec<f64> = pairs.iter().map(|p| p.plus.max_residual - p.minus.max_residual).collect();
    let dropped = pairs.len() - mean.len();
    (
        Estimate::from_summary(&Summary::of(&mean), scale),
        Estimate::from_summary(&Summary::of(&max), scale),
        dropped,
    )
}

/// Where to sample so that both endpoints of a difference in `lambda` or
/// `nu` are reachable by [`QueueState::rescaled`]: the endpoint with the
/// smaller `nu / lambda`, whose cone holds the other's customers.
pub fn difference_anchor(minus: (f64, f64), plus: (f64, f64)) -> (f64, f64) {
    if minus.1 * plus.0 <= plus.1 * minus.0 {
        minus
    } else {
        plus
    }
}
