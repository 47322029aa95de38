//! Forward discrete-event simulation of the GI/GI/inf queue, used for the
//! initial-transient benchmarks and as an independent oracle for the exact
//! sampler.

use crate::distributions::special::CompensatedSum;
use crate::distributions::{InterArrivalModel, MarkModel};
use crate::error::{Error, Result};
use crate::queue::QueueState;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Horizon {
    /// Run on `[0, t]`.
    Time(f64),
    /// Run until the `n`-th arrival after time 0.
    Arrivals(usize),
}

#[derive(Debug, Clone, Copy)]
pub enum Start<'a> {
    /// No customers, with an arrival at time 0 that brought no work.
    Empty,
    /// A stationary state: its residuals, and the next arrival drawn from
    /// the residual gap given the age.
    Stationary(&'a QueueState),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunOptions {
    /// Split the run into this many equal batches. With an arrival horizon a
    /// batch is `n / batches` arrivals and the remainder is dropped; with a
    /// time horizon it is `t / batches` time units.
    pub batches: Option<usize>,
    /// Keep `(event time, f after the event)` for every event.
    pub trace: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransientRun {
    /// Where the run stopped: `t`, or the epoch of the last arrival.
    pub end: f64,
    /// `Phi = (1 / end) int_0^end f(Q(s)) ds`.
    pub phi: f64,
    pub arrivals: usize,
    pub batch_means: Vec<f64>,
    /// Remaining work of the customers in service at `end`.
    pub final_residuals: Vec<f64>,
    /// Time since the last arrival at `end`.
    pub final_age: f64,
    pub trace: Vec<(f64, f64)>,
}

/// Departure epochs, earliest first.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Epoch(f64);

impl Eq for Epoch {}

impl PartialOrd for Epoch {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Epoch {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

struct Batches {
    /// Batch length in time units, or in arrivals.
    width: BatchWidth,
    count: usize,
    opened_at: f64,
    area: CompensatedSum,
    means: Vec<f64>,
}

enum BatchWidth {
    Time(f64),
    Arrivals(usize),
}

impl Batches {
    fn close(&mut self, at: f64) {
        if self.means.len() < self.count {
            self.means.push(self.area.value() / (at - self.opened_at));
        }
        self.opened_at = at;
        self.area = CompensatedSum::default();
    }

    /// Integrates `level` over `[from, to]`, closing time batches on the way.
    fn integrate(&mut self, from: f64, to: f64, level: f64) {
        let mut from = from;
        if let BatchWidth::Time(w) = self.width {
            while self.means.len() < self.count {
                let boundary = (self.means.len() + 1) as f64 * w;
                if boundary > to {
                    break;
                }
                self.area.add(level * (boundary - from));
                self.close(boundary);
                from = boundary;
            }
        }
        self.area.add(level * (to - from));
    }
}

/// Simulates `Q` forward from `start` and time-averages `f(Q)`.
pub fn simulate_with<A, M, R, F>(
    arrivals: &A,
    marks: &M,
    horizon: Horizon,
    start: Start<'_>,
    options: RunOptions,
    f: F,
    rng: &mut R,
) -> Result<TransientRun>
where
    A: InterArrivalModel + ?Sized,
    M: MarkModel + ?Sized,
    R: Rng + ?Sized,
    F: Fn(usize) -> f64,
{
    match horizon {
        Horizon::Time(t) if !(t > 0.0 && t.is_finite()) => {
            return Err(Error::InvalidParameter(format!("time horizon must be positive, got {t}")));
        }
        Horizon::Arrivals(0) => return Err(Error::InvalidParameter("arrival horizon must be positive".into())),
        _ => {}
    }
    let mut batches = match (options.batches, horizon) {
        (None, _) => None,
        (Some(0), _) => return Err(Error::InvalidParameter("batch count must be positive".into())),
        (Some(b), Horizon::Time(t)) => Some(BatchWidth::Time(t / b as f64)),
        (Some(b), Horizon::Arrivals(n)) if n >= b => Some(BatchWidth::Arrivals(n / b)),
        (Some(b), Horizon::Arrivals(n)) => {
            return Err(Error::InvalidParameter(format!("{n} arrivals cannot fill {b} batches")));
        }
    }
    .map(|width| Batches {
        width,
        count: options.batches.unwrap_or(0),
        opened_at: 0.0,
        area: CompensatedSum::default(),
        means: Vec::new(),
    });

    let mut departures = BinaryHeap::new();
    let mut next_arrival = match start {
        Start::Empty => arrivals.sample(rng),
        Start::Stationary(state) => {
            departures.extend(state.residuals().map(|r| Reverse(Epoch(r))));
            arrivals.sample_residual(state.age, rng)?
        }
    };
    let mut last_arrival = match start {
        Start::Empty => 0.0,
        Start::Stationary(state) => -state.age,
    };
    let mut count = departures.len();
    let mut level = f(count);
    let (mut now, mut area, mut n_arrivals) = (0.0, CompensatedSum::default(), 0usize);
    let mut trace = Vec::new();
    if options.trace {
        trace.push((0.0, level));
    }

    loop {
        let next_departure = departures.peek().map_or(f64::INFINITY, |Reverse(Epoch(d))| *d);
        let is_arrival = next_arrival < next_departure;
        let next = next_arrival.min(next_departure);
        if let Horizon::Time(t) = horizon {
            if next >= t {
                area.add(level * (t - now));
                if let Some(b) = batches.as_mut() {
                    b.integrate(now, t, level);
                }
                now = t;
                break;
            }
        }
        area.add(level * (next - now));
        if let Some(b) = batches.as_mut() {
            b.integrate(now, next, level);
        }
        now = next;
        if is_arrival {
            n_arrivals += 1;
            last_arrival = now;
            if let Some(b) = batches.as_mut() {
                if let BatchWidth::Arrivals(w) = b.width {
                    if n_arrivals % w == 0 {
                        b.close(now);
                    }
                }
            }
            if horizon == Horizon::Arrivals(n_arrivals) {
                break;
            }
            departures.push(Reverse(Epoch(now + marks.sample(rng))));
            count += 1;
            next_arrival = now + arrivals.sample(rng);
        } else {
            departures.pop();
            count -= 1;
        }
        level = f(count);
        if options.trace {
            trace.push((now, level));
        }
    }

    Ok(TransientRun {
        end: now,
        phi: area.value() / now,
        arrivals: n_arrivals,
        batch_means: batches.map(|b| b.means).unwrap_or_default(),
        final_residuals: departures.into_iter().map(|Reverse(Epoch(d))| d - now).collect(),
        final_age: now - last_arrival,
        trace,
    })
}

/// [`simulate_with`] for `f(Q) = Q`.
pub fn simulate<A, M, R>(
    arrivals: &A,
    marks: &M,
    horizon: Horizon,
    start: Start<'_>,
    options: RunOptions,
    rng: &mut R,
) -> Result<TransientRun>
where
    A: InterArrivalModel + ?Sized,
    M: MarkModel + ?Sized,
    R: Rng + ?Sized,
{
    simulate_with(arrivals, marks, horizon, start, options, |q| q as f64, rng)
}
