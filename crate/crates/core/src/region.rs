//! Exact samples of `M ∩ B` for stable sets `B ⊆ C_alpha`.
//!
//! One half-line is simulated to the index `kappa = max(kappa(A), kappa(V))`.
//! Past it `|t| = A_{n+1} >= n s` and `|V_{n+1}| <= (n s)^alpha`, so no
//! later point can satisfy `|v| >= |t|^alpha`.

use crate::arrival_sequence::{sample_arrivals, sample_arrivals_from, ArrivalBlock};
use crate::distributions::{InterArrivalModel, MarkModel};
use crate::error::{Error, Result};
use crate::mark_sequence::{MarkBlock, MarkSampler};
use crate::rng::Streams;
use crate::tilted_walk::{tilt_with_fraction, TiltParams};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// A set `B` with `B ⊆ C_alpha` for the declared `alpha`.
pub trait StableSet: Send + Sync {
    fn alpha(&self) -> f64;

    fn contains(&self, t: f64, v: f64) -> bool;
}

/// `C_alpha = {(t, v) : |v| >= |t|^alpha}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cone {
    pub alpha: f64,
}

impl StableSet for Cone {
    fn alpha(&self) -> f64 {
        self.alpha
    }

    fn contains(&self, t: f64, v: f64) -> bool {
        v.abs() >= t.abs().powf(self.alpha)
    }
}

/// `{(t, v) : v >= |t|, t <= 0}`: customers still in an infinite-server
/// queue at time zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct QueueRegion;

impl StableSet for QueueRegion {
    fn alpha(&self) -> f64 {
        1.0
    }

    fn contains(&self, t: f64, v: f64) -> bool {
        t <= 0.0 && v >= t.abs()
    }
}

/// A caller-supplied predicate. The caller promises it implies membership
/// in `C_alpha`; debug builds check that on every candidate point.
pub struct PredicateSet<F> {
    pub alpha: f64,
    pub predicate: F,
}

impl<F: Fn(f64, f64) -> bool + Send + Sync> StableSet for PredicateSet<F> {
    fn alpha(&self) -> f64 {
        self.alpha
    }

    fn contains(&self, t: f64, v: f64) -> bool {
        (self.predicate)(t, v)
    }
}

/// Arrival and mark laws on the scale at which they are simulated, with the
/// region exponent and the tilt.
#[derive(Debug, Clone)]
pub struct MarkedProcess<A, M> {
    arrivals: A,
    marks: M,
    alpha: f64,
    tilt: TiltParams,
}

impl<A: InterArrivalModel, M: MarkModel> MarkedProcess<A, M> {
    /// `epsilon_fraction` sets `eps = fraction * mu`, halved automatically if
    /// no tilt root exists.
    pub fn new(arrivals: A, marks: M, alpha: f64, epsilon_fraction: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
        }
        if !(epsilon_fraction > 0.0 && epsilon_fraction < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon fraction must lie in (0, 1), got {epsilon_fraction}"
            )));
        }
        let shape = marks.shape_moment(alpha);
        if !shape.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "E|V|^(1/alpha) must be finite for alpha = {alpha}"
            )));
        }
        let tilt = tilt_with_fraction(&arrivals, epsilon_fraction)?;
        Ok(Self {
            arrivals,
            marks,
            alpha,
            tilt,
        })
    }

    pub fn arrivals(&self) -> &A {
        &self.arrivals
    }

    pub fn marks(&self) -> &M {
        &self.marks
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn tilt(&self) -> &TiltParams {
        &self.tilt
    }

    /// A mark sampler matched to this process; build one per thread.
    pub fn mark_sampler(&self) -> MarkSampler<'_, M> {
        MarkSampler::new(&self.marks, self.alpha, self.tilt.slope).expect("validated at construction")
    }
}

/// One half-line simulated to `kappa`: `A_1..A_{kappa+1}`, `V_1..V_{kappa+1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfLine {
    pub arrivals: ArrivalBlock,
    pub marks: MarkBlock,
}

impl HalfLine {
    pub fn kappa_a(&self) -> usize {
        self.arrivals.kappa()
    }

    pub fn kappa_v(&self) -> usize {
        self.marks.kappa()
    }

    pub fn kappa(&self) -> usize {
        self.kappa_a().max(self.kappa_v())
    }

    /// `(n, A_n, V_n)` for every index both sequences cover.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        let m = self.arrivals.epochs().len().min(self.marks.len());
        (1..=m).map(move |n| (n, self.arrivals.epoch(n), self.marks.mark(n)))
    }
}

/// Marks first, then arrivals to `max(n, kappa(V))`, then marks extended to
/// `kappa + 1`. `first` fixes `A_1`; otherwise it is drawn from `G_eq`.
/// `extend_marks = false` drops the final extension and is only there so the
/// validation battery can show it notices.
pub fn sample_half_line<A, M, R1, R2>(
    process: &MarkedProcess<A, M>,
    sampler: &mut MarkSampler<'_, M>,
    first: Option<f64>,
    extend_marks: bool,
    arrivals_rng: &mut R1,
    marks_rng: &mut R2,
) -> Result<HalfLine>
where
    A: InterArrivalModel,
    M: MarkModel,
    R1: Rng + ?Sized,
    R2: Rng + ?Sized,
{
    let mut marks = sampler.sample_marks(marks_rng)?;
    let arrivals = match first {
        Some(a1) => sample_arrivals_from(&process.arrivals, &process.tilt, marks.kappa(), a1, arrivals_rng)?,
        None => sample_arrivals(&process.arrivals, &process.tilt, marks.kappa(), arrivals_rng)?,
    };
    if extend_marks {
        let kappa = arrivals.kappa().max(marks.kappa());
        sampler.extend_block(&mut marks, kappa + 1, marks_rng)?;
    }
    Ok(HalfLine { arrivals, marks })
}

/// Backward and forward recurrence times at zero of a stationary renewal
/// process: a length-biased gap split by an independent uniform.
pub fn sample_straddle<A: InterArrivalModel + ?Sized, R: Rng + ?Sized>(model: &A, rng: &mut R) -> (f64, f64) {
    let gap = model.sample_length_biased(rng);
    let u = crate::distributions::special::open01(rng);
    let forward = u * gap;
    (gap - forward, forward)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    Forward,
    Backward,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Forward => 1.0,
            Side::Backward => -1.0,
        }
    }

    /// Stream lane used for this half-line.
    pub fn lane(self) -> u8 {
        match self {
            Side::Forward => 0,
            Side::Backward => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarkedPoint {
    pub t: f64,
    pub v: f64,
    /// `n` of `A_n` on its half-line.
    pub index: usize,
    pub side: Side,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Horizons {
    pub kappa_a: usize,
    pub kappa_v: usize,
    pub kappa: usize,
}

impl Horizons {
    fn of(h: &HalfLine) -> Self {
        Self {
            kappa_a: h.kappa_a(),
            kappa_v: h.kappa_v(),
            kappa: h.kappa(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSample {
    pub points: Vec<MarkedPoint>,
    pub forward: Option<Horizons>,
    pub backward: Option<Horizons>,
}

impl RegionSample {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Arrivals simulated on both sides, `kappa + 1` per side.
    pub fn arrivals_simulated(&self) -> usize {
        [self.forward, self.backward].iter().flatten().map(|h| h.kappa + 1).sum()
    }
}

fn collect_points<S: StableSet + ?Sized>(half: &HalfLine, side: Side, set: &S, out: &mut Vec<MarkedPoint>) {
    for (index, a, v) in half.pairs() {
        let t = side.sign() * a;
        if set.contains(t, v) {
            debug_assert!(
                v.abs() >= t.abs().powf(set.alpha()),
                "predicate accepted ({t}, {v}) outside C_alpha for alpha = {}",
                set.alpha()
            );
            out.push(MarkedPoint { t, v, index, side });
        }
    }
}

fn check_alpha<S: StableSet + ?Sized, A, M>(process: &MarkedProcess<A, M>, set: &S) -> Result<()> {
    if set.alpha() != process.alpha {
        return Err(Error::InvalidParameter(format!(
            "set declared for alpha = {} but the process uses alpha = {}",
            set.alpha(),
            process.alpha
        )));
    }
    Ok(())
}

/// Exact sample of `M ∩ B` on one half-line. The process looks the same in
/// both directions, so the backward half is the forward one reflected.
pub fn sample_half_region<A, M, S>(
    process: &MarkedProcess<A, M>,
    sampler: &mut MarkSampler<'_, M>,
    side: Side,
    set: &S,
    streams: &mut Streams,
) -> Result<RegionSample>
where
    A: InterArrivalModel,
    M: MarkModel,
    S: StableSet + ?Sized,
{
    check_alpha(process, set)?;
    let half = sample_half_line(process, sampler, None, true, &mut streams.arrivals, &mut streams.marks)?;
    let mut points = Vec::new();
    collect_points(&half, side, set, &mut points);
    let h = Some(Horizons::of(&half));
    let (forward, backward) = match side {
        Side::Forward => (h, None),
        Side::Backward => (None, h),
    };
    Ok(RegionSample { points, forward, backward })
}

/// Both half-lines of replication `replication`, coupled through the gap
/// straddling zero and otherwise independent.
pub fn sample_full_region<A, M, S>(
    process: &MarkedProcess<A, M>,
    sampler: &mut MarkSampler<'_, M>,
    set: &S,
    seed: u64,
    replication: u64,
) -> Result<RegionSample>
where
    A: InterArrivalModel,
    M: MarkModel,
    S: StableSet + ?Sized,
{
    check_alpha(process, set)?;
    let mut fwd = Streams::for_lane(seed, replication, Side::Forward.lane());
    let mut bwd = Streams::for_lane(seed, replication, Side::Backward.lane());
    let (back_first, fwd_first) = sample_straddle(&process.arrivals, &mut fwd.straddle);
    let f = sample_half_line(process, sampler, Some(fwd_first), true, &mut fwd.arrivals, &mut fwd.marks)?;
    let b = sample_half_line(process, sampler, Some(back_first), true, &mut bwd.arrivals, &mut bwd.marks)?;
    let mut points = Vec::new();
    collect_points(&b, Side::Backward, set, &mut points);
    collect_points(&f, Side::Forward, set, &mut points);
    Ok(RegionSample {
        points,
        forward: Some(Horizons::of(&f)),
        backward: Some(Horizons::of(&b)),
    })
}
