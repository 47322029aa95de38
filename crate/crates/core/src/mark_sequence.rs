//! Marks `V_1, V_2, ...` simulated jointly with `kappa(V)`, the index past
//! which `|V_{n+1}| <= (n (mu - eps))^alpha` holds forever.
//!
//! Record times `Upsilon_i = inf{n > Upsilon_{i-1} : |V_{n+1}| > (n s)^alpha}`
//! (with `s = mu - eps`) are generated one at a time. Whether another record
//! exists is a Bernoulli whose parameter is the infinite product
//! `prod_{n > k} (1 - p(n))`, `p(n) = P(|V| > (n s)^alpha)`; it is decided
//! exactly from monotone bounds on the product without ever evaluating it.
//! Given that a record exists, its position is drawn by acceptance/rejection
//! from the law proportional to `p(n)`, itself drawn by lazy inversion.

use crate::distributions::special::open01;
use crate::distributions::{Band, MarkModel};
use crate::error::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Refinement ceiling for the lazy bounds.
pub const REFINEMENT_CEILING: usize = 1_000_000_000;

const FIRST_REFINEMENT: usize = 16;

/// `1 - p >= exp(-2p)` holds for `p` up to about 0.797. The lower bound on
/// the infinite product is only used once every remaining `p(n)` is below
/// this.
const EXP_BOUND_LIMIT: f64 = 0.75;

/// How marks between records and past `kappa(V)` are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FillLaw {
    /// From `V` conditioned on `|V_n| <= ((n - 1) s)^alpha`.
    #[default]
    Conditioned,
    /// From the unconditioned law. This is wrong on purpose: it exists so the
    /// validation battery can confirm it detects a broken construction.
    Nominal,
}

/// How the next record time is drawn once a record is known to exist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecordMethod {
    /// Inversion of the record survival function, sharing the coin's uniform.
    #[default]
    Inversion,
    /// Acceptance/rejection from the law proportional to `p(n)`. Needs about
    /// `sum_{n > k} p(n) / p(k + 1)` proposals per record, which is slow when
    /// many early `p(n)` are close to one.
    Rejection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkBlock {
    /// `V_1, ..., V_m` with `m >= kappa(V) + 1`.
    marks: Vec<f64>,
    /// `Upsilon_1, ..., Upsilon_{sigma - 1}`.
    records: Vec<usize>,
    kappa: usize,
}

impl MarkBlock {
    pub fn marks(&self) -> &[f64] {
        &self.marks
    }

    /// `V_n` for `n >= 1`.
    pub fn mark(&self, n: usize) -> f64 {
        self.marks[n - 1]
    }

    pub fn records(&self) -> &[usize] {
        &self.records
    }

    pub fn kappa(&self) -> usize {
        self.kappa
    }

    /// Index of the first record time that is infinite.
    pub fn sigma(&self) -> usize {
        self.records.len() + 1
    }

    pub fn len(&self) -> usize {
        self.marks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.marks.is_empty()
    }
}

/// Bounds `lower <= prod_{i > k} (1 - p(i)) <= upper` at refinement `l`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LazyCoinState {
    pub base: usize,
    pub level: usize,
    pub lower: f64,
    pub upper: f64,
}

/// Sampler for one mark law, time slope and shape. Keeps a growing table of
/// `p(n)` with running sums so that repeated calls are cheap; build one per
/// thread and reuse it across replications.
#[derive(Debug, Clone)]
pub struct MarkSampler<'a, M: MarkModel + ?Sized> {
    model: &'a M,
    alpha: f64,
    slope: f64,
    fill: FillLaw,
    records: RecordMethod,
    /// `p[n] = p(n)`; `p[0]` is unused.
    p: Vec<f64>,
    /// `sum_{i <= n} p(i)`.
    cum_p: Vec<f64>,
    /// `sum_{i <= n, p(i) < 1} ln(1 - p(i))`.
    cum_log: Vec<f64>,
    /// Largest `n` with `p(n) = 1`, or 0.
    last_certain: usize,
}

impl<'a, M: MarkModel + ?Sized> MarkSampler<'a, M> {
    pub fn new(model: &'a M, alpha: f64, slope: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
        }
        if !(slope > 0.0 && slope.is_finite()) {
            return Err(Error::InvalidParameter(format!("slope must be positive, got {slope}")));
        }
        Ok(Self {
            model,
            alpha,
            slope,
            fill: FillLaw::Conditioned,
            records: RecordMethod::Inversion,
            p: vec![f64::NAN],
            cum_p: vec![0.0],
            cum_log: vec![0.0],
            last_certain: 0,
        })
    }

    pub fn with_fill(mut self, fill: FillLaw) -> Self {
        self.fill = fill;
        self
    }

    pub fn with_record_method(mut self, method: RecordMethod) -> Self {
        self.records = method;
        self
    }

    pub fn model(&self) -> &'a M {
        self.model
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn slope(&self) -> f64 {
        self.slope
    }

    /// `(n s)^alpha`.
    pub fn threshold(&self, n: usize) -> f64 {
        (n as f64 * self.slope).powf(self.alpha)
    }

    fn grow(&mut self, n: usize) -> Result<()> {
        if n > REFINEMENT_CEILING {
            return Err(Error::IterationCeiling {
                what: "mark tail refinement",
                limit: REFINEMENT_CEILING as u64,
            });
        }
        while self.p.len() <= n {
            let i = self.p.len();
            let raw = self.model.abs_tail(self.threshold(i)).clamp(0.0, 1.0);
            // p is nonincreasing; keep the table so under rounding
            let p = if i > 1 { raw.min(self.p[i - 1]) } else { raw };
            self.p.push(p);
            self.cum_p.push(self.cum_p[i - 1] + p);
            if p >= 1.0 {
                self.last_certain = i;
                self.cum_log.push(self.cum_log[i - 1]);
            } else {
                self.cum_log.push(self.cum_log[i - 1] + (-p).ln_1p());
            }
        }
        Ok(())
    }

    /// `p(n) = P(|V| > (n s)^alpha)` for `n >= 1`.
    pub fn p(&mut self, n: usize) -> Result<f64> {
        assert!(n >= 1, "p(n) is defined for n >= 1");
        self.grow(n)?;
        Ok(self.p[n])
    }

    /// `prod_{i = k+1}^{l} (1 - p(i))`.
    pub fn survival_product(&mut self, k: usize, l: usize) -> Result<f64> {
        if l <= k {
            return Ok(1.0);
        }
        self.grow(l)?;
        if k < self.last_certain {
            return Ok(0.0);
        }
        Ok((self.cum_log[l] - self.cum_log[k]).exp())
    }

    /// Bound on `sum_{n > l} p(n)` by `u(l s) / s`.
    pub fn tail_bound(&self, l: usize) -> f64 {
        self.model.tail_integral_bound(self.alpha, l as f64 * self.slope) / self.slope
    }

    pub fn coin_bounds(&mut self, k: usize, l: usize) -> Result<LazyCoinState> {
        let l = l.max(k + 1);
        self.grow(l + 1)?;
        let upper = self.survival_product(k, l)?;
        let tail = self.tail_bound(l);
        let lower = if tail == 0.0 {
            upper
        } else if self.p[l + 1] <= EXP_BOUND_LIMIT {
            upper * (-2.0 * tail).exp()
        } else {
            0.0
        };
        Ok(LazyCoinState {
            base: k,
            level: l,
            lower,
            upper,
        })
    }

    /// Exact Bernoulli draw with parameter `P(Upsilon_i = inf | Upsilon_{i-1} = k)`.
    pub fn lazy_coin<R: Rng + ?Sized>(&mut self, k: usize, rng: &mut R) -> Result<bool> {
        if self.tail_bound(k) == 0.0 {
            return Ok(true);
        }
        let u = open01(rng);
        Ok(self.decide_coin(k, u)?.is_none())
    }

    /// Compares `u` with the infinite product. `None` means `u` is below it;
    /// otherwise the returned level `l` has `prod_{i=k+1}^{l} (1 - p(i)) < u`.
    fn decide_coin(&mut self, k: usize, u: f64) -> Result<Option<usize>> {
        let mut l = k + FIRST_REFINEMENT;
        loop {
            let b = self.coin_bounds(k, l)?;
            if u <= b.lower {
                return Ok(None);
            }
            if u > b.upper {
                return Ok(Some(b.level));
            }
            l = l
                .checked_mul(2)
                .filter(|&l| l <= REFINEMENT_CEILING)
                .ok_or(Error::IterationCeiling {
                    what: "lazy record coin",
                    limit: REFINEMENT_CEILING as u64,
                })?;
        }
    }

    /// The next record after `k`, or `None` if there is none, from a single
    /// uniform. With `P(Upsilon > n) = prod_{i=k+1}^{n} (1 - p(i))`, the
    /// record is the first `n` at which the product drops below the uniform,
    /// and it is infinite exactly when the lazy coin says so. Same law as the
    /// coin followed by [`Self::sample_record_time`].
    pub fn next_record<R: Rng + ?Sized>(&mut self, k: usize, rng: &mut R) -> Result<Option<usize>> {
        if self.tail_bound(k) == 0.0 {
            return Ok(None);
        }
        let u = open01(rng);
        let Some(l) = self.decide_coin(k, u)? else { return Ok(None) };
        if k < self.last_certain {
            return Ok(Some(k + 1));
        }
        let (base, log_u) = (self.cum_log[k], u.ln());
        let offset = self.cum_log[k + 1..=l].partition_point(|&c| c - base >= log_u);
        Ok(Some(k + 1 + offset))
    }

    /// Draw `N` with `P(N = n)` proportional to `p(n)` on `n > k`, by
    /// inversion against certified bounds on the normalizer.
    pub fn sample_proposal<R: Rng + ?Sized>(&mut self, k: usize, rng: &mut R) -> Result<usize> {
        let u = open01(rng);
        let mut l = k + FIRST_REFINEMENT;
        loop {
            self.grow(l)?;
            let partial = self.cum_p[l] - self.cum_p[k];
            let tail = self.tail_bound(l);
            if partial == 0.0 && tail == 0.0 {
                return Err(Error::NullEvent(format!("no record can follow index {k}")));
            }
            let (lo_target, hi_target) = (u * partial, u * (partial + tail));
            if hi_target <= partial {
                let base = self.cum_p[k];
                let first_reaching = |t: f64| k + 1 + self.cum_p[k + 1..=l].partition_point(|&c| c - base < t);
                let (a, b) = (first_reaching(lo_target), first_reaching(hi_target));
                if a == b {
                    return Ok(a);
                }
            }
            l = l
                .checked_mul(2)
                .filter(|&l| l <= REFINEMENT_CEILING)
                .ok_or(Error::IterationCeiling {
                    what: "record proposal inversion",
                    limit: REFINEMENT_CEILING as u64,
                })?;
        }
    }

    /// `Upsilon_i` given `Upsilon_{i-1} = k` and `Upsilon_i < inf`.
    pub fn sample_record_time<R: Rng + ?Sized>(&mut self, k: usize, rng: &mut R) -> Result<usize> {
        for _ in 0..REFINEMENT_CEILING {
            let n = self.sample_proposal(k, rng)?;
            let accept = self.survival_product(k, n - 1)?;
            if open01(rng) <= accept {
                return Ok(n);
            }
        }
        Err(Error::IterationCeiling {
            what: "record time rejection",
            limit: REFINEMENT_CEILING as u64,
        })
    }

    /// Draw of `V_n` given no record at `n - 1`: `|V_n| <= ((n - 1) s)^alpha`.
    pub fn sample_below<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<f64> {
        match self.fill {
            FillLaw::Conditioned => self.model.sample_band(Band::AtMost(self.threshold(n - 1)), rng),
            FillLaw::Nominal => Ok(self.model.sample(rng)),
        }
    }

    /// Draw of `V_n` at a record at `n - 1`: `|V_n| > ((n - 1) s)^alpha`.
    pub fn sample_above<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<f64> {
        self.model.sample_band(Band::Above(self.threshold(n - 1)), rng)
    }

    /// `V_1, ..., V_{kappa(V)+1}` with the record times.
    pub fn sample_marks<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<MarkBlock> {
        let mut marks = vec![self.model.sample(rng)];
        let mut records = Vec::new();
        let mut prev = 0usize;
        loop {
            let next = match self.records {
                RecordMethod::Inversion => self.next_record(prev, rng)?,
                RecordMethod::Rejection => match self.lazy_coin(prev, rng)? {
                    true => None,
                    false => Some(self.sample_record_time(prev, rng)?),
                },
            };
            let Some(next) = next else {
                let kappa = prev + 1;
                marks.push(self.sample_below(kappa + 1, rng)?);
                return Ok(MarkBlock { marks, records, kappa });
            };
            for n in prev + 2..=next {
                marks.push(self.sample_below(n, rng)?);
            }
            marks.push(self.sample_above(next + 1, rng)?);
            records.push(next);
            prev = next;
        }
    }

    /// `V_n` for `from <= n <= to`, each given no record at `n - 1`.
    /// Valid only past `kappa(V) + 1`.
    pub fn extend_marks<R: Rng + ?Sized>(&self, from: usize, to: usize, rng: &mut R) -> Result<Vec<f64>> {
        (from..=to).map(|n| self.sample_below(n, rng)).collect()
    }

    /// Grows `block` to hold `V_1, ..., V_last`.
    pub fn extend_block<R: Rng + ?Sized>(&self, block: &mut MarkBlock, last: usize, rng: &mut R) -> Result<()> {
        let from = block.marks.len() + 1;
        if last >= from {
            let more = self.extend_marks(from, last, rng)?;
            block.marks.extend(more);
        }
        Ok(())
    }
}
