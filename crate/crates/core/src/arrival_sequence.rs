//! Arrival epochs `A_1 < A_2 < ...` of a stationary renewal process on the
//! positive half-line, simulated jointly with the index `kappa(A)` past
//! which `A_{n+1} >= n (mu - eps)` holds forever.

use crate::distributions::InterArrivalModel;
use crate::error::{Error, Result};
use crate::tilted_walk::{extend_conditioned, sample_to_kappa, TiltParams};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrivalBlock {
    /// `A_1, ..., A_{m+1}`.
    epochs: Vec<f64>,
    /// `S_0, ..., S_m`.
    walk: Vec<f64>,
    kappa: usize,
    /// Excursions proposed before `kappa(A)`, the geometric `gamma`.
    segments: usize,
    slope: f64,
}

impl ArrivalBlock {
    fn assemble(first: f64, walk: Walk, slope: f64) -> Self {
        let epochs = walk.values.iter().enumerate().map(|(n, s)| first - s + n as f64 * slope).collect();
        Self {
            epochs,
            walk: walk.values,
            kappa: walk.kappa,
            segments: walk.segments,
            slope,
        }
    }

    pub fn segments(&self) -> usize {
        self.segments
    }

    pub fn epochs(&self) -> &[f64] {
        &self.epochs
    }

    /// `A_k` for `k >= 1`.
    pub fn epoch(&self, k: usize) -> f64 {
        self.epochs[k - 1]
    }

    pub fn walk(&self) -> &[f64] {
        &self.walk
    }

    pub fn kappa(&self) -> usize {
        self.kappa
    }

    /// `m = max(n, kappa(A))`; epochs run to `A_{m+1}`.
    pub fn horizon(&self) -> usize {
        self.walk.len() - 1
    }

    pub fn slope(&self) -> f64 {
        self.slope
    }

    /// Smallest value of `A_{k+1} - k (mu - eps)` over `kappa <= k <= m`.
    /// Nonnegative for every valid block.
    pub fn certificate_margin(&self) -> f64 {
        (self.kappa..self.walk.len())
            .map(|k| self.epochs[k] - k as f64 * self.slope)
            .fold(f64::INFINITY, f64::min)
    }

    /// Grows the block to horizon `n`, drawing the new walk steps conditioned
    /// on never exceeding the level at `kappa(A)`.
    pub fn extend_to<A, R>(&mut self, model: &A, params: &TiltParams, n: usize, rng: &mut R) -> Result<()>
    where
        A: InterArrivalModel + ?Sized,
        R: Rng + ?Sized,
    {
        check_params(model, params)?;
        let m = self.horizon();
        if n <= m {
            return Ok(());
        }
        let level = self.walk[m];
        let slack = self.walk[self.kappa] - level;
        let ext = extend_conditioned(params, model, slack, n - m, rng)?;
        let first = self.epochs[0];
        for s in ext.path {
            let s = level + s;
            let k = self.walk.len();
            self.walk.push(s);
            self.epochs.push(first - s + k as f64 * self.slope);
        }
        Ok(())
    }
}

fn check_params<A: InterArrivalModel + ?Sized>(model: &A, params: &TiltParams) -> Result<()> {
    if (params.mean - model.mean()).abs() > 1e-12 * model.mean() {
        return Err(Error::InvalidParameter(format!(
            "tilt built for mean {} used with a model of mean {}",
            params.mean,
            model.mean()
        )));
    }
    Ok(())
}

struct Walk {
    values: Vec<f64>,
    kappa: usize,
    segments: usize,
}

fn sample_walk<A, R>(model: &A, params: &TiltParams, n: usize, rng: &mut R) -> Result<Walk>
where
    A: InterArrivalModel + ?Sized,
    R: Rng + ?Sized,
{
    check_params(model, params)?;
    let path = sample_to_kappa(params, model, rng)?;
    let (kappa, segments) = (path.kappa(), path.segments());
    let mut values = path.values;
    if kappa < n {
        let level = values[kappa];
        let ext = extend_conditioned(params, model, 0.0, n - kappa, rng)?;
        values.extend(ext.path.iter().map(|s| level + s));
    }
    Ok(Walk { values, kappa, segments })
}

/// Stationary arrivals on `(0, inf)` up to `A_{max(n, kappa)+1}`. The first
/// epoch is drawn from the equilibrium law after the walk.
pub fn sample_arrivals<A, R>(model: &A, params: &TiltParams, n: usize, rng: &mut R) -> Result<ArrivalBlock>
where
    A: InterArrivalModel + ?Sized,
    R: Rng + ?Sized,
{
    let walk = sample_walk(model, params, n, rng)?;
    let first = model.sample_equilibrium(rng);
    Ok(ArrivalBlock::assemble(first, walk, params.slope))
}

/// Same as [`sample_arrivals`] with a given first epoch, for callers that
/// couple `A_1` to the other half-line.
pub fn sample_arrivals_from<A, R>(model: &A, params: &TiltParams, n: usize, first: f64, rng: &mut R) -> Result<ArrivalBlock>
where
    A: InterArrivalModel + ?Sized,
    R: Rng + ?Sized,
{
    if !(first > 0.0 && first.is_finite()) {
        return Err(Error::InvalidParameter(format!("first epoch must be positive, got {first}")));
    }
    let walk = sample_walk(model, params, n, rng)?;
    Ok(ArrivalBlock::assemble(first, walk, params.slope))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{Exponential, Gamma, TimeScaled};
    use crate::stats::{ks_one_sample, ks_two_sample, Summary};
    use crate::tilted_walk::default_tilt;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn poisson_gaps_are_exponential() {
        let model = TimeScaled::new(Exponential::new(1.0).unwrap(), 100.0).unwrap();
        let p = default_tilt(&model).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mut gaps = Vec::new();
        for _ in 0..2000 {
            let b = sample_arrivals(&model, &p, 25, &mut rng).unwrap();
            gaps.extend((1..=25).map(|k| b.epoch(k + 1) - b.epoch(k)));
        }
        let t = ks_one_sample(&gaps, |x| 1.0 - (-100.0 * x).exp());
        assert!(t.passes(0.01), "{t:?}");
    }

    #[test]
    fn gamma_gaps_at_fixed_index() {
        let g = Gamma::new(2.0, 2.0).unwrap();
        let p = default_tilt(&g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for k in [1, 3, 10] {
            let gaps: Vec<f64> = (0..20_000)
                .map(|_| {
                    let b = sample_arrivals(&g, &p, 12, &mut rng).unwrap();
                    b.epoch(k + 1) - b.epoch(k)
                })
                .collect();
            let t = ks_one_sample(&gaps, |x| g.cdf(x));
            assert!(t.passes(0.01), "k = {k}: {t:?}");
        }
    }

    #[test]
    fn zero_horizon_stops_at_kappa() {
        let g = Gamma::new(2.0, 2.0).unwrap();
        let p = default_tilt(&g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..500 {
            let b = sample_arrivals(&g, &p, 0, &mut rng).unwrap();
            assert_eq!(b.horizon(), b.kappa());
            assert_eq!(b.epochs().len(), b.kappa() + 1);
        }
    }

    #[test]
    fn first_epoch_has_equilibrium_law() {
        let g = Gamma::new(2.0, 2.0).unwrap();
        let p = default_tilt(&g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        let first: Vec<f64> = (0..100_000)
            .map(|_| sample_arrivals(&g, &p, 0, &mut rng).unwrap().epoch(1))
            .collect();
        assert!(ks_one_sample(&first, |x| g.equilibrium_cdf(x)).passes(0.01));
        // E X^2 / (2 mu) = 1.5 / 2
        assert!(Summary::of(&first).within(0.75, 4.0));
    }

    #[test]
    fn epochs_reproduce_the_walk_and_certificate() {
        let g = Gamma::new(2.0, 2.0).unwrap();
        let p = default_tilt(&g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        for _ in 0..2000 {
            let b = sample_arrivals(&g, &p, 30, &mut rng).unwrap();
            assert!(b.epoch(1) > 0.0);
            assert!(b.epochs().windows(2).all(|w| w[1] > w[0]));
            assert!(b.certificate_margin() >= 0.0);
            for (n, s) in b.walk().iter().enumerate() {
                let expect = b.epoch(1) - s + n as f64 * p.slope;
                assert!((b.epoch(n + 1) - expect).abs() <= 1e-12 * expect.abs().max(1.0));
            }
        }
    }

    #[test]
    fn staged_extension_matches_single_extension() {
        let e = Exponential::new(1.0).unwrap();
        let p = default_tilt(&e).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(36);
        let n = 20_000;
        let (mut once, mut staged) = (Vec::with_capacity(n), Vec::with_capacity(n));
        let (mut once_k, mut staged_k) = (Vec::new(), Vec::new());
        while once.len() < n {
            let b = sample_arrivals(&e, &p, 8, &mut rng).unwrap();
            if b.kappa() <= 2 {
                once.push(b.walk()[8] - b.walk()[b.kappa()]);
                once_k.push(b.kappa() as f64);
            }
        }
        while staged.len() < n {
            let mut b = sample_arrivals(&e, &p, 0, &mut rng).unwrap();
            if b.kappa() <= 2 {
                b.extend_to(&e, &p, 4, &mut rng).unwrap();
                b.extend_to(&e, &p, 8, &mut rng).unwrap();
                assert!(b.walk()[b.kappa()..].iter().all(|&s| s <= b.walk()[b.kappa()]));
                staged.push(b.walk()[8] - b.walk()[b.kappa()]);
                staged_k.push(b.kappa() as f64);
            }
        }
        assert!(ks_two_sample(&once, &staged).passes(0.01));
        assert!(ks_two_sample(&once_k, &staged_k).passes(0.01));
    }

    #[test]
    fn rejects_mismatched_tilt_and_bad_first_epoch() {
        let g = Gamma::new(2.0, 2.0).unwrap();
        let p = default_tilt(&Exponential::new(4.0).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        assert!(sample_arrivals(&g, &p, 3, &mut rng).is_err());
        let p = default_tilt(&g).unwrap();
        assert!(sample_arrivals_from(&g, &p, 3, 0.0, &mut rng).is_err());
        let b = sample_arrivals_from(&g, &p, 3, 0.25, &mut rng).unwrap();
        assert_eq!(b.epoch(1), 0.25);
    }
}
