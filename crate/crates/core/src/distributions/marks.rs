use super::interarrival::{Deterministic, Exponential, Gamma};
use super::special::{bisect_decreasing, bisect_increasing, next_up, norm_cdf, norm_sf, open01, truncated_std_normal};
use super::{band_mass, Band, InterArrivalModel, MarkModel};
use crate::error::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma_ur, ln_gamma};

/// Inverse-CDF draw on `(lo, hi]` for a continuous law on `[0, inf)`.
/// Works on the survival scale when the band sits in the upper tail, so that
/// bands with tiny mass stay resolved.
fn invert_band<R: Rng + ?Sized>(cdf: impl Fn(f64) -> f64, sf: impl Fn(f64) -> f64, lo: f64, hi: f64, rng: &mut R) -> f64 {
    let lo = lo.max(0.0);
    let u = open01(rng);
    let x = if sf(lo) < 0.5 {
        let s_hi = if hi.is_finite() { sf(hi) } else { 0.0 };
        let target = s_hi + u * (sf(lo) - s_hi);
        bisect_decreasing(&sf, target, lo, hi)
    } else {
        let c_lo = cdf(lo);
        let c_hi = if hi.is_finite() { cdf(hi) } else { 1.0 };
        let target = c_lo + u * (c_hi - c_lo);
        bisect_increasing(&cdf, target, lo, hi)
    };
    clamp_open_closed(x, lo, hi)
}

fn clamp_open_closed(x: f64, lo: f64, hi: f64) -> f64 {
    if x <= lo {
        next_up(lo).min(hi)
    } else {
        x.min(hi)
    }
}

/// Lognormal: `exp(location + scale * N(0,1))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lognormal {
    location: f64,
    scale: f64,
}

impl Lognormal {
    pub fn new(location: f64, scale: f64) -> Result<Self> {
        if !location.is_finite() || !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidParameter(format!("lognormal({location}, {scale})")));
        }
        Ok(Self { location, scale })
    }

    pub fn location(&self) -> f64 {
        self.location
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    fn z(&self, x: f64) -> f64 {
        (x.ln() - self.location) / self.scale
    }

    /// `E(W - k)^+` for `W ~ Lognormal(m, s)`.
    fn lognormal_stop_loss(m: f64, s: f64, k: f64) -> f64 {
        let mean = (m + 0.5 * s * s).exp();
        if k <= 0.0 {
            return mean - k;
        }
        let lk = k.ln();
        let v = mean * norm_cdf((m + s * s - lk) / s) - k * norm_cdf((m - lk) / s);
        v.max(0.0)
    }
}

impl MarkModel for Lognormal {
    fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            norm_cdf(self.z(x))
        }
    }

    fn abs_tail(&self, c: f64) -> f64 {
        if c <= 0.0 {
            1.0
        } else {
            norm_sf(self.z(c))
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let z: f64 = rng.sample(rand_distr::StandardNormal);
        (self.location + self.scale * z).exp()
    }

    fn sample_band<R: Rng + ?Sized>(&self, band: Band, rng: &mut R) -> Result<f64> {
        band_mass(self, band)?;
        let (lo, hi) = band.bounds();
        let z_lo = if lo <= 0.0 { f64::NEG_INFINITY } else { self.z(lo) };
        let z_hi = if hi.is_finite() { self.z(hi) } else { f64::INFINITY };
        let z = truncated_std_normal(z_lo, z_hi, rng);
        Ok(clamp_open_closed((self.location + self.scale * z).exp(), lo.max(0.0), hi))
    }

    fn abs_moment(&self, p: f64) -> f64 {
        (p * self.location + 0.5 * p * p * self.scale * self.scale).exp()
    }

    fn stop_loss(&self, x: f64) -> f64 {
        Self::lognormal_stop_loss(self.location, self.scale, x)
    }

    fn tail_integral_bound(&self, alpha: f64, k: f64) -> f64 {
        // |V|^(1/alpha) is again lognormal, so the integral is a stop-loss
        Self::lognormal_stop_loss(self.location / alpha, self.scale / alpha, k.max(0.0))
    }

    fn mean(&self) -> f64 {
        self.abs_moment(1.0)
    }
}

/// Uniform on `[low, high]` with `0 <= low < high`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Uniform {
    low: f64,
    high: f64,
}

impl Uniform {
    pub fn new(low: f64, high: f64) -> Result<Self> {
        if !(low.is_finite() && high.is_finite() && 0.0 <= low && low < high) {
            return Err(Error::InvalidParameter(format!("uniform({low}, {high})")));
        }
        Ok(Self { low, high })
    }
}

impl MarkModel for Uniform {
    fn cdf(&self, x: f64) -> f64 {
        ((x - self.low) / (self.high - self.low)).clamp(0.0, 1.0)
    }

    fn abs_tail(&self, c: f64) -> f64 {
        1.0 - self.cdf(c)
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.low + open01(rng) * (self.high - self.low)
    }

    fn sample_band<R: Rng + ?Sized>(&self, band: Band, rng: &mut R) -> Result<f64> {
        band_mass(self, band)?;
        let (lo, hi) = band.bounds();
        let (a, b) = (lo.max(self.low), hi.min(self.high));
        Ok(clamp_open_closed(a + open01(rng) * (b - a), a, b))
    }

    fn abs_moment(&self, p: f64) -> f64 {
        (self.high.powf(p + 1.0) - self.low.powf(p + 1.0)) / ((p + 1.0) * (self.high - self.low))
    }

    fn abs_sup(&self) -> Option<f64> {
        Some(self.high)
    }

    fn stop_loss(&self, x: f64) -> f64 {
        if x <= self.low {
            self.mean() - x
        } else if x >= self.high {
            0.0
        } else {
            (self.high - x).powi(2) / (2.0 * (self.high - self.low))
        }
    }

    fn mean(&self) -> f64 {
        0.5 * (self.low + self.high)
    }
}

/// Finitely supported law. Values may be signed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discrete {
    values: Vec<f64>,
    probs: Vec<f64>,
}

impl Discrete {
    pub fn new(values: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.len() != weights.len() {
            return Err(Error::InvalidParameter(
                "discrete law needs matching, nonempty values and weights".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) || weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidParameter(
                "discrete law has a non-finite value or negative weight".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidParameter("discrete weights sum to zero".into()));
        }
        let mut pairs: Vec<(f64, f64)> = values.into_iter().zip(weights.into_iter().map(|w| w / total)).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (values, probs) = pairs.into_iter().unzip();
        Ok(Self { values, probs })
    }

    pub fn support(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.values.iter().copied().zip(self.probs.iter().copied())
    }

    fn pick<R: Rng + ?Sized>(&self, keep: impl Fn(f64) -> bool, mass: f64, rng: &mut R) -> f64 {
        let target = open01(rng) * mass;
        let mut acc = 0.0;
        let mut last = f64::NAN;
        for (v, p) in self.support().filter(|&(v, p)| p > 0.0 && keep(v)) {
            acc += p;
            last = v;
            if target < acc {
                return v;
            }
        }
        last
    }
}

impl MarkModel for Discrete {
    fn cdf(&self, x: f64) -> f64 {
        self.support().filter(|&(v, _)| v <= x).map(|(_, p)| p).sum::<f64>().min(1.0)
    }

    fn abs_tail(&self, c: f64) -> f64 {
        self.support().filter(|&(v, _)| v.abs() > c).map(|(_, p)| p).sum::<f64>().min(1.0)
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.pick(|_| true, 1.0, rng)
    }

    fn sample_band<R: Rng + ?Sized>(&self, band: Band, rng: &mut R) -> Result<f64> {
        let mass: f64 = self.support().filter(|&(v, _)| band.contains(v)).map(|(_, p)| p).sum();
        if mass <= 0.0 {
            return Err(Error::NullEvent(format!("P(|V| in {band:?}) = 0")));
        }
        Ok(self.pick(|v| band.contains(v), mass, rng))
    }

    fn abs_moment(&self, p: f64) -> f64 {
        self.support().map(|(v, w)| w * v.abs().powf(p)).sum()
    }

    fn abs_sup(&self) -> Option<f64> {
        self.support().filter(|&(_, p)| p > 0.0).map(|(v, _)| v.abs()).reduce(f64::max)
    }

    fn stop_loss(&self, x: f64) -> f64 {
        self.support().map(|(v, p)| p * (v.abs() - x).max(0.0)).sum()
    }

    fn tail_integral_bound(&self, alpha: f64, k: f64) -> f64 {
        self.support()
            .map(|(v, p)| p * (v.abs().powf(1.0 / alpha) - k.max(0.0)).max(0.0))
            .sum()
    }

    fn mean(&self) -> f64 {
        self.support().map(|(v, p)| v * p).sum()
    }
}

impl MarkModel for Exponential {
    fn cdf(&self, x: f64) -> f64 {
        InterArrivalModel::cdf(self, x)
    }

    fn abs_tail(&self, c: f64) -> f64 {
        self.survival(c)
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        InterArrivalModel::sample(self, rng)
    }

    fn sample_band<R: Rng + ?Sized>(&self, band: Band, rng: &mut R) -> Result<f64> {
        band_mass(self, band)?;
        let (lo, hi) = band.bounds();
        let lo = lo.max(0.0);
        let r = self.rate();
        // memoryless: shift to the band start, then truncate at its width
        let width_mass = if hi.is_finite() { -(-r * (hi - lo)).exp_m1() } else { 1.0 };
        let x = lo - (-open01(rng) * width_mass).ln_1p() / r;
        Ok(clamp_open_closed(x, lo, hi))
    }

    fn abs_moment(&self, p: f64) -> f64 {
        (ln_gamma(1.0 + p) - p * self.rate().ln()).exp()
    }

    fn stop_loss(&self, x: f64) -> f64 {
        if x <= 0.0 {
            InterArrivalModel::mean(self) - x
        } else {
            (-self.rate() * x).exp() / self.rate()
        }
    }

    fn tail_integral_bound(&self, alpha: f64, k: f64) -> f64 {
        // int_k^inf exp(-r y^alpha) dy = r^{-1/a} Gamma(1/a) Q(1/a, r k^a) / a
        let a = 1.0 / alpha;
        let r = self.rate();
        let full = (ln_gamma(a) - a * r.ln()).exp() * a;
        if k <= 0.0 {
            full
        } else {
            full * gamma_ur(a, r * k.powf(alpha))
        }
    }

    fn mean(&self) -> f64 {
        InterArrivalModel::mean(self)
    }
}

impl MarkModel for Gamma {
    fn cdf(&self, x: f64) -> f64 {
        InterArrivalModel::cdf(self, x)
    }

    fn abs_tail(&self, c: f64) -> f64 {
        self.survival(c)
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        InterArrivalModel::sample(self, rng)
    }

    fn sample_band<R: Rng + ?Sized>(&self, band: Band, rng: &mut R) -> Result<f64> {
        band_mass(self, band)?;
        let (lo, hi) = band.bounds();
        Ok(invert_band(|x| InterArrivalModel::cdf(self, x), |x| self.survival(x), lo, hi, rng))
    }

    fn abs_moment(&self, p: f64) -> f64 {
        (ln_gamma(self.shape() + p) - ln_gamma(self.shape()) - p * self.rate().ln()).exp()
    }

    fn stop_loss(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return MarkModel::mean(self) - x;
        }
        let rx = self.rate() * x;
        (MarkModel::mean(self) * gamma_ur(self.shape() + 1.0, rx) - x * gamma_ur(self.shape(), rx)).max(0.0)
    }

    fn mean(&self) -> f64 {
        InterArrivalModel::mean(self)
    }
}

impl MarkModel for Deterministic {
    fn cdf(&self, x: f64) -> f64 {
        InterArrivalModel::cdf(self, x)
    }

    fn abs_tail(&self, c: f64) -> f64 {
        if self.mean_value() > c {
            1.0
        } else {
            0.0
        }
    }

    fn sample<R: Rng + ?Sized>(&self, _rng: &mut R) -> f64 {
        self.mean_value()
    }

    fn sample_band<R: Rng + ?Sized>(&self, band: Band, _rng: &mut R) -> Result<f64> {
        if band.contains(self.mean_value()) {
            Ok(self.mean_value())
        } else {
            Err(Error::NullEvent(format!("P(|V| in {band:?}) = 0")))
        }
    }

    fn abs_moment(&self, p: f64) -> f64 {
        self.mean_value().powf(p)
    }

    fn abs_sup(&self) -> Option<f64> {
        Some(self.mean_value())
    }

    fn stop_loss(&self, x: f64) -> f64 {
        (self.mean_value() - x).max(0.0)
    }

    fn tail_integral_bound(&self, alpha: f64, k: f64) -> f64 {
        (self.mean_value().powf(1.0 / alpha) - k.max(0.0)).max(0.0)
    }

    fn mean(&self) -> f64 {
        self.mean_value()
    }
}

impl Deterministic {
    fn mean_value(&self) -> f64 {
        InterArrivalModel::mean(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::markov_tail_bound;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ln() -> Lognormal {
        Lognormal::new(-0.25, 0.5).unwrap()
    }

    /// Midpoint-rule oracle for `int_k^inf P(|V|^(1/alpha) > y) dy`.
    fn tail_integral_quadrature<M: MarkModel>(m: &M, alpha: f64, k: f64, upper: f64) -> f64 {
        let n = 200_000;
        let h = (upper - k) / n as f64;
        (0..n).map(|i| m.abs_tail((k + (i as f64 + 0.5) * h).powf(alpha))).sum::<f64>() * h
    }

    #[test]
    fn lognormal_tail_probability() {
        assert_eq!(ln().abs_tail(0.0), 1.0);
        assert!((ln().abs_tail(1.0) - 0.308_537_538_725_986_9).abs() < 1e-14);
    }

    #[test]
    fn tail_and_cdf_are_complementary() {
        let u = Uniform::new(0.0, 2.0).unwrap();
        let e = Exponential::new(1.3).unwrap();
        let g = Gamma::new(2.5, 1.5).unwrap();
        for c in [0.0, 0.2, 1.0, 1.7, 4.0] {
            assert!((ln().abs_tail(c) + ln().cdf(c) - 1.0).abs() < 1e-12);
            assert!((u.abs_tail(c) + u.cdf(c) - 1.0).abs() < 1e-12);
            assert!((MarkModel::abs_tail(&e, c) + MarkModel::cdf(&e, c) - 1.0).abs() < 1e-12);
            assert!((MarkModel::abs_tail(&g, c) + MarkModel::cdf(&g, c) - 1.0).abs() < 1e-12);
        }
        assert_eq!(u.abs_tail(2.0), 0.0);
        assert_eq!(u.abs_tail(5.0), 0.0);
    }

    #[test]
    fn lognormal_tail_integral_at_zero_is_mean() {
        let q = tail_integral_quadrature(&ln(), 1.0, 0.0, 60.0);
        assert!((q - (-0.125f64).exp()).abs() < 1e-6);
        assert!((ln().tail_integral_bound(1.0, 0.0) - 0.882_496_902_584_595).abs() < 1e-12);
    }

    #[test]
    fn tail_integral_bounds_dominate_quadrature() {
        let u = Uniform::new(0.0, 2.0).unwrap();
        let e = Exponential::new(1.0).unwrap();
        let g = Gamma::new(2.0, 2.0).unwrap();
        let d = Discrete::new(vec![0.5, 1.5, 2.5], vec![0.6, 0.3, 0.1]).unwrap();
        for alpha in [0.5, 1.0, 2.0] {
            for k in [0.0, 0.3, 1.0, 2.0, 5.0] {
                let checks = [
                    (
                        MarkModel::tail_integral_bound(&ln(), alpha, k),
                        tail_integral_quadrature(&ln(), alpha, k, k + 400.0),
                    ),
                    (u.tail_integral_bound(alpha, k), tail_integral_quadrature(&u, alpha, k, k + 20.0)),
                    (
                        MarkModel::tail_integral_bound(&e, alpha, k),
                        tail_integral_quadrature(&e, alpha, k, k + 200.0),
                    ),
                    (
                        MarkModel::tail_integral_bound(&g, alpha, k),
                        tail_integral_quadrature(&g, alpha, k, k + 200.0),
                    ),
                    (d.tail_integral_bound(alpha, k), tail_integral_quadrature(&d, alpha, k, k + 20.0)),
                ];
                for (i, (bound, quad)) in checks.into_iter().enumerate() {
                    assert!(bound >= quad - 1e-6, "family {i} alpha {alpha} k {k}: {bound} < {quad}");
                }
            }
        }
    }

    #[test]
    fn tail_integral_vanishes() {
        assert!(ln().tail_integral_bound(1.0, 200.0) < 1e-12);
        let u = Uniform::new(0.0, 3.0).unwrap();
        assert_eq!(u.tail_integral_bound(1.0, 3.0), 0.0);
        assert_eq!(u.tail_integral_bound(2.0, 3f64.sqrt()), 0.0);
        assert!(markov_tail_bound(&ln(), 2.0, 1e9) < 1e-6);
    }

    #[test]
    fn conditional_draws_stay_in_band() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = Gamma::new(2.0, 2.0).unwrap();
        let e = Exponential::new(2.0).unwrap();
        for band in [
            Band::Above(1.0),
            Band::AtMost(1.0),
            Band::Within { lower: 0.5, upper: 0.6 },
            Band::Above(8.0),
        ] {
            for _ in 0..500 {
                assert!(band.contains(ln().sample_band(band, &mut rng).unwrap()));
                assert!(band.contains(MarkModel::sample_band(&g, band, &mut rng).unwrap()));
                assert!(band.contains(MarkModel::sample_band(&e, band, &mut rng).unwrap()));
            }
        }
    }

    #[test]
    fn conditional_mean_matches_rejection_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 100_000;
        let mut rejected = Vec::with_capacity(n);
        while rejected.len() < n {
            let v = ln().sample(&mut rng);
            if v > 1.0 {
                rejected.push(v);
            }
        }
        let direct: Vec<f64> = (0..n).map(|_| ln().sample_band(Band::Above(1.0), &mut rng).unwrap()).collect();
        let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
        let sd = |xs: &[f64]| {
            let m = mean(xs);
            (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64).sqrt()
        };
        let se = (sd(&rejected).powi(2) / n as f64 + sd(&direct).powi(2) / n as f64).sqrt();
        assert!((mean(&rejected) - mean(&direct)).abs() < 4.0 * se);
        // closed form: E[V; V > 1] / P(V > 1)
        let closed = ln().stop_loss(1.0) / ln().abs_tail(1.0) + 1.0;
        assert!((mean(&direct) - closed).abs() < 4.0 * sd(&direct) / (n as f64).sqrt());
    }

    #[test]
    fn full_support_band_is_nominal() {
        let mut a = ChaCha8Rng::seed_from_u64(3);
        let xs: Vec<f64> = (0..50_000).map(|_| ln().sample_band(Band::Above(0.0), &mut a).unwrap()).collect();
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        assert!((m - ln().mean()).abs() < 0.01);
    }

    #[test]
    fn null_bands_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = Uniform::new(0.0, 1.0).unwrap();
        assert!(matches!(u.sample_band(Band::Above(1.0), &mut rng), Err(Error::NullEvent(_))));
        let d = Discrete::new(vec![1.0, 2.0], vec![1.0, 1.0]).unwrap();
        assert!(matches!(
            d.sample_band(Band::Within { lower: 1.0, upper: 1.5 }, &mut rng),
            Err(Error::NullEvent(_))
        ));
        let det = Deterministic::new(1.0).unwrap();
        assert!(MarkModel::sample_band(&det, Band::AtMost(0.5), &mut rng).is_err());
    }

    #[test]
    fn deep_tail_band_is_resolved() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let c = 40.0; // P(V > 40) ~ 1e-14
        assert!(ln().abs_tail(c) > 0.0 && ln().abs_tail(c) < 1e-12);
        for _ in 0..100 {
            let v = ln().sample_band(Band::Above(c), &mut rng).unwrap();
            assert!(v > c && v < 2.0 * c);
        }
    }

    #[test]
    fn discrete_law_is_exact() {
        let d = Discrete::new(vec![2.5, 0.5, 1.5], vec![1.0, 6.0, 3.0]).unwrap();
        assert!((d.abs_tail(1.0) - 0.4).abs() < 1e-15);
        assert!((d.mean() - (0.3 + 0.45 + 0.25)).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 100_000;
        let hits = (0..n).filter(|_| d.sample_band(Band::Above(1.0), &mut rng).unwrap() == 2.5).count();
        let p = hits as f64 / n as f64;
        assert!((p - 0.25).abs() < 4.0 * (0.25f64 * 0.75 / n as f64).sqrt());
    }

    #[test]
    fn equilibrium_cdf_of_lognormal_matches_quadrature() {
        let x = 0.7;
        let n = 100_000;
        let h = x / n as f64;
        let q = (0..n).map(|i| ln().abs_tail((i as f64 + 0.5) * h)).sum::<f64>() * h / ln().mean();
        assert!((ln().equilibrium_cdf(x) - q).abs() < 1e-8);
    }
}
