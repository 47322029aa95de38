use super::special::{bisect_decreasing, open01};
use super::InterArrivalModel;
use crate::error::{Error, Result};
use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma_lr, gamma_ur};

fn positive(name: &str, x: f64) -> Result<f64> {
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {x}")))
    }
}

fn exp_draw<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> f64 {
    Exp::new(rate).expect("validated rate").sample(rng)
}

fn gamma_draw<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> f64 {
    rand_distr::Gamma::new(shape, 1.0 / rate).expect("validated gamma").sample(rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exponential {
    rate: f64,
}

impl Exponential {
    pub fn new(rate: f64) -> Result<Self> {
        Ok(Self {
            rate: positive("rate", rate)?,
        })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }
}

impl InterArrivalModel for Exponential {
    fn mean(&self) -> f64 {
        1.0 / self.rate
    }

    fn variance(&self) -> f64 {
        1.0 / (self.rate * self.rate)
    }

    fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            -(-self.rate * x).exp_m1()
        }
    }

    fn survival(&self, x: f64) -> f64 {
        if x <= 0.0 {
            1.0
        } else {
            (-self.rate * x).exp()
        }
    }

    fn cumulant_bound(&self) -> f64 {
        self.rate
    }

    fn cumulant_unchecked(&self, theta: f64) -> f64 {
        -(-theta / self.rate).ln_1p()
    }

    fn cumulant_slope_unchecked(&self, theta: f64) -> f64 {
        1.0 / (self.rate - theta)
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        exp_draw(self.rate, rng)
    }

    fn sample_tilted<R: Rng + ?Sized>(&self, theta: f64, rng: &mut R) -> Result<f64> {
        self.check_domain(theta)?;
        Ok(exp_draw(self.rate - theta, rng))
    }

    fn sample_length_biased<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        gamma_draw(2.0, self.rate, rng)
    }

    fn equilibrium_cdf(&self, x: f64) -> f64 {
        self.cdf(x)
    }

    fn sample_residual<R: Rng + ?Sized>(&self, _age: f64, rng: &mut R) -> Result<f64> {
        Ok(self.sample(rng))
    }

    fn is_memoryless(&self) -> bool {
        true
    }
}

/// Gamma law with the given shape and rate (mean `shape / rate`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gamma {
    shape: f64,
    rate: f64,
}

impl Gamma {
    pub fn new(shape: f64, rate: f64) -> Result<Self> {
        Ok(Self {
            shape: positive("shape", shape)?,
            rate: positive("rate", rate)?,
        })
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }
}

impl InterArrivalModel for Gamma {
    fn mean(&self) -> f64 {
        self.shape / self.rate
    }

    fn variance(&self) -> f64 {
        self.shape / (self.rate * self.rate)
    }

    fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            gamma_lr(self.shape, self.rate * x)
        }
    }

    fn survival(&self, x: f64) -> f64 {
        if x <= 0.0 {
            1.0
        } else {
            gamma_ur(self.shape, self.rate * x)
        }
    }

    fn cumulant_bound(&self) -> f64 {
        self.rate
    }

    fn cumulant_unchecked(&self, theta: f64) -> f64 {
        -self.shape * (-theta / self.rate).ln_1p()
    }

    fn cumulant_slope_unchecked(&self, theta: f64) -> f64 {
        self.shape / (self.rate - theta)
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        gamma_draw(self.shape, self.rate, rng)
    }

    fn sample_tilted<R: Rng + ?Sized>(&self, theta: f64, rng: &mut R) -> Result<f64> {
        self.check_domain(theta)?;
        Ok(gamma_draw(self.shape, self.rate - theta, rng))
    }

    fn sample_length_biased<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        gamma_draw(self.shape + 1.0, self.rate, rng)
    }

    fn equilibrium_cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let rx = self.rate * x;
        let integral = x * gamma_ur(self.shape, rx) + self.mean() * gamma_lr(self.shape + 1.0, rx);
        (integral / self.mean()).min(1.0)
    }

    fn sample_residual<R: Rng + ?Sized>(&self, age: f64, rng: &mut R) -> Result<f64> {
        let s_age = self.survival(age);
        if s_age <= 0.0 {
            return Err(Error::NullEvent(format!("gamma gap exceeding age {age}")));
        }
        let target = open01(rng) * s_age;
        let x = bisect_decreasing(|x| self.survival(x), target, age.max(0.0), f64::INFINITY);
        Ok((x - age).max(f64::MIN_POSITIVE))
    }
}

/// `shift + Exponential(rate)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftedExponential {
    shift: f64,
    rate: f64,
}

impl ShiftedExponential {
    pub fn new(shift: f64, rate: f64) -> Result<Self> {
        if !(shift.is_finite() && shift >= 0.0) {
            return Err(Error::InvalidParameter(format!("shift must be nonnegative, got {shift}")));
        }
        Ok(Self {
            shift,
            rate: positive("rate", rate)?,
        })
    }
}

impl InterArrivalModel for ShiftedExponential {
    fn mean(&self) -> f64 {
        self.shift + 1.0 / self.rate
    }

    fn variance(&self) -> f64 {
        1.0 / (self.rate * self.rate)
    }

    fn cdf(&self, x: f64) -> f64 {
        if x <= self.shift {
            0.0
        } else {
            -(-self.rate * (x - self.shift)).exp_m1()
        }
    }

    fn cumulant_bound(&self) -> f64 {
        self.rate
    }

    fn cumulant_unchecked(&self, theta: f64) -> f64 {
        theta * self.shift - (-theta / self.rate).ln_1p()
    }

    fn cumulant_slope_unchecked(&self, theta: f64) -> f64 {
        self.shift + 1.0 / (self.rate - theta)
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.shift + exp_draw(self.rate, rng)
    }

    fn sample_tilted<R: Rng + ?Sized>(&self, theta: f64, rng: &mut R) -> Result<f64> {
        self.check_domain(theta)?;
        Ok(self.shift + exp_draw(self.rate - theta, rng))
    }

    fn sample_length_biased<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        // density (shift + y) rate e^{-rate y} / mean: a two-part mixture
        if open01(rng) * self.mean() < self.shift {
            self.shift + exp_draw(self.rate, rng)
        } else {
            self.shift + gamma_draw(2.0, self.rate, rng)
        }
    }

    fn equilibrium_cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else if x <= self.shift {
            x / self.mean()
        } else {
            (self.shift - (-self.rate * (x - self.shift)).exp_m1() / self.rate) / self.mean()
        }
    }

    fn sample_residual<R: Rng + ?Sized>(&self, age: f64, rng: &mut R) -> Result<f64> {
        let exp = exp_draw(self.rate, rng);
        Ok(if age < self.shift { self.shift - age + exp } else { exp })
    }
}

/// A point mass. It violates the positive-variance requirement of the
/// tilting step and exists for tests and degenerate-case checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Deterministic {
    value: f64,
}

impl Deterministic {
    pub fn new(value: f64) -> Result<Self> {
        Ok(Self {
            value: positive("value", value)?,
        })
    }
}

impl InterArrivalModel for Deterministic {
    fn mean(&self) -> f64 {
        self.value
    }

    fn variance(&self) -> f64 {
        0.0
    }

    fn cdf(&self, x: f64) -> f64 {
        if x >= self.value {
            1.0
        } else {
            0.0
        }
    }

    fn cumulant_bound(&self) -> f64 {
        f64::INFINITY
    }

    fn cumulant_unchecked(&self, theta: f64) -> f64 {
        theta * self.value
    }

    fn cumulant_slope_unchecked(&self, _theta: f64) -> f64 {
        self.value
    }

    fn sample<R: Rng + ?Sized>(&self, _rng: &mut R) -> f64 {
        self.value
    }

    fn sample_tilted<R: Rng + ?Sized>(&self, _theta: f64, _rng: &mut R) -> Result<f64> {
        Ok(self.value)
    }

    fn sample_length_biased<R: Rng + ?Sized>(&self, _rng: &mut R) -> f64 {
        self.value
    }

    fn equilibrium_cdf(&self, x: f64) -> f64 {
        (x / self.value).clamp(0.0, 1.0)
    }

    fn sample_residual<R: Rng + ?Sized>(&self, age: f64, _rng: &mut R) -> Result<f64> {
        if age < self.value {
            Ok(self.value - age)
        } else {
            Err(Error::NullEvent(format!("deterministic gap {} exceeding age {age}", self.value)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(42)
    }

    fn mean_of(n: usize, mut f: impl FnMut() -> f64) -> (f64, f64) {
        let xs: Vec<f64> = (0..n).map(|_| f()).collect();
        let m = xs.iter().sum::<f64>() / n as f64;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        (m, (v / n as f64).sqrt())
    }

    #[test]
    fn cumulant_reference_values() {
        let e = Exponential::new(1.0).unwrap();
        assert_eq!(e.cumulant(0.0).unwrap(), 0.0);
        assert!((e.cumulant(-1.0).unwrap() + 2f64.ln()).abs() < 1e-15);
        let g = Gamma::new(2.0, 2.0).unwrap();
        assert!((g.cumulant(1.0).unwrap() - 2.0 * 2f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn cumulant_domain_errors() {
        let g = Gamma::new(2.0, 2.0).unwrap();
        assert!(matches!(g.cumulant(2.0), Err(Error::CumulantDomain { .. })));
        assert!(matches!(g.sample_tilted(3.0, &mut rng()), Err(Error::CumulantDomain { .. })));
        assert!(g.cumulant(-50.0).is_ok());
    }

    #[test]
    fn cumulant_slope_matches_finite_differences() {
        let h = 1e-5;
        let shifted = ShiftedExponential::new(0.3, 2.0).unwrap();
        type Case<'a> = (&'a dyn Fn(f64) -> (f64, f64), &'a [f64]);
        let models: [Case; 3] = [
            (
                &|t| {
                    (
                        Exponential::new(1.5).unwrap().cumulant_unchecked(t),
                        Exponential::new(1.5).unwrap().cumulant_slope_unchecked(t),
                    )
                },
                &[-3.0, 0.0, 1.0],
            ),
            (
                &|t| {
                    (
                        Gamma::new(2.0, 2.0).unwrap().cumulant_unchecked(t),
                        Gamma::new(2.0, 2.0).unwrap().cumulant_slope_unchecked(t),
                    )
                },
                &[-4.0, 0.0, 1.5],
            ),
            (
                &|t| (shifted.cumulant_unchecked(t), shifted.cumulant_slope_unchecked(t)),
                &[-2.0, 0.0, 1.0],
            ),
        ];
        for (f, thetas) in models {
            for &t in thetas {
                let fd = (f(t + h).0 - f(t - h).0) / (2.0 * h);
                let exact = f(t).1;
                assert!((fd - exact).abs() <= 1e-6 * exact.abs().max(1.0), "theta={t}: {fd} vs {exact}");
            }
        }
    }

    #[test]
    fn slope_at_zero_is_mean() {
        let g = Gamma::new(2.0, 2.0).unwrap();
        assert!((g.cumulant_slope(0.0).unwrap() - g.mean()).abs() < 1e-15);
        let s = ShiftedExponential::new(0.5, 4.0).unwrap();
        assert!((s.cumulant_slope(0.0).unwrap() - s.mean()).abs() < 1e-15);
    }

    #[test]
    fn exponential_tilt_mean() {
        let e = Exponential::new(1.0).unwrap();
        let mut r = rng();
        let (m, se) = mean_of(200_000, || e.sample_tilted(0.5, &mut r).unwrap());
        assert!((m - 2.0).abs() < 4.0 * se);
    }

    #[test]
    fn gamma_tilt_matches_importance_weighted_nominal() {
        // oracle: E_theta[X] = E[X e^{theta X}] / E[e^{theta X}] from nominal draws
        let g = Gamma::new(2.0, 2.0).unwrap();
        let mut r = rng();
        let n = 400_000;
        let (mut num, mut den) = (0.0, 0.0);
        for _ in 0..n {
            let x = g.sample(&mut r);
            let w = x.exp();
            num += x * w;
            den += w;
        }
        let oracle = num / den;
        let (m, se) = mean_of(n, || g.sample_tilted(1.0, &mut r).unwrap());
        assert!((oracle - 2.0).abs() < 0.05, "oracle {oracle}");
        assert!((m - 2.0).abs() < 4.0 * se, "tilted mean {m}");
    }

    #[test]
    fn equilibrium_means() {
        // E X_eq = E X^2 / (2 E X)
        let g = Gamma::new(2.0, 2.0).unwrap();
        let mut r = rng();
        let (m, se) = mean_of(1_000_000, || g.sample_equilibrium(&mut r));
        assert!((m - 0.75).abs() < 4.0 * se, "{m}");

        let d = Deterministic::new(2.0).unwrap();
        let (m, se) = mean_of(200_000, || d.sample_equilibrium(&mut r));
        assert!((m - 1.0).abs() < 4.0 * se);

        let s = ShiftedExponential::new(1.0, 1.0).unwrap();
        // E X^2 = Var + mean^2 = 1 + 4
        let (m, se) = mean_of(400_000, || s.sample_equilibrium(&mut r));
        assert!((m - 5.0 / 4.0).abs() < 4.0 * se, "{m}");
    }

    #[test]
    fn equilibrium_cdf_matches_quadrature() {
        let g = Gamma::new(2.0, 2.0).unwrap();
        let s = ShiftedExponential::new(0.4, 3.0).unwrap();
        for x in [0.1, 0.5, 1.0, 3.0] {
            let quad = |surv: &dyn Fn(f64) -> f64, mean: f64| {
                let n = 20_000;
                let h = x / n as f64;
                (0..n).map(|i| surv((i as f64 + 0.5) * h)).sum::<f64>() * h / mean
            };
            assert!((g.equilibrium_cdf(x) - quad(&|t| g.survival(t), g.mean())).abs() < 1e-8);
            assert!((s.equilibrium_cdf(x) - quad(&|t| s.survival(t), s.mean())).abs() < 1e-6);
        }
    }

    #[test]
    fn gamma_residual_exceeds_zero_and_has_right_mean() {
        // E[X - a | X > a] computed by quadrature of the survival function
        let g = Gamma::new(2.0, 2.0).unwrap();
        let age = 1.2;
        let n = 200_000;
        let h = 30.0 / n as f64;
        let oracle = (0..n).map(|i| g.survival(age + (i as f64 + 0.5) * h)).sum::<f64>() * h / g.survival(age);
        let mut r = rng();
        let (m, se) = mean_of(200_000, || g.sample_residual(age, &mut r).unwrap());
        assert!((m - oracle).abs() < 4.0 * se, "{m} vs {oracle}");
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(Exponential::new(0.0).is_err());
        assert!(Gamma::new(-1.0, 1.0).is_err());
        assert!(ShiftedExponential::new(-0.1, 1.0).is_err());
        assert!(Deterministic::new(f64::NAN).is_err());
    }
}
