//! Goodness-of-fit tests and summaries used by the validation battery.

use crate::distributions::special::CompensatedSum;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma_ur;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub std_error: f64,
}

impl Summary {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self {
                n,
                mean: f64::NAN,
                variance: f64::NAN,
                std_error: f64::NAN,
            };
        }
        let mean = xs.iter().copied().collect::<CompensatedSum>().value() / n as f64;
        let variance = if n > 1 {
            xs.iter().map(|x| (x - mean) * (x - mean)).collect::<CompensatedSum>().value() / (n - 1) as f64
        } else {
            0.0
        };
        Self {
            n,
            mean,
            variance,
            std_error: (variance / n as f64).sqrt(),
        }
    }

    /// Two-sided interval `mean +- z * se`.
    pub fn interval(&self, z: f64) -> (f64, f64) {
        (self.mean - z * self.std_error, self.mean + z * self.std_error)
    }

    /// Whether `value` lies within `k` standard errors of the mean.
    pub fn within(&self, value: f64, k: f64) -> bool {
        (self.mean - value).abs() <= k * self.std_error
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
}

impl TestResult {
    pub fn passes(&self, level: f64) -> bool {
        self.p_value >= level
    }
}

/// `P(K > x)` for the Kolmogorov distribution.
pub fn kolmogorov_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 1.18 {
        // theta-function form, converges fast for small x
        let y = (-std::f64::consts::PI.powi(2) / (8.0 * x * x)).exp();
        let c = (2.0 * std::f64::consts::PI).sqrt() / x;
        let s: f64 = (0..6).map(|k| y.powi((2 * k + 1) * (2 * k + 1))).sum();
        return (1.0 - c * s).clamp(0.0, 1.0);
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * x * x).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

fn ks_p_value(d: f64, n_eff: f64) -> f64 {
    let r = n_eff.sqrt();
    kolmogorov_sf((r + 0.12 + 0.11 / r) * d)
}

/// One-sample Kolmogorov-Smirnov test against a continuous CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(xs: &[f64], cdf: F) -> TestResult {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in v.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    TestResult {
        statistic: d,
        p_value: ks_p_value(d, n),
    }
}

/// Two-sample Kolmogorov-Smirnov test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> TestResult {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    TestResult {
        statistic: d,
        p_value: ks_p_value(d, na * nb / (na + nb)),
    }
}

/// `P(chi^2_df > x)`.
pub fn chi_square_sf(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    gamma_ur(0.5 * df, 0.5 * x)
}

/// Pearson test of observed counts against cell probabilities. Cells are
/// merged left to right until each expects at least five observations; the
/// last cell absorbs any remainder of the probability mass.
pub fn chi_square_counts(observed: &[u64], probs: &[f64]) -> TestResult {
    assert_eq!(observed.len(), probs.len());
    let n: u64 = observed.iter().sum();
    let n = n as f64;
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for (&obs, &p) in observed.iter().zip(probs) {
        o += obs as f64;
        e += p * n;
        if e >= 5.0 {
            cells.push((o, e));
            o = 0.0;
            e = 0.0;
        }
    }
    let tail_mass = (1.0 - probs.iter().sum::<f64>()).max(0.0) * n;
    e += tail_mass;
    if let Some(last) = cells.last_mut() {
        if e < 5.0 {
            last.0 += o;
            last.1 += e;
        } else {
            cells.push((o, e));
        }
    } else {
        cells.push((o, e));
    }
    let stat: f64 = cells.iter().map(|&(o, e)| (o - e) * (o - e) / e).sum();
    let df = (cells.len() as f64 - 1.0).max(1.0);
    TestResult {
        statistic: stat,
        p_value: chi_square_sf(stat, df),
    }
}

/// Tallies nonnegative integer outcomes into `0..=max`.
pub fn tally(xs: impl IntoIterator<Item = u64>) -> Vec<u64> {
    let mut counts = Vec::new();
    for x in xs {
        let x = x as usize;
        if counts.len() <= x {
            counts.resize(x + 1, 0);
        }
        counts[x] += 1;
    }
    counts
}

/// Chi-square test of values `>= 1` against `P(k) = (1 - p)^(k-1) p`.
pub fn geometric_chi_square(xs: &[u64], success: f64) -> TestResult {
    let counts = tally(xs.iter().copied());
    let probs: Vec<f64> = (0..counts.len())
        .map(|k| {
            if k == 0 {
                0.0
            } else {
                (1.0 - success).powi(k as i32 - 1) * success
            }
        })
        .collect();
    chi_square_counts(&counts, &probs)
}

/// Chi-square test of counts against a Poisson law with the given mean.
pub fn poisson_chi_square(xs: &[u64], mean: f64) -> TestResult {
    let counts = tally(xs.iter().copied());
    let mut probs = Vec::with_capacity(counts.len());
    let mut p = (-mean).exp();
    for k in 0..counts.len() {
        probs.push(p);
        p *= mean / (k + 1) as f64;
    }
    chi_square_counts(&counts, &probs)
}

/// Chi-square test that two samples of counts share one law. Cells are
/// merged left to right until both samples expect at least five.
pub fn chi_square_two_sample(a: &[u64], b: &[u64]) -> TestResult {
    let (ta, tb) = (tally(a.iter().copied()), tally(b.iter().copied()));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let share = na.min(nb) / (na + nb);
    let k = ta.len().max(tb.len());
    let at = |t: &Vec<u64>, i: usize| t.get(i).copied().unwrap_or(0) as f64;
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut x, mut y) = (0.0, 0.0);
    for i in 0..k {
        x += at(&ta, i);
        y += at(&tb, i);
        if (x + y) * share >= 5.0 {
            cells.push((x, y));
            x = 0.0;
            y = 0.0;
        }
    }
    match cells.last_mut() {
        Some(last) => {
            last.0 += x;
            last.1 += y;
        }
        None => cells.push((x, y)),
    }
    let n = na + nb;
    let stat: f64 = cells
        .iter()
        .map(|&(x, y)| {
            let (ea, eb) = ((x + y) * na / n, (x + y) * nb / n);
            (x - ea).powi(2) / ea + (y - eb).powi(2) / eb
        })
        .sum();
    let df = (cells.len() as f64 - 1.0).max(1.0);
    TestResult {
        statistic: stat,
        p_value: chi_square_sf(stat, df),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn kolmogorov_reference_points() {
        // classical critical values: P(K > 1.3581) = 0.05, P(K > 1.6276) = 0.01
        assert!((kolmogorov_sf(1.3581) - 0.05).abs() < 1e-4);
        assert!((kolmogorov_sf(1.6276) - 0.01).abs() < 1e-4);
        assert!((kolmogorov_sf(0.8276) - 0.5).abs() < 1e-3);
        let (a, b) = (kolmogorov_sf(1.17999), kolmogorov_sf(1.18001));
        assert!((a - b).abs() < 1e-4 && a > b);
    }

    #[test]
    fn chi_square_reference_points() {
        assert!((chi_square_sf(3.841_458_820_694_124, 1.0) - 0.05).abs() < 1e-12);
        assert!((chi_square_sf(2.0 * 2f64.ln(), 2.0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn ks_accepts_the_true_law_and_rejects_a_shift() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let xs: Vec<f64> = (0..20_000).map(|_| rng.random::<f64>()).collect();
        assert!(ks_one_sample(&xs, |x| x.clamp(0.0, 1.0)).passes(0.01));
        assert!(!ks_one_sample(&xs, |x| (x - 0.03).clamp(0.0, 1.0)).passes(0.01));
        let ys: Vec<f64> = (0..20_000).map(|_| rng.random::<f64>()).collect();
        assert!(ks_two_sample(&xs, &ys).passes(0.01));
        let zs: Vec<f64> = ys.iter().map(|y| y * 1.05).collect();
        assert!(!ks_two_sample(&xs, &zs).passes(0.01));
    }

    #[test]
    fn geometric_and_poisson_tests() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let geo: Vec<u64> = (0..50_000)
            .map(|_| {
                let mut k = 1;
                while rng.random::<f64>() > 0.3 {
                    k += 1;
                }
                k
            })
            .collect();
        assert!(geometric_chi_square(&geo, 0.3).passes(0.01));
        assert!(!geometric_chi_square(&geo, 0.33).passes(0.01));
        let pois: Vec<u64> = (0..50_000)
            .map(|_| {
                let mut k = 0;
                let mut t = -rng.random::<f64>().ln();
                while t < 4.0 {
                    k += 1;
                    t -= rng.random::<f64>().ln();
                }
                k
            })
            .collect();
        assert!(poisson_chi_square(&pois, 4.0).passes(0.01));
        assert!(!poisson_chi_square(&pois, 4.1).passes(0.01));
        let (first, second) = pois.split_at(25_000);
        assert!(chi_square_two_sample(first, second).passes(0.01));
        let shifted: Vec<u64> = second
            .iter()
            .map(|&k| if k == 2 && rng.random::<f64>() < 0.2 { 3 } else { k })
            .collect();
        assert!(!chi_square_two_sample(first, &shifted).passes(0.01));
    }

    #[test]
    fn summary_matches_hand_computation() {
        let s = Summary::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.variance - 5.0 / 3.0).abs() < 1e-15);
        assert!(s.within(2.5, 0.0));
    }
}
