//! The negative-drift walk behind the arrival horizon.
//!
//! With `Y_i = (mu - eps) - X_i` the walk `S_n = Y_1 + ... + Y_n` drifts
//! down at rate `eps`, and `A_{n+1} >= n (mu - eps)` holds exactly when
//! `S_n <= 0`. Exponential tilting by the positive root `eta` of
//! `psi_Y(eta) = 0` turns it into a walk with positive drift, under which
//! every level is crossed, and `P(T_xi < inf) = E_eta exp(-eta S_{T_xi})`.
//! That identity yields an exact coin with success probability
//! `q(xi) = P(T_xi < inf)` and, at `xi = 0`, an acceptance test that turns a
//! tilted excursion into one conditioned on `T_0 < inf`.

use crate::distributions::special::open01;
use crate::distributions::InterArrivalModel;
use crate::error::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Hard cap on walk steps inside a single call. Reaching it raises
/// [`Error::IterationCeiling`] instead of truncating.
pub const STEP_CEILING: u64 = 1_000_000_000;

/// Number of times the default epsilon is halved before giving up.
pub const EPSILON_HALVINGS: u32 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TiltParams {
    /// `mu`, the mean gap.
    pub mean: f64,
    /// Drift margin, `0 < eps < mu`.
    pub epsilon: f64,
    /// `mu - eps`, the slope of the certified lower envelope for arrivals.
    pub slope: f64,
    /// Positive root of `psi_Y`.
    pub eta: f64,
    /// `psi_Y'(eta)`, the drift of the walk under the tilted measure.
    pub tilted_drift: f64,
}

/// `psi_Y(theta) = theta (mu - eps) + psi(-theta)` for `theta >= 0`.
pub fn increment_cumulant<A: InterArrivalModel + ?Sized>(model: &A, slope: f64, theta: f64) -> f64 {
    theta * slope + model.cumulant_unchecked(-theta)
}

fn increment_cumulant_slope<A: InterArrivalModel + ?Sized>(model: &A, slope: f64, theta: f64) -> f64 {
    slope - model.cumulant_slope_unchecked(-theta)
}

/// Locates the positive root of `psi_Y` by bracketed bisection.
///
/// `psi_Y` is convex with `psi_Y(0) = 0` and `psi_Y'(0) = -eps < 0`, so it
/// has at most one positive root; the trivial root at zero is never
/// returned.
pub fn find_tilt_root<A: InterArrivalModel + ?Sized>(model: &A, epsilon: f64) -> Result<TiltParams> {
    let mean = model.mean();
    if !(epsilon > 0.0 && epsilon < mean) {
        return Err(Error::InvalidEpsilon { epsilon, mean });
    }
    let slope = mean - epsilon;
    let f = |t: f64| increment_cumulant(model, slope, t);

    let mut hi = 1.0 / mean;
    let limit = 1e12 / mean;
    while f(hi) <= 0.0 {
        hi *= 2.0;
        if hi > limit || !f(hi).is_finite() {
            return Err(Error::NoTiltRoot { epsilon });
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let eta = hi;
    let tilted_drift = increment_cumulant_slope(model, slope, eta);
    if !(f(eta).abs() <= 1e-10 && tilted_drift > 0.0) {
        return Err(Error::NoTiltRoot { epsilon });
    }
    Ok(TiltParams {
        mean,
        epsilon,
        slope,
        eta,
        tilted_drift,
    })
}

/// Tilt with `eps = fraction * mu`, halving `eps` up to
/// [`EPSILON_HALVINGS`] times when no root exists.
pub fn tilt_with_fraction<A: InterArrivalModel + ?Sized>(model: &A, fraction: f64) -> Result<TiltParams> {
    let mut epsilon = fraction * model.mean();
    let mut last = Error::NoTiltRoot { epsilon };
    for _ in 0..=EPSILON_HALVINGS {
        match find_tilt_root(model, epsilon) {
            Ok(p) => return Ok(p),
            Err(e @ Error::NoTiltRoot { .. }) => last = e,
            Err(e) => return Err(e),
        }
        epsilon *= 0.5;
    }
    Err(last)
}

/// Tilt with the default margin `eps = mu / 2`.
pub fn default_tilt<A: InterArrivalModel + ?Sized>(model: &A) -> Result<TiltParams> {
    tilt_with_fraction(model, 0.5)
}

/// Large-deviation rate `I(-eps) = max_{theta >= 0} -psi_Y(theta)`, so that
/// `P(S_n > 0) <= exp(-n I)`. Positive whenever a tilt root exists.
pub fn rate_function<A: InterArrivalModel + ?Sized>(model: &A, params: &TiltParams) -> f64 {
    // -psi_Y is concave on [0, eta] and vanishes at both ends
    let g = |t: f64| -increment_cumulant(model, params.slope, t);
    let (mut a, mut b) = (0.0, params.eta);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        let c = b - r * (b - a);
        let d = a + r * (b - a);
        if g(c) >= g(d) {
            b = d;
        } else {
            a = c;
        }
    }
    g(0.5 * (a + b)).max(0.0)
}

/// One increment of the walk under the nominal measure.
#[inline]
pub fn nominal_increment<A: InterArrivalModel + ?Sized, R: Rng + ?Sized>(model: &A, params: &TiltParams, rng: &mut R) -> f64 {
    params.slope - model.sample(rng)
}

/// One increment under the tilted measure: `X` is tilted by `-eta`.
#[inline]
pub fn tilted_increment<A: InterArrivalModel + ?Sized, R: Rng + ?Sized>(model: &A, params: &TiltParams, rng: &mut R) -> Result<f64> {
    Ok(params.slope - model.sample_tilted(-params.eta, rng)?)
}

/// Outcome of one draw of `J(xi)` together with the tilted path it used.
#[derive(Debug, Clone, PartialEq)]
pub struct CoinDraw {
    pub success: bool,
    /// `S_1, ..., S_{T_xi}` under the tilted measure.
    pub path: Vec<f64>,
    /// `exp(-eta S_{T_xi})`, the likelihood ratio the coin thresholds.
    pub weight: f64,
}

/// Draws `J(xi) = 1{U <= exp(-eta S_{T_xi})}` and keeps the path.
pub fn sample_coin_with_path<A, R>(params: &TiltParams, model: &A, xi: f64, rng: &mut R) -> Result<CoinDraw>
where
    A: InterArrivalModel + ?Sized,
    R: Rng + ?Sized,
{
    let mut path = Vec::new();
    let mut s = 0.0;
    while s <= xi {
        if path.len() as u64 >= STEP_CEILING {
            return Err(Error::IterationCeiling {
                what: "tilted first passage",
                limit: STEP_CEILING,
            });
        }
        s += tilted_increment(model, params, rng)?;
        path.push(s);
    }
    let weight = (-params.eta * s).exp();
    let success = open01(rng) <= weight;
    Ok(CoinDraw { success, path, weight })
}

/// Draws `J(xi)` alone. The uniform is drawn first: since
/// `S_{T_xi} > xi`, a uniform above `exp(-eta xi)` already decides `J = 0`
/// and the passage need not be simulated.
pub fn sample_coin<A, R>(params: &TiltParams, model: &A, xi: f64, rng: &mut R) -> Result<bool>
where
    A: InterArrivalModel + ?Sized,
    R: Rng + ?Sized,
{
    let u = open01(rng);
    if u > (-params.eta * xi).exp() {
        return Ok(false);
    }
    let mut s = 0.0;
    let mut steps = 0u64;
    while s <= xi {
        steps += 1;
        if steps > STEP_CEILING {
            return Err(Error::IterationCeiling {
                what: "tilted first passage",
                limit: STEP_CEILING,
            });
        }
        s += tilted_increment(model, params, rng)?;
    }
    Ok(u <= (-params.eta * s).exp())
}

/// The ladder structure of one run of [`sample_to_kappa`]: the walk starts
/// an excursion at `start` (a `Delta_j`, where `S <= 0`) and either climbs
/// above its starting level at `ascent` (`Gamma_j`) or never does.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Excursion {
    pub start: usize,
    pub ascent: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkPath {
    /// `S_0 = 0, S_1, ..., S_K`.
    pub values: Vec<f64>,
    /// One entry per excursion; the last one has no ascent.
    pub excursions: Vec<Excursion>,
}

impl WalkPath {
    /// `K = Delta_gamma = kappa(A)`.
    pub fn kappa(&self) -> usize {
        self.values.len() - 1
    }

    /// `gamma`, the number of excursions, geometric with success
    /// probability `P(T_0 = inf)`.
    pub fn segments(&self) -> usize {
        self.excursions.len()
    }

    pub fn last(&self) -> f64 {
        *self.values.last().expect("walk always holds S_0")
    }
}

/// Samples `S_0, ..., S_K` with `K = kappa(A)`, the first index after which
/// the walk never again exceeds zero.
///
/// Each round proposes a tilted excursion above the current level and flips
/// the coin `J(0)` on it. Heads accepts the excursion as a draw conditioned
/// on `T_0 < inf`; the walk then runs under the nominal law until it is back
/// at or below zero, which starts the next round. Tails means the walk never
/// again exceeds its current level, which is at most zero, so `K` is the
/// current index.
pub fn sample_to_kappa<A, R>(params: &TiltParams, model: &A, rng: &mut R) -> Result<WalkPath>
where
    A: InterArrivalModel + ?Sized,
    R: Rng + ?Sized,
{
    let mut values = vec![0.0];
    let mut excursions = Vec::new();
    loop {
        let start = values.len() - 1;
        let level = values[start];
        let draw = sample_coin_with_path(params, model, 0.0, rng)?;
        if !draw.success {
            excursions.push(Excursion { start, ascent: None });
            return Ok(WalkPath { values, excursions });
        }
        values.extend(draw.path.iter().map(|s| level + s));
        excursions.push(Excursion {
            start,
            ascent: Some(values.len() - 1),
        });

        let mut s = *values.last().unwrap();
        let mut steps = 0u64;
        while s > 0.0 {
            steps += 1;
            if steps > STEP_CEILING {
                return Err(Error::IterationCeiling {
                    what: "nominal descent",
                    limit: STEP_CEILING,
                });
            }
            s += nominal_increment(model, params, rng);
            values.push(s);
        }
    }
}

/// `l` steps of the walk started at zero, conditioned on never exceeding a
/// ceiling `xi >= 0` at any time.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionedSteps {
    /// `S_1, ..., S_l`, all `<= xi`.
    pub path: Vec<f64>,
    /// Proposals consumed, geometric with mean at most `1 / P(T_0 = inf)`.
    pub proposals: u64,
}

/// Acceptance/rejection from the nominal law: a proposal that stays at or
/// below `xi` for `l` steps is accepted with probability `1 - q(xi - S_l)`,
/// decided by the coin `J(xi - S_l)`.
///
/// With `xi = 0` this extends a walk just past `kappa(A)`. A second
/// extension of the same walk must keep below the level at `kappa(A)`, so
/// it passes the slack between that level and the current one.
pub fn extend_conditioned<A, R>(params: &TiltParams, model: &A, xi: f64, l: usize, rng: &mut R) -> Result<ConditionedSteps>
where
    A: InterArrivalModel + ?Sized,
    R: Rng + ?Sized,
{
    let mut path = Vec::with_capacity(l);
    let mut proposals = 0u64;
    loop {
        proposals += 1;
        if proposals > STEP_CEILING {
            return Err(Error::IterationCeiling {
                what: "conditioned extension",
                limit: STEP_CEILING,
            });
        }
        path.clear();
        let mut s = 0.0;
        let mut stayed_below = true;
        for _ in 0..l {
            s += nominal_increment(model, params, rng);
            if s > xi {
                stayed_below = false;
                break;
            }
            path.push(s);
        }
        if stayed_below && !sample_coin(params, model, xi - s, rng)? {
            return Ok(ConditionedSteps { path, proposals });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{Deterministic, Exponential, Gamma, TimeScaled};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Bisection oracle on `f(theta) = a theta - c ln(1 + theta / b)` over
    /// `(0, 10)` or wider, written independently of the library's root finder.
    fn oracle_root(f: impl Fn(f64) -> f64, hi: f64) -> f64 {
        let (mut lo, mut hi) = (1e-9, hi);
        assert!(f(lo) < 0.0 && f(hi) > 0.0);
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if f(m) < 0.0 {
                lo = m
            } else {
                hi = m
            }
        }
        hi
    }

    #[test]
    fn exponential_root() {
        let e = Exponential::new(1.0).unwrap();
        let p = find_tilt_root(&e, 0.5).unwrap();
        let oracle = oracle_root(|t| 0.5 * t - (1.0 + t).ln(), 10.0);
        assert!((p.eta - oracle).abs() < 1e-10);
        assert!((p.eta - 2.5129).abs() < 1e-4);
        assert!(increment_cumulant(&e, p.slope, p.eta).abs() <= 1e-10);
        assert!(p.tilted_drift > 0.0);
    }

    #[test]
    fn gamma_root() {
        let g = Gamma::new(2.0, 2.0).unwrap();
        let p = find_tilt_root(&g, 0.5).unwrap();
        let oracle = oracle_root(|t| 0.5 * t - 2.0 * (1.0 + t / 2.0).ln(), 20.0);
        assert!((p.eta - oracle).abs() < 1e-10);
        assert!((p.eta - 5.0257).abs() < 1e-4, "{}", p.eta);
    }

    #[test]
    fn root_is_scale_covariant() {
        let s = TimeScaled::new(Gamma::new(2.0, 2.0).unwrap(), 100.0).unwrap();
        let base = find_tilt_root(&Gamma::new(2.0, 2.0).unwrap(), 0.5).unwrap();
        let scaled = find_tilt_root(&s, 0.005).unwrap();
        assert!((scaled.eta / 100.0 - base.eta).abs() < 1e-9);
    }

    #[test]
    fn zero_is_never_the_root() {
        let e = Exponential::new(3.0).unwrap();
        assert_eq!(increment_cumulant(&e, 0.2, 0.0), 0.0);
        assert!(find_tilt_root(&e, 0.1).unwrap().eta > 0.0);
    }

    #[test]
    fn degenerate_and_invalid_epsilon() {
        let d = Deterministic::new(1.0).unwrap();
        assert!(matches!(find_tilt_root(&d, 0.5), Err(Error::NoTiltRoot { .. })));
        assert!(matches!(default_tilt(&d), Err(Error::NoTiltRoot { .. })));
        let e = Exponential::new(1.0).unwrap();
        assert!(matches!(find_tilt_root(&e, 1.0), Err(Error::InvalidEpsilon { .. })));
        assert!(matches!(find_tilt_root(&e, 0.0), Err(Error::InvalidEpsilon { .. })));
    }

    #[test]
    fn rate_function_for_exponential() {
        // max_theta ln(1 + theta) - theta/2 at theta = 1
        let e = Exponential::new(1.0).unwrap();
        let p = find_tilt_root(&e, 0.5).unwrap();
        assert!((rate_function(&e, &p) - (2f64.ln() - 0.5)).abs() < 1e-12);
    }

    #[test]
    fn tilted_drift_is_positive_empirically() {
        let g = Gamma::new(2.0, 2.0).unwrap();
        let p = find_tilt_root(&g, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 200_000;
        let ys: Vec<f64> = (0..n).map(|_| tilted_increment(&g, &p, &mut rng).unwrap()).collect();
        let m = ys.iter().sum::<f64>() / n as f64;
        let sd = (ys.iter().map(|y| (y - m).powi(2)).sum::<f64>() / n as f64).sqrt();
        assert!((m - p.tilted_drift).abs() < 4.0 * sd / (n as f64).sqrt());
        assert!(m > 0.0);
    }

    #[test]
    fn coin_probability_bounded_by_exp_minus_eta_xi() {
        let e = Exponential::new(1.0).unwrap();
        let p = find_tilt_root(&e, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        for xi in [0.5, 1.0, 2.0] {
            let hits = (0..n).filter(|_| sample_coin(&p, &e, xi, &mut rng).unwrap()).count() as f64 / n as f64;
            let bound = (-p.eta * xi).exp();
            assert!(hits <= bound + 4.0 * (bound / n as f64).sqrt(), "xi {xi}: {hits} > {bound}");
        }
        let far = (0..n).filter(|_| sample_coin(&p, &e, 20.0, &mut rng).unwrap()).count() as f64 / n as f64;
        assert!(far < 1e-3);
    }

    #[test]
    fn coin_identity_is_internally_consistent() {
        // E[J] must equal E_eta[exp(-eta S_T)] over the same draws
        let g = Gamma::new(2.0, 2.0).unwrap();
        let p = find_tilt_root(&g, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let n = 100_000;
        let (mut j, mut w, mut w2) = (0.0, 0.0, 0.0);
        for _ in 0..n {
            let d = sample_coin_with_path(&p, &g, 0.3, &mut rng).unwrap();
            j += d.success as u8 as f64;
            w += d.weight;
            w2 += d.weight * d.weight;
            assert!(*d.path.last().unwrap() > 0.3);
            assert!(d.path[..d.path.len() - 1].iter().all(|&s| s <= 0.3));
        }
        let (j, w) = (j / n as f64, w / n as f64);
        let se = ((j * (1.0 - j)) / n as f64 + (w2 / n as f64 - w * w) / n as f64).sqrt();
        assert!((j - w).abs() < 4.0 * se, "{j} vs {w}");
    }

    #[test]
    fn walk_ends_at_or_below_zero_and_respects_ladder() {
        let g = Gamma::new(2.0, 2.0).unwrap();
        let p = find_tilt_root(&g, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..2000 {
            let w = sample_to_kappa(&p, &g, &mut rng).unwrap();
            assert_eq!(w.values[0], 0.0);
            assert!(w.last() <= 0.0);
            let last = w.excursions.last().unwrap();
            assert_eq!(last.ascent, None);
            assert_eq!(last.start, w.kappa());
            for (j, ex) in w.excursions.iter().enumerate() {
                if j > 0 {
                    assert!(w.values[ex.start] <= 0.0);
                }
                if let Some(g) = ex.ascent {
                    assert!(w.values[g] > w.values[ex.start]);
                    assert!(w.values[ex.start + 1..g].iter().all(|&s| s <= w.values[ex.start]));
                }
            }
        }
    }

    #[test]
    fn conditioned_steps_never_exceed_zero() {
        let e = Exponential::new(1.0).unwrap();
        let p = find_tilt_root(&e, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let mut proposals = 0;
        let n = 20_000;
        for _ in 0..n {
            let c = extend_conditioned(&p, &e, 0.0, 5, &mut rng).unwrap();
            assert_eq!(c.path.len(), 5);
            assert!(c.path.iter().all(|&s| s <= 0.0));
            proposals += c.proposals;
        }
        // P(T_0 = inf) = eps / mu = 1/2 for exponential gaps
        let mean = proposals as f64 / n as f64;
        assert!((mean - 2.0).abs() < 0.06, "{mean}");
    }

    /// Steps after which a nominal walk started at zero exceeds zero again
    /// with probability at most `tol`, from `P(S_n > 0) <= exp(-n I)`.
    fn chernoff_horizon(e: &Exponential, p: &TiltParams, tol: f64) -> usize {
        let rate = rate_function(e, p);
        let mut n = 1;
        while (-(n as f64 + 1.0) * rate).exp() / (1.0 - (-rate).exp()) > tol {
            n += 1;
        }
        n
    }

    /// Direct oracle for `q(xi)`: does a nominal walk exceed `xi` within the
    /// Chernoff horizon.
    fn crosses_directly(e: &Exponential, p: &TiltParams, xi: f64, horizon: usize, rng: &mut ChaCha8Rng) -> bool {
        let mut s = 0.0;
        for _ in 0..horizon {
            s += nominal_increment(e, p, rng);
            if s > xi {
                return true;
            }
        }
        false
    }

    /// Replays the ladder definitions on a long nominal path:
    /// `Gamma_j` = first n > Delta_j with S_n > S_{Delta_j}, and
    /// `Delta_{j+1}` = first n >= Gamma_j with S_n <= 0. The path is grown
    /// until the last Delta is at least `tail` steps from its end.
    fn brute_force_kappa(e: &Exponential, p: &TiltParams, tail: usize, rng: &mut ChaCha8Rng) -> usize {
        let mut s = vec![0.0];
        loop {
            while s.len() < 4 * tail + 64 || s.len() % 256 != 0 {
                let last = *s.last().unwrap();
                s.push(last + nominal_increment(e, p, rng));
            }
            let mut delta = 0;
            'ladder: loop {
                let level = s[delta];
                let Some(gamma) = (delta + 1..s.len()).find(|&n| s[n] > level) else {
                    break 'ladder;
                };
                match (gamma..s.len()).find(|&n| s[n] <= 0.0) {
                    Some(d) => delta = d,
                    None => {
                        delta = usize::MAX;
                        break 'ladder;
                    }
                }
            }
            if delta != usize::MAX && delta + tail < s.len() {
                return delta;
            }
            for _ in 0..1024 {
                let last = *s.last().unwrap();
                s.push(last + nominal_increment(e, p, rng));
            }
        }
    }

    fn exp_setup() -> (Exponential, TiltParams) {
        let e = Exponential::new(1.0).unwrap();
        let p = find_tilt_root(&e, 0.5).unwrap();
        (e, p)
    }

    #[test]
    fn coin_at_zero_matches_truncated_oracle() {
        let (e, p) = exp_setup();
        let horizon = chernoff_horizon(&e, &p, 1e-6);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let n = 100_000;
        let coin = (0..n).filter(|_| sample_coin(&p, &e, 0.0, &mut rng).unwrap()).count() as f64 / n as f64;
        let direct = (0..n).filter(|_| crosses_directly(&e, &p, 0.0, horizon, &mut rng)).count() as f64 / n as f64;
        let se = (coin * (1.0 - coin) / n as f64 + direct * (1.0 - direct) / n as f64).sqrt();
        assert!((coin - direct).abs() < 4.0 * se, "{coin} vs {direct}");
        // exponential gaps: P(T_0 < inf) = 1 - eps / mu
        assert!((coin - 0.5).abs() < 4.0 * (0.25 / n as f64).sqrt());
    }

    #[test]
    fn segment_count_is_geometric() {
        let (e, p) = exp_setup();
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let counts: Vec<u64> = (0..100_000)
            .map(|_| sample_to_kappa(&p, &e, &mut rng).unwrap().segments() as u64)
            .collect();
        let t = crate::stats::geometric_chi_square(&counts, 0.5);
        assert!(t.passes(0.01), "{t:?}");
    }

    #[test]
    fn kappa_matches_brute_force_ladder_replay() {
        let (e, p) = exp_setup();
        let tail = chernoff_horizon(&e, &p, 1e-6);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let n = 100_000;
        let fast: Vec<f64> = (0..n).map(|_| sample_to_kappa(&p, &e, &mut rng).unwrap().kappa() as f64).collect();
        let slow: Vec<f64> = (0..n).map(|_| brute_force_kappa(&e, &p, tail, &mut rng) as f64).collect();
        let (a, b) = (crate::stats::Summary::of(&fast), crate::stats::Summary::of(&slow));
        let se = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
        assert!((a.mean - b.mean).abs() < 4.0 * se, "{a:?} vs {b:?}");
        assert!(crate::stats::ks_two_sample(&fast[..20_000], &slow[..20_000]).passes(0.01));
    }

    #[test]
    fn single_conditioned_step_matches_direct_rejection() {
        let (e, p) = exp_setup();
        let horizon = chernoff_horizon(&e, &p, 1e-6);
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let n = 30_000;
        let ours: Vec<f64> = (0..n)
            .map(|_| extend_conditioned(&p, &e, 0.0, 1, &mut rng).unwrap().path[0])
            .collect();
        let mut direct = Vec::with_capacity(n);
        while direct.len() < n {
            let y = nominal_increment(&e, &p, &mut rng);
            if y <= 0.0 && !crosses_directly(&e, &p, -y, horizon, &mut rng) {
                direct.push(y);
            }
        }
        let t = crate::stats::ks_two_sample(&ours, &direct);
        assert!(t.passes(0.01), "{t:?}");
    }
}
