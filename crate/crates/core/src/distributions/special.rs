//! Numerical helpers shared by the distribution families.

use rand::Rng;
use statrs::function::erf::{erfc, erfc_inv};
use std::f64::consts::SQRT_2;

/// Standard normal CDF, accurate in the lower tail.
pub fn norm_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

/// Standard normal survival function, accurate in the upper tail.
pub fn norm_sf(z: f64) -> f64 {
    0.5 * erfc(z / SQRT_2)
}

pub fn norm_quantile(p: f64) -> f64 {
    -SQRT_2 * erfc_inv(2.0 * p)
}

/// Inverse of [`norm_sf`].
pub fn norm_isf(p: f64) -> f64 {
    SQRT_2 * erfc_inv(2.0 * p)
}

/// Uniform draw on the open interval (0, 1).
pub fn open01<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    ((rng.random::<u64>() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal conditioned on `lo < Z <= hi`, by inversion on whichever
/// side of the distribution keeps the restricted mass well resolved.
pub fn truncated_std_normal<R: Rng + ?Sized>(lo: f64, hi: f64, rng: &mut R) -> f64 {
    debug_assert!(lo < hi);
    let u = open01(rng);
    let z = if lo >= 0.0 {
        let (s_hi, s_lo) = (norm_sf(hi), norm_sf(lo));
        norm_isf(s_hi + u * (s_lo - s_hi))
    } else {
        let (c_lo, c_hi) = (norm_cdf(lo), norm_cdf(hi));
        norm_quantile(c_lo + u * (c_hi - c_lo))
    };
    // rounding in the quantile can land a hair outside the band
    if z <= lo {
        next_up(lo).min(hi)
    } else {
        z.min(hi)
    }
}

pub(crate) fn next_up(x: f64) -> f64 {
    if x.is_nan() || x == f64::INFINITY {
        return x;
    }
    if x == 0.0 {
        return f64::from_bits(1);
    }
    let bits = x.to_bits();
    if x > 0.0 {
        f64::from_bits(bits + 1)
    } else {
        f64::from_bits(bits - 1)
    }
}

/// Finds `x` in `(lo, hi]` with `f(x) = target` for a nondecreasing `f`,
/// by bisection down to adjacent floats. `hi` may be infinite, in which case
/// it is grown geometrically first.
pub fn bisect_increasing<F: Fn(f64) -> f64>(f: F, target: f64, lo: f64, hi: f64) -> f64 {
    let mut lo = lo;
    let mut hi = if hi.is_finite() {
        hi
    } else {
        let mut h = (lo.abs() + 1.0) * 2.0;
        while f(h) < target && h < 1e300 {
            lo = h;
            h *= 2.0;
        }
        h
    };
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Same as [`bisect_increasing`] for a nonincreasing function.
pub fn bisect_decreasing<F: Fn(f64) -> f64>(f: F, target: f64, lo: f64, hi: f64) -> f64 {
    bisect_increasing(|x| -f(x), -target, lo, hi)
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = Self::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}
