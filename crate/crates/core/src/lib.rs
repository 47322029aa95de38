//! Exact sampling of time-stationary marked renewal processes on stable
//! unbounded regions, and the steady-state GI/GI/inf queue built on it.
//!
//! A region `C_alpha = {(t, v) : |v| >= |t|^alpha}` holds finitely many
//! points of the process almost surely. The samplers here draw those points
//! without bias by simulating arrivals and marks only up to random horizons
//! past which no point can enter the region, certified by
//! `A_{n+1} >= n (mu - eps)` and `|V_{n+1}| <= (n (mu - eps))^alpha`.
//!
//! Module map:
//! - [`distributions`]: inter-arrival and mark laws.
//! - [`tilted_walk`]: the negative-drift walk, its tilt root and coin.
//! - [`arrival_sequence`]: arrival epochs with their certified horizon.
//! - [`mark_sequence`]: marks with theirs, via record times.
//! - [`region`]: both combined into samples of `M ∩ C_alpha`.
//! - [`queue`]: steady-state infinite-server queue, functionals, IPA.
//! - [`transient`]: forward discrete-event simulation of the same queue.
//! - [`stats`]: goodness-of-fit tests used by the validation battery.

pub mod arrival_sequence;
pub mod distributions;
pub mod error;
pub mod mark_sequence;
pub mod queue;
pub mod region;
pub mod rng;
pub mod stats;
pub mod tilted_walk;
pub mod transient;

pub use error::{Error, Result};
