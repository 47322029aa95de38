//! The experiments behind each CLI subcommand.
//!
//! Replication `r` of every experiment draws only from streams keyed by
//! `(seed, r, purpose, lane)`, so results do not depend on the size of the
//! worker pool or on scheduling.

mod batch_means;
mod bias;
mod region;
mod sensitivity;
mod stationary;
mod validation;

pub use batch_means::{run_batch_means_comparison, BatchMeansReport, BatchMeansRow, BatchMeansSummary};
pub use bias::{run_bias_benchmark, BiasCrossing, BiasReport, BiasRow, StartKind};
pub use region::{sample_region, RegionReport, RegionRow, RegionRun};
pub use sensitivity::{run_sensitivity_table, Method, SensitivityReport, SensitivityRow};
pub use stationary::{sample_queue, QueueReport, QueueRow, QueueRun};
pub use validation::{run_validation_battery, BatteryReport, BatteryTest};

use crate::config::SystemConfig;
use anyhow::{Context, Result};
use exsim_core::distributions::{AnyInterArrival, AnyMark};
use exsim_core::queue::ScaledSystem;
use rayon::prelude::*;
use std::ops::Range;

pub type System = ScaledSystem<AnyInterArrival, AnyMark>;

pub fn build_system(cfg: &SystemConfig) -> Result<System> {
    let arrivals = cfg.arrivals.build().context("inter-arrival law")?;
    let marks = cfg.marks.build().context("mark law")?;
    Ok(ScaledSystem::new(arrivals, marks, cfg.lambda, cfg.nu, cfg.epsilon_fraction)?)
}

/// Runs `f` for every replication index on the worker pool, with one `init`
/// state per worker, and returns results in replication order.
pub fn replicate<T, S, I, F>(replications: Range<u64>, init: I, f: F) -> Result<Vec<T>>
where
    T: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, u64) -> Result<T> + Sync + Send,
{
    replications.into_par_iter().map_init(init, |state, r| f(state, r)).collect()
}
