//! Exact samples of the marked points inside a stable region.

use super::replicate;
use crate::config::{ExperimentConfig, RegionKind};
use anyhow::Result;
use exsim_core::distributions::{MarkScaled, TimeScaled};
use exsim_core::region::{sample_full_region, Cone, MarkedProcess, QueueRegion, RegionSample, Side, StableSet};
use exsim_core::stats::Summary;
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// One CSV row per sampled point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionRow {
    pub replication: u64,
    pub side: Side,
    pub index: usize,
    pub t: f64,
    pub v: f64,
}

#[derive(Debug, Clone)]
pub struct RegionRun {
    pub samples: Vec<RegionSample>,
    pub seconds_per_replication: f64,
}

impl RegionRun {
    pub fn rows(&self) -> Vec<RegionRow> {
        self.samples
            .iter()
            .enumerate()
            .flat_map(|(r, s)| {
                s.points.iter().map(move |p| RegionRow {
                    replication: r as u64,
                    side: p.side,
                    index: p.index,
                    t: p.t,
                    v: p.v,
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegionReport {
    pub scenario: String,
    pub seed: u64,
    pub replications: usize,
    pub alpha: f64,
    pub set: RegionKind,
    pub points: Summary,
    pub arrivals_simulated: Summary,
    pub seconds_per_replication: f64,
}

pub fn sample_region(cfg: &ExperimentConfig) -> Result<(RegionRun, RegionReport)> {
    let s = &cfg.system;
    let process = MarkedProcess::new(
        TimeScaled::new(s.arrivals.build()?, s.lambda)?,
        MarkScaled::new(s.marks.build()?, s.nu)?,
        cfg.region.alpha,
        s.epsilon_fraction,
    )?;
    let cone = Cone { alpha: cfg.region.alpha };
    let set: &dyn StableSet = match cfg.region.set {
        RegionKind::Cone => &cone,
        RegionKind::Queue => &QueueRegion,
    };
    let seed = cfg.seed;
    let start = Instant::now();
    let samples = replicate(
        0..cfg.replications as u64,
        || process.mark_sampler(),
        |sampler, r| Ok(sample_full_region(&process, sampler, set, seed, r)?),
    )?;
    let run = RegionRun {
        samples,
        seconds_per_replication: start.elapsed().as_secs_f64() / cfg.replications as f64,
    };
    let of = |f: &dyn Fn(&RegionSample) -> f64| Summary::of(&run.samples.iter().map(f).collect::<Vec<_>>());
    let report = RegionReport {
        scenario: cfg.scenario.clone(),
        seed,
        replications: cfg.replications,
        alpha: cfg.region.alpha,
        set: cfg.region.set,
        points: of(&|s| s.len() as f64),
        arrivals_simulated: of(&|s| s.arrivals_simulated() as f64),
        seconds_per_replication: run.seconds_per_replication,
    };
    Ok((run, report))
}
