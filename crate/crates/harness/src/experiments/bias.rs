//! Initial-transient bias of `Phi(A_n)` from an empty start.

use super::{build_system, replicate};
use crate::config::ExperimentConfig;
use anyhow::Result;
use exsim_core::queue::QueueSampler;
use exsim_core::rng::{Purpose, StreamKey, Streams};
use exsim_core::stats::Summary;
use exsim_core::transient::{simulate, Horizon, RunOptions, Start};
use serde::{Deserialize, Serialize};
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StartKind {
    Empty,
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasRow {
    pub horizon: usize,
    pub start: StartKind,
    pub replications: usize,
    pub mean_phi: f64,
    pub std_error: f64,
    /// `(E_pi Q - mean) / E_pi Q`, positive for a downward bias.
    pub relative_bias: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// First grid horizon whose estimated relative bias is at most `target`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasCrossing {
    pub target: f64,
    pub horizon: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BiasReport {
    pub scenario: String,
    pub seed: u64,
    pub truth: f64,
    pub z: f64,
    pub rows: Vec<BiasRow>,
    pub crossings: Vec<BiasCrossing>,
    /// Wall-clock seconds per replication for each row; not reproducible.
    pub seconds_per_replication: Vec<f64>,
}

impl BiasReport {
    pub fn row(&self, horizon: usize, start: StartKind) -> Option<&BiasRow> {
        self.rows.iter().find(|r| r.horizon == horizon && r.start == start)
    }
}

pub fn run_bias_benchmark(cfg: &ExperimentConfig) -> Result<BiasReport> {
    let system = build_system(&cfg.system)?;
    let truth = system.offered_load();
    let (seed, z) = (cfg.seed, cfg.levels.z);
    let (arrivals, marks) = (system.process().arrivals(), system.process().marks());
    let reps = 0..cfg.replications as u64;
    let mut rows = Vec::new();
    let mut seconds = Vec::new();
    let mut starts = vec![StartKind::Empty];
    if cfg.bias.exact_start {
        starts.push(StartKind::Exact);
    }
    for &n in &cfg.bias.horizons {
        for &start in &starts {
            let t0 = Instant::now();
            let phi = replicate(
                reps.clone(),
                || QueueSampler::new(&system),
                |sampler, r| {
                    // every horizon replays the same path prefix
                    let run = match start {
                        StartKind::Empty => {
                            let mut rng = StreamKey::new(seed, r, Purpose::Transient).rng();
                            simulate(arrivals, marks, Horizon::Arrivals(n), Start::Empty, RunOptions::default(), &mut rng)?
                        }
                        StartKind::Exact => {
                            let state = sampler.sample_with(&mut Streams::for_replication(seed, r))?;
                            let mut rng = StreamKey::new(seed, r, Purpose::Transient).with_lane(1).rng();
                            simulate(
                                arrivals,
                                marks,
                                Horizon::Arrivals(n),
                                Start::Stationary(&state),
                                RunOptions::default(),
                                &mut rng,
                            )?
                        }
                    };
                    Ok(run.phi)
                },
            )?;
            seconds.push(t0.elapsed().as_secs_f64() / cfg.replications as f64);
            let s = Summary::of(&phi);
            let rel = (truth - s.mean) / truth;
            let half = z * s.std_error / truth;
            rows.push(BiasRow {
                horizon: n,
                start,
                replications: s.n,
                mean_phi: s.mean,
                std_error: s.std_error,
                relative_bias: rel,
                ci_low: rel - half,
                ci_high: rel + half,
            });
            log::info!("bias n = {n} ({start:?}): {:.4}%", 100.0 * rel);
        }
    }
    let crossings = cfg
        .bias
        .targets
        .iter()
        .map(|&target| BiasCrossing {
            target,
            horizon: rows
                .iter()
                .filter(|r| r.start == StartKind::Empty && r.relative_bias.abs() <= target)
                .map(|r| r.horizon)
                .min(),
        })
        .collect();
    Ok(BiasReport {
        scenario: cfg.scenario.clone(),
        seed,
        truth,
        z,
        rows,
        crossings,
        seconds_per_replication: seconds,
    })
}
