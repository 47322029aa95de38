//! Exact stationary queue states, one per replication.

use super::{build_system, replicate};
use crate::config::ExperimentConfig;
use anyhow::Result;
use exsim_core::distributions::MarkModel;
use exsim_core::queue::{QueueSampler, QueueState};
use exsim_core::stats::{ks_one_sample, poisson_chi_square, Summary, TestResult};
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// One CSV row per replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueueRow {
    pub replication: u64,
    pub q: usize,
    pub age: f64,
    pub mean_residual: f64,
    pub max_residual: f64,
    pub kappa_a: usize,
    pub kappa_v: usize,
    pub segments: usize,
    /// `kappa + 1`, the arrivals the construction had to generate.
    pub arrivals_simulated: usize,
}

#[derive(Debug, Clone)]
pub struct QueueRun {
    pub states: Vec<QueueState>,
    /// Wall-clock time divided by replications; not reproducible.
    pub seconds_per_replication: f64,
}

impl QueueRun {
    pub fn rows(&self) -> Vec<QueueRow> {
        self.states
            .iter()
            .enumerate()
            .map(|(r, s)| {
                let f = s.functionals();
                QueueRow {
                    replication: r as u64,
                    q: f.q,
                    age: s.age,
                    mean_residual: f.mean_residual,
                    max_residual: f.max_residual,
                    kappa_a: s.diagnostics.kappa_a,
                    kappa_v: s.diagnostics.kappa_v,
                    segments: s.diagnostics.segments,
                    arrivals_simulated: s.diagnostics.kappa() + 1,
                }
            })
            .collect()
    }

    pub fn counts(&self) -> Vec<u64> {
        self.states.iter().map(|s| s.count() as u64).collect()
    }

    pub fn residuals(&self) -> Vec<f64> {
        self.states.iter().flat_map(|s| s.residuals()).collect()
    }

    pub fn arrivals_simulated(&self) -> Summary {
        Summary::of(&self.states.iter().map(|s| (s.diagnostics.kappa() + 1) as f64).collect::<Vec<_>>())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QueueReport {
    pub scenario: String,
    pub seed: u64,
    pub replications: usize,
    /// `E_pi Q(0, 0) = lambda E V / nu`.
    pub offered_load: f64,
    pub q: Summary,
    pub arrivals_simulated: Summary,
    pub empty_replications: usize,
    /// Poisson arrivals only: `q` against Poisson(offered load).
    pub poisson_q: Option<TestResult>,
    /// Poisson arrivals only: pooled residuals against the equilibrium law.
    pub residual_ks: Option<TestResult>,
    pub seconds_per_replication: f64,
}

pub fn sample_queue(cfg: &ExperimentConfig) -> Result<(QueueRun, QueueReport)> {
    let system = build_system(&cfg.system)?;
    let seed = cfg.seed;
    let start = Instant::now();
    let states = replicate(
        0..cfg.replications as u64,
        || QueueSampler::new(&system),
        |sampler, r| {
            let s = sampler.sample(seed, r)?;
            log::debug!(
                "replication {r}: kappa_a {} kappa_v {} segments {} q {}",
                s.diagnostics.kappa_a,
                s.diagnostics.kappa_v,
                s.diagnostics.segments,
                s.count()
            );
            Ok(s)
        },
    )?;
    let run = QueueRun {
        states,
        seconds_per_replication: start.elapsed().as_secs_f64() / cfg.replications as f64,
    };

    let counts = run.counts();
    let poisson = cfg.system.arrivals.is_exponential();
    let marks = system.process().marks();
    let report = QueueReport {
        scenario: cfg.scenario.clone(),
        seed,
        replications: cfg.replications,
        offered_load: system.offered_load(),
        q: Summary::of(&counts.iter().map(|&q| q as f64).collect::<Vec<_>>()),
        arrivals_simulated: run.arrivals_simulated(),
        empty_replications: counts.iter().filter(|&&q| q == 0).count(),
        poisson_q: poisson.then(|| poisson_chi_square(&counts, system.offered_load())),
        residual_ks: poisson.then(|| ks_one_sample(&run.residuals(), |x| marks.equilibrium_cdf(x))),
        seconds_per_replication: run.seconds_per_replication,
    };
    Ok((run, report))
}
