//! Batch means from an empty start against a shorter run from an exact
//! stationary start with the same arrival budget.

use super::{build_system, replicate};
use crate::config::ExperimentConfig;
use anyhow::{bail, Result};
use exsim_core::queue::QueueSampler;
use exsim_core::rng::{Purpose, StreamKey, Streams};
use exsim_core::stats::Summary;
use exsim_core::transient::{simulate, Horizon, RunOptions, Start};
use serde::{Deserialize, Serialize};

use super::bias::StartKind;

/// Lane of the pilot run that estimates `E kappa`.
const PILOT_LANE: u8 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchMeansRow {
    pub budget: usize,
    pub meta_replication: u64,
    pub start: StartKind,
    /// Arrivals simulated forward: `n` or `n' = n - round(E kappa)`.
    pub arrivals: usize,
    /// Mean of the batch means.
    pub mean: f64,
    /// Standard deviation of the batch means over `sqrt(batches)`.
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchMeansSummary {
    pub budget: usize,
    pub exact_arrivals: usize,
    pub empty_mean: f64,
    pub empty_std_error: f64,
    pub exact_mean: f64,
    pub exact_std_error: f64,
    /// Share of meta-replications where the exact start lands closer to
    /// `E_pi Q`.
    pub exact_closer: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatchMeansReport {
    pub scenario: String,
    pub seed: u64,
    pub truth: f64,
    pub batches: usize,
    /// Pilot estimate of `E (kappa + 1)`, the exact start's cost in arrivals.
    pub mean_kappa: f64,
    pub rows: Vec<BatchMeansRow>,
    pub summaries: Vec<BatchMeansSummary>,
}

fn replication_key(budget_index: usize, meta: u64) -> u64 {
    ((budget_index as u64) << 32) | meta
}

pub fn run_batch_means_comparison(cfg: &ExperimentConfig) -> Result<BatchMeansReport> {
    let system = build_system(&cfg.system)?;
    let truth = system.offered_load();
    let bm = &cfg.batch_means;
    let seed = cfg.seed;
    let (arrivals, marks) = (system.process().arrivals(), system.process().marks());

    let pilot = replicate(
        0..bm.pilot_replications as u64,
        || QueueSampler::new(&system),
        |sampler, r| {
            Ok((sampler
                .sample_with(&mut Streams::for_lane(seed, r, PILOT_LANE))?
                .diagnostics
                .kappa()
                + 1) as f64)
        },
    )?;
    let mean_kappa = Summary::of(&pilot).mean;
    let cost = mean_kappa.round() as usize;

    let options = RunOptions {
        batches: Some(bm.batches),
        trace: false,
    };
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for (b, &n) in bm.budgets.iter().enumerate() {
        if n <= cost + bm.batches {
            bail!("budget {n} does not cover E kappa = {mean_kappa:.1} plus {} batches", bm.batches);
        }
        let n_exact = n - cost;
        let pairs = replicate(
            0..bm.meta_replications as u64,
            || QueueSampler::new(&system),
            |sampler, m| {
                let key = replication_key(b, m);
                let mut rng = StreamKey::new(seed, key, Purpose::Transient).rng();
                let empty = simulate(arrivals, marks, Horizon::Arrivals(n), Start::Empty, options, &mut rng)?;
                let state = sampler.sample_with(&mut Streams::for_replication(seed, key))?;
                let mut rng = StreamKey::new(seed, key, Purpose::Transient).with_lane(1).rng();
                let exact = simulate(
                    arrivals,
                    marks,
                    Horizon::Arrivals(n_exact),
                    Start::Stationary(&state),
                    options,
                    &mut rng,
                )?;
                Ok((Summary::of(&empty.batch_means), Summary::of(&exact.batch_means)))
            },
        )?;
        let mut closer = 0usize;
        for (m, (e, x)) in pairs.iter().enumerate() {
            if (x.mean - truth).abs() < (e.mean - truth).abs() {
                closer += 1;
            }
            for (start, s, arrivals) in [(StartKind::Empty, e, n), (StartKind::Exact, x, n_exact)] {
                rows.push(BatchMeansRow {
                    budget: n,
                    meta_replication: m as u64,
                    start,
                    arrivals,
                    mean: s.mean,
                    std_error: s.std_error,
                });
            }
        }
        let avg = |f: &dyn Fn(&(Summary, Summary)) -> f64| pairs.iter().map(f).sum::<f64>() / pairs.len() as f64;
        summaries.push(BatchMeansSummary {
            budget: n,
            exact_arrivals: n_exact,
            empty_mean: avg(&|p| p.0.mean),
            empty_std_error: avg(&|p| p.0.std_error),
            exact_mean: avg(&|p| p.1.mean),
            exact_std_error: avg(&|p| p.1.std_error),
            exact_closer: closer as f64 / pairs.len() as f64,
        });
        log::info!("batch means n = {n}: exact closer in {closer} of {}", pairs.len());
    }
    Ok(BatchMeansReport {
        scenario: cfg.scenario.clone(),
        seed,
        truth,
        batches: bm.batches,
        mean_kappa,
        rows,
        summaries,
    })
}
