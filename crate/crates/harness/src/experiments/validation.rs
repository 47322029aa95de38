//! Goodness-of-fit battery for the exact sampler on Poisson arrivals, where
//! the stationary law is known in closed form.

use super::{build_system, replicate};
use crate::config::ExperimentConfig;
use anyhow::{bail, Result};
use exsim_core::distributions::{InterArrivalModel, MarkModel};
use exsim_core::queue::{Mutation, QueueSampler};
use exsim_core::stats::{geometric_chi_square, ks_one_sample, poisson_chi_square, TestResult};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatteryTest {
    pub name: String,
    pub statistic: f64,
    pub p_value: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatteryReport {
    pub scenario: String,
    pub seed: u64,
    pub mutation: Mutation,
    pub replications: usize,
    pub significance: f64,
    pub offered_load: f64,
    pub mean_q: f64,
    pub tests: Vec<BatteryTest>,
    pub passed: bool,
}

/// Poisson chi-square on `q`, KS of pooled residuals against the
/// equilibrium law of `V / nu`, KS of the age `E(0)` against `G_eq`, and a
/// geometric chi-square on the walk's excursion count.
pub fn run_validation_battery(cfg: &ExperimentConfig, mutation: Mutation) -> Result<BatteryReport> {
    if !cfg.system.arrivals.is_exponential() {
        bail!("the validation battery needs Poisson arrivals");
    }
    let system = build_system(&cfg.system)?;
    let seed = cfg.seed;
    let states = replicate(
        0..cfg.replications as u64,
        || QueueSampler::with_mutation(&system, mutation),
        |sampler, r| sampler.sample(seed, r).map_err(Into::into),
    )?;
    let process = system.process();
    let counts: Vec<u64> = states.iter().map(|s| s.count() as u64).collect();
    let residuals: Vec<f64> = states.iter().flat_map(|s| s.residuals()).collect();
    let ages: Vec<f64> = states.iter().map(|s| s.age).collect();
    let segments: Vec<u64> = states.iter().map(|s| s.diagnostics.segments as u64).collect();
    // exponential gaps: P(the walk never climbs above 0) = eps / mu
    let escape = process.tilt().epsilon / process.tilt().mean;

    let level = cfg.levels.significance;
    let test = |name: &str, t: TestResult| BatteryTest {
        name: name.to_string(),
        statistic: t.statistic,
        p_value: t.p_value,
        passed: t.passes(level),
    };
    let tests = vec![
        test("poisson-q", poisson_chi_square(&counts, system.offered_load())),
        test("residual-ks", ks_one_sample(&residuals, |x| process.marks().equilibrium_cdf(x))),
        test("age-ks", ks_one_sample(&ages, |x| process.arrivals().equilibrium_cdf(x))),
        test("geometric-segments", geometric_chi_square(&segments, escape)),
    ];
    let passed = tests.iter().all(|t| t.passed);
    Ok(BatteryReport {
        scenario: cfg.scenario.clone(),
        seed,
        mutation,
        replications: cfg.replications,
        significance: level,
        offered_load: system.offered_load(),
        mean_q: counts.iter().sum::<u64>() as f64 / counts.len() as f64,
        tests,
        passed,
    })
}
