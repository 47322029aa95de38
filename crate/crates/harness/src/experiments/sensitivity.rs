//! Derivatives of `E_pi R-bar` and `E_pi R-inf` in `lambda` and `nu`.

use super::{build_system, replicate, System};
use crate::config::ExperimentConfig;
use anyhow::Result;
use exsim_core::queue::{central_difference, difference_anchor, ipa_estimates, DifferencePair, Estimate, QueueSampler};
use exsim_core::rng::Streams;
use serde::{Deserialize, Serialize};

/// Lanes keeping the difference runs independent of the IPA run.
const LAMBDA_LANE: u8 = 4;
const NU_LANE: u8 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Ipa,
    FiniteDifference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityRow {
    pub lambda: f64,
    pub nu: f64,
    pub method: Method,
    pub derivative: String,
    pub value: f64,
    pub std_error: f64,
    pub replications: usize,
    /// Replications left out of the `R-bar` rows because the queue was empty.
    pub empty_replications: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub scenario: String,
    pub seed: u64,
    pub rows: Vec<SensitivityRow>,
}

impl SensitivityReport {
    pub fn get(&self, lambda: f64, nu: f64, method: Method, derivative: &str) -> Option<&SensitivityRow> {
        self.rows
            .iter()
            .find(|r| r.lambda == lambda && r.nu == nu && r.method == method && r.derivative == derivative)
    }
}

/// One difference in one parameter: states sampled at the anchor endpoint
/// and rescaled to both.
fn differences(
    base: &System,
    minus: (f64, f64),
    plus: (f64, f64),
    seed: u64,
    lane: u8,
    replications: usize,
) -> Result<Vec<DifferencePair>> {
    let anchor = difference_anchor(minus, plus);
    let system = base.at(anchor.0, anchor.1)?;
    replicate(
        0..replications as u64,
        || QueueSampler::new(&system),
        |sampler, r| {
            let state = sampler.sample_with(&mut Streams::for_lane(seed, r, lane))?;
            Ok(DifferencePair::from_state(&state, anchor, minus, plus)?)
        },
    )
}

pub fn run_sensitivity_table(cfg: &ExperimentConfig) -> Result<SensitivityReport> {
    let base = build_system(&cfg.system)?;
    let (seed, reps) = (cfg.seed, cfg.replications);
    let mut rows = Vec::new();
    for (lambda, nu) in cfg.sensitivity_grid() {
        let system = base.at(lambda, nu)?;
        let samples = replicate(
            0..reps as u64,
            || QueueSampler::new(&system),
            |sampler, r| Ok(sampler.sample(seed, r)?.sensitivity()),
        )?;
        let d = ipa_estimates(&samples, lambda, nu);
        for (name, e) in d.rows() {
            let empty = if name.ends_with("mean_residual") { d.empty_replications } else { 0 };
            rows.push(row(lambda, nu, Method::Ipa, name, e, reps, empty));
        }
        if let Some(fd) = &cfg.sensitivity.finite_difference {
            let (h, k) = (fd.lambda_step, fd.nu_step);
            let dl = differences(&base, (lambda - h, nu), (lambda + h, nu), seed, LAMBDA_LANE, reps)?;
            let dn = differences(&base, (lambda, nu - k), (lambda, nu + k), seed, NU_LANE, reps)?;
            let (l_mean, l_max, l_drop) = central_difference(&dl, h);
            let (n_mean, n_max, n_drop) = central_difference(&dn, k);
            rows.push(row(
                lambda,
                nu,
                Method::FiniteDifference,
                "d_lambda_mean_residual",
                l_mean,
                reps,
                l_drop,
            ));
            rows.push(row(
                lambda,
                nu,
                Method::FiniteDifference,
                "d_nu_mean_residual",
                n_mean,
                reps,
                n_drop,
            ));
            rows.push(row(lambda, nu, Method::FiniteDifference, "d_lambda_max_residual", l_max, reps, 0));
            rows.push(row(lambda, nu, Method::FiniteDifference, "d_nu_max_residual", n_max, reps, 0));
        }
        log::info!("sensitivity ({lambda}, {nu}) done");
    }
    Ok(SensitivityReport {
        scenario: cfg.scenario.clone(),
        seed,
        rows,
    })
}

fn row(lambda: f64, nu: f64, method: Method, name: &str, e: Estimate, replications: usize, empty: usize) -> SensitivityRow {
    SensitivityRow {
        lambda,
        nu,
        method,
        derivative: name.to_string(),
        value: e.value,
        std_error: e.std_error,
        replications,
        empty_replications: empty,
    }
}
