//! Experiment configuration, read from TOML.

use anyhow::{bail, Context, Result};
use exsim_core::distributions::{InterArrivalFamily, MarkFamily};
use exsim_core::queue::Mutation;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: String,
    pub seed: u64,
    pub replications: usize,
    pub system: SystemConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub levels: Levels,
    #[serde(default)]
    pub region: RegionConfig,
    #[serde(default)]
    pub bias: BiasConfig,
    #[serde(default)]
    pub batch_means: BatchMeansConfig,
    #[serde(default)]
    pub sensitivity: SensitivityConfig,
    #[serde(default)]
    pub validation: ValidationConfig,
}

/// Base laws and the `(lambda, nu)` scaling: gaps `X / lambda`, work `V / nu`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub arrivals: InterArrivalFamily,
    pub marks: MarkFamily,
    #[serde(default = "one")]
    pub lambda: f64,
    #[serde(default = "one")]
    pub nu: f64,
    /// `eps` as a fraction of the mean gap; halved automatically when the
    /// tilt equation has no root.
    #[serde(default = "half")]
    pub epsilon_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Levels {
    /// Goodness-of-fit tests pass when `p >= significance`.
    pub significance: f64,
    /// Normal quantile for reported confidence intervals.
    pub z: f64,
}

impl Default for Levels {
    fn default() -> Self {
        Self {
            significance: 0.01,
            z: 2.576,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegionKind {
    /// `|v| >= |t|^alpha` on both half-lines.
    #[default]
    Cone,
    /// `t <= 0, v >= |t|`: the customers in service at time 0.
    Queue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionConfig {
    pub alpha: f64,
    pub set: RegionKind,
}

impl Default for RegionConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            set: RegionKind::Cone,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BiasConfig {
    /// Arrival horizons `n` of `Phi(A_n)` from an empty start.
    pub horizons: Vec<usize>,
    /// Relative-bias levels whose first crossing horizon is reported.
    pub targets: Vec<f64>,
    /// Also run every horizon from an exact stationary start.
    #[serde(default)]
    pub exact_start: bool,
}

impl Default for BiasConfig {
    fn default() -> Self {
        Self {
            horizons: vec![600, 1_000, 5_000],
            targets: vec![0.10, 0.05, 0.01],
            exact_start: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatchMeansConfig {
    /// Arrival budgets `n`; the exact start runs `n - round(E kappa)`.
    pub budgets: Vec<usize>,
    pub batches: usize,
    pub meta_replications: usize,
    /// Exact draws used to estimate `E kappa` for the budget rule.
    pub pilot_replications: usize,
}

impl Default for BatchMeansConfig {
    fn default() -> Self {
        Self {
            budgets: vec![10_000, 50_000, 100_000, 500_000],
            batches: 30,
            meta_replications: 1,
            pilot_replications: 1_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiniteDifferenceConfig {
    pub lambda_step: f64,
    pub nu_step: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensitivityConfig {
    /// `(lambda, nu)` points; empty means the system's own.
    pub grid: Vec<[f64; 2]>,
    /// Central differences with common random numbers next to IPA.
    pub finite_difference: Option<FiniteDifferenceConfig>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidationConfig {
    #[serde(default)]
    pub mutation: Mutation,
}

fn one() -> f64 {
    1.0
}

fn half() -> f64 {
    0.5
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).context("parsing experiment config")?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn check(&self) -> Result<()> {
        if self.replications == 0 {
            bail!("replications must be positive");
        }
        let s = &self.system;
        for (name, v) in [("lambda", s.lambda), ("nu", s.nu)] {
            if !(v > 0.0 && v.is_finite()) {
                bail!("{name} must be positive, got {v}");
            }
        }
        if !(s.epsilon_fraction > 0.0 && s.epsilon_fraction < 1.0) {
            bail!("epsilon_fraction must lie in (0, 1), got {}", s.epsilon_fraction);
        }
        if !(self.levels.significance > 0.0 && self.levels.significance < 1.0) {
            bail!("significance must lie in (0, 1)");
        }
        if self.levels.z.is_nan() || self.levels.z <= 0.0 {
            bail!("z must be positive");
        }
        if self.region.set == RegionKind::Queue && self.region.alpha != 1.0 {
            bail!("the queue region needs alpha = 1");
        }
        if self.bias.horizons.contains(&0) {
            bail!("bias horizons must be positive");
        }
        let bm = &self.batch_means;
        if bm.batches == 0 || bm.meta_replications == 0 || bm.pilot_replications == 0 {
            bail!("batch_means counts must be positive");
        }
        if let Some(fd) = &self.sensitivity.finite_difference {
            if !(fd.lambda_step > 0.0 && fd.nu_step > 0.0) {
                bail!("finite-difference steps must be positive");
            }
        }
        for [l, n] in &self.sensitivity.grid {
            if !(*l > 0.0 && *n > 0.0) {
                bail!("sensitivity grid points must be positive, got ({l}, {n})");
            }
        }
        Ok(())
    }

    /// `(lambda, nu)` points for the sensitivity table.
    pub fn sensitivity_grid(&self) -> Vec<(f64, f64)> {
        if self.sensitivity.grid.is_empty() {
            vec![(self.system.lambda, self.system.nu)]
        } else {
            self.sensitivity.grid.iter().map(|&[l, n]| (l, n)).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
scenario = "minimal"
seed = 7
replications = 10

[system]
arrivals = { family = "exponential", rate = 1.0 }
marks = { family = "lognormal", location = -0.25, scale = 0.5 }
lambda = 100.0
"#;

    #[test]
    fn defaults_fill_missing_sections() {
        let c = ExperimentConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c.system.nu, 1.0);
        assert_eq!(c.system.epsilon_fraction, 0.5);
        assert_eq!(c.batch_means.batches, 30);
        assert_eq!(c.validation.mutation, Mutation::None);
        assert_eq!(c.sensitivity_grid(), vec![(100.0, 1.0)]);
    }

    #[test]
    fn round_trips_losslessly() {
        let mut c = ExperimentConfig::from_toml(MINIMAL).unwrap();
        c.system.lambda = 0.1 + 0.2;
        c.sensitivity.grid = vec![[80.0, 1.0], [1.0 / 3.0, 2.5]];
        c.sensitivity.finite_difference = Some(FiniteDifferenceConfig {
            lambda_step: 0.25,
            nu_step: 0.05,
        });
        c.validation.mutation = Mutation::SkipMarkExtension;
        c.system.marks = MarkFamily::Discrete {
            values: vec![0.5, 1.5],
            weights: vec![0.6, 0.4],
        };
        let back = ExperimentConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn rejects_bad_values() {
        let bad = MINIMAL.replace("replications = 10", "replications = 0");
        assert!(ExperimentConfig::from_toml(&bad).is_err());
        let bad = MINIMAL.replace("lambda = 100.0", "lambda = -1.0");
        assert!(ExperimentConfig::from_toml(&bad).is_err());
        let bad = format!("{MINIMAL}\n[region]\nalpha = 0.5\nset = \"queue\"\n");
        assert!(ExperimentConfig::from_toml(&bad).is_err());
        let bad = format!("{MINIMAL}\nunknown = 1\n");
        assert!(ExperimentConfig::from_toml(&bad).is_err());
    }
}
