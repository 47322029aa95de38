use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use exsim::config::ExperimentConfig;
use exsim::experiments::{
    run_batch_means_comparison, run_bias_benchmark, run_sensitivity_table, run_validation_battery, sample_queue, sample_region,
    BatchMeansReport, BiasReport,
};
use exsim::output::{write_csv, write_json, write_jsonl};
use exsim_core::queue::Mutation;
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Exact steady-state simulation of marked renewal processes and
/// infinite-server queues.
#[derive(Debug, Parser)]
#[command(name = "exsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact samples of the points inside a stable region.
    SampleRegion(Common),
    /// Exact stationary queue states.
    SampleQueue(Common),
    /// IPA derivative estimates over the configured (lambda, nu) grid.
    Sensitivity(Common),
    /// Initial-transient bias curve and batch-means comparison.
    Benchmark(Common),
    /// Goodness-of-fit battery; exits nonzero if any test fails.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Run the battery against a deliberately broken sampler.
        #[arg(long, value_enum)]
        mutation: Option<MutationArg>,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config replication count.
    #[arg(long)]
    reps: Option<usize>,
    /// Overrides the config output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum MutationArg {
    None,
    SkipMarkExtension,
    NominalFill,
}

impl From<MutationArg> for Mutation {
    fn from(m: MutationArg) -> Self {
        match m {
            MutationArg::None => Mutation::None,
            MutationArg::SkipMarkExtension => Mutation::SkipMarkExtension,
            MutationArg::NominalFill => Mutation::NominalFill,
        }
    }
}

impl Common {
    /// Loads the config, applies overrides, and prepares the output
    /// directory with a copy of the effective config.
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(reps) = self.reps {
            cfg.replications = reps;
        }
        if let Some(out) = &self.out {
            cfg.output.dir = out.clone();
        }
        cfg.check()?;
        std::fs::create_dir_all(&cfg.output.dir)?;
        std::fs::write(cfg.output.dir.join("config.toml"), cfg.to_toml()?)?;
        Ok(cfg)
    }
}

#[derive(Serialize)]
struct BenchmarkReport<'a> {
    bias: &'a BiasReport,
    batch_means: &'a BatchMeansReport,
}

fn out(cfg: &ExperimentConfig, name: &str) -> PathBuf {
    cfg.output.dir.join(name)
}

fn announce(path: &Path) {
    log::info!("wrote {}", path.display());
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::SampleRegion(c) => {
            let cfg = c.resolve()?;
            let (run, report) = sample_region(&cfg)?;
            write_csv(&out(&cfg, "region.csv"), &run.rows())?;
            write_json(&out(&cfg, "region.json"), &report)?;
            println!(
                "{} replications: {:.4} points, {:.1} arrivals simulated per replication",
                report.replications, report.points.mean, report.arrivals_simulated.mean
            );
        }
        Command::SampleQueue(c) => {
            let cfg = c.resolve()?;
            let (run, report) = sample_queue(&cfg)?;
            write_csv(&out(&cfg, "queue.csv"), &run.rows())?;
            write_jsonl(&out(&cfg, "states.jsonl"), &run.states)?;
            write_json(&out(&cfg, "queue.json"), &report)?;
            println!(
                "{} replications: mean q {:.4} (se {:.4}, E_pi Q = {:.4}), {:.1} arrivals simulated, {:.2e} s per replication",
                report.replications,
                report.q.mean,
                report.q.std_error,
                report.offered_load,
                report.arrivals_simulated.mean,
                report.seconds_per_replication
            );
        }
        Command::Sensitivity(c) => {
            let cfg = c.resolve()?;
            let report = run_sensitivity_table(&cfg)?;
            write_csv(&out(&cfg, "sensitivity.csv"), &report.rows)?;
            write_json(&out(&cfg, "sensitivity.json"), &report)?;
            for r in &report.rows {
                println!(
                    "({}, {}) {:?} {}: {:.6e} (se {:.2e})",
                    r.lambda, r.nu, r.method, r.derivative, r.value, r.std_error
                );
            }
        }
        Command::Benchmark(c) => {
            let cfg = c.resolve()?;
            let bias = run_bias_benchmark(&cfg)?;
            let batch_means = run_batch_means_comparison(&cfg)?;
            write_csv(&out(&cfg, "bias.csv"), &bias.rows)?;
            write_csv(&out(&cfg, "batch_means.csv"), &batch_means.rows)?;
            write_csv(&out(&cfg, "batch_means_summary.csv"), &batch_means.summaries)?;
            write_json(
                &out(&cfg, "benchmark.json"),
                &BenchmarkReport {
                    bias: &bias,
                    batch_means: &batch_means,
                },
            )?;
            for r in &bias.rows {
                println!(
                    "bias n = {} ({:?}): {:.3}% [{:.3}%, {:.3}%]",
                    r.horizon,
                    r.start,
                    100.0 * r.relative_bias,
                    100.0 * r.ci_low,
                    100.0 * r.ci_high
                );
            }
            for s in &batch_means.summaries {
                println!(
                    "batch means n = {}: empty {:.4} ({:.4}), exact {:.4} ({:.4}), exact closer {:.0}%",
                    s.budget,
                    s.empty_mean,
                    s.empty_std_error,
                    s.exact_mean,
                    s.exact_std_error,
                    100.0 * s.exact_closer
                );
            }
        }
        Command::Validate { common, mutation } => {
            let cfg = common.resolve()?;
            let mutation = mutation.map_or(cfg.validation.mutation, Into::into);
            let report = run_validation_battery(&cfg, mutation)?;
            let path = out(&cfg, "validation.json");
            write_json(&path, &report)?;
            announce(&path);
            for t in &report.tests {
                println!("{:<20} p = {:.3e}  {}", t.name, t.p_value, if t.passed { "pass" } else { "FAIL" });
            }
            return Ok(report.passed);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
