//! Command-line driver: instance generation, single solves, multi-seed
//! experiments, invariant suites, and dual-optimum brackets.

use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use sepsolve::agents::EvInstanceConfig;
use sepsolve::bracket::bracket_dual_optimum;
use sepsolve::experiment::{
    run_experiment, run_single, Algo, ExperimentConfig, InstanceSource, ScheduleKind,
};
use sepsolve::serial::InstanceSpec;
use sepsolve::trace::config_digest;
use sepsolve::two_stage::Mode;
use sepsolve::verify::{run_suite, SUITES};

#[derive(Parser)]
#[command(
    name = "sepsolve",
    about = "Dual decomposition solvers for separable optimization under coupling constraints"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an electric-vehicle charging instance from a config file.
    Generate {
        /// EV generation config (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Output instance file.
        #[arg(long)]
        out: PathBuf,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run one algorithm on one instance with one seed.
    Solve {
        /// Solve config (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Override the configured algorithm (dsg|ssg|two-stage).
        #[arg(long)]
        algo: Option<Algo>,
        /// Override the configured seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the configured oracle-call budget.
        #[arg(long)]
        budget: Option<u64>,
        /// Output directory (trace.csv, summary.json).
        #[arg(long)]
        out: PathBuf,
    },
    /// Multi-seed comparison of algorithms at a matched budget.
    Experiment {
        /// Experiment config (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a named invariant suite and print its report.
    Verify {
        /// Suite name; omit to list available suites.
        #[arg(long)]
        suite: Option<String>,
        /// Also write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bracket the dual optimum of a tiny instance by grid search.
    Bracket {
        /// Instance file (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Grid spacing.
        #[arg(long, default_value_t = 0.01)]
        delta: f64,
        /// Box radius.
        #[arg(long, default_value_t = 5.0)]
        radius: f64,
        /// Output reference file (JSON); stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Config for `solve`.
#[derive(serde::Serialize, serde::Deserialize)]
struct SolveConfig {
    instance: InstanceSource,
    algo: Algo,
    budget: u64,
    #[serde(default)]
    seed: u64,
    schedule: SolveSchedule,
    #[serde(default = "default_mode")]
    mode: Mode,
    #[serde(default = "default_stride")]
    trace_stride: u64,
    /// Gap reference; computed by a stochastic reference pass when absent.
    #[serde(default)]
    d_ref: Option<f64>,
}

#[derive(serde::Serialize, serde::Deserialize)]
struct SolveSchedule {
    kind: ScheduleKind,
    #[serde(default = "default_lambda_big")]
    lambda_big: f64,
}

fn default_mode() -> Mode {
    Mode::Nonconvex
}
fn default_stride() -> u64 {
    100
}
fn default_lambda_big() -> f64 {
    1.0
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Generate { config, out, seed } => {
            let text = fs::read_to_string(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            let mut ev: EvInstanceConfig = serde_json::from_str(&text)?;
            if let Some(seed) = seed {
                ev.seed = seed;
            }
            let spec = sepsolve::agents::ev::generate_ev_spec(&ev)?;
            fs::write(&out, spec.to_json())?;
            let instance = spec.build()?;
            let bounds = instance.bounds();
            println!(
                "wrote {} (N = {}, m = {}, G~ = {:.4}, H = {:.4}, D^2 = {:.4})",
                out.display(),
                instance.num_agents(),
                instance.num_rows(),
                bounds.g_tilde,
                bounds.h,
                bounds.d_squared
            );
        }
        Command::Solve {
            config,
            algo,
            seed,
            budget,
            out,
        } => {
            let text = fs::read_to_string(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            let mut cfg: SolveConfig = serde_json::from_str(&text)?;
            if let Some(algo) = algo {
                cfg.algo = algo;
            }
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            if let Some(budget) = budget {
                cfg.budget = budget;
            }
            let digest = config_digest(&serde_json::to_value(&cfg)?);
            let spec = cfg.instance.resolve()?;
            let instance = spec.build()?;
            let g_tilde = instance.bounds().g_tilde;
            let schedule = cfg.schedule.kind.build(cfg.schedule.lambda_big, g_tilde);

            let d_ref = match cfg.d_ref {
                Some(v) => v,
                None => {
                    let reference_instance = spec.build()?;
                    sepsolve::experiment::reference_best_dual(
                        &reference_instance,
                        cfg.budget,
                        schedule,
                    )?
                }
            };

            let mut output = run_single(
                &instance,
                cfg.algo,
                cfg.budget,
                schedule,
                cfg.seed,
                cfg.trace_stride,
                cfg.mode,
                d_ref,
            )?;
            output.trace.config_digest = digest.clone();
            output.trace.seed = cfg.seed;

            fs::create_dir_all(&out)?;
            fs::write(out.join("trace.csv"), output.trace.to_csv())?;
            let summary = serde_json::json!({
                "algo": cfg.algo,
                "seed": cfg.seed,
                "budget": cfg.budget,
                "lambda_big": cfg.schedule.lambda_big,
                "d_ref": d_ref,
                "gap_plus": output.gap_plus,
                "infeasibility": output.infeasibility,
                "metric": output.metric,
                "primal_metric": output.primal_metric,
                "total_calls": output.total_calls,
                "digest": digest,
            });
            fs::write(
                out.join("summary.json"),
                serde_json::to_string_pretty(&summary)?,
            )?;
            println!(
                "{}: metric = {:.6} (gap_plus {:.6}, infeasibility {:.6}) after {} calls",
                cfg.algo, output.metric, output.gap_plus, output.infeasibility, output.total_calls
            );
        }
        Command::Experiment { config, out } => {
            let text = fs::read_to_string(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            let cfg = ExperimentConfig::from_json(&text)?;
            let outcome = run_experiment(&cfg, Some(&out))?;
            println!("d_ref = {:.6}", outcome.d_ref);
            for row in &outcome.rows {
                println!(
                    "{:>9}  lambda = {:<6}  metric = {:.6} +- {:.6}{}",
                    row.algo.to_string(),
                    row.lambda_big,
                    row.metric_mean,
                    row.metric_std,
                    if row.best { "  <- best" } else { "" }
                );
            }
            println!("artifacts in {}", out.display());
        }
        Command::Verify { suite, out } => {
            let Some(suite) = suite else {
                println!("available suites: {}", SUITES.join(", "));
                return Ok(());
            };
            let report = run_suite(&suite)?;
            for check in &report.checks {
                println!(
                    "[{}] {}: {}",
                    if check.pass { "pass" } else { "FAIL" },
                    check.name,
                    check.details
                );
            }
            if let Some(out) = out {
                fs::write(&out, serde_json::to_string_pretty(&report)?)?;
            }
            if !report.pass {
                bail!("suite {suite} failed");
            }
        }
        Command::Bracket {
            config,
            delta,
            radius,
            out,
        } => {
            let spec = InstanceSpec::from_json(&fs::read_to_string(&config)?)?;
            let instance = spec.build()?;
            let reference = bracket_dual_optimum(&instance, delta, radius)?;
            let text = serde_json::to_string_pretty(&reference)?;
            match out {
                Some(path) => {
                    fs::write(&path, &text)?;
                    println!(
                        "d* in [{}, {}] (width {:.3e}), wrote {}",
                        reference.d_star_low,
                        reference.d_star_high,
                        reference.width(),
                        path.display()
                    );
                }
                None => println!("{text}"),
            }
        }
    }
    Ok(())
}
