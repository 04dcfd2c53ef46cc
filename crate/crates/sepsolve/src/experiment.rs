//! Seeded experiment harness: single solves and multi-seed comparisons at
//! matched oracle budgets.
//!
//! A comparison takes one instance, one oracle-call budget `B`, a stepsize
//! family with a `Λ` grid, and a seed list. Every algorithm gets the same
//! budget: the deterministic baseline runs `⌊B/N⌋` full iterations, the
//! stochastic dual subgradient runs `B − N + 1` sampled steps plus its final
//! full step, and the two-stage pipeline splits `B` evenly between stages
//! (handoff included). The reported scalar per run is
//! `(cost − d_ref)₊ + infeasibility` of the run's candidate, where `d_ref`
//! is the best dual value observed by a dedicated reference pass. Outputs
//! are byte-reproducible: per-run trace CSVs, a summary CSV with mean and
//! sample standard deviation per `(algorithm, Λ)`, and a long-format CSV of
//! the winning configurations for plotting.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::agents::ev::generate_ev_spec;
use crate::agents::EvInstanceConfig;
use crate::dsg::{run_dual_subgradient, DsgOptions};
use crate::error::{Error, Result};
use crate::problem::{DualVector, Instance};
use crate::schedule::StepSchedule;
use crate::serial::InstanceSpec;
use crate::ssg::{run_stochastic_dual_subgradient, SsgOptions};
use crate::trace::{config_digest, RunTrace, TraceOptions};
use crate::two_stage::{run_two_stage, Mode, TwoStageConfig};
use crate::vec_ops::plus_norm;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algo {
    Dsg,
    Ssg,
    TwoStage,
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Algo::Dsg => "dsg",
            Algo::Ssg => "ssg",
            Algo::TwoStage => "two-stage",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for Algo {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "dsg" => Ok(Algo::Dsg),
            "ssg" => Ok(Algo::Ssg),
            "two-stage" => Ok(Algo::TwoStage),
            other => Err(format!("unknown algorithm `{other}` (expected dsg|ssg|two-stage)")),
        }
    }
}

/// Where the instance comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceSource {
    /// Generate an EV fleet from parameters.
    Ev(EvInstanceConfig),
    /// Load a serialized instance document.
    File { path: String },
    /// Inline instance document.
    Spec(InstanceSpec),
}

impl InstanceSource {
    pub fn resolve(&self) -> Result<InstanceSpec> {
        match self {
            InstanceSource::Ev(config) => generate_ev_spec(config),
            InstanceSource::File { path } => InstanceSpec::from_json(&fs::read_to_string(path)?),
            InstanceSource::Spec(spec) => Ok(spec.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    Constant,
    Diminishing,
}

impl ScheduleKind {
    pub fn build(self, lambda_big: f64, g_tilde: f64) -> StepSchedule {
        match self {
            ScheduleKind::Constant => StepSchedule::constant(lambda_big, g_tilde),
            ScheduleKind::Diminishing => StepSchedule::diminishing(lambda_big),
        }
    }
}

fn default_lambda_grid() -> Vec<f64> {
    vec![0.01, 0.1, 1.0, 10.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSpec {
    pub kind: ScheduleKind,
    #[serde(default = "default_lambda_grid")]
    pub lambda_grid: Vec<f64>,
}

fn default_stride() -> u64 {
    100
}

fn default_mode() -> Mode {
    Mode::Nonconvex
}

fn default_algos() -> Vec<Algo> {
    vec![Algo::Dsg, Algo::TwoStage]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub instance: InstanceSource,
    pub budget: u64,
    pub seeds: Vec<u64>,
    #[serde(default = "default_algos")]
    pub algos: Vec<Algo>,
    pub schedule: ScheduleSpec,
    #[serde(default = "default_stride")]
    pub trace_stride: u64,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    /// Budget of the reference pass that estimates `d_ref`; defaults to the
    /// comparison budget.
    #[serde(default)]
    pub reference_budget: Option<u64>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("seeds: at least one seed required".into()));
        }
        if self.algos.is_empty() {
            return Err(Error::InvalidConfig("algos: at least one algorithm required".into()));
        }
        if self.schedule.lambda_grid.is_empty() {
            return Err(Error::InvalidConfig(
                "schedule.lambda_grid: at least one value required".into(),
            ));
        }
        if self.schedule.lambda_grid.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::InvalidConfig(
                "schedule.lambda_grid: values must be positive".into(),
            ));
        }
        if self.trace_stride == 0 {
            return Err(Error::InvalidConfig("trace_stride must be >= 1".into()));
        }
        Ok(())
    }

    pub fn digest(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        config_digest(&value)
    }
}

/// Iteration counts that spend exactly (up to integer rounding) a call
/// budget `B` for each algorithm.
pub fn iters_for_budget(algo: Algo, budget: u64, n: u64) -> Result<u64> {
    match algo {
        Algo::Dsg => {
            let t = budget / n;
            if t < 1 {
                return Err(Error::InvalidConfig(format!(
                    "budget {budget} buys zero full iterations at N = {n}"
                )));
            }
            Ok(t)
        }
        Algo::Ssg => {
            if budget < n + 1 {
                return Err(Error::InvalidConfig(format!(
                    "budget {budget} cannot cover the final full step at N = {n}"
                )));
            }
            Ok(budget - n + 1)
        }
        Algo::TwoStage => {
            // (T−1) + N + N + K with T = K:  T = (B − 2N + 1) / 2
            if budget < 2 * n + 3 {
                return Err(Error::InvalidConfig(format!(
                    "budget {budget} cannot cover both stages at N = {n}"
                )));
            }
            Ok((budget - 2 * n).div_ceil(2))
        }
    }
}

/// One run's final scalar metric and its trace.
#[derive(Debug)]
pub struct RunOutput {
    pub trace: RunTrace,
    pub gap_plus: f64,
    pub infeasibility: f64,
    /// `(gap)₊ + infeasibility`
    pub metric: f64,
    /// Reconstructed-primal metric for the two-stage pipeline.
    pub primal_metric: Option<f64>,
    pub total_calls: u64,
}

/// Runs one algorithm at one `Λ` and one seed against a fresh instance.
#[allow(clippy::too_many_arguments)]
pub fn run_single(
    instance: &Instance,
    algo: Algo,
    budget: u64,
    schedule: StepSchedule,
    seed: u64,
    stride: u64,
    mode: Mode,
    d_ref: f64,
) -> Result<RunOutput> {
    let n = instance.num_agents() as u64;
    let m = instance.num_rows();
    let t = iters_for_budget(algo, budget, n)?;
    let trace_opts = TraceOptions::every(stride).with_d_ref(d_ref);
    match algo {
        Algo::Dsg => {
            let mut opts = DsgOptions::new(t, schedule, DualVector::zeros(m));
            opts.trace = Some(trace_opts);
            let run = run_dual_subgradient(instance, &opts)?;
            let gap_plus = (run.cost_average - d_ref).max(0.0);
            let infeasibility = plus_norm(&run.residual_average);
            Ok(RunOutput {
                trace: run.trace,
                gap_plus,
                infeasibility,
                metric: gap_plus + infeasibility,
                primal_metric: None,
                total_calls: run.algo_calls,
            })
        }
        Algo::Ssg => {
            let mut opts = SsgOptions::new(t, schedule, DualVector::zeros(m), seed);
            opts.trace = Some(trace_opts);
            let run = run_stochastic_dual_subgradient(instance, &opts)?;
            let gap_plus = (run.cost_average - d_ref).max(0.0);
            let infeasibility = plus_norm(&run.residual_average);
            Ok(RunOutput {
                trace: run.trace,
                gap_plus,
                infeasibility,
                metric: gap_plus + infeasibility,
                primal_metric: None,
                total_calls: run.algo_calls,
            })
        }
        Algo::TwoStage => {
            let mut config = TwoStageConfig::balanced(t, schedule, m, mode, seed);
            config.trace = Some(trace_opts);
            config.d_ref = Some(d_ref);
            let run = run_two_stage(instance, &config)?;
            let gap_plus = run.bidual_metrics.gap.unwrap_or(0.0).max(0.0);
            let infeasibility = run.bidual_metrics.infeasibility;
            let primal = run
                .metrics
                .combined()
                .expect("two-stage runs carry a d_ref");
            Ok(RunOutput {
                trace: run.trace,
                gap_plus,
                infeasibility,
                metric: gap_plus + infeasibility,
                primal_metric: Some(primal),
                total_calls: run.calls.total,
            })
        }
    }
}

/// Best dual value observed by a stochastic pass over the instance; the
/// standard reference when the instance is too large to bracket by grid.
pub fn reference_best_dual(
    instance: &Instance,
    budget: u64,
    schedule: StepSchedule,
) -> Result<f64> {
    let n = instance.num_agents() as u64;
    let t = iters_for_budget(Algo::Ssg, budget, n)?;
    let stride = (t / 32).max(1);
    let mut opts = SsgOptions::new(t, schedule, DualVector::zeros(instance.num_rows()), 0);
    opts.trace = Some(TraceOptions::every(stride).with_eval_dual());
    let run = run_stochastic_dual_subgradient(instance, &opts)?;
    let mut best = run.d_bar;
    for record in &run.trace.records {
        if let Some(v) = record.dual_value {
            best = best.max(v);
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Serialize)]
pub struct SummaryRow {
    pub algo: Algo,
    pub lambda_big: f64,
    pub seeds: usize,
    pub metric_mean: f64,
    pub metric_std: f64,
    pub best: bool,
}

/// A winning run's trace, keyed by `(algorithm, Λ, seed)`.
pub type BestTrace = (Algo, f64, u64, RunTrace);

#[derive(Debug, Serialize)]
pub struct ExperimentOutcome {
    pub digest: String,
    pub d_ref: f64,
    pub rows: Vec<SummaryRow>,
    /// Winning `(Λ, mean metric)` per algorithm, in config order.
    pub best: Vec<(Algo, f64, f64)>,
    /// Per-record rows of the winning runs, for plotting.
    #[serde(skip)]
    pub best_traces: Vec<BestTrace>,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Runs the full comparison and, when `out_dir` is given, writes
/// `instance.json`, `reference.json`, per-run traces, `summary.csv`,
/// `summary.json` and `long.csv`.
pub fn run_experiment(config: &ExperimentConfig, out_dir: Option<&Path>) -> Result<ExperimentOutcome> {
    config.validate()?;
    let digest = config.digest();
    let spec = config.instance.resolve()?;
    let probe = spec.build()?;
    let g_tilde = probe.bounds().g_tilde;
    drop(probe);

    if let Some(dir) = out_dir {
        fs::create_dir_all(dir.join("traces"))?;
        fs::write(dir.join("instance.json"), spec.to_json())?;
    }

    // reference pass: best observed dual value over the Λ grid
    let reference_budget = config.reference_budget.unwrap_or(config.budget);
    let mut d_ref = f64::NEG_INFINITY;
    for &lambda_big in &config.schedule.lambda_grid {
        let schedule = config.schedule.kind.build(lambda_big, g_tilde);
        let instance = spec.build()?;
        d_ref = d_ref.max(reference_best_dual(&instance, reference_budget, schedule)?);
    }
    if let Some(dir) = out_dir {
        let reference = serde_json::json!({
            "d_ref": d_ref,
            "method": "best dual value observed by stochastic reference passes",
            "reference_budget": reference_budget,
            "lambda_grid": config.schedule.lambda_grid,
        });
        fs::write(
            dir.join("reference.json"),
            serde_json::to_string_pretty(&reference)?,
        )?;
    }

    // comparison runs
    type GridCell = (Algo, f64, Vec<(u64, RunOutput)>);
    let mut rows: Vec<SummaryRow> = Vec::new();
    let mut all_outputs: Vec<GridCell> = Vec::new();
    for &algo in &config.algos {
        for &lambda_big in &config.schedule.lambda_grid {
            let schedule = config.schedule.kind.build(lambda_big, g_tilde);
            // the deterministic baseline ignores seeds: one run suffices
            let seeds: Vec<u64> = match algo {
                Algo::Dsg => vec![config.seeds[0]],
                _ => config.seeds.clone(),
            };
            let mut outputs = Vec::with_capacity(seeds.len());
            for &seed in &seeds {
                let instance = spec.build()?;
                let mut output = run_single(
                    &instance,
                    algo,
                    config.budget,
                    schedule,
                    seed,
                    config.trace_stride,
                    config.mode,
                    d_ref,
                )?;
                output.trace.config_digest = digest.clone();
                if let Some(dir) = out_dir {
                    let name = format!("{algo}_lam{lambda_big}_seed{seed}.csv");
                    fs::write(dir.join("traces").join(name), output.trace.to_csv())?;
                }
                outputs.push((seed, output));
            }
            let metrics: Vec<f64> = outputs.iter().map(|(_, o)| o.metric).collect();
            let (mean, std) = mean_std(&metrics);
            rows.push(SummaryRow {
                algo,
                lambda_big,
                seeds: metrics.len(),
                metric_mean: mean,
                metric_std: std,
                best: false,
            });
            all_outputs.push((algo, lambda_big, outputs));
        }
    }

    // pick the best Λ per algorithm by mean metric
    let mut best: Vec<(Algo, f64, f64)> = Vec::new();
    for &algo in &config.algos {
        let winner = rows
            .iter()
            .enumerate()
            .filter(|(_, r)| r.algo == algo)
            .min_by(|(_, a), (_, b)| a.metric_mean.partial_cmp(&b.metric_mean).unwrap())
            .map(|(idx, r)| (idx, r.lambda_big, r.metric_mean));
        if let Some((idx, lambda_big, mean)) = winner {
            rows[idx].best = true;
            best.push((algo, lambda_big, mean));
        }
    }

    let mut best_traces = Vec::new();
    for (algo, lambda_big, outputs) in &all_outputs {
        if best
            .iter()
            .any(|(a, l, _)| a == algo && l == lambda_big)
        {
            for (seed, output) in outputs {
                best_traces.push((*algo, *lambda_big, *seed, output.trace.clone()));
            }
        }
    }

    if let Some(dir) = out_dir {
        let mut summary = String::from("# sepsolve-summary v1\n");
        summary.push_str("algo,lambda_big,seeds,metric_mean,metric_std,best\n");
        for r in &rows {
            summary.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.algo,
                r.lambda_big,
                r.seeds,
                r.metric_mean,
                r.metric_std,
                if r.best { 1 } else { 0 }
            ));
        }
        fs::write(dir.join("summary.csv"), summary)?;

        let mut long = String::from("# sepsolve-long v1\n");
        long.push_str("algo,lambda_big,seed,oracle_calls,phase,gap_plus,infeasibility,metric\n");
        for (algo, lambda_big, seed, trace) in &best_traces {
            for r in &trace.records {
                if let (Some(gap), Some(infeas)) = (r.gap_plus, r.infeasibility) {
                    long.push_str(&format!(
                        "{},{},{},{},{},{},{},{}\n",
                        algo,
                        lambda_big,
                        seed,
                        r.oracle_calls,
                        r.phase,
                        gap,
                        infeas,
                        gap + infeas
                    ));
                }
            }
        }
        fs::write(dir.join("long.csv"), long)?;

        let json = serde_json::json!({
            "digest": digest,
            "budget": config.budget,
            "d_ref": d_ref,
            "rows": rows,
            "best": best,
        });
        fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&json)?)?;
    }

    Ok(ExperimentOutcome {
        digest,
        d_ref,
        rows,
        best,
        best_traces,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budget_mapping() {
        assert_eq!(iters_for_budget(Algo::Dsg, 1000, 10).unwrap(), 100);
        assert_eq!(iters_for_budget(Algo::Ssg, 1000, 10).unwrap(), 991);
        // (T−1) + 2N + T = 1000 → T = 490 at N = 10
        let t = iters_for_budget(Algo::TwoStage, 1000, 10).unwrap();
        assert_eq!(t, 490);
        assert_eq!((t - 1) + 20 + t, 999);
        assert!(iters_for_budget(Algo::Dsg, 5, 10).is_err());
    }

    #[test]
    fn zero_seeds_rejected() {
        let text = r#"{
            "instance": {"ev": {"n_agents": 4, "m": 3, "seed": 1}},
            "budget": 200,
            "seeds": [],
            "schedule": {"kind": "diminishing"}
        }"#;
        let err = ExperimentConfig::from_json(text).unwrap_err();
        assert!(err.to_string().contains("seed"));
    }

    #[test]
    fn config_digest_is_stable_under_reordering() {
        let a = ExperimentConfig::from_json(
            r#"{
            "instance": {"ev": {"n_agents": 4, "m": 3, "seed": 1}},
            "budget": 200,
            "seeds": [1, 2],
            "schedule": {"kind": "diminishing", "lambda_grid": [0.5]}
        }"#,
        )
        .unwrap();
        let b = ExperimentConfig::from_json(
            r#"{
            "seeds": [1, 2],
            "budget": 200,
            "schedule": {"lambda_grid": [0.5], "kind": "diminishing"},
            "instance": {"ev": {"m": 3, "seed": 1, "n_agents": 4}}
        }"#,
        )
        .unwrap();
        assert_eq!(a.digest(), b.digest());
    }
}
