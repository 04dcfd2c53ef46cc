//! The full two-stage pipeline: stochastic dual subgradient, handoff of the
//! dual value and atom ledgers, block-coordinate Frank-Wolfe, and (for
//! nonconvex agents) Caratheodory reduction plus primal reconstruction.
//!
//! Call accounting is unified: a run spends `(T−1) + N` stage-1 calls, `N`
//! handoff calls for `d(λ̄_T)`, and `K` stage-2 calls. The handoff is charged
//! to the run's budget so equal-budget comparisons against the deterministic
//! baseline stay fair.

use serde::{Deserialize, Serialize};

use crate::bcfw::{run_bcfw, BcfwOptions, FTarget};
use crate::caratheodory::{reconstruct_convex, reconstruct_sampled, reduce_conic_ledger, ReducedLedger};
use crate::error::{Error, Result};
use crate::ledger::{AgentLedger, Ledger};
use crate::problem::{DualVector, Instance, OracleAtom};
use crate::schedule::StepSchedule;
use crate::ssg::{run_stochastic_dual_subgradient, SsgOptions};
use crate::trace::{Phase, RunTrace, TraceOptions, TraceRecord};
use crate::vec_ops::plus_norm;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// All domains convex: stage 2 starts from collapsed average points and
    /// the output is the running point estimate `x̂^K`.
    Convex,
    /// General case: stage 2 starts from the stage-1 atom ledgers and the
    /// output is reconstructed from the reduced ledger.
    Nonconvex,
}

#[derive(Debug, Clone)]
pub struct TwoStageConfig {
    pub t_iters: u64,
    pub k_iters: u64,
    pub schedule: StepSchedule,
    pub lambda0: DualVector,
    pub mode: Mode,
    pub seed_stage1: u64,
    pub seed_stage2: u64,
    pub seed_sampling: u64,
    pub trace: Option<TraceOptions>,
    /// Reference dual value for gap reporting (a bracket when available,
    /// otherwise the best dual value observed on the instance).
    pub d_ref: Option<f64>,
}

impl TwoStageConfig {
    /// Equal stage budgets `T = K`, the default split.
    pub fn balanced(t_iters: u64, schedule: StepSchedule, m: usize, mode: Mode, seed: u64) -> Self {
        Self {
            t_iters,
            k_iters: t_iters,
            schedule,
            lambda0: DualVector::zeros(m),
            mode,
            seed_stage1: seed,
            seed_stage2: seed.wrapping_add(0x9e37_79b9_7f4a_7c15),
            seed_sampling: seed.wrapping_add(0x3c6e_f372_fe94_f82a),
            trace: None,
            d_ref: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleCallBreakdown {
    /// `(T−1) + N`
    pub stage1: u64,
    /// `N` for the `d(λ̄_T)` evaluation.
    pub handoff: u64,
    /// `K`
    pub stage2: u64,
    pub total: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// `(1/N) Σ_i cost_i(x̄_i)` of the candidate.
    pub cost: f64,
    /// `cost − d_ref`, when a reference is available.
    pub gap: Option<f64>,
    /// `‖(1/N) Σ_i A_i x̄_i − b‖₊`
    pub infeasibility: f64,
}

impl Metrics {
    /// `(gap)₊ + infeasibility`, the scalar used in budget comparisons.
    pub fn combined(&self) -> Option<f64> {
        self.gap.map(|g| g.max(0.0) + self.infeasibility)
    }
}

#[derive(Debug)]
pub struct TwoStageResult {
    pub mode: Mode,
    /// The primal candidate: `x̂^K` in convex mode, the reconstruction in
    /// nonconvex mode.
    pub points: Vec<Vec<f64>>,
    /// Final stage-2 ledger (the pre-reduction convex combinations).
    pub ledger: Ledger,
    /// Reduced ledger (nonconvex mode only).
    pub reduced: Option<ReducedLedger>,
    pub beta_k: f64,
    pub z_k: Vec<f64>,
    /// Stage-1 handoff value `d(λ̄_T)`.
    pub d_bar: f64,
    pub lambda_bar: DualVector,
    /// Metrics of the primal candidate points.
    pub metrics: Metrics,
    /// Metrics of the averaged state `(β^K, z^K)`.
    pub bidual_metrics: Metrics,
    pub calls: OracleCallBreakdown,
    pub trace: RunTrace,
    pub seeds: (u64, u64, u64),
}

/// Runs the pipeline in convex mode: every agent domain must be convex;
/// stage 2 is initialized with the collapsed stage-1 averages `x̄_{i,T}`.
pub fn run_two_stage_convex(instance: &Instance, config: &TwoStageConfig) -> Result<TwoStageResult> {
    if config.mode != Mode::Convex {
        return Err(Error::InvalidConfig(
            "run_two_stage_convex requires mode = convex".into(),
        ));
    }
    for i in 0..instance.num_agents() {
        if !instance.agent(i).domain_is_convex() {
            return Err(Error::InvalidConfig(format!(
                "convex mode rejected: agent {i} declares a nonconvex domain"
            )));
        }
    }
    run_pipeline(instance, config)
}

/// Runs the pipeline in nonconvex mode: stage 2 consumes the stage-1 atom
/// ledgers unchanged, the final ledger is reduced, and the primal candidate
/// is reconstructed (by per-agent sampling, or exactly when all domains are
/// convex anyway).
pub fn run_two_stage_nonconvex(
    instance: &Instance,
    config: &TwoStageConfig,
) -> Result<TwoStageResult> {
    if config.mode != Mode::Nonconvex {
        return Err(Error::InvalidConfig(
            "run_two_stage_nonconvex requires mode = nonconvex".into(),
        ));
    }
    run_pipeline(instance, config)
}

pub fn run_two_stage(instance: &Instance, config: &TwoStageConfig) -> Result<TwoStageResult> {
    match config.mode {
        Mode::Convex => run_two_stage_convex(instance, config),
        Mode::Nonconvex => run_two_stage_nonconvex(instance, config),
    }
}

fn run_pipeline(instance: &Instance, config: &TwoStageConfig) -> Result<TwoStageResult> {
    let n = instance.num_agents();
    let m = instance.num_rows();

    let mut ssg_opts = SsgOptions::new(
        config.t_iters,
        config.schedule,
        config.lambda0.clone(),
        config.seed_stage1,
    );
    ssg_opts.trace = config.trace;
    let stage1 = run_stochastic_dual_subgradient(instance, &ssg_opts)?;

    // stage-2 initialization
    let init: Ledger = match config.mode {
        Mode::Nonconvex => stage1.ledgers.clone(),
        Mode::Convex => {
            // collapse each agent's ledger to its average point
            let mut init = Ledger::empty(n);
            for (i, agent) in stage1.ledgers.agents.iter().enumerate() {
                let point = agent.point_average();
                let cost = instance.agent(i).cost(&point);
                let coupling = instance.agent(i).coupling(&point);
                init.agents[i] = AgentLedger::single(OracleAtom {
                    point,
                    cost,
                    coupling,
                });
            }
            init
        }
    };

    let target = FTarget {
        d_hat: stage1.d_bar,
        b: instance.b().to_vec(),
    };
    let mut bcfw_opts = BcfwOptions::new(config.k_iters, config.seed_stage2);
    bcfw_opts.trace = config.trace;
    bcfw_opts.call_offset = stage1.algo_calls + stage1.handoff_calls;
    let stage2 = run_bcfw(instance, &target, init, &bcfw_opts)?;

    let calls = OracleCallBreakdown {
        stage1: stage1.algo_calls,
        handoff: stage1.handoff_calls,
        stage2: stage2.algo_calls,
        total: stage1.algo_calls + stage1.handoff_calls + stage2.algo_calls,
    };

    let state = stage2.state;
    let beta_k = state.beta;
    let z_k = state.z.clone();
    let resid_bidual: Vec<f64> = z_k.iter().zip(instance.b()).map(|(z, b)| z - b).collect();
    let bidual_metrics = Metrics {
        cost: beta_k,
        gap: config.d_ref.map(|d| beta_k - d),
        infeasibility: plus_norm(&resid_bidual),
    };

    let (points, reduced) = match config.mode {
        Mode::Convex => {
            let points = state
                .x_hat
                .clone()
                .expect("convex mode maintains point estimates");
            (points, None)
        }
        Mode::Nonconvex => {
            let reduced = reduce_conic_ledger(&state.ledger, m)?;
            let points = if instance.domains_all_convex() {
                reconstruct_convex(instance, &reduced)?
            } else {
                reconstruct_sampled(&reduced, config.seed_sampling)
            };
            (points, Some(reduced))
        }
    };

    let cost = crate::problem::primal_cost(instance, &points)?;
    let residual = crate::problem::coupling_residual(instance, &points)?;
    let metrics = Metrics {
        cost,
        gap: config.d_ref.map(|d| cost - d),
        infeasibility: plus_norm(&residual),
    };

    // stitch the stage traces together and close with the candidate metrics
    let mut trace = RunTrace::new(config.seed_stage1);
    for r in stage1.trace.records.iter().chain(stage2.trace.records.iter()) {
        trace.push(r.clone());
    }
    if config.trace.is_some() {
        trace.push(TraceRecord {
            oracle_calls: calls.total,
            phase: Phase::Final,
            dual_value: Some(stage1.d_bar),
            gap_plus: metrics.gap.map(|g| g.max(0.0)),
            infeasibility: Some(metrics.infeasibility),
            f_value: None,
        });
    }

    Ok(TwoStageResult {
        mode: config.mode,
        points,
        ledger: state.ledger,
        reduced,
        beta_k,
        z_k,
        d_bar: stage1.d_bar,
        lambda_bar: stage1.lambda_bar,
        metrics,
        bidual_metrics,
        calls,
        trace,
        seeds: (config.seed_stage1, config.seed_stage2, config.seed_sampling),
    })
}
