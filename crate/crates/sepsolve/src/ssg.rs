//! Stochastic dual subgradient: stage 1 of the two-stage pipeline.
//!
//! For `T−1` iterations one agent index is sampled uniformly, its oracle is
//! called at the current multiplier, and the single-agent residual
//! `A_i x_i*(λ_t) − b` drives a projected step; the last iteration takes a
//! deterministic full-subgradient step so every agent contributes at least
//! one primal atom. The run spends `(T−1) + N` algorithm calls plus `N`
//! handoff calls to evaluate `d(λ̄_T)`, which the second stage consumes as
//! its target value.

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::ledger::Ledger;
use crate::problem::{dual_value, DualVector, Instance, OracleQuery};
use crate::rng::{rng_from_seed, uniform_index};
use crate::schedule::StepSchedule;
use crate::trace::{Phase, RunTrace, TraceOptions, TraceRecord};
use crate::vec_ops::{axpy, plus_norm, project_nonneg_inplace};

#[derive(Debug, Clone)]
pub struct SsgOptions {
    pub t_iters: u64,
    pub schedule: StepSchedule,
    pub lambda0: DualVector,
    pub seed: u64,
    pub trace: Option<TraceOptions>,
    pub capture_iterates: bool,
}

impl SsgOptions {
    pub fn new(t_iters: u64, schedule: StepSchedule, lambda0: DualVector, seed: u64) -> Self {
        Self {
            t_iters,
            schedule,
            lambda0,
            seed,
            trace: None,
            capture_iterates: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SsgRunResult {
    /// `λ̄_T = (1/T) Σ_{t<T} λ_t`
    pub lambda_bar: DualVector,
    /// `d(λ̄_T)`, the handoff value.
    pub d_bar: f64,
    /// Per-agent atoms: the `I_i` sampled outputs plus the final-step
    /// output, uniform weights `1/(I_i+1)` (merged).
    pub ledgers: Ledger,
    /// Sampled-occurrence counters `I_i` (final step excluded); they sum to
    /// `T − 1`.
    pub counts: Vec<u64>,
    /// Ledger-averaged primal cost `(1/N) Σ_i Σ_l ω_i^l cost_i(x^l)`.
    pub cost_average: f64,
    /// Ledger-averaged residual `(1/N) Σ_i Σ_l ω_i^l A_i x^l − b`.
    pub residual_average: Vec<f64>,
    pub trace: RunTrace,
    pub seed: u64,
    /// `(T−1) + N` algorithm calls.
    pub algo_calls: u64,
    /// `N` calls for the `d(λ̄_T)` evaluation.
    pub handoff_calls: u64,
    /// Uncharged dual evaluations requested by the trace.
    pub eval_calls: u64,
    /// `λ_0..λ_T` when captured.
    pub iterates: Option<Vec<Vec<f64>>>,
}

pub fn run_stochastic_dual_subgradient(
    instance: &Instance,
    opts: &SsgOptions,
) -> Result<SsgRunResult> {
    if opts.t_iters < 2 {
        return Err(Error::InvalidConfig(
            "stochastic dual subgradient needs T >= 2".into(),
        ));
    }
    let n = instance.num_agents();
    let m = instance.num_rows();
    if opts.lambda0.len() != m {
        return Err(Error::DimensionMismatch {
            detail: format!("lambda0 has {} rows, instance has {m}", opts.lambda0.len()),
        });
    }
    let t_total = opts.t_iters;
    let mut rng: ChaCha8Rng = rng_from_seed(opts.seed);

    let mut lambda = opts.lambda0.entries().to_vec();
    let mut lambda_sum = vec![0.0; m];
    let mut ledgers = Ledger::empty(n);
    let mut counts = vec![0u64; n];
    let mut trace = RunTrace::new(opts.seed);
    let mut iterates = opts.capture_iterates.then(|| vec![lambda.clone()]);
    let mut algo_calls = 0u64;
    let mut eval_calls = 0u64;

    // sampled steps t = 0..T−2
    for t in 0..t_total - 1 {
        let i_t = uniform_index(&mut rng, n);
        counts[i_t] += 1;
        axpy(&mut lambda_sum, 1.0, &lambda);
        let atom = instance.oracle(i_t, &OracleQuery::dual(&lambda))?;
        algo_calls += 1;

        if let Some(topts) = &opts.trace {
            if topts.should_sample(t) {
                let dual = if topts.eval_dual {
                    let before = instance.oracle_calls();
                    let v = dual_value(instance, &DualVector::new(lambda.clone())?)?.value;
                    eval_calls += instance.oracle_calls() - before;
                    Some(v)
                } else {
                    None
                };
                trace.push(TraceRecord {
                    oracle_calls: algo_calls,
                    phase: Phase::Ssg,
                    dual_value: dual,
                    gap_plus: None,
                    infeasibility: None,
                    f_value: None,
                });
            }
        }

        let g: Vec<f64> = atom
            .coupling
            .iter()
            .zip(instance.b())
            .map(|(c, bj)| c - bj)
            .collect();
        ledgers.agents[i_t].add(1.0, atom);
        let alpha = opts.schedule.alpha(t, t_total);
        axpy(&mut lambda, alpha, &g);
        project_nonneg_inplace(&mut lambda);
        if let Some(iters) = iterates.as_mut() {
            iters.push(lambda.clone());
        }
    }

    // deterministic last step at t = T−1: full subgradient, one atom per agent
    axpy(&mut lambda_sum, 1.0, &lambda);
    let eval = dual_value(instance, &DualVector::new(lambda.clone())?)?;
    algo_calls += n as u64;
    for (i, atom) in eval.minimizers.into_iter().enumerate() {
        ledgers.agents[i].add(1.0, atom);
    }
    let alpha = opts.schedule.alpha(t_total - 1, t_total);
    axpy(&mut lambda, alpha, &eval.subgradient);
    project_nonneg_inplace(&mut lambda);
    if let Some(iters) = iterates.as_mut() {
        iters.push(lambda.clone());
    }

    // normalize each agent's ledger to uniform weights 1/(I_i+1)
    for (i, agent) in ledgers.agents.iter_mut().enumerate() {
        agent.scale(1.0 / (counts[i] + 1) as f64);
    }

    let inv_t = 1.0 / t_total as f64;
    let lambda_bar = DualVector::new(lambda_sum.iter().map(|s| s * inv_t).collect())?;

    // handoff: d(λ̄_T), charged to the two-stage budget by the caller
    let d_bar = dual_value(instance, &lambda_bar)?.value;
    let handoff_calls = n as u64;

    let inv_n = 1.0 / n as f64;
    let mut cost_average = 0.0;
    let mut residual_average: Vec<f64> = instance.b().iter().map(|bj| -bj).collect();
    for agent in &ledgers.agents {
        cost_average += inv_n * agent.cost_sum();
        axpy(&mut residual_average, inv_n, &agent.coupling_sum(m));
    }

    if let Some(topts) = &opts.trace {
        trace.push(TraceRecord {
            oracle_calls: algo_calls + handoff_calls,
            phase: Phase::Handoff,
            dual_value: Some(d_bar),
            gap_plus: topts.d_ref.map(|d| (cost_average - d).max(0.0)),
            infeasibility: Some(plus_norm(&residual_average)),
            f_value: None,
        });
    }

    debug_assert_eq!(algo_calls, (t_total - 1) + n as u64);
    debug_assert_eq!(counts.iter().sum::<u64>(), t_total - 1);
    Ok(SsgRunResult {
        lambda_bar,
        d_bar,
        ledgers,
        counts,
        cost_average,
        residual_average,
        trace,
        seed: opts.seed,
        algo_calls,
        handoff_calls,
        eval_calls,
        iterates,
    })
}
