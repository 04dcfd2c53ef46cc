//! Deterministic dual subgradient baseline.
//!
//! Projected subgradient ascent on the dual: at each iteration every agent's
//! oracle is called at the current multiplier, the averaged coupling residual
//! is the subgradient, and the multiplier takes a positive projected step.
//! The dual candidate is the uniform average of the multipliers `λ_0..λ_{T−1}`
//! and the primal candidate averages each agent's oracle outputs over the
//! iterations. Each iteration costs `N` oracle calls, so the method spends
//! `N·T` calls total.

use crate::error::{Error, Result};
use crate::ledger::Ledger;
use crate::problem::{dual_value, DualVector, Instance};
use crate::schedule::StepSchedule;
use crate::trace::{Phase, RunTrace, TraceOptions, TraceRecord};
use crate::vec_ops::{axpy, plus_norm, project_nonneg_inplace};

#[derive(Debug, Clone)]
pub struct DsgOptions {
    pub t_iters: u64,
    pub schedule: StepSchedule,
    pub lambda0: DualVector,
    pub trace: Option<TraceOptions>,
    /// Record the multiplier trajectory `λ_0..λ_T` (bound verification).
    pub capture_iterates: bool,
}

impl DsgOptions {
    pub fn new(t_iters: u64, schedule: StepSchedule, lambda0: DualVector) -> Self {
        Self {
            t_iters,
            schedule,
            lambda0,
            trace: None,
            capture_iterates: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DsgRunResult {
    /// `λ̄_T = (1/T) Σ_{t<T} λ_t`
    pub lambda_bar: DualVector,
    /// `d(λ̄_T)`, evaluated post-hoc with `N` separately-counted calls.
    pub d_bar: f64,
    /// Per-agent oracle outputs with uniform weights `1/T` (merged).
    pub ledgers: Ledger,
    /// Point averages `x̄_{i,T}`, exposed only when every domain is convex.
    pub x_bar_points: Option<Vec<Vec<f64>>>,
    /// `(1/N) Σ_i cost_i` averaged over iterations (= ledger cost average).
    pub cost_average: f64,
    /// `(1/N) Σ_i A_i x̄_{i,T} − b`
    pub residual_average: Vec<f64>,
    pub trace: RunTrace,
    /// Exactly `N · T`.
    pub algo_calls: u64,
    /// Post-hoc evaluation calls (the `d(λ̄_T)` sweep).
    pub eval_calls: u64,
    /// `λ_0..λ_T` when captured.
    pub iterates: Option<Vec<Vec<f64>>>,
}

pub fn run_dual_subgradient(instance: &Instance, opts: &DsgOptions) -> Result<DsgRunResult> {
    if opts.t_iters < 1 {
        return Err(Error::InvalidConfig("dual subgradient needs T >= 1".into()));
    }
    let n = instance.num_agents();
    let m = instance.num_rows();
    if opts.lambda0.len() != m {
        return Err(Error::DimensionMismatch {
            detail: format!("lambda0 has {} rows, instance has {m}", opts.lambda0.len()),
        });
    }
    let t_total = opts.t_iters;
    let inv_n = 1.0 / n as f64;

    let mut lambda = opts.lambda0.entries().to_vec();
    let mut lambda_sum = vec![0.0; m];
    let mut ledgers = Ledger::empty(n);
    let mut point_sums: Option<Vec<Vec<f64>>> = if instance.domains_all_convex() {
        Some(
            (0..n)
                .map(|i| vec![0.0; instance.agent(i).dimension()])
                .collect(),
        )
    } else {
        None
    };
    let mut cost_sum = 0.0;
    let mut coupling_mean_sum = vec![0.0; m];
    let mut trace = RunTrace::new(0);
    let mut iterates = opts.capture_iterates.then(|| vec![lambda.clone()]);
    let mut algo_calls = 0u64;

    for t in 0..t_total {
        let eval = dual_value(instance, &DualVector::new(lambda.clone())?)?;
        algo_calls += n as u64;

        axpy(&mut lambda_sum, 1.0, &lambda);
        let mut iter_cost = 0.0;
        for (i, atom) in eval.minimizers.iter().enumerate() {
            iter_cost += atom.cost;
            if let Some(sums) = point_sums.as_mut() {
                axpy(&mut sums[i], 1.0, &atom.point);
            }
        }
        cost_sum += inv_n * iter_cost;
        // the residual at λ_t is exactly the subgradient
        axpy(&mut coupling_mean_sum, 1.0, &eval.subgradient);

        if let Some(topts) = &opts.trace {
            if topts.should_sample(t) || t == t_total - 1 {
                let denom = (t + 1) as f64;
                let cost_avg = cost_sum / denom;
                let resid_avg: Vec<f64> =
                    coupling_mean_sum.iter().map(|s| s / denom).collect();
                trace.push(TraceRecord {
                    oracle_calls: algo_calls,
                    phase: Phase::Dsg,
                    dual_value: Some(eval.value),
                    gap_plus: topts.d_ref.map(|d| (cost_avg - d).max(0.0)),
                    infeasibility: Some(plus_norm(&resid_avg)),
                    f_value: None,
                });
            }
        }

        for (i, atom) in eval.minimizers.into_iter().enumerate() {
            ledgers.agents[i].add(1.0, atom);
        }

        let alpha = opts.schedule.alpha(t, t_total);
        axpy(&mut lambda, alpha, &eval.subgradient);
        project_nonneg_inplace(&mut lambda);
        if let Some(iters) = iterates.as_mut() {
            iters.push(lambda.clone());
        }
    }

    let t_f = t_total as f64;
    let inv_t = 1.0 / t_f;
    for agent in &mut ledgers.agents {
        agent.scale(inv_t);
    }
    let lambda_bar = DualVector::new(lambda_sum.iter().map(|s| s * inv_t).collect())?;

    let calls_before = instance.oracle_calls();
    let d_bar = dual_value(instance, &lambda_bar)?.value;
    let eval_calls = instance.oracle_calls() - calls_before;

    let x_bar_points = point_sums.map(|sums| {
        sums.into_iter()
            .map(|mut s| {
                for v in &mut s {
                    *v *= inv_t;
                }
                s
            })
            .collect()
    });

    let cost_average = cost_sum * inv_t;
    let residual_average: Vec<f64> = coupling_mean_sum.iter().map(|s| s * inv_t).collect();

    debug_assert_eq!(algo_calls, n as u64 * t_total);
    Ok(DsgRunResult {
        lambda_bar,
        d_bar,
        ledgers,
        x_bar_points,
        cost_average,
        residual_average,
        trace,
        algo_calls,
        eval_calls,
        iterates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::FiniteAgent;
    use crate::problem::Instance;
    use std::sync::Arc;

    /// N=1, m=1, domain {0,1}, h(x) = −x, coupling x, b = 0.5.
    fn toy_instance() -> Instance {
        let agent = FiniteAgent::scalar(&[0.0, 1.0], &[0.0, -1.0], 1.0).unwrap();
        Instance::new(vec![Arc::new(agent)], vec![0.5]).unwrap()
    }

    #[test]
    fn two_iteration_hand_execution() {
        // α = 1 exactly: Λ = √2, Ĝ = 1, T = 2 gives √2/(1·√2) = 1
        let instance = toy_instance();
        let opts = DsgOptions::new(
            2,
            StepSchedule::constant(2.0_f64.sqrt(), 1.0),
            DualVector::zeros(1),
        );
        let result = run_dual_subgradient(&instance, &opts).unwrap();
        // hand execution: x*(0) = 1, g = 0.5, λ₁ = 0.5; x*(0.5) = 1, g = 0.5, λ₂ = 1
        assert_eq!(result.lambda_bar.entries(), &[0.25]);
        assert_eq!(result.x_bar_points, None); // two-point domain is not convex
        assert_eq!(result.ledgers.agents[0].point_average(), vec![1.0]);
        assert_eq!(result.algo_calls, 2);
    }

    #[test]
    fn zero_coupling_keeps_lambda_zero() {
        // couplings all zero, b > 0: subgradient −b is projected away
        let agent = FiniteAgent::scalar(&[0.0, 1.0], &[0.0, 1.0], 0.0).unwrap();
        let instance = Instance::new(vec![Arc::new(agent)], vec![1.0]).unwrap();
        let mut opts = DsgOptions::new(
            8,
            StepSchedule::constant(1.0, 1.0),
            DualVector::zeros(1),
        );
        opts.capture_iterates = true;
        let result = run_dual_subgradient(&instance, &opts).unwrap();
        for it in result.iterates.unwrap() {
            assert_eq!(it, vec![0.0]);
        }
        assert_eq!(result.lambda_bar.entries(), &[0.0]);
    }

    #[test]
    fn call_accounting_is_exact() {
        let instance = toy_instance();
        let opts = DsgOptions::new(
            7,
            StepSchedule::diminishing(1.0),
            DualVector::zeros(1),
        );
        let before = instance.oracle_calls();
        let result = run_dual_subgradient(&instance, &opts).unwrap();
        assert_eq!(result.algo_calls, 7);
        assert_eq!(result.eval_calls, 1);
        assert_eq!(instance.oracle_calls() - before, 8);
    }
}
