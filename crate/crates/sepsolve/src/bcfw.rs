//! Block-coordinate Frank-Wolfe over the averaged atom sets.
//!
//! Stage 2 minimizes `F(β, z) = ½ max(β − d̂, 0)² + ½ ‖z − b‖₊²` over
//! `(1/N) Σ_i C_i`, where `C_i = {(cost_i(x), A_i x)}` and `d̂` is the dual
//! value handed off by stage 1. Each iteration samples one agent, makes one
//! oracle call with the (nonnegative) gradient as weights, and moves that
//! agent's block by `ρ_k = 2N/(k + 2N)`, so `K` iterations cost exactly `K`
//! oracle calls. Per-agent states stay convex combinations of oracle atoms,
//! recorded in the ledger that the Caratheodory reduction later consumes.

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::ledger::Ledger;
use crate::problem::{Instance, OracleQuery};
use crate::rng::{rng_from_seed, uniform_index};
use crate::trace::{Phase, RunTrace, TraceOptions, TraceRecord};
use crate::vec_ops::{axpy, plus_norm};

/// The anchor of the stage-2 objective.
#[derive(Debug, Clone, PartialEq)]
pub struct FTarget {
    /// `d̂ = d(λ̄_T)` from stage 1.
    pub d_hat: f64,
    pub b: Vec<f64>,
}

/// `F(β, z) = ½ max(β − d̂, 0)² + ½ ‖z − b‖₊²`
pub fn eval_f(beta: f64, z: &[f64], target: &FTarget) -> f64 {
    debug_assert_eq!(z.len(), target.b.len());
    let gap = (beta - target.d_hat).max(0.0);
    let resid: Vec<f64> = z.iter().zip(&target.b).map(|(zj, bj)| zj - bj).collect();
    let infeas = plus_norm(&resid);
    0.5 * gap * gap + 0.5 * infeas * infeas
}

/// Weight drift beyond this triggers a per-agent renormalization.
const WEIGHT_DRIFT_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct BcfwState {
    /// Per-agent `β_i = Σ_l ω_i^l cost/N`.
    pub beta_parts: Vec<f64>,
    /// Per-agent `z_i = Σ_l ω_i^l coupling/N`.
    pub z_parts: Vec<Vec<f64>>,
    /// `β = Σ_i β_i`
    pub beta: f64,
    /// `z = Σ_i z_i`
    pub z: Vec<f64>,
    /// Per-agent convex combinations backing `(β, z)`.
    pub ledger: Ledger,
    /// Running point estimates, maintained only when every domain is convex.
    pub x_hat: Option<Vec<Vec<f64>>>,
    /// Iterations applied so far.
    pub steps: u64,
}

impl BcfwState {
    /// Builds the state from an initial ledger of valid per-agent convex
    /// combinations (stage-1 atom lists, or single collapsed points).
    pub fn from_ledger(instance: &Instance, ledger: Ledger) -> Result<Self> {
        let n = instance.num_agents();
        let m = instance.num_rows();
        if ledger.num_agents() != n {
            return Err(Error::DimensionMismatch {
                detail: format!(
                    "init ledger covers {} agents, instance has {n}",
                    ledger.num_agents()
                ),
            });
        }
        let inv_n = 1.0 / n as f64;
        let mut beta_parts = Vec::with_capacity(n);
        let mut z_parts = Vec::with_capacity(n);
        let mut beta = 0.0;
        let mut z = vec![0.0; m];
        for (i, agent) in ledger.agents.iter().enumerate() {
            if agent.is_empty() {
                return Err(Error::InvalidConfig(format!(
                    "init ledger for agent {i} is empty"
                )));
            }
            let sum = agent.weight_sum();
            if agent.atoms.iter().any(|wa| wa.weight < 0.0) || (sum - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidConfig(format!(
                    "init ledger for agent {i} is not a convex combination (weight sum {sum})"
                )));
            }
            let beta_i = inv_n * agent.cost_sum();
            let mut z_i = agent.coupling_sum(m);
            for v in &mut z_i {
                *v *= inv_n;
            }
            beta += beta_i;
            axpy(&mut z, 1.0, &z_i);
            beta_parts.push(beta_i);
            z_parts.push(z_i);
        }
        let x_hat = instance
            .domains_all_convex()
            .then(|| ledger.agents.iter().map(|a| a.point_average()).collect());
        Ok(Self {
            beta_parts,
            z_parts,
            beta,
            z,
            ledger,
            x_hat,
            steps: 0,
        })
    }

    /// Recomputes `(β_i, z_i)` for one agent from its ledger entries.
    fn refresh_agent(&mut self, i: usize, inv_n: f64, m: usize) {
        let agent = &self.ledger.agents[i];
        let new_beta = inv_n * agent.cost_sum();
        let mut new_z = agent.coupling_sum(m);
        for v in &mut new_z {
            *v *= inv_n;
        }
        self.beta += new_beta - self.beta_parts[i];
        for (zj, (nj, oj)) in self.z.iter_mut().zip(new_z.iter().zip(&self.z_parts[i])) {
            *zj += nj - oj;
        }
        self.beta_parts[i] = new_beta;
        self.z_parts[i] = new_z;
    }
}

#[derive(Debug, Clone)]
pub struct BcfwOptions {
    pub k_iters: u64,
    pub seed: u64,
    pub trace: Option<TraceOptions>,
    /// Added to the trace call axis (stage-1 spending, in the pipeline).
    pub call_offset: u64,
}

impl BcfwOptions {
    pub fn new(k_iters: u64, seed: u64) -> Self {
        Self {
            k_iters,
            seed,
            trace: None,
            call_offset: 0,
        }
    }
}

#[derive(Debug)]
pub struct BcfwRunResult {
    pub state: BcfwState,
    pub trace: RunTrace,
    /// Exactly `K`.
    pub algo_calls: u64,
}

/// Runs `K` block-coordinate steps from the given initial ledger.
pub fn run_bcfw(
    instance: &Instance,
    target: &FTarget,
    init: Ledger,
    opts: &BcfwOptions,
) -> Result<BcfwRunResult> {
    if target.b.len() != instance.num_rows() {
        return Err(Error::DimensionMismatch {
            detail: "target b does not match the instance".into(),
        });
    }
    let n = instance.num_agents();
    let m = instance.num_rows();
    let inv_n = 1.0 / n as f64;
    let n_f = n as f64;
    let mut state = BcfwState::from_ledger(instance, init)?;
    let mut rng: ChaCha8Rng = rng_from_seed(opts.seed);
    let mut trace = RunTrace::new(opts.seed);
    let mut algo_calls = 0u64;

    for k in 0..opts.k_iters {
        // gradient of F at (β, z): both parts are nonnegative by
        // construction, so they form a valid oracle query
        let gamma_k = (state.beta - target.d_hat).max(0.0);
        let g_k: Vec<f64> = state
            .z
            .iter()
            .zip(&target.b)
            .map(|(zj, bj)| (zj - bj).max(0.0))
            .collect();

        let i_k = uniform_index(&mut rng, n);
        let atom = instance.oracle(i_k, &OracleQuery::new(gamma_k, g_k))?;
        algo_calls += 1;

        let rho = 2.0 * n_f / (k as f64 + 2.0 * n_f);
        let new_beta_i = (1.0 - rho) * state.beta_parts[i_k] + rho * inv_n * atom.cost;
        state.beta += new_beta_i - state.beta_parts[i_k];
        state.beta_parts[i_k] = new_beta_i;
        for j in 0..m {
            let new_z = (1.0 - rho) * state.z_parts[i_k][j] + rho * inv_n * atom.coupling[j];
            state.z[j] += new_z - state.z_parts[i_k][j];
            state.z_parts[i_k][j] = new_z;
        }
        if let Some(x_hat) = state.x_hat.as_mut() {
            for (v, p) in x_hat[i_k].iter_mut().zip(&atom.point) {
                *v = (1.0 - rho) * *v + rho * p;
            }
        }

        let agent_ledger = &mut state.ledger.agents[i_k];
        agent_ledger.scale(1.0 - rho);
        agent_ledger.add(rho, atom);
        agent_ledger.atoms.retain(|wa| wa.weight > 0.0);
        let drift = (agent_ledger.weight_sum() - 1.0).abs();
        if drift > WEIGHT_DRIFT_TOL {
            agent_ledger.renormalize();
            state.refresh_agent(i_k, inv_n, m);
        }

        state.steps += 1;

        if let Some(topts) = &opts.trace {
            if topts.should_sample(k) || k == opts.k_iters - 1 {
                let resid: Vec<f64> = state
                    .z
                    .iter()
                    .zip(&target.b)
                    .map(|(zj, bj)| zj - bj)
                    .collect();
                trace.push(TraceRecord {
                    oracle_calls: opts.call_offset + algo_calls,
                    phase: Phase::Bcfw,
                    dual_value: None,
                    gap_plus: topts.d_ref.map(|d| (state.beta - d).max(0.0)),
                    infeasibility: Some(plus_norm(&resid)),
                    f_value: Some(eval_f(state.beta, &state.z, target)),
                });
            }
        }
    }

    debug_assert_eq!(algo_calls, opts.k_iters);
    Ok(BcfwRunResult {
        state,
        trace,
        algo_calls,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::FiniteAgent;
    use crate::ledger::AgentLedger;
    use crate::problem::OracleAtom;
    use std::sync::Arc;

    fn toy_instance() -> Instance {
        let agent = FiniteAgent::scalar(&[0.0, 1.0], &[0.0, -1.0], 1.0).unwrap();
        Instance::new(vec![Arc::new(agent)], vec![0.5]).unwrap()
    }

    fn atom_of(instance: &Instance, i: usize, point: &[f64]) -> OracleAtom {
        OracleAtom {
            point: point.to_vec(),
            cost: instance.agent(i).cost(point),
            coupling: instance.agent(i).coupling(point),
        }
    }

    #[test]
    fn eval_f_examples() {
        let target = FTarget {
            d_hat: -0.5,
            b: vec![1.0, 2.0],
        };
        assert_eq!(eval_f(-0.5, &[1.0, 2.0], &target), 0.0);
        assert_eq!(eval_f(1.5, &[1.0, 2.0], &target), 2.0);
        // β below d̂ contributes nothing; negative residual rows are clipped
        assert_eq!(eval_f(-5.5, &[4.0, -2.0], &target), 4.5);
    }

    #[test]
    fn zero_iterations_return_initialization() {
        let instance = toy_instance();
        let mut init = Ledger::empty(1);
        init.agents[0] = AgentLedger::single(atom_of(&instance, 0, &[1.0]));
        let target = FTarget {
            d_hat: -0.75,
            b: vec![0.5],
        };
        let result = run_bcfw(&instance, &target, init.clone(), &BcfwOptions::new(0, 9)).unwrap();
        assert_eq!(result.state.beta, -1.0);
        assert_eq!(result.state.z, vec![1.0]);
        assert_eq!(result.state.ledger, init);
        assert_eq!(result.algo_calls, 0);
    }

    #[test]
    fn first_step_with_single_agent_replaces_state() {
        // N = 1 means ρ₀ = 2/(0+2) = 1: the state after one step must equal
        // the oracle atom exactly
        let instance = toy_instance();
        let mut init = Ledger::empty(1);
        init.agents[0] = AgentLedger::single(atom_of(&instance, 0, &[0.0]));
        let target = FTarget {
            d_hat: -2.0,
            b: vec![-1.0],
        };
        // gradient: γ = max(0 − (−2), 0) = 2, g = [0 − (−1)]₊ = 1;
        // oracle weights: 2·cost + 1·coupling → x = 1 wins (−2+1 = −1 < 0)
        let result = run_bcfw(&instance, &target, init, &BcfwOptions::new(1, 1)).unwrap();
        assert_eq!(result.state.beta, -1.0);
        assert_eq!(result.state.z, vec![1.0]);
        assert_eq!(result.state.ledger.agents[0].len(), 1);
        assert_eq!(result.state.ledger.agents[0].atoms[0].weight, 1.0);
        assert_eq!(result.state.ledger.agents[0].atoms[0].atom.point, vec![1.0]);
    }

    #[test]
    fn ledger_stays_consistent_with_state() {
        let spec = crate::agents::ev::generate_ev_spec(
            &crate::agents::EvInstanceConfig::with_defaults(6, 4, 5),
        )
        .unwrap();
        let instance = spec.build().unwrap();
        let stage1 = crate::ssg::run_stochastic_dual_subgradient(
            &instance,
            &crate::ssg::SsgOptions::new(
                30,
                crate::schedule::StepSchedule::diminishing(0.5),
                crate::problem::DualVector::zeros(4),
                13,
            ),
        )
        .unwrap();
        let target = FTarget {
            d_hat: stage1.d_bar,
            b: instance.b().to_vec(),
        };
        let result = run_bcfw(
            &instance,
            &target,
            stage1.ledgers,
            &BcfwOptions::new(200, 29),
        )
        .unwrap();
        let state = &result.state;
        let inv_n = 1.0 / 6.0;
        let mut beta = 0.0;
        let mut z = vec![0.0; 4];
        for (i, agent) in state.ledger.agents.iter().enumerate() {
            let sum = agent.weight_sum();
            assert!((sum - 1.0).abs() < 1e-10, "agent {i} weight sum {sum}");
            assert!(agent.atoms.iter().all(|wa| wa.weight >= 0.0));
            let beta_i = inv_n * agent.cost_sum();
            assert!(
                (beta_i - state.beta_parts[i]).abs() <= 1e-10 * beta_i.abs().max(1.0),
                "agent {i} beta drift"
            );
            beta += beta_i;
            axpy(&mut z, inv_n, &agent.coupling_sum(4));
        }
        assert!((beta - state.beta).abs() <= 1e-9 * beta.abs().max(1.0));
        for j in 0..4 {
            assert!((z[j] - state.z[j]).abs() <= 1e-9 * z[j].abs().max(1.0));
        }
        assert_eq!(result.algo_calls, 200);
    }
}
