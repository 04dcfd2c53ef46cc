//! Independent reference machinery: brute-force oracles and dual-optimum
//! brackets for tiny instances.
//!
//! These are the yardsticks the solvers are measured against, so they share
//! no code path with the greedy oracles or the subgradient iterations: the
//! brute force enumerates domains outright, and the bracket grid-searches
//! the dual box, exploiting only that `d` is `G̃`-Lipschitz.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{dual_value, AgentOracle, DualVector, Instance, OracleAtom, OracleQuery};
use crate::vec_ops::{axpy, dot, project_nonneg_inplace};

/// Largest domain the brute-force oracle will enumerate.
pub const BRUTE_FORCE_LIMIT: u64 = 1 << 20;

/// Exact argmin of `γ·cost + λᵀ·coupling` by exhaustive enumeration; ties
/// break toward the lexicographically smallest point.
pub fn brute_force_oracle(agent: &dyn AgentOracle, query: &OracleQuery) -> Result<OracleAtom> {
    brute_force_oracle_limited(agent, query, BRUTE_FORCE_LIMIT)
}

pub fn brute_force_oracle_limited(
    agent: &dyn AgentOracle,
    query: &OracleQuery,
    limit: u64,
) -> Result<OracleAtom> {
    let points = agent.enumerate_domain().ok_or(Error::DomainTooLarge {
        agent: usize::MAX,
        limit,
    })?;
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut count = 0u64;
    for point in points {
        count += 1;
        if count > limit {
            return Err(Error::DomainTooLarge {
                agent: usize::MAX,
                limit,
            });
        }
        let cost = agent.cost(&point);
        let coupling = agent.coupling(&point);
        let obj = query.gamma * cost + dot(&query.lambda, &coupling);
        let better = match &best {
            None => true,
            Some((b, bp)) => obj < *b || (obj == *b && lex_less(&point, bp)),
        };
        if better {
            best = Some((obj, point));
        }
    }
    let (_, point) = best.ok_or(Error::AgentInfeasible {
        agent: usize::MAX,
        detail: "empty domain".into(),
    })?;
    let cost = agent.cost(&point);
    let coupling = agent.coupling(&point);
    Ok(OracleAtom {
        point,
        cost,
        coupling,
    })
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return true;
        }
        if x > y {
            return false;
        }
    }
    false
}

/// A bracket `[d_star_low, d_star_high]` around the dual optimum together
/// with the best multiplier found.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DualReference {
    pub d_star_low: f64,
    pub d_star_high: f64,
    pub lambda_star_candidate: DualVector,
    pub method: String,
}

impl DualReference {
    pub fn width(&self) -> f64 {
        self.d_star_high - self.d_star_low
    }
}

/// Brackets `d*` by grid search over `[0, radius]^m` at spacing `delta`,
/// refined by a projected-subgradient polish from the best grid point.
///
/// Validity: `d` is `G̃`-Lipschitz, so if the maximizer lies in the box the
/// best grid value is within `G̃·δ·√m/2` of `d*`; the returned upper end
/// doubles that margin. The best grid point must sit strictly inside the
/// radius boundary (farther than `delta` from it), otherwise the true
/// maximizer may be outside the box and the bracket is rejected.
///
/// Grid mode is for test instances only: it requires `m ≤ 3`.
pub fn bracket_dual_optimum(instance: &Instance, delta: f64, radius: f64) -> Result<DualReference> {
    let m = instance.num_rows();
    if m > 3 {
        return Err(Error::InvalidConfig(format!(
            "dual bracket grid search supports m <= 3, instance has m = {m}"
        )));
    }
    if !(delta > 0.0) || !(radius > 0.0) || delta > radius {
        return Err(Error::InvalidConfig(
            "bracket needs 0 < delta <= radius".into(),
        ));
    }
    let steps = (radius / delta).ceil() as usize;
    let axis: Vec<f64> = (0..=steps).map(|k| (k as f64 * delta).min(radius)).collect();

    let mut best_value = f64::NEG_INFINITY;
    let mut best_lambda = vec![0.0; m];
    let mut index = vec![0usize; m];
    loop {
        let lambda: Vec<f64> = index.iter().map(|&k| axis[k]).collect();
        let value = dual_value(instance, &DualVector::new(lambda.clone())?)?.value;
        if value > best_value {
            best_value = value;
            best_lambda = lambda;
        }
        // odometer increment over the m-dimensional grid
        let mut dim = 0;
        loop {
            if dim == m {
                break;
            }
            index[dim] += 1;
            if index[dim] <= steps {
                break;
            }
            index[dim] = 0;
            dim += 1;
        }
        if dim == m {
            break;
        }
    }

    if best_lambda.iter().any(|&l| l > radius - delta) {
        return Err(Error::BracketOnBoundary {
            margin: delta,
            radius,
        });
    }

    // subgradient polish inside the winning cell: keeps the grid bound valid
    // because it can only raise the observed maximum
    let polish_iters = 400u64;
    let mut lambda = best_lambda.clone();
    for t in 0..polish_iters {
        let eval = dual_value(instance, &DualVector::new(lambda.clone())?)?;
        if eval.value > best_value {
            best_value = eval.value;
            best_lambda = lambda.clone();
        }
        let g_norm = crate::vec_ops::norm(&eval.subgradient).max(1e-12);
        let step = delta / g_norm / ((t + 1) as f64).sqrt();
        axpy(&mut lambda, step, &eval.subgradient);
        project_nonneg_inplace(&mut lambda);
    }

    let g_tilde = instance.bounds().g_tilde;
    let width = g_tilde * delta * (m as f64).sqrt();
    Ok(DualReference {
        d_star_low: best_value,
        d_star_high: best_value + width,
        lambda_star_candidate: DualVector::new(best_lambda)?,
        method: format!("grid(delta={delta},radius={radius})+polish({polish_iters})"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{EvAgent, EvAgentParams, FiniteAgent};
    use std::sync::Arc;

    #[test]
    fn brute_force_matches_ev_greedy_example() {
        let agent = EvAgent::new(
            EvAgentParams {
                p: 1.0,
                delta: 1.0,
                xi: 1.0,
                e_init: 0.0,
                e_ref: 2.0,
                e_max: 3.0,
            },
            Arc::new(vec![3.0, 1.0, 2.0]),
        )
        .unwrap();
        let q = OracleQuery::new(1.0, vec![0.0; 3]);
        let brute = brute_force_oracle(&agent, &q).unwrap();
        assert_eq!(brute.objective(&q), 3.0);
        let greedy = agent.minimize(&q).unwrap();
        assert_eq!(greedy.objective(&q), brute.objective(&q));
    }

    #[test]
    fn brute_force_singleton() {
        let agent = FiniteAgent::scalar(&[2.0], &[7.0], 1.0).unwrap();
        let atom = brute_force_oracle(&agent, &OracleQuery::new(0.0, vec![5.0])).unwrap();
        assert_eq!(atom.point, vec![2.0]);
        assert_eq!(atom.cost, 7.0);
    }

    #[test]
    fn bracket_recovers_piecewise_linear_optimum() {
        // N=1, m=1, domain {0,1}, h(x) = −x, coupling x, b = 0.5:
        // d(λ) = −0.5λ + min(0, λ−1), maximized at λ = 1 with d* = −0.5
        let agent = FiniteAgent::scalar(&[0.0, 1.0], &[0.0, -1.0], 1.0).unwrap();
        let instance = Instance::new(vec![Arc::new(agent)], vec![0.5]).unwrap();
        let reference = bracket_dual_optimum(&instance, 0.01, 3.0).unwrap();
        assert!(reference.d_star_low <= -0.5 + 1e-12);
        assert!(reference.d_star_high >= -0.5);
        assert!(reference.width() <= instance.bounds().g_tilde * 0.01 + 1e-12);
        let candidate = &reference.lambda_star_candidate;
        assert!((candidate.entries()[0] - 1.0).abs() <= 0.02);
    }

    #[test]
    fn slack_coupling_brackets_d_at_zero() {
        // couplings never exceed b: λ* = 0 and d* = d(0)
        let agent = FiniteAgent::scalar(&[0.0, 1.0], &[0.0, 2.0], 0.5).unwrap();
        let instance = Instance::new(vec![Arc::new(agent)], vec![5.0]).unwrap();
        let d0 = dual_value(&instance, &DualVector::zeros(1)).unwrap().value;
        let reference = bracket_dual_optimum(&instance, 0.05, 2.0).unwrap();
        assert_eq!(reference.d_star_low, d0);
        assert!(reference.lambda_star_candidate.entries()[0] == 0.0);
    }

    #[test]
    fn bracket_width_scales_with_delta() {
        let agent = FiniteAgent::scalar(&[0.0, 1.0], &[0.0, -1.0], 1.0).unwrap();
        let instance = Instance::new(vec![Arc::new(agent)], vec![0.5]).unwrap();
        let wide = bracket_dual_optimum(&instance, 0.1, 3.0).unwrap();
        let narrow = bracket_dual_optimum(&instance, 0.01, 3.0).unwrap();
        assert!((wide.width() / narrow.width() - 10.0).abs() < 1e-9);
    }

    #[test]
    fn boundary_maximizer_is_rejected() {
        // b < 0 forces the dual upward without bound inside the box
        let agent = FiniteAgent::scalar(&[0.0], &[0.0], 1.0).unwrap();
        let instance = Instance::new(vec![Arc::new(agent)], vec![-1.0]).unwrap();
        let err = bracket_dual_optimum(&instance, 0.1, 2.0).unwrap_err();
        assert!(matches!(err, Error::BracketOnBoundary { .. }));
    }
}
