//! Problem abstraction: separable instances, the per-agent minimization
//! oracle contract, and dual-function evaluation.
//!
//! An instance couples `N` independent agents through the shared inequality
//! `(1/N) Σ_i A_i x_i ≤ b`. The only computational access to an agent is the
//! oracle: given weights `(γ, λ)` with `γ ≥ 0`, return a global minimizer of
//! `γ·cost_i(x) + λᵀ A_i x` over the agent's domain. Everything downstream
//! (dual subgradients, Frank-Wolfe directions, brute-force checks) is
//! expressed through this one call, and the instance counts every invocation
//! so runs can be compared on an equal-calls axis.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vec_ops::{dot, plus_norm, project_nonneg};

/// Dual multiplier `λ ∈ R^m_+`.
///
/// Construction either checks nonnegativity or projects onto it, so a value
/// of this type is always feasible for the dual problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualVector {
    entries: Vec<f64>,
}

impl DualVector {
    pub fn zeros(m: usize) -> Self {
        Self {
            entries: vec![0.0; m],
        }
    }

    /// Wraps a vector that must already be nonnegative.
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.iter().any(|&x| !(x >= 0.0)) {
            return Err(Error::InvalidConfig(
                "dual vector has a negative or non-finite entry".into(),
            ));
        }
        Ok(Self { entries })
    }

    /// Projects an arbitrary vector onto the nonnegative orthant.
    pub fn project_from(v: &[f64]) -> Self {
        Self {
            entries: project_nonneg(v),
        }
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn norm(&self) -> f64 {
        crate::vec_ops::norm(&self.entries)
    }
}

/// Weights `(γ, λ)` of one oracle call: minimize `γ·cost + λᵀ·coupling`.
///
/// `γ` must be nonnegative; `λ` is unrestricted in sign (dual iterates are
/// nonnegative, but Frank-Wolfe gradients and fuzz probes need the general
/// form). When `γ = 0` the oracle must return an extreme point of the convex
/// hull of its domain.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleQuery {
    pub gamma: f64,
    pub lambda: Vec<f64>,
}

impl OracleQuery {
    pub fn new(gamma: f64, lambda: Vec<f64>) -> Self {
        assert!(
            gamma >= 0.0 && gamma.is_finite(),
            "oracle weight gamma must be finite and nonnegative, got {gamma}"
        );
        Self { gamma, lambda }
    }

    /// The `γ = 1` case used by dual subgradient steps.
    pub fn dual(lambda: &[f64]) -> Self {
        Self::new(1.0, lambda.to_vec())
    }
}

/// One oracle output: a domain point together with its cost value and
/// coupling vector `A_i x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleAtom {
    pub point: Vec<f64>,
    pub cost: f64,
    pub coupling: Vec<f64>,
}

impl OracleAtom {
    /// Objective value of this atom under a query.
    pub fn objective(&self, query: &OracleQuery) -> f64 {
        query.gamma * self.cost + dot(&query.lambda, &self.coupling)
    }
}

/// The per-agent contract: an exact minimization oracle plus the constant
/// bounds the convergence theory consumes.
///
/// `minimize` must return a *global* minimizer of
/// `γ·cost(x) + λᵀ·(A x)` over the agent domain; with `γ = 0` the returned
/// point must additionally be an extreme point of the domain's convex hull.
/// The bound accessors may be conservative (any upper bound keeps the
/// theory valid), and `coupling_row_bound` takes the instance-level `b`
/// because the bounded quantity is `sup ‖A_i x − b‖`.
pub trait AgentOracle: Send + Sync {
    fn dimension(&self) -> usize;

    /// Number of coupling rows `m` this agent maps into.
    fn coupling_rows(&self) -> usize;

    fn minimize(&self, query: &OracleQuery) -> Result<OracleAtom>;

    fn domain_contains(&self, point: &[f64]) -> bool;

    /// Cost value (`h_i` or `f_i`) at a point of the domain (or of its
    /// convex hull for convex-domain agents).
    fn cost(&self, point: &[f64]) -> f64;

    /// Coupling vector `A_i x`.
    fn coupling(&self, point: &[f64]) -> Vec<f64>;

    /// Upper bound on `sup_{x ∈ X_i} ‖A_i x − b‖`.
    fn coupling_row_bound(&self, b: &[f64]) -> f64;

    /// Upper bound on `sup_{x ∈ X_i} |cost(x)|`.
    fn cost_bound(&self) -> f64;

    /// Upper bound on the diameter of `conv{(cost(x), A_i x)}`.
    fn diameter_bound(&self) -> f64;

    /// Cost range `sup cost − inf cost` over the domain.
    fn nonconvexity_gamma(&self) -> f64;

    /// Tighter nonconvexity certificate when one is available.
    fn nonconvexity_rho(&self) -> Option<f64> {
        None
    }

    /// Whether the domain is convex (enables point averaging and the
    /// convex-mode pipeline).
    fn domain_is_convex(&self) -> bool;

    /// Domain enumeration for brute-force checking, when tractable.
    fn enumerate_domain(&self) -> Option<Box<dyn Iterator<Item = Vec<f64>> + '_>> {
        None
    }
}

/// Constant bounds derived from agent metadata.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InstanceBounds {
    /// `G̃ ≥ sup_{i, x} ‖A_i x − b‖`
    pub g_tilde: f64,
    /// `H ≥ sup_{i, x} |cost_i(x)|`
    pub h: f64,
    /// `D² = (1/N) Σ_i diam(conv C_i)²`
    pub d_squared: f64,
}

/// A separable instance: `N` agents, the shared right-hand side `b`, derived
/// constant bounds, and the oracle-call counter.
pub struct Instance {
    agents: Vec<Arc<dyn AgentOracle>>,
    b: Vec<f64>,
    bounds: InstanceBounds,
    calls: AtomicU64,
}

impl std::fmt::Debug for Instance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Instance")
            .field("n", &self.agents.len())
            .field("m", &self.b.len())
            .field("bounds", &self.bounds)
            .field("oracle_calls", &self.oracle_calls())
            .finish()
    }
}

impl Instance {
    pub fn new(agents: Vec<Arc<dyn AgentOracle>>, b: Vec<f64>) -> Result<Self> {
        if agents.is_empty() {
            return Err(Error::InvalidInstance("instance needs at least one agent".into()));
        }
        if b.is_empty() {
            return Err(Error::InvalidInstance(
                "instance needs at least one coupling row".into(),
            ));
        }
        let m = b.len();
        let n = agents.len();
        let mut g_tilde = 0.0f64;
        let mut h = 0.0f64;
        let mut d_sq_sum = 0.0f64;
        for (i, agent) in agents.iter().enumerate() {
            if agent.coupling_rows() != m {
                return Err(Error::DimensionMismatch {
                    detail: format!(
                        "agent {i} couples into {} rows, instance has {m}",
                        agent.coupling_rows()
                    ),
                });
            }
            g_tilde = g_tilde.max(agent.coupling_row_bound(&b));
            h = h.max(agent.cost_bound());
            let d = agent.diameter_bound();
            d_sq_sum += d * d;
        }
        Ok(Self {
            agents,
            b,
            bounds: InstanceBounds {
                g_tilde,
                h,
                d_squared: d_sq_sum / n as f64,
            },
            calls: AtomicU64::new(0),
        })
    }

    pub fn num_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn num_rows(&self) -> usize {
        self.b.len()
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn bounds(&self) -> InstanceBounds {
        self.bounds
    }

    pub fn agent(&self, i: usize) -> &dyn AgentOracle {
        self.agents[i].as_ref()
    }

    pub fn domains_all_convex(&self) -> bool {
        self.agents.iter().all(|a| a.domain_is_convex())
    }

    /// Maximum cost range over agents; the nonconvex duality-gap bounds use
    /// `(m+1)/N` times this value.
    pub fn max_nonconvexity_gamma(&self) -> f64 {
        self.agents
            .iter()
            .map(|a| a.nonconvexity_gamma())
            .fold(0.0, f64::max)
    }

    /// One counted oracle call on agent `i`.
    pub fn oracle(&self, i: usize, query: &OracleQuery) -> Result<OracleAtom> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.agents[i].minimize(query).map_err(|e| match e {
            Error::AgentInfeasible { detail, .. } => Error::AgentInfeasible { agent: i, detail },
            other => other,
        })
    }

    /// Total number of counted oracle calls since construction or the last
    /// reset. This is the universal x-axis of all traces.
    pub fn oracle_calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    pub fn reset_oracle_calls(&self) {
        self.calls.store(0, Ordering::Relaxed);
    }
}

/// Value, subgradient and per-agent minimizers of the dual function at `λ`.
#[derive(Debug, Clone)]
pub struct DualEvaluation {
    /// `d(λ) = −λᵀb + (1/N) Σ_i min_x { cost_i(x) + λᵀ A_i x }`
    pub value: f64,
    /// `(1/N) Σ_i A_i x_i*(λ) − b ∈ ∂d(λ)`
    pub subgradient: Vec<f64>,
    pub minimizers: Vec<OracleAtom>,
}

/// Evaluates the dual function at `λ ≥ 0` with one oracle call per agent
/// (γ = 1), accumulating over agents in ascending index order.
pub fn dual_value(instance: &Instance, lambda: &DualVector) -> Result<DualEvaluation> {
    let n = instance.num_agents();
    let m = instance.num_rows();
    if lambda.len() != m {
        return Err(Error::DimensionMismatch {
            detail: format!("dual vector has {} rows, instance has {m}", lambda.len()),
        });
    }
    let query = OracleQuery::dual(lambda.entries());
    let mut inner_sum = 0.0;
    let mut coupling_sum = vec![0.0; m];
    let mut minimizers = Vec::with_capacity(n);
    for i in 0..n {
        let atom = instance.oracle(i, &query)?;
        inner_sum += atom.cost + dot(lambda.entries(), &atom.coupling);
        crate::vec_ops::axpy(&mut coupling_sum, 1.0, &atom.coupling);
        minimizers.push(atom);
    }
    let inv_n = 1.0 / n as f64;
    let value = -dot(lambda.entries(), instance.b()) + inv_n * inner_sum;
    let subgradient: Vec<f64> = coupling_sum
        .iter()
        .zip(instance.b())
        .map(|(s, bj)| inv_n * s - bj)
        .collect();
    Ok(DualEvaluation {
        value,
        subgradient,
        minimizers,
    })
}

/// `(1/N) Σ_i A_i x_i − b` for a full list of per-agent points.
///
/// Apply [`plus_norm`] to the result to measure infeasibility.
pub fn coupling_residual(instance: &Instance, points: &[Vec<f64>]) -> Result<Vec<f64>> {
    check_points(instance, points)?;
    let m = instance.num_rows();
    let mut sum = vec![0.0; m];
    for (i, point) in points.iter().enumerate() {
        let c = instance.agent(i).coupling(point);
        crate::vec_ops::axpy(&mut sum, 1.0, &c);
    }
    let inv_n = 1.0 / instance.num_agents() as f64;
    Ok(sum
        .iter()
        .zip(instance.b())
        .map(|(s, bj)| inv_n * s - bj)
        .collect())
}

/// `(1/N) Σ_i cost_i(x_i)`, costs evaluated by each agent.
pub fn primal_cost(instance: &Instance, points: &[Vec<f64>]) -> Result<f64> {
    check_points(instance, points)?;
    let mut sum = 0.0;
    for (i, point) in points.iter().enumerate() {
        sum += instance.agent(i).cost(point);
    }
    Ok(sum / instance.num_agents() as f64)
}

/// Infeasibility of a full point list: `‖(1/N) Σ A_i x_i − b‖₊`.
pub fn infeasibility(instance: &Instance, points: &[Vec<f64>]) -> Result<f64> {
    Ok(plus_norm(&coupling_residual(instance, points)?))
}

fn check_points(instance: &Instance, points: &[Vec<f64>]) -> Result<()> {
    if points.len() != instance.num_agents() {
        return Err(Error::DimensionMismatch {
            detail: format!(
                "{} points supplied for {} agents",
                points.len(),
                instance.num_agents()
            ),
        });
    }
    for (i, point) in points.iter().enumerate() {
        if !instance.agent(i).domain_contains(point) {
            return Err(Error::DomainViolation { agent: i });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::FiniteAgent;
    use std::sync::Arc;

    fn two_point_instance(costs: [f64; 2], b: f64) -> Instance {
        let agent = FiniteAgent::scalar(&[0.0, 1.0], &costs, 1.0).unwrap();
        Instance::new(vec![Arc::new(agent)], vec![b]).unwrap()
    }

    #[test]
    fn dual_value_examples() {
        // h(x) = x, λ = 0: minimizer x = 0, value 0, subgradient −0.5
        let instance = two_point_instance([0.0, 1.0], 0.5);
        let eval = dual_value(&instance, &DualVector::zeros(1)).unwrap();
        assert_eq!(eval.value, 0.0);
        assert_eq!(eval.subgradient, vec![-0.5]);
        assert_eq!(eval.minimizers[0].point, vec![0.0]);

        // h(x) = −x, λ = 0: enumeration over {0, 1} gives x = 1, value −1
        let instance = two_point_instance([0.0, -1.0], 0.5);
        let eval = dual_value(&instance, &DualVector::zeros(1)).unwrap();
        assert_eq!(eval.value, -1.0);
        assert_eq!(eval.subgradient, vec![0.5]);

        // h(x) = −x, λ = 1: −0.5·1 + min(0, −1+1) = −0.5
        let eval = dual_value(&instance, &DualVector::new(vec![1.0]).unwrap()).unwrap();
        assert_eq!(eval.value, -0.5);
    }

    #[test]
    fn dual_value_counts_n_calls() {
        let agents: Vec<Arc<dyn AgentOracle>> = (0..3)
            .map(|i| {
                Arc::new(FiniteAgent::scalar(&[0.0, 1.0], &[0.0, i as f64], 1.0).unwrap())
                    as Arc<dyn AgentOracle>
            })
            .collect();
        let instance = Instance::new(agents, vec![0.5]).unwrap();
        assert_eq!(instance.oracle_calls(), 0);
        dual_value(&instance, &DualVector::zeros(1)).unwrap();
        assert_eq!(instance.oracle_calls(), 3);
    }

    #[test]
    fn coupling_residual_examples() {
        // all-zero points with b = 0
        let agents: Vec<Arc<dyn AgentOracle>> = (0..2)
            .map(|_| {
                Arc::new(FiniteAgent::scalar(&[0.0, 1.0], &[0.0, 1.0], 1.0).unwrap())
                    as Arc<dyn AgentOracle>
            })
            .collect();
        let instance = Instance::new(agents, vec![0.0]).unwrap();
        let r = coupling_residual(&instance, &[vec![0.0], vec![0.0]]).unwrap();
        assert_eq!(r, vec![0.0]);

        // couplings {1, 3}, b = 1: (1+3)/2 − 1 = 1
        let agents: Vec<Arc<dyn AgentOracle>> = [1.0, 3.0]
            .iter()
            .map(|&c| {
                Arc::new(FiniteAgent::scalar(&[0.0, 1.0], &[0.0, 0.0], c).unwrap())
                    as Arc<dyn AgentOracle>
            })
            .collect();
        let instance = Instance::new(agents, vec![1.0]).unwrap();
        let r = coupling_residual(&instance, &[vec![1.0], vec![1.0]]).unwrap();
        assert_eq!(r, vec![1.0]);
    }

    #[test]
    fn primal_cost_is_the_mean() {
        let agents: Vec<Arc<dyn AgentOracle>> = [2.0, 4.0]
            .iter()
            .map(|&c| {
                Arc::new(FiniteAgent::scalar(&[0.0, 1.0], &[0.0, c], 1.0).unwrap())
                    as Arc<dyn AgentOracle>
            })
            .collect();
        let instance = Instance::new(agents, vec![1.0]).unwrap();
        assert_eq!(primal_cost(&instance, &[vec![1.0], vec![1.0]]).unwrap(), 3.0);
        assert_eq!(primal_cost(&instance, &[vec![0.0], vec![0.0]]).unwrap(), 0.0);
    }

    #[test]
    fn domain_violation_reports_agent_index() {
        let agents: Vec<Arc<dyn AgentOracle>> = (0..2)
            .map(|_| {
                Arc::new(FiniteAgent::scalar(&[0.0, 1.0], &[0.0, 1.0], 1.0).unwrap())
                    as Arc<dyn AgentOracle>
            })
            .collect();
        let instance = Instance::new(agents, vec![1.0]).unwrap();
        let err = primal_cost(&instance, &[vec![0.0], vec![0.5]]).unwrap_err();
        assert!(matches!(err, Error::DomainViolation { agent: 1 }));
    }

    #[test]
    fn degenerate_instances_rejected() {
        assert!(Instance::new(vec![], vec![1.0]).is_err());
        let agent: Arc<dyn AgentOracle> =
            Arc::new(FiniteAgent::scalar(&[0.0], &[0.0], 1.0).unwrap());
        assert!(Instance::new(vec![agent], vec![]).is_err());
    }

    #[test]
    fn atom_coupling_matches_recomputation_bitwise() {
        let agent = FiniteAgent::scalar(&[0.25, 1.0], &[0.5, -1.0], 1.5).unwrap();
        let atom = agent.minimize(&OracleQuery::new(1.0, vec![0.3])).unwrap();
        let recomputed = agent.coupling(&atom.point);
        assert!(crate::vec_ops::bits_equal(&atom.coupling, &recomputed));
        assert!(agent.domain_contains(&atom.point));
    }
}
