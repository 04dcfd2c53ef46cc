//! Electric-vehicle charging benchmark agents.
//!
//! Vehicle `i` charges over `m` timesteps of length `Δ` at rate `P_i` with
//! loss coefficient `ξ_i`; the binary vector `x ∈ {0,1}^m` says when it
//! draws power. Energy evolves as `e^{j+1} = e^j + P Δ ξ x^j`, the terminal
//! level must reach `E_ref`, every prefix must stay below `E_max`, and the
//! cost is the tariff-weighted consumption `Σ_j P C^u_j x_j`. Because the
//! per-slot energy increment is a nonnegative constant, the prefix cap is
//! equivalent to a cap on the total number of charging slots, which turns
//! the oracle into selecting a feasible number of cheapest slots.
//!
//! If a future agent model had per-slot varying increments this equivalence
//! would break and the oracle would need a DP over prefixes instead.

use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{AgentOracle, Instance, OracleAtom, OracleQuery};
use crate::rng::{rng_from_seed, uniform_range};
use crate::serial::{AgentSpec, InstanceSpec};

/// Physical parameters of one vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvAgentParams {
    /// Charging rate (kW).
    pub p: f64,
    /// Timestep length (hours).
    pub delta: f64,
    /// Loss coefficient in (0, 1].
    pub xi: f64,
    /// Initial charge (kWh).
    pub e_init: f64,
    /// Required terminal charge (kWh).
    pub e_ref: f64,
    /// Battery capacity (kWh).
    pub e_max: f64,
}

impl EvAgentParams {
    /// Minimum and maximum number of charging slots over an `m`-step
    /// horizon. Computed with exact rational arithmetic so that a required
    /// energy exactly divisible by the per-slot increment does not get
    /// misclassified by floating-point rounding.
    pub fn slot_bounds(&self, m: usize) -> Result<(usize, usize)> {
        if !(self.p > 0.0) || !(self.delta > 0.0) || !(self.xi > 0.0 && self.xi <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "ev agent parameters out of range: p={}, delta={}, xi={}",
                self.p, self.delta, self.xi
            )));
        }
        if self.e_init > self.e_max {
            return Err(Error::InvalidConfig(format!(
                "ev agent has e_init={} above e_max={}",
                self.e_init, self.e_max
            )));
        }
        let rat = |x: f64| BigRational::from_float(x);
        let (p, delta, xi, e_init, e_ref, e_max) = match (
            rat(self.p),
            rat(self.delta),
            rat(self.xi),
            rat(self.e_init),
            rat(self.e_ref),
            rat(self.e_max),
        ) {
            (Some(a), Some(b), Some(c), Some(d), Some(e), Some(f)) => (a, b, c, d, e, f),
            _ => {
                return Err(Error::InvalidConfig(
                    "ev agent parameters must be finite".into(),
                ))
            }
        };
        let increment = p * delta * xi;
        let zero = BigRational::from_integer(BigInt::from(0));
        let needed = &e_ref - &e_init;
        let n_req = if needed <= zero {
            0usize
        } else {
            let q = (needed / &increment).ceil().to_integer();
            big_to_usize(&q)?
        };
        let headroom = &e_max - &e_init;
        let k_raw = {
            let q = (headroom / &increment).floor().to_integer();
            big_to_usize(&q)?
        };
        // more headroom than timesteps just means every slot may charge
        let k_max = k_raw.min(m);
        Ok((n_req, k_max))
    }
}

fn big_to_usize(v: &BigInt) -> Result<usize> {
    use num_bigint::Sign;
    match v.sign() {
        Sign::Minus => Ok(0),
        _ => {
            let (_, digits) = v.to_u64_digits();
            match digits.as_slice() {
                [] => Ok(0),
                [d] => Ok(*d as usize),
                _ => Err(Error::InvalidConfig(
                    "ev agent slot bound does not fit in usize".into(),
                )),
            }
        }
    }
}

/// A validated vehicle agent over an `m`-step horizon with a shared tariff.
#[derive(Debug, Clone)]
pub struct EvAgent {
    params: EvAgentParams,
    tariff: Arc<Vec<f64>>,
    n_req: usize,
    k_max: usize,
    gamma_f: f64,
}

impl EvAgent {
    pub fn new(params: EvAgentParams, tariff: Arc<Vec<f64>>) -> Result<Self> {
        let m = tariff.len();
        if m == 0 {
            return Err(Error::InvalidConfig("ev tariff must be nonempty".into()));
        }
        let (n_req, k_max) = params.slot_bounds(m)?;
        if n_req > k_max {
            return Err(Error::AgentInfeasible {
                agent: usize::MAX,
                detail: format!("requires {n_req} charging slots but at most {k_max} fit"),
            });
        }
        let mut agent = Self {
            params,
            tariff,
            n_req,
            k_max,
            gamma_f: 0.0,
        };
        // cost range over the domain, both ends computed by the exact greedy
        let base = agent.base_weights(1.0, None);
        let negated: Vec<f64> = base.iter().map(|w| -w).collect();
        let min_sel = agent.minimize_weights(&base).0;
        let max_sel = agent.minimize_weights(&negated).0;
        let min_cost = agent.cost(&agent.selection_to_point(&min_sel));
        let max_cost = agent.cost(&agent.selection_to_point(&max_sel));
        agent.gamma_f = max_cost - min_cost;
        Ok(agent)
    }

    pub fn params(&self) -> &EvAgentParams {
        &self.params
    }

    pub fn tariff(&self) -> &[f64] {
        &self.tariff
    }

    pub fn slot_counts(&self) -> (usize, usize) {
        (self.n_req, self.k_max)
    }

    fn m(&self) -> usize {
        self.tariff.len()
    }

    /// `w_j = γ P C^u_j + λ_j P`
    fn base_weights(&self, gamma: f64, lambda: Option<&[f64]>) -> Vec<f64> {
        (0..self.m())
            .map(|j| {
                let mut w = gamma * self.params.p * self.tariff[j];
                if let Some(l) = lambda {
                    w += l[j] * self.params.p;
                }
                w
            })
            .collect()
    }

    /// Exact minimizer of `Σ_j w_j x_j` over the slot-count domain.
    ///
    /// Slots are stably sorted by `(w_j, j)`; the selection size is the
    /// number of negative weights clamped into `[n_req, k_max]`, which is
    /// optimal because the sorted prefix sums are convex in the count.
    /// Returns the selected slot set and its weight.
    fn minimize_weights(&self, w: &[f64]) -> (Vec<usize>, f64) {
        let mut order: Vec<usize> = (0..self.m()).collect();
        order.sort_by(|&a, &b| w[a].partial_cmp(&w[b]).unwrap().then(a.cmp(&b)));
        let neg = w.iter().filter(|&&x| x < 0.0).count();
        let k_star = neg.clamp(self.n_req, self.k_max);
        let selected: Vec<usize> = order[..k_star].to_vec();
        let value = selected.iter().map(|&j| w[j]).sum();
        (selected, value)
    }

    fn selection_to_point(&self, slots: &[usize]) -> Vec<f64> {
        let mut x = vec![0.0; self.m()];
        for &j in slots {
            x[j] = 1.0;
        }
        x
    }
}

impl AgentOracle for EvAgent {
    fn dimension(&self) -> usize {
        self.m()
    }

    fn coupling_rows(&self) -> usize {
        self.m()
    }

    fn minimize(&self, query: &OracleQuery) -> Result<OracleAtom> {
        debug_assert_eq!(query.lambda.len(), self.m());
        let w = self.base_weights(query.gamma, Some(&query.lambda));
        let (slots, _) = self.minimize_weights(&w);
        let point = self.selection_to_point(&slots);
        // evaluate through the same path as recomputation so identical
        // points always carry bitwise-identical cost values
        let cost = self.cost(&point);
        let coupling = self.coupling(&point);
        Ok(OracleAtom {
            point,
            cost,
            coupling,
        })
    }

    fn domain_contains(&self, point: &[f64]) -> bool {
        if point.len() != self.m() {
            return false;
        }
        let mut count = 0usize;
        for &x in point {
            if x == 1.0 {
                count += 1;
            } else if x != 0.0 {
                return false;
            }
        }
        count >= self.n_req && count <= self.k_max
    }

    fn cost(&self, point: &[f64]) -> f64 {
        point
            .iter()
            .zip(self.tariff.iter())
            .map(|(&x, &c)| self.params.p * c * x)
            .sum()
    }

    fn coupling(&self, point: &[f64]) -> Vec<f64> {
        point.iter().map(|&x| self.params.p * x).collect()
    }

    fn coupling_row_bound(&self, b: &[f64]) -> f64 {
        b.iter()
            .map(|&bj| {
                let on = (self.params.p - bj).abs();
                let off = bj.abs();
                let worst = on.max(off);
                worst * worst
            })
            .sum::<f64>()
            .sqrt()
    }

    fn cost_bound(&self) -> f64 {
        self.params.p * self.tariff.iter().map(|c| c.abs()).sum::<f64>()
    }

    fn diameter_bound(&self) -> f64 {
        (self.gamma_f * self.gamma_f + self.params.p * self.params.p * self.m() as f64).sqrt()
    }

    fn nonconvexity_gamma(&self) -> f64 {
        self.gamma_f
    }

    fn domain_is_convex(&self) -> bool {
        // binary count domains are only convex when they collapse to a point
        self.n_req == self.k_max && (self.k_max == 0 || self.k_max == self.m())
    }

    fn enumerate_domain(&self) -> Option<Box<dyn Iterator<Item = Vec<f64>> + '_>> {
        let m = self.m();
        if m >= 40 {
            return None;
        }
        let (lo, hi) = (self.n_req as u32, self.k_max as u32);
        Some(Box::new(
            (0u64..(1u64 << m))
                .filter(move |mask| {
                    let c = mask.count_ones();
                    c >= lo && c <= hi
                })
                .map(move |mask| {
                    (0..m)
                        .map(|j| if mask >> j & 1 == 1 { 1.0 } else { 0.0 })
                        .collect()
                }),
        ))
    }
}

/// Generation parameters for a random fleet.
///
/// Ranges are uniform; the tariff follows a sinusoidal day pattern with
/// additive noise; the network cap defaults to a fixed fraction of the total
/// fleet charging rate, which makes the coupling binding but keeps a Slater
/// point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvInstanceConfig {
    pub n_agents: usize,
    pub m: usize,
    pub seed: u64,
    /// Fixed network power cap (kW); when absent, `p_max_frac · Σ_i P_i`.
    #[serde(default)]
    pub p_max: Option<f64>,
    #[serde(default = "default_p_max_frac")]
    pub p_max_frac: f64,
    #[serde(default = "default_p_range")]
    pub p_range: (f64, f64),
    #[serde(default = "default_xi_range")]
    pub xi_range: (f64, f64),
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_e_max_range")]
    pub e_max_range: (f64, f64),
    #[serde(default = "default_e_init_frac")]
    pub e_init_frac: (f64, f64),
    #[serde(default = "default_e_ref_frac")]
    pub e_ref_frac: (f64, f64),
    #[serde(default = "default_tariff_base")]
    pub tariff_base: f64,
    #[serde(default = "default_tariff_amplitude")]
    pub tariff_amplitude: f64,
    #[serde(default = "default_tariff_noise")]
    pub tariff_noise: f64,
}

fn default_p_max_frac() -> f64 {
    0.6
}
fn default_p_range() -> (f64, f64) {
    (3.0, 5.0)
}
fn default_xi_range() -> (f64, f64) {
    (0.85, 1.0)
}
fn default_delta() -> f64 {
    1.0
}
fn default_e_max_range() -> (f64, f64) {
    (20.0, 40.0)
}
fn default_e_init_frac() -> (f64, f64) {
    (0.2, 0.5)
}
fn default_e_ref_frac() -> (f64, f64) {
    (0.55, 0.8)
}
fn default_tariff_base() -> f64 {
    0.1
}
fn default_tariff_amplitude() -> f64 {
    0.5
}
fn default_tariff_noise() -> f64 {
    0.02
}

impl EvInstanceConfig {
    pub fn with_defaults(n_agents: usize, m: usize, seed: u64) -> Self {
        Self {
            n_agents,
            m,
            seed,
            p_max: None,
            p_max_frac: default_p_max_frac(),
            p_range: default_p_range(),
            xi_range: default_xi_range(),
            delta: default_delta(),
            e_max_range: default_e_max_range(),
            e_init_frac: default_e_init_frac(),
            e_ref_frac: default_e_ref_frac(),
            tariff_base: default_tariff_base(),
            tariff_amplitude: default_tariff_amplitude(),
            tariff_noise: default_tariff_noise(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_agents == 0 || self.m == 0 {
            return Err(Error::InvalidConfig(
                "ev instance needs n_agents >= 1 and m >= 1".into(),
            ));
        }
        for (name, (lo, hi)) in [
            ("p_range", self.p_range),
            ("xi_range", self.xi_range),
            ("e_max_range", self.e_max_range),
            ("e_init_frac", self.e_init_frac),
            ("e_ref_frac", self.e_ref_frac),
        ] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::InvalidConfig(format!("{name} is not a valid range")));
            }
        }
        if !(self.p_range.0 > 0.0)
            || !(self.delta > 0.0)
            || !(self.xi_range.0 > 0.0 && self.xi_range.1 <= 1.0)
        {
            return Err(Error::InvalidConfig(
                "ev ranges must satisfy p > 0, delta > 0, 0 < xi <= 1".into(),
            ));
        }
        if let Some(p_max) = self.p_max {
            if !(p_max > 0.0) {
                return Err(Error::InvalidConfig("p_max must be positive".into()));
            }
        } else if !(self.p_max_frac > 0.0) {
            return Err(Error::InvalidConfig("p_max_frac must be positive".into()));
        }
        Ok(())
    }
}

const MAX_DRAW_ATTEMPTS: u32 = 1000;

/// Draws a fleet deterministically from the config seed and returns the
/// serializable instance description.
///
/// Per agent, infeasible parameter tuples are redrawn; after 1000 consecutive
/// rejections the generation aborts with the agent index.
pub fn generate_ev_spec(config: &EvInstanceConfig) -> Result<InstanceSpec> {
    config.validate()?;
    let mut rng = rng_from_seed(config.seed);
    let m = config.m;
    let tariff: Vec<f64> = (0..m)
        .map(|j| {
            let base = config.tariff_base
                * (1.0
                    + config.tariff_amplitude
                        * (2.0 * std::f64::consts::PI * j as f64 / m as f64).sin());
            base + uniform_range(&mut rng, -config.tariff_noise, config.tariff_noise)
        })
        .collect();

    let mut agents = Vec::with_capacity(config.n_agents);
    let mut total_p = 0.0;
    for i in 0..config.n_agents {
        let mut accepted = None;
        for _ in 0..MAX_DRAW_ATTEMPTS {
            let p = uniform_range(&mut rng, config.p_range.0, config.p_range.1);
            let xi = uniform_range(&mut rng, config.xi_range.0, config.xi_range.1);
            let e_max = uniform_range(&mut rng, config.e_max_range.0, config.e_max_range.1);
            let e_init =
                uniform_range(&mut rng, config.e_init_frac.0, config.e_init_frac.1) * e_max;
            let e_ref = uniform_range(&mut rng, config.e_ref_frac.0, config.e_ref_frac.1) * e_max;
            let params = EvAgentParams {
                p,
                delta: config.delta,
                xi,
                e_init,
                e_ref,
                e_max,
            };
            match params.slot_bounds(m) {
                Ok((n_req, k_max)) if n_req <= k_max => {
                    accepted = Some(params);
                    break;
                }
                _ => continue,
            }
        }
        let params = accepted.ok_or(Error::GenerationFailed {
            agent: i,
            attempts: MAX_DRAW_ATTEMPTS,
        })?;
        total_p += params.p;
        agents.push(AgentSpec::Ev {
            p: params.p,
            delta: params.delta,
            xi: params.xi,
            e_init: params.e_init,
            e_ref: params.e_ref,
            e_max: params.e_max,
        });
    }

    let p_max = config.p_max.unwrap_or(config.p_max_frac * total_p);
    let b = vec![p_max / config.n_agents as f64; m];
    Ok(InstanceSpec {
        m,
        b,
        tariff: Some(tariff),
        agents,
    })
}

/// Convenience wrapper: generate and build in one step.
pub fn generate_ev_instance(config: &EvInstanceConfig) -> Result<Instance> {
    generate_ev_spec(config)?.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::AgentOracle;

    fn example_agent() -> EvAgent {
        // P = Δ = ξ = 1, E_init = 0, E_ref = 2, E_max = 3, tariff [3, 1, 2]
        EvAgent::new(
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
        .unwrap()
    }

    /// Exhaustive minimization over the enumerated domain; the independent
    /// check every greedy answer is frozen against.
    fn enumerate_min(agent: &EvAgent, query: &OracleQuery) -> (f64, f64) {
        let mut best: Option<(f64, f64)> = None;
        for point in agent.enumerate_domain().unwrap() {
            let cost = agent.cost(&point);
            let obj = query.gamma * cost
                + crate::vec_ops::dot(&query.lambda, &agent.coupling(&point));
            if best.is_none_or(|(b, _)| obj < b) {
                best = Some((obj, cost));
            }
        }
        best.unwrap()
    }

    #[test]
    fn slot_bounds_examples() {
        let agent = example_agent();
        assert_eq!(agent.slot_counts(), (2, 3));

        // forced n_req = 0, k_max = 2
        let params = EvAgentParams {
            p: 1.0,
            delta: 1.0,
            xi: 1.0,
            e_init: 0.0,
            e_ref: 0.0,
            e_max: 2.0,
        };
        assert_eq!(params.slot_bounds(2).unwrap(), (0, 2));
    }

    #[test]
    fn slot_bounds_exact_boundary() {
        // E_ref − E_init exactly divisible by PΔξ: 0.3 / 0.1 must give 3,
        // even though 0.3/0.1 > 3 in floating point
        let params = EvAgentParams {
            p: 0.1,
            delta: 1.0,
            xi: 1.0,
            e_init: 0.0,
            e_ref: 0.3,
            e_max: 1.0,
        };
        let (n_req, _) = params.slot_bounds(10).unwrap();
        assert_eq!(n_req, 3);
    }

    #[test]
    fn greedy_matches_spec_examples() {
        let agent = example_agent();

        // γ = 1, λ = 0  →  x = [0, 1, 1], cost 3
        let q = OracleQuery::new(1.0, vec![0.0; 3]);
        let atom = agent.minimize(&q).unwrap();
        assert_eq!(atom.point, vec![0.0, 1.0, 1.0]);
        assert_eq!(atom.cost, 3.0);
        let (enum_obj, _) = enumerate_min(&agent, &q);
        assert_eq!(atom.objective(&q), enum_obj);

        // γ = 1, λ = [0, 0, 10]  →  x = [1, 1, 0], cost 4
        let q = OracleQuery::new(1.0, vec![0.0, 0.0, 10.0]);
        let atom = agent.minimize(&q).unwrap();
        assert_eq!(atom.point, vec![1.0, 1.0, 0.0]);
        assert_eq!(atom.cost, 4.0);
        let (enum_obj, _) = enumerate_min(&agent, &q);
        assert_eq!(atom.objective(&q), enum_obj);
    }

    #[test]
    fn empty_selection_when_unneeded_and_expensive() {
        let agent = EvAgent::new(
            EvAgentParams {
                p: 2.0,
                delta: 1.0,
                xi: 1.0,
                e_init: 5.0,
                e_ref: 4.0,
                e_max: 9.0,
            },
            Arc::new(vec![0.5, 0.25]),
        )
        .unwrap();
        let atom = agent.minimize(&OracleQuery::new(1.0, vec![0.0, 0.0])).unwrap();
        assert_eq!(atom.point, vec![0.0, 0.0]);
        assert_eq!(atom.cost, 0.0);
    }

    #[test]
    fn nonconvexity_gamma_examples() {
        // C = [3,1,2], n_req = 2, k_max = 3: max f = 6, min f = 3
        assert_eq!(example_agent().nonconvexity_gamma(), 3.0);

        // zero tariff: constant objective
        let flat = EvAgent::new(
            EvAgentParams {
                p: 1.0,
                delta: 1.0,
                xi: 1.0,
                e_init: 0.0,
                e_ref: 2.0,
                e_max: 3.0,
            },
            Arc::new(vec![0.0, 0.0, 0.0]),
        )
        .unwrap();
        assert_eq!(flat.nonconvexity_gamma(), 0.0);

        // equal tariff with forced count: every feasible point costs k·P·c
        let fixed = EvAgent::new(
            EvAgentParams {
                p: 1.0,
                delta: 1.0,
                xi: 1.0,
                e_init: 0.0,
                e_ref: 2.0,
                e_max: 2.0,
            },
            Arc::new(vec![0.7, 0.7, 0.7]),
        )
        .unwrap();
        assert_eq!(fixed.slot_counts(), (2, 2));
        assert!(fixed.nonconvexity_gamma().abs() < 1e-15);
    }

    #[test]
    fn constants_examples() {
        let single = EvAgent::new(
            EvAgentParams {
                p: 1.0,
                delta: 1.0,
                xi: 1.0,
                e_init: 0.0,
                e_ref: 0.0,
                e_max: 1.0,
            },
            Arc::new(vec![0.0]),
        )
        .unwrap();
        assert_eq!(single.coupling_row_bound(&[0.5]), 0.5);
        assert_eq!(single.cost_bound(), 0.0);

        let agent = example_agent();
        let bound = agent.diameter_bound();
        assert!((bound - (9.0f64 + 3.0).sqrt()).abs() < 1e-15);
        // bound dominates the exact pairwise diameter of the lifted set
        let points: Vec<Vec<f64>> = agent.enumerate_domain().unwrap().collect();
        let mut exact: f64 = 0.0;
        for a in &points {
            for b in &points {
                let dc = agent.cost(a) - agent.cost(b);
                let dx = crate::vec_ops::dist(&agent.coupling(a), &agent.coupling(b));
                exact = exact.max((dc * dc + dx * dx).sqrt());
            }
        }
        assert!(bound >= exact);
    }

    #[test]
    fn domain_membership() {
        let agent = example_agent();
        assert!(agent.domain_contains(&[0.0, 1.0, 1.0]));
        assert!(agent.domain_contains(&[1.0, 1.0, 1.0]));
        assert!(!agent.domain_contains(&[1.0, 0.0, 0.0])); // below n_req
        assert!(!agent.domain_contains(&[0.5, 1.0, 1.0])); // not binary
        assert!(!agent.domain_contains(&[1.0, 1.0])); // wrong length

        let zero_ok = EvAgent::new(
            EvAgentParams {
                p: 1.0,
                delta: 1.0,
                xi: 1.0,
                e_init: 1.0,
                e_ref: 1.0,
                e_max: 1.0,
            },
            Arc::new(vec![1.0, 1.0]),
        )
        .unwrap();
        assert!(zero_ok.domain_contains(&[0.0, 0.0]));
        // all-ones rejected when k_max < m
        assert!(!zero_ok.domain_contains(&[1.0, 1.0]));
    }

    /// Membership agrees with a direct prefix-by-prefix simulation of the
    /// energy dynamics.
    #[test]
    fn domain_matches_prefix_simulation() {
        let mut rng = rng_from_seed(99);
        for _ in 0..200 {
            let p = uniform_range(&mut rng, 0.5, 4.0);
            let xi = uniform_range(&mut rng, 0.5, 1.0);
            let e_max = uniform_range(&mut rng, 4.0, 12.0);
            let e_init = uniform_range(&mut rng, 0.0, 0.8) * e_max;
            let e_ref = uniform_range(&mut rng, 0.0, 1.0) * e_max;
            let params = EvAgentParams {
                p,
                delta: 1.0,
                xi,
                e_init,
                e_ref,
                e_max,
            };
            let m = 6;
            let Ok(agent) = EvAgent::new(params, Arc::new(vec![1.0; m])) else {
                continue;
            };
            for mask in 0u64..(1 << m) {
                let x: Vec<f64> = (0..m)
                    .map(|j| if mask >> j & 1 == 1 { 1.0 } else { 0.0 })
                    .collect();
                // simulate e^{j+1} = e^j + PΔξ x^j against both caps;
                // continuous parameter draws never land on the caps, so the
                // floating-point simulation and the exact slot counts agree
                let inc = p * 1.0 * xi;
                let mut e = e_init;
                let mut ok = true;
                for &xj in &x {
                    e += inc * xj;
                    if e > e_max {
                        ok = false;
                        break;
                    }
                }
                if ok && e < e_ref {
                    ok = false;
                }
                assert_eq!(
                    agent.domain_contains(&x),
                    ok,
                    "mismatch for params {params:?} point {x:?}"
                );
            }
        }
    }

    #[test]
    fn generation_is_deterministic_and_feasible() {
        let config = EvInstanceConfig::with_defaults(8, 6, 1234);
        let spec_a = generate_ev_spec(&config).unwrap();
        let spec_b = generate_ev_spec(&config).unwrap();
        assert_eq!(
            serde_json::to_string(&spec_a).unwrap(),
            serde_json::to_string(&spec_b).unwrap()
        );
        let instance = spec_a.build().unwrap();
        assert_eq!(instance.num_agents(), 8);
        assert_eq!(instance.num_rows(), 6);
    }

    #[test]
    fn fixed_p_max_sets_b() {
        let mut config = EvInstanceConfig::with_defaults(2, 3, 7);
        config.p_max = Some(4.0);
        let spec = generate_ev_spec(&config).unwrap();
        assert_eq!(spec.b, vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn hopeless_ranges_abort_with_agent_index() {
        // every draw needs 9 charging slots on a 1-step horizon
        let mut config = EvInstanceConfig::with_defaults(1, 1, 7);
        config.p_range = (1.0, 1.0);
        config.xi_range = (1.0, 1.0);
        config.e_max_range = (10.0, 10.0);
        config.e_init_frac = (0.0, 0.0);
        config.e_ref_frac = (0.9, 0.9);
        let err = generate_ev_spec(&config).unwrap_err();
        assert!(
            matches!(err, crate::error::Error::GenerationFailed { agent: 0, attempts: 1000 }),
            "got {err}"
        );
    }
}
