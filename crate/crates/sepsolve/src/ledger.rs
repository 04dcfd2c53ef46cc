//! Per-agent convex combinations of oracle atoms.
//!
//! Stage 1 collects atoms with uniform weights, block-coordinate Frank-Wolfe
//! reweights them geometrically, and the Caratheodory reduction prunes them.
//! All three stages speak this representation, which is why it lives apart
//! from any single algorithm. Atoms with bitwise-identical points are merged
//! (weights added): oracles over finite domains repeat vertices constantly,
//! and merged ledgers keep the reduction problem small.

use serde::{Deserialize, Serialize};

use crate::problem::OracleAtom;
use crate::vec_ops::bits_equal;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedAtom {
    pub weight: f64,
    pub atom: OracleAtom,
}

/// A convex combination of atoms for one agent: weights are nonnegative and
/// sum to one (up to tracked drift).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AgentLedger {
    pub atoms: Vec<WeightedAtom>,
}

impl AgentLedger {
    pub fn single(atom: OracleAtom) -> Self {
        Self {
            atoms: vec![WeightedAtom { weight: 1.0, atom }],
        }
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn weight_sum(&self) -> f64 {
        self.atoms.iter().map(|wa| wa.weight).sum()
    }

    /// Adds `weight` to the entry holding this point, merging on bitwise
    /// point equality.
    pub fn add(&mut self, weight: f64, atom: OracleAtom) {
        debug_assert!(weight >= 0.0);
        if let Some(existing) = self
            .atoms
            .iter_mut()
            .find(|wa| bits_equal(&wa.atom.point, &atom.point))
        {
            existing.weight += weight;
        } else {
            self.atoms.push(WeightedAtom { weight, atom });
        }
    }

    /// Scales all weights by `s`.
    pub fn scale(&mut self, s: f64) {
        for wa in &mut self.atoms {
            wa.weight *= s;
        }
    }

    /// Rescales weights to sum to exactly one.
    pub fn renormalize(&mut self) {
        let s = self.weight_sum();
        if s > 0.0 && s != 1.0 {
            let inv = 1.0 / s;
            for wa in &mut self.atoms {
                wa.weight *= inv;
            }
        }
    }

    /// Weighted cost `Σ_l ω_l cost_l`.
    pub fn cost_sum(&self) -> f64 {
        self.atoms.iter().map(|wa| wa.weight * wa.atom.cost).sum()
    }

    /// Weighted coupling `Σ_l ω_l A x_l`.
    pub fn coupling_sum(&self, m: usize) -> Vec<f64> {
        let mut out = vec![0.0; m];
        for wa in &self.atoms {
            crate::vec_ops::axpy(&mut out, wa.weight, &wa.atom.coupling);
        }
        out
    }

    /// Weighted point `Σ_l ω_l x_l` (meaningful for convex domains only).
    pub fn point_average(&self) -> Vec<f64> {
        let d = self.atoms.first().map_or(0, |wa| wa.atom.point.len());
        let mut out = vec![0.0; d];
        for wa in &self.atoms {
            crate::vec_ops::axpy(&mut out, wa.weight, &wa.atom.point);
        }
        out
    }
}

/// One ledger per agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ledger {
    pub agents: Vec<AgentLedger>,
}

impl Ledger {
    pub fn empty(n: usize) -> Self {
        Self {
            agents: vec![AgentLedger::default(); n],
        }
    }

    pub fn num_agents(&self) -> usize {
        self.agents.len()
    }

    /// Total excess `Σ_i (|Q_i| − 1)`: the number of atoms beyond one per
    /// agent. The Caratheodory reduction drives this to at most `m + 1`.
    pub fn excess(&self) -> usize {
        self.agents
            .iter()
            .map(|a| a.len().saturating_sub(1))
            .sum()
    }

    /// Agents carrying a nontrivial combination (two or more atoms).
    pub fn nontrivial_agents(&self) -> Vec<usize> {
        self.agents
            .iter()
            .enumerate()
            .filter(|(_, a)| a.len() >= 2)
            .map(|(i, _)| i)
            .collect()
    }

    /// Ledger-averaged `(β, z) = Σ_i Σ_l ω_i^l (cost/N, coupling/N)`,
    /// accumulated in ascending agent order.
    pub fn beta_z(&self, m: usize) -> (f64, Vec<f64>) {
        let inv_n = 1.0 / self.num_agents() as f64;
        let mut beta = 0.0;
        let mut z = vec![0.0; m];
        for agent in &self.agents {
            beta += inv_n * agent.cost_sum();
            crate::vec_ops::axpy(&mut z, inv_n, &agent.coupling_sum(m));
        }
        (beta, z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn atom(point: &[f64], cost: f64, coupling: &[f64]) -> OracleAtom {
        OracleAtom {
            point: point.to_vec(),
            cost,
            coupling: coupling.to_vec(),
        }
    }

    #[test]
    fn merges_identical_points() {
        let mut ledger = AgentLedger::default();
        ledger.add(0.25, atom(&[0.0, 1.0], 2.0, &[1.0]));
        ledger.add(0.5, atom(&[1.0, 0.0], 3.0, &[2.0]));
        ledger.add(0.25, atom(&[0.0, 1.0], 2.0, &[1.0]));
        assert_eq!(ledger.len(), 2);
        assert_eq!(ledger.atoms[0].weight, 0.5);
        assert!((ledger.weight_sum() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn weighted_sums() {
        let mut ledger = AgentLedger::default();
        ledger.add(0.25, atom(&[0.0], 0.0, &[0.0]));
        ledger.add(0.75, atom(&[1.0], 4.0, &[2.0]));
        assert_eq!(ledger.cost_sum(), 3.0);
        assert_eq!(ledger.coupling_sum(1), vec![1.5]);
        assert_eq!(ledger.point_average(), vec![0.75]);
    }

    #[test]
    fn excess_counts_beyond_one_atom() {
        let mut ledger = Ledger::empty(3);
        ledger.agents[0].add(1.0, atom(&[0.0], 0.0, &[0.0]));
        ledger.agents[1].add(0.5, atom(&[0.0], 0.0, &[0.0]));
        ledger.agents[1].add(0.5, atom(&[1.0], 1.0, &[1.0]));
        // agent 2 left empty
        assert_eq!(ledger.excess(), 1);
        assert_eq!(ledger.nontrivial_agents(), vec![1]);
    }
}
