//! Agents over an explicit finite point set.
//!
//! The oracle enumerates the list; ties are broken toward the
//! lexicographically smallest point, which is always an extreme point of the
//! convex hull, so the `γ = 0` extreme-point requirement holds. These agents
//! build the tiny instances whose dual optima are known in closed form.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::problem::{AgentOracle, OracleAtom, OracleQuery};
use crate::vec_ops::{dist, dot};

#[derive(Debug, Clone)]
pub struct FiniteAgent {
    points: Vec<Vec<f64>>,
    costs: Vec<f64>,
    /// Coupling matrix, one row per coupling dimension.
    a: Vec<Vec<f64>>,
}

impl FiniteAgent {
    pub fn new(points: Vec<Vec<f64>>, costs: Vec<f64>, a: Vec<Vec<f64>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::AgentInfeasible {
                agent: usize::MAX,
                detail: "finite agent has an empty point set".into(),
            });
        }
        if points.len() != costs.len() {
            return Err(Error::DimensionMismatch {
                detail: format!("{} points but {} costs", points.len(), costs.len()),
            });
        }
        let d = points[0].len();
        if points.iter().any(|p| p.len() != d) {
            return Err(Error::DimensionMismatch {
                detail: "finite agent points have mixed dimensions".into(),
            });
        }
        if a.is_empty() || a.iter().any(|row| row.len() != d) {
            return Err(Error::DimensionMismatch {
                detail: "coupling matrix rows must match the point dimension".into(),
            });
        }
        Ok(Self { points, costs, a })
    }

    /// Convenience constructor for one-dimensional agents with identity-like
    /// coupling `A x = [a₀ x]`.
    pub fn scalar(points: &[f64], costs: &[f64], coupling_coeff: f64) -> Result<Self> {
        Self::new(
            points.iter().map(|&p| vec![p]).collect(),
            costs.to_vec(),
            vec![vec![coupling_coeff]],
        )
    }

    fn apply_a(&self, x: &[f64]) -> Vec<f64> {
        self.a.iter().map(|row| dot(row, x)).collect()
    }
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y).unwrap() {
            Ordering::Less => return true,
            Ordering::Greater => return false,
            Ordering::Equal => {}
        }
    }
    false
}

impl AgentOracle for FiniteAgent {
    fn dimension(&self) -> usize {
        self.points[0].len()
    }

    fn coupling_rows(&self) -> usize {
        self.a.len()
    }

    fn minimize(&self, query: &OracleQuery) -> Result<OracleAtom> {
        let mut best: Option<(f64, usize)> = None;
        for (l, point) in self.points.iter().enumerate() {
            let obj = query.gamma * self.costs[l] + dot(&query.lambda, &self.apply_a(point));
            let better = match best {
                None => true,
                Some((b, bl)) => {
                    obj < b || (obj == b && lex_less(point, &self.points[bl]))
                }
            };
            if better {
                best = Some((obj, l));
            }
        }
        let (_, l) = best.unwrap();
        Ok(OracleAtom {
            point: self.points[l].clone(),
            cost: self.costs[l],
            coupling: self.apply_a(&self.points[l]),
        })
    }

    fn domain_contains(&self, point: &[f64]) -> bool {
        self.points.iter().any(|p| p == point)
    }

    fn cost(&self, point: &[f64]) -> f64 {
        match self.points.iter().position(|p| p == point) {
            Some(l) => self.costs[l],
            None => f64::INFINITY,
        }
    }

    fn coupling(&self, point: &[f64]) -> Vec<f64> {
        self.apply_a(point)
    }

    fn coupling_row_bound(&self, b: &[f64]) -> f64 {
        self.points
            .iter()
            .map(|p| dist(&self.apply_a(p), b))
            .fold(0.0, f64::max)
    }

    fn cost_bound(&self) -> f64 {
        self.costs.iter().map(|c| c.abs()).fold(0.0, f64::max)
    }

    fn diameter_bound(&self) -> f64 {
        // exact pairwise diameter of the lifted set; the hull adds nothing
        let lifted: Vec<(f64, Vec<f64>)> = self
            .points
            .iter()
            .zip(&self.costs)
            .map(|(p, &c)| (c, self.apply_a(p)))
            .collect();
        let mut out: f64 = 0.0;
        for (ca, va) in &lifted {
            for (cb, vb) in &lifted {
                let dc = ca - cb;
                let dx = dist(va, vb);
                out = out.max((dc * dc + dx * dx).sqrt());
            }
        }
        out
    }

    fn nonconvexity_gamma(&self) -> f64 {
        let max = self.costs.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let min = self.costs.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        max - min
    }

    fn domain_is_convex(&self) -> bool {
        self.points.len() == 1
    }

    fn enumerate_domain(&self) -> Option<Box<dyn Iterator<Item = Vec<f64>> + '_>> {
        Some(Box::new(self.points.iter().cloned()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn picks_global_minimum() {
        // domain {0, 1}, h(x) = −x, coupling x
        let agent = FiniteAgent::scalar(&[0.0, 1.0], &[0.0, -1.0], 1.0).unwrap();
        let atom = agent.minimize(&OracleQuery::new(1.0, vec![0.0])).unwrap();
        assert_eq!(atom.point, vec![1.0]);
        assert_eq!(atom.cost, -1.0);

        // λ = 1 makes both points tie at 0; the lexicographically smaller wins
        let atom = agent.minimize(&OracleQuery::new(1.0, vec![1.0])).unwrap();
        assert_eq!(atom.point, vec![0.0]);
    }

    #[test]
    fn tie_break_returns_extreme_point() {
        // three collinear points with equal objective under γ = 0, λ = 0
        let agent =
            FiniteAgent::scalar(&[0.0, 0.5, 1.0], &[5.0, 1.0, 2.0], 1.0).unwrap();
        let atom = agent.minimize(&OracleQuery::new(0.0, vec![0.0])).unwrap();
        assert_eq!(atom.point, vec![0.0]);
    }

    #[test]
    fn metadata_is_exact_for_finite_sets() {
        let agent = FiniteAgent::scalar(&[0.0, 1.0], &[0.0, -1.0], 2.0).unwrap();
        assert_eq!(agent.coupling_row_bound(&[0.5]), 1.5);
        assert_eq!(agent.cost_bound(), 1.0);
        assert_eq!(agent.nonconvexity_gamma(), 1.0);
        let expected = (1.0f64 + 4.0).sqrt();
        assert!((agent.diameter_bound() - expected).abs() < 1e-15);
    }

    #[test]
    fn empty_domain_rejected() {
        assert!(FiniteAgent::scalar(&[], &[], 1.0).is_err());
    }
}
