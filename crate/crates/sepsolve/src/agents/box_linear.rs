//! Box-domain agents with linear costs.
//!
//! Domain `[lo, hi]^d`, cost `cᵀx`, coupling `A x`. The oracle weight for
//! coordinate `k` is `γ c_k + (Aᵀλ)_k`; each coordinate independently picks
//! the matching box end, so the minimizer is always a vertex. These are the
//! convex-domain agents of the test instances: point averaging and the
//! convex two-stage mode are exercised on them.

use crate::error::{Error, Result};
use crate::problem::{AgentOracle, OracleAtom, OracleQuery};
use crate::vec_ops::dot;

#[derive(Debug, Clone)]
pub struct BoxLinearAgent {
    lo: Vec<f64>,
    hi: Vec<f64>,
    cost: Vec<f64>,
    a: Vec<Vec<f64>>,
}

impl BoxLinearAgent {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, cost: Vec<f64>, a: Vec<Vec<f64>>) -> Result<Self> {
        let d = lo.len();
        if d == 0 || hi.len() != d || cost.len() != d {
            return Err(Error::DimensionMismatch {
                detail: "box agent needs matching lo/hi/cost dimensions".into(),
            });
        }
        if lo.iter().zip(&hi).any(|(l, h)| !(l <= h)) {
            return Err(Error::AgentInfeasible {
                agent: usize::MAX,
                detail: "box agent has lo > hi".into(),
            });
        }
        if a.is_empty() || a.iter().any(|row| row.len() != d) {
            return Err(Error::DimensionMismatch {
                detail: "coupling matrix rows must match the box dimension".into(),
            });
        }
        Ok(Self { lo, hi, cost, a })
    }

    /// One-dimensional interval with cost `c·x` and coupling `[a·x]`.
    pub fn interval(lo: f64, hi: f64, cost: f64, coupling_coeff: f64) -> Result<Self> {
        Self::new(vec![lo], vec![hi], vec![cost], vec![vec![coupling_coeff]])
    }

    fn apply_a(&self, x: &[f64]) -> Vec<f64> {
        self.a.iter().map(|row| dot(row, x)).collect()
    }

    /// Range of a linear functional `wᵀx` over the box.
    fn functional_range(&self, w: &[f64]) -> (f64, f64) {
        let mut min = 0.0;
        let mut max = 0.0;
        for ((&wk, &l), &h) in w.iter().zip(&self.lo).zip(&self.hi) {
            if wk >= 0.0 {
                min += wk * l;
                max += wk * h;
            } else {
                min += wk * h;
                max += wk * l;
            }
        }
        (min, max)
    }
}

impl AgentOracle for BoxLinearAgent {
    fn dimension(&self) -> usize {
        self.lo.len()
    }

    fn coupling_rows(&self) -> usize {
        self.a.len()
    }

    fn minimize(&self, query: &OracleQuery) -> Result<OracleAtom> {
        // weights γc + Aᵀλ, minimized coordinate-wise at a box vertex
        let d = self.dimension();
        let mut point = Vec::with_capacity(d);
        for k in 0..d {
            let mut w = query.gamma * self.cost[k];
            for (row, &l) in self.a.iter().zip(&query.lambda) {
                w += l * row[k];
            }
            point.push(if w < 0.0 { self.hi[k] } else { self.lo[k] });
        }
        let cost = dot(&self.cost, &point);
        let coupling = self.apply_a(&point);
        Ok(OracleAtom {
            point,
            cost,
            coupling,
        })
    }

    fn domain_contains(&self, point: &[f64]) -> bool {
        point.len() == self.dimension()
            && point
                .iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(&x, (&l, &h))| x >= l && x <= h)
    }

    fn cost(&self, point: &[f64]) -> f64 {
        dot(&self.cost, point)
    }

    fn coupling(&self, point: &[f64]) -> Vec<f64> {
        self.apply_a(point)
    }

    fn coupling_row_bound(&self, b: &[f64]) -> f64 {
        self.a
            .iter()
            .zip(b)
            .map(|(row, &bj)| {
                let (min, max) = self.functional_range(row);
                let worst = (min - bj).abs().max((max - bj).abs());
                worst * worst
            })
            .sum::<f64>()
            .sqrt()
    }

    fn cost_bound(&self) -> f64 {
        let (min, max) = self.functional_range(&self.cost);
        min.abs().max(max.abs())
    }

    fn diameter_bound(&self) -> f64 {
        let (cmin, cmax) = self.functional_range(&self.cost);
        let mut sq = (cmax - cmin) * (cmax - cmin);
        for row in &self.a {
            let (rmin, rmax) = self.functional_range(row);
            sq += (rmax - rmin) * (rmax - rmin);
        }
        sq.sqrt()
    }

    fn nonconvexity_gamma(&self) -> f64 {
        let (min, max) = self.functional_range(&self.cost);
        max - min
    }

    fn nonconvexity_rho(&self) -> Option<f64> {
        // linear cost on a convex domain
        Some(0.0)
    }

    fn domain_is_convex(&self) -> bool {
        true
    }

    fn enumerate_domain(&self) -> Option<Box<dyn Iterator<Item = Vec<f64>> + '_>> {
        // vertices carry every linear optimum; fine for brute-force checks
        let d = self.dimension();
        if d >= 20 {
            return None;
        }
        Some(Box::new((0u64..(1u64 << d)).map(move |mask| {
            (0..d)
                .map(|k| {
                    if mask >> k & 1 == 1 {
                        self.hi[k]
                    } else {
                        self.lo[k]
                    }
                })
                .collect()
        })))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_picks_vertex() {
        let agent = BoxLinearAgent::interval(0.0, 2.0, -1.0, 1.0).unwrap();
        // γ = 1, λ = 0: weight −1 → hi end
        let atom = agent.minimize(&OracleQuery::new(1.0, vec![0.0])).unwrap();
        assert_eq!(atom.point, vec![2.0]);
        assert_eq!(atom.cost, -2.0);
        // λ = 2 flips the sign: weight −1 + 2 = 1 → lo end
        let atom = agent.minimize(&OracleQuery::new(1.0, vec![2.0])).unwrap();
        assert_eq!(atom.point, vec![0.0]);
        // zero weight goes to lo deterministically
        let atom = agent.minimize(&OracleQuery::new(1.0, vec![1.0])).unwrap();
        assert_eq!(atom.point, vec![0.0]);
    }

    #[test]
    fn bounds_cover_the_box() {
        let agent = BoxLinearAgent::new(
            vec![-1.0, 0.0],
            vec![1.0, 2.0],
            vec![1.0, -1.0],
            vec![vec![1.0, 1.0]],
        )
        .unwrap();
        // cost range over the box: [−3, 1] → bound 3
        assert_eq!(agent.cost_bound(), 3.0);
        assert_eq!(agent.nonconvexity_gamma(), 4.0);
        // coupling row range: [−1, 3]; vs b = 0.5 worst deviation 2.5
        assert_eq!(agent.coupling_row_bound(&[0.5]), 2.5);
        assert!(agent.domain_contains(&[0.0, 1.5]));
        assert!(!agent.domain_contains(&[0.0, 2.5]));
    }
}
