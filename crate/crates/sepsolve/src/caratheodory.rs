//! Exact conic Caratheodory reduction of a per-agent atom ledger, and the
//! two primal reconstructions built on it.
//!
//! The ledger encodes `(β, z) = Σ_i Σ_l ω_i^l (cost/N, coupling/N)` with
//! per-agent weights summing to one. Lifting each atom with its agent's
//! canonical basis vector makes this a conic combination in `R^{1+m+N}`;
//! the reduction finds nonnegative weights with the same value but at most
//! `m + 1` atoms beyond one per agent, so at most `m + 1` agents keep a
//! nontrivial combination. Valid moves are directions that are (a) zero-sum
//! within each agent and (b) in the kernel of the lifted value map; each
//! pivot walks along such a direction until a weight hits zero, then deletes
//! that atom.
//!
//! The elimination works on a sliding active set of at most `m + 2`
//! non-reference atoms, so each deleted atom costs one dense kernel solve of
//! size `(m+1) × (m+2)` instead of one over the whole ledger. Every round
//! preserves `(β, z)` and the per-agent weight sums exactly in exact
//! arithmetic; the implementation verifies the reconstruction at the end and
//! fails loudly rather than return an unreduced or corrupted ledger.

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::ledger::{AgentLedger, Ledger, WeightedAtom};
use crate::problem::Instance;
use crate::rng::{rng_from_seed, uniform_unit};
use crate::vec_ops::norm;

/// Pivot threshold relative to the largest column norm.
const PIVOT_TOL_REL: f64 = 1e-12;
/// Allowed relative error between input and output `(β, z)`.
const RECONSTRUCT_TOL_REL: f64 = 1e-9;

/// A reduced ledger: per-agent convex combinations with total excess
/// `Σ_i (|Q_i| − 1) ≤ m + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedLedger {
    pub ledger: Ledger,
    /// Agents still carrying two or more atoms (`|S| ≤ m + 1`).
    pub nontrivial: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum AtomState {
    Pending,
    Active,
    Reference,
    Dead,
}

struct Workspace {
    /// Lifted value `(cost/N, coupling/N)` per atom.
    values: Vec<Vec<f64>>,
    weights: Vec<f64>,
    agent_of: Vec<usize>,
    state: Vec<AtomState>,
    /// Alive atom ids per agent.
    members: Vec<Vec<usize>>,
    /// Current reference atom per agent.
    reference: Vec<usize>,
}

impl Workspace {
    fn rereference(&mut self, agent: usize, active: &mut Vec<usize>) {
        let heaviest = *self.members[agent]
            .iter()
            .max_by(|&&a, &&b| self.weights[a].partial_cmp(&self.weights[b]).unwrap())
            .expect("agent keeps at least one alive atom");
        self.reference[agent] = heaviest;
        if self.state[heaviest] == AtomState::Active {
            active.retain(|&a| a != heaviest);
        }
        self.state[heaviest] = AtomState::Reference;
    }

    fn kill(&mut self, atom: usize, active: &mut Vec<usize>) {
        let agent = self.agent_of[atom];
        let was_ref = self.state[atom] == AtomState::Reference;
        if self.state[atom] == AtomState::Active {
            active.retain(|&a| a != atom);
        }
        self.state[atom] = AtomState::Dead;
        self.weights[atom] = 0.0;
        self.members[agent].retain(|&a| a != atom);
        if was_ref {
            self.rereference(agent, active);
        }
    }
}

/// Reduces the ledger so that at most `m + 1` atoms remain beyond one per
/// agent, preserving `(β, z)` and all per-agent weight sums.
pub fn reduce_conic_ledger(ledger: &Ledger, m: usize) -> Result<ReducedLedger> {
    let n = ledger.num_agents();
    if n == 0 {
        return Err(Error::InvalidConfig("cannot reduce an empty ledger".into()));
    }
    let inv_n = 1.0 / n as f64;

    // flatten, dropping exact-zero weights up front
    let mut ws = Workspace {
        values: Vec::new(),
        weights: Vec::new(),
        agent_of: Vec::new(),
        state: Vec::new(),
        members: vec![Vec::new(); n],
        reference: vec![usize::MAX; n],
    };
    let mut originals: Vec<&WeightedAtom> = Vec::new();
    for (i, agent) in ledger.agents.iter().enumerate() {
        if agent.is_empty() {
            return Err(Error::InvalidConfig(format!(
                "agent {i} has an empty ledger"
            )));
        }
        for wa in &agent.atoms {
            if wa.weight < 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "agent {i} carries a negative weight {}",
                    wa.weight
                )));
            }
            if wa.atom.coupling.len() != m {
                return Err(Error::DimensionMismatch {
                    detail: format!("agent {i} atom couples into {} rows", wa.atom.coupling.len()),
                });
            }
            if wa.weight == 0.0 && agent.atoms.len() > 1 {
                continue;
            }
            let id = ws.weights.len();
            let mut v = Vec::with_capacity(m + 1);
            v.push(inv_n * wa.atom.cost);
            v.extend(wa.atom.coupling.iter().map(|c| inv_n * c));
            ws.values.push(v);
            ws.weights.push(wa.weight);
            ws.agent_of.push(i);
            ws.state.push(AtomState::Pending);
            ws.members[i].push(id);
            originals.push(wa);
        }
    }

    let (beta_in, z_in) = ledger.beta_z(m);

    let mut active: Vec<usize> = Vec::new();
    for i in 0..n {
        ws.rereference(i, &mut active);
    }

    let pending: Vec<usize> = (0..ws.weights.len())
        .filter(|&a| ws.state[a] == AtomState::Pending)
        .collect();
    let mut cursor = 0usize;

    loop {
        while active.len() < m + 2 && cursor < pending.len() {
            let a = pending[cursor];
            cursor += 1;
            if ws.state[a] == AtomState::Pending {
                ws.state[a] = AtomState::Active;
                active.push(a);
            }
        }
        if active.len() <= m + 1 {
            break;
        }
        pivot_round(&mut ws, &mut active, m)?;
        debug_assert!(per_agent_sums_preserved(&ws, ledger));
    }

    // assemble the surviving atoms in original agent/atom order
    let mut out = Ledger::empty(n);
    for i in 0..n {
        let mut atoms: Vec<usize> = ws.members[i].clone();
        atoms.sort_unstable();
        let entries: Vec<WeightedAtom> = atoms
            .into_iter()
            .map(|a| WeightedAtom {
                weight: ws.weights[a],
                atom: originals[a].atom.clone(),
            })
            .collect();
        out.agents[i] = AgentLedger { atoms: entries };
    }

    let (beta_out, z_out) = out.beta_z(m);
    let mut err = (beta_out - beta_in) * (beta_out - beta_in);
    let mut scale = beta_in * beta_in;
    for (zo, zi) in z_out.iter().zip(&z_in) {
        err += (zo - zi) * (zo - zi);
        scale += zi * zi;
    }
    let err = err.sqrt();
    let scale = scale.sqrt().max(f64::MIN_POSITIVE);
    if err > RECONSTRUCT_TOL_REL * scale {
        return Err(Error::CaratheodoryFailure {
            detail: format!(
                "reduced ledger reconstructs (beta, z) with relative error {:.3e}",
                err / scale
            ),
        });
    }

    let nontrivial = out.nontrivial_agents();
    debug_assert!(out.excess() <= m + 1);
    Ok(ReducedLedger {
        ledger: out,
        nontrivial,
    })
}

#[cfg(debug_assertions)]
fn per_agent_sums_preserved(ws: &Workspace, ledger: &Ledger) -> bool {
    ws.members.iter().enumerate().all(|(i, members)| {
        let sum: f64 = members.iter().map(|&a| ws.weights[a]).sum();
        let orig: f64 = ledger.agents[i].weight_sum();
        (sum - orig).abs() <= 1e-9 * orig.abs().max(1.0)
    })
}

#[cfg(not(debug_assertions))]
fn per_agent_sums_preserved(_: &Workspace, _: &Ledger) -> bool {
    true
}

/// One elimination: finds a zero-sum kernel direction supported on the
/// active atoms (plus their agents' reference atoms), walks to the nearest
/// weight boundary, and deletes the atoms that hit zero.
fn pivot_round(ws: &mut Workspace, active: &mut Vec<usize>, m: usize) -> Result<()> {
    let cols: Vec<Vec<f64>> = active
        .iter()
        .map(|&a| {
            let r = ws.reference[ws.agent_of[a]];
            ws.values[a]
                .iter()
                .zip(&ws.values[r])
                .map(|(x, y)| x - y)
                .collect()
        })
        .collect();
    let mu = kernel_vector(&cols, m + 1).ok_or_else(|| {
        let max_norm = cols.iter().map(|c| norm(c)).fold(0.0, f64::max);
        Error::CaratheodoryFailure {
            detail: format!(
                "no kernel vector for a {}x{} difference matrix (max column norm {:.3e}, \
                 pivot tolerance {:.3e})",
                m + 1,
                cols.len(),
                max_norm,
                PIVOT_TOL_REL * max_norm
            ),
        }
    })?;

    // lift to per-atom directions: active atoms take μ, references take the
    // negated per-agent sum so every agent's weight sum is unchanged
    let mut touched: Vec<(usize, f64)> = Vec::with_capacity(active.len() * 2);
    for (j, &a) in active.iter().enumerate() {
        touched.push((a, mu[j]));
    }
    let mut per_agent: std::collections::BTreeMap<usize, f64> = std::collections::BTreeMap::new();
    for (j, &a) in active.iter().enumerate() {
        *per_agent.entry(ws.agent_of[a]).or_insert(0.0) += mu[j];
    }
    for (agent, sum) in per_agent {
        touched.push((ws.reference[agent], -sum));
    }

    // largest steps in both directions before a weight reaches zero,
    // remembering the blocking atom of each direction
    let mut theta_pos = (f64::INFINITY, usize::MAX);
    let mut theta_neg = (f64::INFINITY, usize::MAX);
    for &(a, dir) in &touched {
        if dir < 0.0 {
            let step = ws.weights[a] / -dir;
            if step < theta_pos.0 {
                theta_pos = (step, a);
            }
        } else if dir > 0.0 {
            let step = ws.weights[a] / dir;
            if step < theta_neg.0 {
                theta_neg = (step, a);
            }
        }
    }
    if theta_pos.1 == usize::MAX && theta_neg.1 == usize::MAX {
        return Err(Error::CaratheodoryFailure {
            detail: "kernel direction does not touch any positive weight".into(),
        });
    }
    // move toward whichever boundary is reached first
    let (theta, blocking) = if theta_pos.0 <= theta_neg.0 {
        (theta_pos.0, theta_pos.1)
    } else {
        (-theta_neg.0, theta_neg.1)
    };

    for &(a, dir) in &touched {
        ws.weights[a] += theta * dir;
    }
    // the blocking atom reaches zero exactly; clamp any rounding stragglers
    ws.weights[blocking] = 0.0;
    let killed: Vec<usize> = touched
        .iter()
        .map(|&(a, _)| a)
        .filter(|&a| ws.weights[a] <= 0.0)
        .collect();
    for a in killed {
        ws.weights[a] = 0.0;
        if ws.state[a] != AtomState::Dead {
            ws.kill(a, active);
        }
    }
    Ok(())
}

/// One kernel vector of the matrix whose columns are `cols` (each of length
/// `rows`), or `None` if elimination finds no free column. Columns beyond
/// the rank always leave a free column, so `None` signals numerically
/// defective input rather than a structural impossibility.
// index loops mirror the row/column structure; `rank` advances only on pivots
#[allow(clippy::needless_range_loop, clippy::explicit_counter_loop)]
fn kernel_vector(cols: &[Vec<f64>], rows: usize) -> Option<Vec<f64>> {
    let ncols = cols.len();
    debug_assert!(ncols > rows);
    let max_col_norm = cols.iter().map(|c| norm(c)).fold(0.0, f64::max);
    if max_col_norm == 0.0 {
        // everything is dependent; move along the first column alone
        let mut mu = vec![0.0; ncols];
        mu[0] = 1.0;
        return Some(mu);
    }
    let tol = PIVOT_TOL_REL * max_col_norm;

    // row-major working copy
    let mut a: Vec<Vec<f64>> = (0..rows)
        .map(|r| cols.iter().map(|c| c[r]).collect())
        .collect();
    let mut pivots: Vec<(usize, usize)> = Vec::new(); // (col, row)
    let mut free_col = None;
    let mut rank = 0usize;
    for j in 0..ncols {
        // partial pivot within remaining rows
        let (mut best_row, mut best_val) = (rank, 0.0f64);
        for (r, row) in a.iter().enumerate().skip(rank).take(rows - rank) {
            let v = row[j].abs();
            if v > best_val {
                best_val = v;
                best_row = r;
            }
        }
        if best_val <= tol || rank == rows {
            free_col = Some(j);
            break;
        }
        a.swap(rank, best_row);
        for r in rank + 1..rows {
            let factor = a[r][j] / a[rank][j];
            if factor != 0.0 {
                for c in j..ncols {
                    let sub = factor * a[rank][c];
                    a[r][c] -= sub;
                }
            }
        }
        pivots.push((j, rank));
        rank += 1;
    }
    let jf = free_col?;

    // back-substitute: μ[jf] = 1, pivot columns solve R μ = −col_jf
    let mut mu = vec![0.0; ncols];
    mu[jf] = 1.0;
    for idx in (0..pivots.len()).rev() {
        let (pc, pr) = pivots[idx];
        let mut rhs = a[pr][jf];
        for &(qc, _) in pivots.iter().skip(idx + 1) {
            rhs += a[pr][qc] * mu[qc];
        }
        mu[pc] = -rhs / a[pr][pc];
    }
    Some(mu)
}

/// Collapses a reduced ledger to per-agent points `Σ_l ω̃_i^l x_i^l`.
///
/// Only valid when every agent's domain is convex; rejected otherwise.
pub fn reconstruct_convex(instance: &Instance, reduced: &ReducedLedger) -> Result<Vec<Vec<f64>>> {
    for i in 0..instance.num_agents() {
        if !instance.agent(i).domain_is_convex() {
            return Err(Error::InvalidConfig(format!(
                "convex reconstruction requested but agent {i} has a nonconvex domain"
            )));
        }
    }
    Ok(reduced
        .ledger
        .agents
        .iter()
        .map(|a| a.point_average())
        .collect())
}

/// Draws one atom per nontrivial agent with its ledger weight as
/// probability; trivial agents pass their single atom through without
/// consuming randomness, so a fully trivial ledger reconstructs
/// deterministically for every seed.
pub fn reconstruct_sampled(reduced: &ReducedLedger, seed: u64) -> Vec<Vec<f64>> {
    let mut rng: ChaCha8Rng = rng_from_seed(seed);
    reduced
        .ledger
        .agents
        .iter()
        .map(|agent| {
            if agent.atoms.len() == 1 {
                return agent.atoms[0].atom.point.clone();
            }
            let u = uniform_unit(&mut rng) * agent.weight_sum();
            let mut acc = 0.0;
            for wa in &agent.atoms {
                acc += wa.weight;
                if u < acc {
                    return wa.atom.point.clone();
                }
            }
            agent.atoms.last().unwrap().atom.point.clone()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::OracleAtom;

    fn atom(point: &[f64], cost: f64, coupling: &[f64]) -> OracleAtom {
        OracleAtom {
            point: point.to_vec(),
            cost,
            coupling: coupling.to_vec(),
        }
    }

    fn beta_z(ledger: &Ledger, m: usize) -> (f64, Vec<f64>) {
        ledger.beta_z(m)
    }

    #[test]
    fn already_reduced_ledger_is_unchanged() {
        let mut ledger = Ledger::empty(2);
        ledger.agents[0].add(0.5, atom(&[0.0], 0.0, &[0.0]));
        ledger.agents[0].add(0.5, atom(&[1.0], 1.0, &[2.0]));
        ledger.agents[1].add(1.0, atom(&[1.0], -1.0, &[1.0]));
        let reduced = reduce_conic_ledger(&ledger, 1).unwrap();
        assert_eq!(reduced.ledger, ledger);
        assert_eq!(reduced.nontrivial, vec![0]);
    }

    #[test]
    fn three_two_atom_agents_reduce_in_one_dimension() {
        // m = 1: excess 3 > m+1 = 2, so at least one agent must collapse
        let mut ledger = Ledger::empty(3);
        ledger.agents[0].add(0.5, atom(&[0.0], 0.0, &[0.0]));
        ledger.agents[0].add(0.5, atom(&[1.0], 1.0, &[1.0]));
        ledger.agents[1].add(0.25, atom(&[0.0], 2.0, &[-1.0]));
        ledger.agents[1].add(0.75, atom(&[1.0], 0.0, &[3.0]));
        ledger.agents[2].add(0.6, atom(&[0.0], -1.0, &[2.0]));
        ledger.agents[2].add(0.4, atom(&[1.0], 4.0, &[5.0]));
        let (beta_in, z_in) = beta_z(&ledger, 1);

        let reduced = reduce_conic_ledger(&ledger, 1).unwrap();
        assert!(reduced.ledger.excess() <= 2);
        assert!(reduced.nontrivial.len() <= 2);
        let (beta_out, z_out) = beta_z(&reduced.ledger, 1);
        assert!((beta_out - beta_in).abs() < 1e-12);
        assert!((z_out[0] - z_in[0]).abs() < 1e-12);
        for agent in &reduced.ledger.agents {
            let sum = agent.weight_sum();
            assert!((sum - 1.0).abs() < 1e-12);
            assert!(agent.atoms.iter().all(|wa| wa.weight >= 0.0));
        }
    }

    #[test]
    fn reduction_is_idempotent() {
        let mut ledger = Ledger::empty(4);
        let mkatom = |v: f64| atom(&[v], v * 2.0 - 1.0, &[v * v, 1.0 - v]);
        for i in 0..4 {
            let w = 1.0 / 3.0;
            for l in 0..3 {
                ledger.agents[i].add(w, mkatom((i * 3 + l) as f64 * 0.17));
            }
        }
        let once = reduce_conic_ledger(&ledger, 2).unwrap();
        let twice = reduce_conic_ledger(&once.ledger, 2).unwrap();
        assert_eq!(once.ledger, twice.ledger);
    }

    #[test]
    fn sampled_reconstruction_is_deterministic_per_seed() {
        let mut ledger = Ledger::empty(2);
        ledger.agents[0].add(0.3, atom(&[0.0, 1.0], 1.0, &[0.5]));
        ledger.agents[0].add(0.7, atom(&[1.0, 0.0], 2.0, &[1.5]));
        ledger.agents[1].add(1.0, atom(&[1.0, 1.0], 0.0, &[2.0]));
        let reduced = reduce_conic_ledger(&ledger, 1).unwrap();
        let a = reconstruct_sampled(&reduced, 5);
        let b = reconstruct_sampled(&reduced, 5);
        assert_eq!(a, b);
        // degenerate weights always pick the heavy atom
        let mut degen = Ledger::empty(1);
        degen.agents[0].add(1.0, atom(&[0.0], 0.0, &[0.0]));
        degen.agents[0].add(0.0, atom(&[1.0], 1.0, &[1.0]));
        let reduced = reduce_conic_ledger(&degen, 1).unwrap();
        for seed in 0..20 {
            assert_eq!(reconstruct_sampled(&reduced, seed)[0], vec![0.0]);
        }
    }

    #[test]
    fn trivial_ledger_ignores_seed() {
        let mut ledger = Ledger::empty(3);
        for i in 0..3 {
            ledger.agents[i].add(1.0, atom(&[i as f64], i as f64, &[0.0]));
        }
        let reduced = reduce_conic_ledger(&ledger, 1).unwrap();
        let a = reconstruct_sampled(&reduced, 1);
        let b = reconstruct_sampled(&reduced, 999);
        assert_eq!(a, b);
    }
}
