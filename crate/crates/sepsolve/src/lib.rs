//! Dual decomposition solvers for large-scale separable optimization under
//! affine coupling constraints.
//!
//! The problem: minimize `(1/N) Σ_i cost_i(x_i)` subject to
//! `(1/N) Σ_i A_i x_i ≤ b` with each `x_i` in its own compact domain, where
//! the only access to an agent is an exact minimization oracle for
//! `γ·cost_i + λᵀA_i x_i`. The crate provides:
//!
//! * the deterministic dual subgradient baseline ([`dsg`]),
//! * a two-stage pipeline — stochastic dual subgradient ([`ssg`]) followed by
//!   block-coordinate Frank-Wolfe ([`bcfw`]) — that reaches comparable primal
//!   accuracy with far fewer oracle calls per agent,
//! * an exact conic Caratheodory reduction ([`caratheodory`]) that turns the
//!   Frank-Wolfe output into primal points for nonconvex agents while
//!   keeping the Shapley-Folkman duality-gap guarantee,
//! * the electric-vehicle charging benchmark ([`agents::ev`]) with an exact
//!   greedy oracle, and
//! * a seeded experiment harness ([`experiment`], [`bracket`], [`verify`])
//!   producing byte-reproducible CSV traces.

// validations deliberately use `!(x > 0.0)` so NaN inputs fail them
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agents;
pub mod bcfw;
pub mod bracket;
pub mod caratheodory;
pub mod dsg;
pub mod error;
pub mod experiment;
pub mod ledger;
pub mod problem;
pub mod rng;
pub mod schedule;
pub mod serial;
pub mod ssg;
pub mod trace;
pub mod two_stage;
pub mod vec_ops;
pub mod verify;

pub use error::{Error, Result};
pub use ledger::{AgentLedger, Ledger, WeightedAtom};
pub use problem::{
    coupling_residual, dual_value, infeasibility, primal_cost, AgentOracle, DualEvaluation,
    DualVector, Instance, InstanceBounds, OracleAtom, OracleQuery,
};
pub use schedule::StepSchedule;
pub use vec_ops::{plus_norm, project_nonneg};
