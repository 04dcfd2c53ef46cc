//! Concrete agent families.
//!
//! `ev` is the electric-vehicle charging benchmark agent with an exact greedy
//! oracle over a binary domain. `finite` (explicit point sets) and
//! `box_linear` (boxes with linear costs) are small agent kinds used to build
//! tiny instances with known optima for bound verification.

pub mod box_linear;
pub mod ev;
pub mod finite;

pub use box_linear::BoxLinearAgent;
pub use ev::{generate_ev_instance, EvAgent, EvAgentParams, EvInstanceConfig};
pub use finite::FiniteAgent;
