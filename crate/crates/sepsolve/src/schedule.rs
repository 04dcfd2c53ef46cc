//! Stepsize rules for the dual subgradient methods.

use serde::{Deserialize, Serialize};

/// Either the constant theoretical rule `α = Λ/(Ĝ√T)` backing the
/// convergence bounds, or the diminishing rule `α_t = Λ/√(t+1)` used in the
/// benchmark runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepSchedule {
    /// `α_t = Λ / (Ĝ √T)` for all `t`; `Ĝ` is the subgradient-norm bound
    /// plugged into the rule (any upper bound keeps the theory valid).
    Constant { lambda_big: f64, g_hat: f64 },
    /// `α_t = Λ / √(t+1)`.
    Diminishing { lambda_big: f64 },
}

impl StepSchedule {
    pub fn constant(lambda_big: f64, g_hat: f64) -> Self {
        assert!(lambda_big > 0.0 && g_hat > 0.0);
        Self::Constant { lambda_big, g_hat }
    }

    pub fn diminishing(lambda_big: f64) -> Self {
        assert!(lambda_big > 0.0);
        Self::Diminishing { lambda_big }
    }

    /// Stepsize at iteration `t` of a `t_total`-iteration run.
    pub fn alpha(&self, t: u64, t_total: u64) -> f64 {
        match *self {
            Self::Constant { lambda_big, g_hat } => lambda_big / (g_hat * (t_total as f64).sqrt()),
            Self::Diminishing { lambda_big } => lambda_big / ((t + 1) as f64).sqrt(),
        }
    }

    pub fn lambda_big(&self) -> f64 {
        match *self {
            Self::Constant { lambda_big, .. } | Self::Diminishing { lambda_big } => lambda_big,
        }
    }

    /// Same rule with a different `Λ` (used by grid searches).
    pub fn with_lambda_big(&self, lambda_big: f64) -> Self {
        match *self {
            Self::Constant { g_hat, .. } => Self::Constant { lambda_big, g_hat },
            Self::Diminishing { .. } => Self::Diminishing { lambda_big },
        }
    }
}
