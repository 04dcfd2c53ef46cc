//! Instance descriptions as structured JSON documents.
//!
//! The document is `{m, b[], tariff?, agents:[{kind, params...}]}`; unknown
//! agent kinds are rejected by the tagged deserializer with the offending
//! kind name. Generated instances round-trip through this form, which is how
//! the CLI persists them.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::agents::{BoxLinearAgent, EvAgent, EvAgentParams, FiniteAgent};
use crate::error::{Error, Result};
use crate::problem::{AgentOracle, Instance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AgentSpec {
    Ev {
        p: f64,
        delta: f64,
        xi: f64,
        e_init: f64,
        e_ref: f64,
        e_max: f64,
    },
    Finite {
        points: Vec<Vec<f64>>,
        costs: Vec<f64>,
        a: Vec<Vec<f64>>,
    },
    BoxLinear {
        lo: Vec<f64>,
        hi: Vec<f64>,
        cost: Vec<f64>,
        a: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub m: usize,
    pub b: Vec<f64>,
    /// Shared electricity tariff; required when any agent has kind `ev`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tariff: Option<Vec<f64>>,
    pub agents: Vec<AgentSpec>,
}

impl InstanceSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance spec serializes")
    }

    pub fn build(&self) -> Result<Instance> {
        if self.b.len() != self.m {
            return Err(Error::InvalidInstance(format!(
                "b has {} rows but m = {}",
                self.b.len(),
                self.m
            )));
        }
        let tariff = self.tariff.clone().map(Arc::new);
        if let Some(t) = &tariff {
            if t.len() != self.m {
                return Err(Error::InvalidInstance(format!(
                    "tariff has {} rows but m = {}",
                    t.len(),
                    self.m
                )));
            }
        }
        let mut agents: Vec<Arc<dyn AgentOracle>> = Vec::with_capacity(self.agents.len());
        for (i, spec) in self.agents.iter().enumerate() {
            let agent: Arc<dyn AgentOracle> = match spec {
                AgentSpec::Ev {
                    p,
                    delta,
                    xi,
                    e_init,
                    e_ref,
                    e_max,
                } => {
                    let tariff = tariff.clone().ok_or_else(|| {
                        Error::InvalidInstance(format!(
                            "agent {i} has kind ev but the instance has no tariff"
                        ))
                    })?;
                    let params = EvAgentParams {
                        p: *p,
                        delta: *delta,
                        xi: *xi,
                        e_init: *e_init,
                        e_ref: *e_ref,
                        e_max: *e_max,
                    };
                    Arc::new(EvAgent::new(params, tariff).map_err(|e| match e {
                        Error::AgentInfeasible { detail, .. } => {
                            Error::AgentInfeasible { agent: i, detail }
                        }
                        other => other,
                    })?)
                }
                AgentSpec::Finite { points, costs, a } => Arc::new(
                    FiniteAgent::new(points.clone(), costs.clone(), a.clone()).map_err(|e| {
                        match e {
                            Error::AgentInfeasible { detail, .. } => {
                                Error::AgentInfeasible { agent: i, detail }
                            }
                            other => other,
                        }
                    })?,
                ),
                AgentSpec::BoxLinear { lo, hi, cost, a } => Arc::new(
                    BoxLinearAgent::new(lo.clone(), hi.clone(), cost.clone(), a.clone()).map_err(
                        |e| match e {
                            Error::AgentInfeasible { detail, .. } => {
                                Error::AgentInfeasible { agent: i, detail }
                            }
                            other => other,
                        },
                    )?,
                ),
            };
            agents.push(agent);
        }
        Instance::new(agents, self.b.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let spec = InstanceSpec {
            m: 2,
            b: vec![1.0, 1.5],
            tariff: Some(vec![0.1, 0.2]),
            agents: vec![
                AgentSpec::Ev {
                    p: 3.0,
                    delta: 1.0,
                    xi: 0.9,
                    e_init: 5.0,
                    e_ref: 7.0,
                    e_max: 20.0,
                },
                AgentSpec::Finite {
                    points: vec![vec![0.0], vec![1.0]],
                    costs: vec![0.0, -1.0],
                    a: vec![vec![1.0], vec![0.5]],
                },
            ],
        };
        let json = spec.to_json();
        let parsed = InstanceSpec::from_json(&json).unwrap();
        assert_eq!(parsed, spec);
        let instance = parsed.build().unwrap();
        assert_eq!(instance.num_agents(), 2);
        assert_eq!(instance.num_rows(), 2);
    }

    #[test]
    fn unknown_kind_reports_name() {
        let text = r#"{"m":1,"b":[0.0],"agents":[{"kind":"mystery"}]}"#;
        let err = InstanceSpec::from_json(text).unwrap_err();
        assert!(err.to_string().contains("mystery"), "got: {err}");
    }

    #[test]
    fn ev_without_tariff_rejected() {
        let text = r#"{"m":1,"b":[0.0],"agents":[
            {"kind":"ev","p":1.0,"delta":1.0,"xi":1.0,"e_init":0.0,"e_ref":0.0,"e_max":1.0}
        ]}"#;
        let err = InstanceSpec::from_json(text).unwrap().build().unwrap_err();
        assert!(err.to_string().contains("tariff"));
    }
}
