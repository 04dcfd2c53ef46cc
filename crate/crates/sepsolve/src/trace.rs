//! Per-run traces keyed by cumulative oracle calls.
//!
//! Every algorithm appends records to a [`RunTrace`] as it spends oracle
//! calls; the call counter is the only x-axis used anywhere, so runs with
//! equal budgets are directly comparable. Traces serialize to CSV with a
//! frozen, versioned column set and round-trip losslessly (floats are
//! written in shortest round-trip form).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const TRACE_COLUMNS: &str = "oracle_calls,phase,dual_value,gap_plus,infeasibility,f_value";
pub const TRACE_VERSION: &str = "v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Dsg,
    Ssg,
    Handoff,
    Bcfw,
    Final,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Phase::Dsg => "dsg",
            Phase::Ssg => "ssg",
            Phase::Handoff => "handoff",
            Phase::Bcfw => "bcfw",
            Phase::Final => "final",
        };
        f.write_str(s)
    }
}

impl FromStr for Phase {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "dsg" => Ok(Phase::Dsg),
            "ssg" => Ok(Phase::Ssg),
            "handoff" => Ok(Phase::Handoff),
            "bcfw" => Ok(Phase::Bcfw),
            "final" => Ok(Phase::Final),
            other => Err(format!("unknown phase `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub oracle_calls: u64,
    pub phase: Phase,
    pub dual_value: Option<f64>,
    pub gap_plus: Option<f64>,
    pub infeasibility: Option<f64>,
    pub f_value: Option<f64>,
}

/// How algorithms sample their trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceOptions {
    /// Record every `stride` iterations (the final state is always recorded).
    pub stride: u64,
    /// Reference dual value for gap reporting, when one is known.
    pub d_ref: Option<f64>,
    /// Evaluate `d(λ_t)` at sampled iterations. For the stochastic methods
    /// this costs `N` oracle calls per sample, which are counted separately
    /// from the algorithm's own budget so they do not pollute equal-budget
    /// comparisons.
    pub eval_dual: bool,
}

impl TraceOptions {
    pub fn every(stride: u64) -> Self {
        Self {
            stride: stride.max(1),
            d_ref: None,
            eval_dual: false,
        }
    }

    pub fn with_d_ref(mut self, d_ref: f64) -> Self {
        self.d_ref = Some(d_ref);
        self
    }

    pub fn with_eval_dual(mut self) -> Self {
        self.eval_dual = true;
        self
    }

    pub fn should_sample(&self, t: u64) -> bool {
        t.is_multiple_of(self.stride)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunTrace {
    pub seed: u64,
    pub config_digest: String,
    pub records: Vec<TraceRecord>,
}

impl RunTrace {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            config_digest: String::new(),
            records: Vec::new(),
        }
    }

    /// Appends a record; the call axis must never decrease.
    pub fn push(&mut self, record: TraceRecord) {
        if let Some(last) = self.records.last() {
            assert!(
                record.oracle_calls >= last.oracle_calls,
                "trace call counter went backwards: {} -> {}",
                last.oracle_calls,
                record.oracle_calls
            );
        }
        self.records.push(record);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "# sepsolve-trace {TRACE_VERSION} seed={} digest={}\n",
            self.seed, self.config_digest
        ));
        out.push_str(TRACE_COLUMNS);
        out.push('\n');
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.oracle_calls,
                r.phase,
                fmt_opt(r.dual_value),
                fmt_opt(r.gap_plus),
                fmt_opt(r.infeasibility),
                fmt_opt(r.f_value)
            ));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut trace = RunTrace::default();
        let mut saw_header = false;
        for (idx, line) in text.lines().enumerate() {
            let lineno = idx + 1;
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                for token in meta.split_whitespace() {
                    if let Some(seed) = token.strip_prefix("seed=") {
                        trace.seed = seed.parse().map_err(|_| Error::TraceParse {
                            line: lineno,
                            detail: format!("bad seed `{seed}`"),
                        })?;
                    } else if let Some(digest) = token.strip_prefix("digest=") {
                        trace.config_digest = digest.to_string();
                    }
                }
                continue;
            }
            if !saw_header {
                if line != TRACE_COLUMNS {
                    return Err(Error::TraceParse {
                        line: lineno,
                        detail: format!("unexpected header `{line}`"),
                    });
                }
                saw_header = true;
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 6 {
                return Err(Error::TraceParse {
                    line: lineno,
                    detail: format!("expected 6 fields, got {}", fields.len()),
                });
            }
            let record = TraceRecord {
                oracle_calls: fields[0].parse().map_err(|_| Error::TraceParse {
                    line: lineno,
                    detail: format!("bad call count `{}`", fields[0]),
                })?,
                phase: fields[1].parse().map_err(|detail| Error::TraceParse {
                    line: lineno,
                    detail,
                })?,
                dual_value: parse_opt(fields[2], lineno)?,
                gap_plus: parse_opt(fields[3], lineno)?,
                infeasibility: parse_opt(fields[4], lineno)?,
                f_value: parse_opt(fields[5], lineno)?,
            };
            trace.push(record);
        }
        Ok(trace)
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x}"),
        None => String::new(),
    }
}

fn parse_opt(field: &str, line: usize) -> Result<Option<f64>> {
    if field.is_empty() {
        return Ok(None);
    }
    field
        .parse()
        .map(Some)
        .map_err(|_| Error::TraceParse {
            line,
            detail: format!("bad float `{field}`"),
        })
}

/// SHA-256 of the canonical (sorted-key) JSON form, so semantically
/// identical configs digest identically regardless of key order.
pub fn config_digest(value: &serde_json::Value) -> String {
    let canonical = serde_json::to_string(value).expect("json value serializes");
    let mut hasher = Sha256::new();
    hasher.update(canonical.as_bytes());
    hex::encode(hasher.finalize())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let mut trace = RunTrace::new(17);
        trace.config_digest = "deadbeef".into();
        trace.push(TraceRecord {
            oracle_calls: 10,
            phase: Phase::Ssg,
            dual_value: Some(-0.123456789012345),
            gap_plus: None,
            infeasibility: Some(0.25),
            f_value: None,
        });
        trace.push(TraceRecord {
            oracle_calls: 20,
            phase: Phase::Bcfw,
            dual_value: None,
            gap_plus: Some(1.0 / 3.0),
            infeasibility: Some(0.0),
            f_value: Some(1e-17),
        });
        let csv = trace.to_csv();
        let parsed = RunTrace::from_csv(&csv).unwrap();
        assert_eq!(parsed, trace);
    }

    #[test]
    #[should_panic(expected = "went backwards")]
    fn rejects_decreasing_calls() {
        let mut trace = RunTrace::new(0);
        trace.push(TraceRecord {
            oracle_calls: 5,
            phase: Phase::Dsg,
            dual_value: None,
            gap_plus: None,
            infeasibility: None,
            f_value: None,
        });
        trace.push(TraceRecord {
            oracle_calls: 4,
            phase: Phase::Dsg,
            dual_value: None,
            gap_plus: None,
            infeasibility: None,
            f_value: None,
        });
    }

    #[test]
    fn digest_ignores_key_order() {
        let a: serde_json::Value = serde_json::from_str(r#"{"x":1,"y":[2,3]}"#).unwrap();
        let b: serde_json::Value = serde_json::from_str(r#"{"y":[2,3],"x":1}"#).unwrap();
        assert_eq!(config_digest(&a), config_digest(&b));
        let c: serde_json::Value = serde_json::from_str(r#"{"x":2,"y":[2,3]}"#).unwrap();
        assert_ne!(config_digest(&a), config_digest(&c));
    }
}
