//! Named invariant suites, runnable from the CLI.
//!
//! Each suite exercises one batch of contracts against independent checks
//! (exhaustive enumeration, direct simulation, Monte Carlo estimates against
//! closed-form bounds) and reports machine-readable pass/fail entries with
//! the measured statistics.

use std::sync::Arc;

use serde::Serialize;
use serde_json::json;

use crate::agents::{EvAgent, EvAgentParams, EvInstanceConfig};
use crate::bracket::{bracket_dual_optimum, brute_force_oracle};
use crate::error::{Error, Result};
use crate::problem::{dual_value, AgentOracle, DualVector, OracleQuery};
use crate::rng::{rng_from_seed, uniform_range};
use crate::schedule::StepSchedule;
use crate::ssg::{run_stochastic_dual_subgradient, SsgOptions};
use crate::vec_ops::{dist, dot, plus_norm, project_nonneg};

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub pass: bool,
    pub details: serde_json::Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub pass: bool,
    pub checks: Vec<CheckReport>,
}

impl SuiteReport {
    fn new(suite: &str, checks: Vec<CheckReport>) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        Self {
            suite: suite.to_string(),
            pass,
            checks,
        }
    }
}

pub const SUITES: &[&str] = &[
    "ev-oracle",
    "max-inequality",
    "concentration",
    "dual-function",
    "iterate-bound",
];

pub fn run_suite(name: &str) -> Result<SuiteReport> {
    match name {
        "ev-oracle" => Ok(ev_oracle_suite()),
        "max-inequality" => Ok(max_inequality_suite()),
        "concentration" => Ok(concentration_suite()),
        "dual-function" => Ok(dual_function_suite()),
        "iterate-bound" => Ok(iterate_bound_suite()),
        other => Err(Error::UnknownSuite(other.to_string())),
    }
}

fn random_ev_agent(rng: &mut rand_chacha::ChaCha8Rng, m: usize) -> EvAgent {
    loop {
        let p = uniform_range(rng, 1.0, 5.0);
        let xi = uniform_range(rng, 0.7, 1.0);
        let e_max = uniform_range(rng, 5.0, 30.0);
        let e_init = uniform_range(rng, 0.0, 0.6) * e_max;
        let e_ref = uniform_range(rng, 0.1, 0.9) * e_max;
        let params = EvAgentParams {
            p,
            delta: 1.0,
            xi,
            e_init,
            e_ref,
            e_max,
        };
        let tariff: Vec<f64> = (0..m).map(|_| uniform_range(rng, -0.1, 0.3)).collect();
        if let Ok(agent) = EvAgent::new(params, Arc::new(tariff)) {
            return agent;
        }
    }
}

/// Greedy-vs-enumeration exactness, output validity, and λ-monotonicity on
/// `m = 8` agents.
fn ev_oracle_suite() -> SuiteReport {
    let mut rng = rng_from_seed(0x5eed_0001);
    let m = 8;
    let cases = 10_000;
    let mut worst_rel = 0.0f64;
    let mut mismatches = 0u64;
    let mut invalid_outputs = 0u64;
    for case in 0..cases {
        let agent = random_ev_agent(&mut rng, m);
        let gamma = if case % 5 == 0 {
            0.0
        } else {
            uniform_range(&mut rng, 0.0, 2.0)
        };
        let lambda: Vec<f64> = (0..m).map(|_| uniform_range(&mut rng, -2.0, 2.0)).collect();
        let query = OracleQuery::new(gamma, lambda);
        let greedy = agent.minimize(&query).unwrap();
        let brute = brute_force_oracle(&agent, &query).unwrap();
        let (g_obj, b_obj) = (greedy.objective(&query), brute.objective(&query));
        let rel = (g_obj - b_obj).abs() / g_obj.abs().max(b_obj.abs()).max(1.0);
        worst_rel = worst_rel.max(rel);
        if rel > 1e-12 {
            mismatches += 1;
        }
        let binary = greedy.point.iter().all(|&x| x == 0.0 || x == 1.0);
        if !binary || !agent.domain_contains(&greedy.point) {
            invalid_outputs += 1;
        }
    }

    // raising one λ row never lowers the optimal value
    let mut monotonicity_violations = 0u64;
    for _ in 0..500 {
        let agent = random_ev_agent(&mut rng, m);
        let gamma = uniform_range(&mut rng, 0.0, 2.0);
        let lambda: Vec<f64> = (0..m).map(|_| uniform_range(&mut rng, -1.0, 1.0)).collect();
        let q0 = OracleQuery::new(gamma, lambda.clone());
        let v0 = agent.minimize(&q0).unwrap().objective(&q0);
        let j = (uniform_range(&mut rng, 0.0, m as f64) as usize).min(m - 1);
        let mut bumped = lambda;
        bumped[j] += uniform_range(&mut rng, 0.0, 1.0);
        let q1 = OracleQuery::new(gamma, bumped);
        let v1 = agent.minimize(&q1).unwrap().objective(&q1);
        if v1 < v0 - 1e-12 * v0.abs().max(1.0) {
            monotonicity_violations += 1;
        }
    }

    SuiteReport::new(
        "ev-oracle",
        vec![
            CheckReport {
                name: "greedy equals brute force (rel 1e-12)".into(),
                pass: mismatches == 0,
                details: json!({"cases": cases, "mismatches": mismatches, "worst_rel": worst_rel}),
            },
            CheckReport {
                name: "outputs are binary domain points".into(),
                pass: invalid_outputs == 0,
                details: json!({"cases": cases, "invalid": invalid_outputs}),
            },
            CheckReport {
                name: "optimum value monotone in lambda".into(),
                pass: monotonicity_violations == 0,
                details: json!({"probes": 500, "violations": monotonicity_violations}),
            },
        ],
    )
}

/// `a ≥ c  ⇒  max(a, 0) ≤ a + |c|` on a million random pairs.
fn max_inequality_suite() -> SuiteReport {
    let mut rng = rng_from_seed(0x5eed_0002);
    let cases = 1_000_000;
    let mut violations = 0u64;
    for _ in 0..cases {
        let c = uniform_range(&mut rng, -10.0, 10.0);
        let a = c + uniform_range(&mut rng, 0.0, 10.0);
        if a.max(0.0) > a + c.abs() {
            violations += 1;
        }
    }
    SuiteReport::new(
        "max-inequality",
        vec![CheckReport {
            name: "max(a,0) <= a + |c| whenever a >= c".into(),
            pass: violations == 0,
            details: json!({"cases": cases, "violations": violations}),
        }],
    )
}

/// Index-counter concentration: per agent,
/// `E|1/N − (I_i+1)/(T−1+N)| ≤ (1/N)√((N−1)/T)`.
fn concentration_suite() -> SuiteReport {
    let n = 10usize;
    let t = 100u64;
    let seeds = 500u64;
    let spec = crate::agents::ev::generate_ev_spec(&EvInstanceConfig::with_defaults(n, 2, 77))
        .unwrap();
    let instance = spec.build().unwrap();
    let mut sums = vec![0.0f64; n];
    for seed in 0..seeds {
        let opts = SsgOptions::new(
            t,
            StepSchedule::diminishing(0.1),
            DualVector::zeros(2),
            seed,
        );
        let run = run_stochastic_dual_subgradient(&instance, &opts).unwrap();
        for (i, &count) in run.counts.iter().enumerate() {
            let dev = (1.0 / n as f64 - (count + 1) as f64 / (t - 1 + n as u64) as f64).abs();
            sums[i] += dev;
        }
    }
    let bound = (1.0 / n as f64) * (((n - 1) as f64) / t as f64).sqrt();
    let means: Vec<f64> = sums.iter().map(|s| s / seeds as f64).collect();
    let worst = means.iter().cloned().fold(0.0, f64::max);
    SuiteReport::new(
        "concentration",
        vec![CheckReport {
            name: "counter deviation within lemma bound for every agent".into(),
            pass: worst <= bound,
            details: json!({"n": n, "t": t, "seeds": seeds, "bound": bound, "worst_mean": worst, "means": means}),
        }],
    )
}

/// Concavity, Lipschitz continuity and the subgradient inequality of the
/// dual function, probed on a small fleet, plus the plus-norm/projection
/// identities.
fn dual_function_suite() -> SuiteReport {
    let spec = crate::agents::ev::generate_ev_spec(&EvInstanceConfig::with_defaults(4, 2, 31))
        .unwrap();
    let instance = spec.build().unwrap();
    let g_tilde = instance.bounds().g_tilde;
    let mut rng = rng_from_seed(0x5eed_0003);
    let probes = 200;
    let mut concavity_violations = 0u64;
    let mut lipschitz_violations = 0u64;
    let mut subgradient_violations = 0u64;
    for _ in 0..probes {
        let l1: Vec<f64> = (0..2).map(|_| uniform_range(&mut rng, 0.0, 2.0)).collect();
        let l2: Vec<f64> = (0..2).map(|_| uniform_range(&mut rng, 0.0, 2.0)).collect();
        let theta = uniform_range(&mut rng, 0.0, 1.0);
        let mix: Vec<f64> = l1
            .iter()
            .zip(&l2)
            .map(|(a, b)| theta * a + (1.0 - theta) * b)
            .collect();
        let e1 = dual_value(&instance, &DualVector::new(l1.clone()).unwrap()).unwrap();
        let e2 = dual_value(&instance, &DualVector::new(l2.clone()).unwrap()).unwrap();
        let em = dual_value(&instance, &DualVector::new(mix.clone()).unwrap()).unwrap();
        let scale = e1.value.abs().max(e2.value.abs()).max(1.0);
        if em.value < theta * e1.value + (1.0 - theta) * e2.value - 1e-9 * scale {
            concavity_violations += 1;
        }
        if (e1.value - e2.value).abs() > g_tilde * dist(&l1, &l2) + 1e-9 * scale {
            lipschitz_violations += 1;
        }
        // d(μ) ≤ d(λ) + g(λ)ᵀ(μ − λ)
        let lin = e1.value
            + dot(
                &e1.subgradient,
                &l2.iter().zip(&l1).map(|(m, l)| m - l).collect::<Vec<_>>(),
            );
        if e2.value > lin + 1e-9 * scale {
            subgradient_violations += 1;
        }
    }

    let mut plusnorm_violations = 0u64;
    for _ in 0..probes {
        let v: Vec<f64> = (0..4).map(|_| uniform_range(&mut rng, -2.0, 2.0)).collect();
        let w: Vec<f64> = (0..4).map(|_| uniform_range(&mut rng, -2.0, 2.0)).collect();
        let pv = project_nonneg(&v);
        // zero plus-norm iff no positive component
        if (plus_norm(&v) == 0.0) != v.iter().all(|&x| x <= 0.0) {
            plusnorm_violations += 1;
        }
        // idempotent and 1-Lipschitz
        if project_nonneg(&pv) != pv {
            plusnorm_violations += 1;
        }
        if dist(&pv, &project_nonneg(&w)) > dist(&v, &w) + 1e-12 {
            plusnorm_violations += 1;
        }
    }

    SuiteReport::new(
        "dual-function",
        vec![
            CheckReport {
                name: "d is concave on probes".into(),
                pass: concavity_violations == 0,
                details: json!({"probes": probes, "violations": concavity_violations}),
            },
            CheckReport {
                name: "d is G-Lipschitz on probes".into(),
                pass: lipschitz_violations == 0,
                details: json!({"probes": probes, "violations": lipschitz_violations, "g_tilde": g_tilde}),
            },
            CheckReport {
                name: "subgradient inequality holds on probes".into(),
                pass: subgradient_violations == 0,
                details: json!({"probes": probes, "violations": subgradient_violations}),
            },
            CheckReport {
                name: "plus-norm and projection identities".into(),
                pass: plusnorm_violations == 0,
                details: json!({"probes": probes, "violations": plusnorm_violations}),
            },
        ],
    )
}

/// Multiplier growth of the stochastic method:
/// `E‖λ_t − λ*‖² ≤ ‖λ_0 − λ*‖² + t G̃² α²` within three standard errors.
fn iterate_bound_suite() -> SuiteReport {
    // short-horizon knobs keep the coupled fleet Slater-feasible so the
    // bracket exists inside a small box
    let mut config = EvInstanceConfig::with_defaults(5, 2, 13);
    config.e_init_frac = (0.1, 0.4);
    config.e_ref_frac = (0.2, 0.5);
    config.p_max_frac = 1.0;
    let spec = crate::agents::ev::generate_ev_spec(&config).unwrap();
    let instance = spec.build().unwrap();
    let reference = bracket_dual_optimum(&instance, 0.002, 1.0).unwrap();
    let lambda_star = reference.lambda_star_candidate.entries().to_vec();
    let g_tilde = instance.bounds().g_tilde;
    let t_total = 64u64;
    let seeds = 200u64;
    let schedule = StepSchedule::constant(1.0, g_tilde);
    let alpha = schedule.alpha(0, t_total);
    let checkpoints = [16u64, 32, 64];
    let mut samples: Vec<Vec<f64>> = vec![Vec::new(); checkpoints.len()];
    for seed in 0..seeds {
        let mut opts = SsgOptions::new(t_total, schedule, DualVector::zeros(2), seed);
        opts.capture_iterates = true;
        let run = run_stochastic_dual_subgradient(&instance, &opts).unwrap();
        let iterates = run.iterates.unwrap();
        for (slot, &t) in checkpoints.iter().enumerate() {
            let d = dist(&iterates[t as usize], &lambda_star);
            samples[slot].push(d * d);
        }
    }
    let mut checks = Vec::new();
    let start = dist(&[0.0; 2], &lambda_star).powi(2);
    for (slot, &t) in checkpoints.iter().enumerate() {
        let n = samples[slot].len() as f64;
        let mean = samples[slot].iter().sum::<f64>() / n;
        let var = samples[slot]
            .iter()
            .map(|v| (v - mean) * (v - mean))
            .sum::<f64>()
            / (n - 1.0);
        let se = (var / n).sqrt();
        let bound = start + t as f64 * g_tilde * g_tilde * alpha * alpha;
        checks.push(CheckReport {
            name: format!("E||lambda_t - lambda*||^2 within bound at t = {t}"),
            pass: mean <= bound + 3.0 * se,
            details: json!({"t": t, "mean": mean, "bound": bound, "se": se, "seeds": seeds}),
        });
    }
    SuiteReport::new("iterate-bound", checks)
}
