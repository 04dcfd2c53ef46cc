#!/usr/bin/env python3
"""Smoke test for the sepsolve_py extension module.

Builds expect the compiled module on sys.path; see README for the
cargo-build-and-rename recipe. Exercises instance generation, the dual
function, determinism of a stochastic run, and the two-stage solve.
"""

import json
import sys

import sepsolve_py as sp


def approx(a, b, tol=1e-9):
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def main():
    # vector utilities
    assert sp.plus_norm([-1.0, 2.0]) == 2.0
    assert sp.plus_norm([3.0, 4.0]) == 5.0
    assert sp.project_nonneg([-1.0, 2.0]) == [0.0, 2.0]

    # EV instance generation is deterministic under the seed
    config = json.dumps({"n_agents": 12, "m": 6, "seed": 2024})
    inst = sp.generate_ev_instance(config)
    inst2 = sp.generate_ev_instance(config)
    assert inst.to_json() == inst2.to_json(), "generation must be seed-deterministic"
    assert inst.num_agents == 12 and inst.num_rows == 6
    g_tilde, h, d_sq = inst.bounds
    assert g_tilde > 0 and h > 0 and d_sq > 0

    # instances round-trip through JSON
    reloaded = sp.load_instance(inst.to_json())
    assert reloaded.num_agents == 12

    # dual function: value at 0 plus call accounting
    before = inst.oracle_calls()
    value, subgrad = inst.dual_value([0.0] * 6)
    assert inst.oracle_calls() - before == 12, "dual_value costs one call per agent"
    assert len(subgrad) == 6

    # concavity probe on a random-ish pair
    lam1 = [0.05] * 6
    lam2 = [0.0, 0.1, 0.0, 0.1, 0.0, 0.1]
    mid = [0.5 * (a + b) for a, b in zip(lam1, lam2)]
    v1, _ = inst.dual_value(lam1)
    v2, _ = inst.dual_value(lam2)
    vm, _ = inst.dual_value(mid)
    assert vm >= 0.5 * v1 + 0.5 * v2 - 1e-9, "dual function must be concave"

    # per-agent oracle returns a binary point of the right shape
    point, cost, coupling = inst.oracle(0, 1.0, [0.0] * 6)
    assert all(x in (0.0, 1.0) for x in point)
    assert len(coupling) == 6

    # stochastic runs are reproducible bit for bit
    a = sp.solve(inst, "ssg", budget=400, lambda_big=0.5, seed=7)
    b = sp.solve(inst, "ssg", budget=400, lambda_big=0.5, seed=7)
    assert a["trace_csv"] == b["trace_csv"], "same seed must give identical traces"
    assert a["total_calls"] == 400

    # the two-stage pipeline runs end to end and reports its metric
    result = sp.solve(inst, "two-stage", budget=2000, lambda_big=0.5, seed=3)
    assert result["total_calls"] <= 2000
    assert result["metric"] >= 0.0
    assert result["primal_metric"] is not None

    # budget arithmetic helper
    assert sp.iters_for("dsg", 1200, 12) == 100

    print("sepsolve_py smoke test: all checks passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
