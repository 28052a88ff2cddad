"""Exit criteria for the package, one test per criterion.

Each test records a PASS/FAIL line that is printed in the pytest terminal
summary (section "acceptance criteria").
"""

import time

import numpy as np
import pytest

from dsa_mimo.config import preset
from dsa_mimo.dsa_controller import (
    auxiliary_objective, max_min_utility, projected_gradient_auxiliary, solve_auxiliary,
    sum_utility,
)
from dsa_mimo.engine import delay_curve, emit_csv, linear_fit, run
from dsa_mimo.queueing import QueueState, update_queues
from dsa_mimo.validation import mmf_check, wsr_battery

from conftest import record


def test_1_solver_oracle_equivalence():
    t0 = time.perf_counter()
    checks = wsr_battery(n2=50, n3=20, seed=2024, grid2=400, grid3=60)
    elapsed = time.perf_counter() - t0
    n_dom = sum(c.dominates for c in checks)
    worst = max(c.rel_gap for c in checks)
    ok = n_dom == len(checks) and worst <= 1e-3 and elapsed < 60
    record("1 solver-oracle", ok, f"{n_dom}/{len(checks)} dominate grid, worst refined gap "
                                  f"{worst:.1e}, {elapsed:.1f}s")
    assert len(checks) == 70
    assert n_dom == len(checks)
    assert worst <= 1e-3
    assert elapsed < 60


def test_2_mmf_optimality(fig3_model):
    t0 = time.perf_counter()
    r = mmf_check(fig3_model, n_random=10_000, seed=7)
    elapsed = time.perf_counter() - t0
    ok = r["spread"] <= 1e-9 and r["min_sinr"] >= r["random_best"] and elapsed < 5
    record("2 mmf optimality", ok, f"spread {r['spread']:.1e}, min SINR {r['min_sinr']:.3f} "
                                   f">= random {r['random_best']:.3f}, {elapsed:.2f}s")
    assert r["spread"] <= 1e-9
    assert r["min_sinr"] >= r["random_best"]
    assert elapsed < 5


def test_3_lyapunov_bound(fig3_model):
    t0 = time.perf_counter()
    s = run(fig3_model, "DSA-MMF", 10_000, seed=0, check_bound=True)
    elapsed = time.perf_counter() - t0
    excess = s.realized_dpp - s.dpp_bound
    violations = s.bound_violations
    first = int(np.argmax(excess > 1e-9)) if violations else -1
    record("3 drift-plus-penalty bound", violations == 0 and elapsed < 120,
           f"{violations} violating slots of 10000 (first at slot {first}, "
           f"max excess {excess.max():.3g}), {elapsed:.1f}s")
    assert elapsed < 120
    assert violations == 0


@pytest.fixture(scope="module")
def fig3_runs(fig3_model):
    return {p: run(fig3_model, p, 10_000, seed=0) for p in ("DSA-MMF", "baseline-modified-MMF")}


def test_4_fig3_throughput(fig3_runs):
    dsa = fig3_runs["DSA-MMF"].throughput
    mod = fig3_runs["baseline-modified-MMF"].throughput
    rel = np.abs(dsa - mod) / mod
    record("4 fig3 throughput", bool(np.all(rel <= 0.05)),
           f"max relative difference {rel.max():.2%}")
    assert np.all(rel <= 0.05)


@pytest.fixture(scope="module")
def fig5_runs(fig5_model):
    out = {}
    for p in ("DSA-MSR", "baseline-MSR", "baseline-modified-MSR"):
        out[p] = run(fig5_model, p, 20_000, seed=0)
    return out


def quarter_means(curve):
    """Mean of the delay curve over the middle half and over the final quarter."""
    n = curve.size
    return curve[n // 4: 3 * n // 4].mean(), curve[3 * n // 4:].mean()


def test_5_fig5_fig6_stability(fig5_runs):
    t_total = sum(s.runtime_s for s in fig5_runs.values())
    dsa = fig5_runs["DSA-MSR"]
    msr = fig5_runs["baseline-MSR"]
    mod = fig5_runs["baseline-modified-MSR"]

    unstable_msr = msr.unstable_users
    unstable_mod = mod.unstable_users
    dsa_stable = not dsa.unstable_users

    k = unstable_msr[0] if unstable_msr else 0
    msr_curve = delay_curve(msr)[:, k]
    half = msr_curve[msr_curve.size // 2:]
    slope, r2 = linear_fit(half)
    msr_grows = slope > 0 and r2 > 0.9

    dsa_curves = delay_curve(dsa)
    bounded = []
    for j in range(dsa.K):
        mid, final = quarter_means(dsa_curves[:, j])
        bounded.append(final <= 2 * mid)
    ok = (bool(unstable_msr) and bool(unstable_mod) and dsa_stable and msr_grows
          and all(bounded) and t_total < 300)
    record("5 fig5/6 stability", ok,
           f"unstable: MSR {unstable_msr}, modified {unstable_mod}, DSA "
           f"{dsa.unstable_users}; MSR user {k} delay slope {slope:.2e} s/slot R2 {r2:.3f}; "
           f"DSA bounded {sum(bounded)}/{dsa.K}; {t_total:.0f}s")
    assert unstable_msr and unstable_mod
    assert dsa_stable
    assert msr_grows
    assert all(bounded)
    assert t_total < 300


def test_6_queue_invariants():
    rng = np.random.default_rng(123)
    K, n, A_max = 5, 100_000, 50.0
    draws = {
        "A_frac": rng.uniform(0, 1, (n, K)) * (rng.random((n, K)) < 0.8),
        "A_full": rng.random((n, K)) < 0.3,
        "R": rng.exponential(25.0, (n, K)) * (rng.random((n, K)) < 0.85),
        "nu": rng.uniform(0, A_max, (n, K)) * (rng.random((n, K)) < 0.5),
        "B": rng.uniform(0, A_max, (n, K)) * (rng.random((n, K)) < 0.45),
    }

    def trajectory():
        s = QueueState.empty(K)
        bad = 0
        for t in range(n):
            cap = np.minimum(s.L, A_max)
            A = np.where(draws["A_full"][t], cap, draws["A_frac"][t] * cap)
            nxt = update_queues(s, A, draws["R"][t], draws["nu"][t], draws["B"][t])
            bad += not (
                np.all(nxt.L >= 0) and np.all(nxt.Q >= 0) and np.all(nxt.Y >= 0)
                and np.all(nxt.cumulative_served <= nxt.cumulative_admitted)
                and np.all(nxt.cumulative_admitted <= nxt.cumulative_arrived)
                and np.all(nxt.cumulative_served >= s.cumulative_served)
                and np.all(nxt.cumulative_admitted >= s.cumulative_admitted)
                and np.all(nxt.cumulative_arrived >= s.cumulative_arrived)
                and np.all(nxt.Q <= s.Q + A_max))
            s = nxt
        return s, bad

    first, bad = trajectory()
    second, _ = trajectory()
    replay = all(np.array_equal(getattr(first, f), getattr(second, f))
                 for f in ("L", "Q", "Y", "cumulative_arrived", "cumulative_admitted",
                           "cumulative_served"))
    record("6 queue invariants", bad == 0 and replay,
           f"{n} transitions, {bad} invariant breaks, replay identical: {replay}")
    assert bad == 0
    assert replay


def test_7_auxiliary_closed_forms():
    rng = np.random.default_rng(77)
    worst = 0.0
    for _ in range(100):
        K = int(rng.integers(1, 11))
        V = float(10 ** rng.uniform(2, 6))
        eta = float(rng.uniform(0.01, 1.0))
        A_max = float(10 ** rng.uniform(1, 4))
        # spread Y around both thresholds
        Y = rng.uniform(0, 2 * V / eta, K) * rng.choice([1.0, 1.0 / K], K)
        for u in (max_min_utility(), sum_utility()):
            closed = auxiliary_objective(u, solve_auxiliary(u, Y, V, eta, A_max), Y, V, eta)
            pga = auxiliary_objective(u, projected_gradient_auxiliary(u, Y, V, eta, A_max),
                                      Y, V, eta)
            worst = max(worst, abs(closed - pga) / max(1.0, abs(closed)))
    record("7 auxiliary closed forms", worst <= 1e-6, f"worst relative objective gap {worst:.1e}")
    assert worst <= 1e-6


@pytest.mark.parametrize("name", ["fig3", "fig4", "fig5", "fig6"])
def test_8_determinism(name, tmp_path):
    rc = preset(name)
    same = True
    for policy in rc.policies:
        paths = []
        for rep in ("a", "b"):
            s = run(rc.model, policy, 1000, seed=rc.seed)
            paths.append(emit_csv(s, tmp_path / rep, prefix=f"{policy.value}_"))
        same &= all(paths[0][k].read_bytes() == paths[1][k].read_bytes() for k in paths[0])
    record(f"8 determinism {name}", same, "byte-identical CSV across two runs" if same
           else "CSV differs")
    assert same
