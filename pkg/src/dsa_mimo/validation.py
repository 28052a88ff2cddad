"""Solver-versus-oracle checks shared by the ``validate`` command and the tests.

Random WSR instances draw per-user SNRs uniformly in [-5, 25] dB (unit
power budget, pilot power equal to the budget, pilot length K) and weights
uniformly in [0.1, 10], with M = 100 and tau_c = 100.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .power_control import (
    WsrInstance, oracle_wsr, random_feasible_min_sinr, refine_oracle, solve_mmf, solve_wsr,
)
from .system_model import SystemConfig, SystemModel, UserProfile, beta_from_snr, sinr_mrc

SNR_RANGE_DB = (-5.0, 25.0)
WEIGHT_RANGE = (0.1, 10.0)


@dataclass(frozen=True)
class WsrCheck:
    K: int
    solver: float
    oracle: float
    refined: float

    @property
    def dominates(self) -> bool:
        return self.solver >= self.oracle * (1 - 1e-9)

    @property
    def rel_gap(self) -> float:
        return abs(self.solver - self.refined) / self.refined


def random_wsr_instance(K: int, rng) -> tuple[WsrInstance, SystemModel]:
    snr = rng.uniform(*SNR_RANGE_DB, K)
    users = tuple(UserProfile(beta=beta_from_snr(s, 1.0), p_pilot=1.0, p_max=1.0,
                              arrival_prob=0.0, B_max=1.0) for s in snr)
    weights = rng.uniform(*WEIGHT_RANGE, K)
    return WsrInstance(weights), SystemModel(SystemConfig(), users)


def check_wsr(instance: WsrInstance, model: SystemModel, grid: int) -> WsrCheck:
    sol = solve_wsr(instance, model)
    orc = oracle_wsr(instance, model, grid)
    ref = refine_oracle(instance, model, orc)
    return WsrCheck(model.K, sol.objective, orc.objective, ref.objective)


def wsr_battery(n2: int = 50, n3: int = 20, seed: int = 2024,
                grid2: int = 400, grid3: int = 60) -> list[WsrCheck]:
    rng = np.random.default_rng(seed)
    out = []
    for K, n, grid in ((2, n2, grid2), (3, n3, grid3)):
        for _ in range(n):
            out.append(check_wsr(*random_wsr_instance(K, rng), grid))
    return out


def mmf_check(model: SystemModel, n_random: int = 10_000, seed: int = 7) -> dict:
    active = np.ones(model.K, dtype=bool)
    alloc = solve_mmf(active, model)
    gamma = model.channel_quality(alloc.tau_p_used).gamma
    sinr = sinr_mrc(alloc.powers, gamma, model.betas, model.config.M)
    random_best = float(random_feasible_min_sinr(model, active, n_random,
                                                 np.random.default_rng(seed)).max())
    return {
        "spread": float((sinr.max() - sinr.min()) / sinr.min()),
        "min_sinr": float(sinr.min()),
        "random_best": random_best,
    }


def run_battery(n2=50, n3=20, seed=2024, echo=print) -> bool:
    """Run the WSR battery and the MMF check, printing one line per check."""
    from .config import preset

    t0 = time.perf_counter()
    checks = wsr_battery(n2, n3, seed)
    bad = [c for c in checks if not (c.dominates and c.rel_gap <= 1e-3)]
    worst = max(c.rel_gap for c in checks)
    echo(f"wsr-vs-oracle: {len(checks) - len(bad)}/{len(checks)} ok, "
         f"worst gap {worst:.2e} ({time.perf_counter() - t0:.1f}s)")
    mmf = mmf_check(preset("fig3").model)
    mmf_ok = mmf["spread"] <= 1e-9 and mmf["min_sinr"] >= mmf["random_best"]
    echo(f"mmf: spread {mmf['spread']:.1e}, min SINR {mmf['min_sinr']:.4f} "
         f"vs random best {mmf['random_best']:.4f} -> {'ok' if mmf_ok else 'FAIL'}")
    return not bad and mmf_ok
