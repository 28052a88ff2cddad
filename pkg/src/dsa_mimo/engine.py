"""Slotted-time simulation of DSA and the infinite-backlog baselines."""

from __future__ import annotations

import csv
import enum
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .dsa_controller import (
    ControlDecision, UtilitySpec, decide_slot, drift_penalty_bound, max_min_utility,
    nominal_constant, proportional_fair_utility, realized_drift_plus_penalty, sum_utility,
)
from .power_control import DEFAULT_TOL, SolverError, WsrTolerances, solve_mmf, solve_msr
from .queueing import ArrivalProcess, QueueState, update_queues
from .system_model import SystemModel

log = logging.getLogger("dsa_mimo")


class Policy(str, enum.Enum):
    DSA_MMF = "DSA-MMF"
    DSA_MSR = "DSA-MSR"
    DSA_CUSTOM = "DSA-custom"
    MMF = "baseline-MMF"
    MODIFIED_MMF = "baseline-modified-MMF"
    MSR = "baseline-MSR"
    MODIFIED_MSR = "baseline-modified-MSR"

    @property
    def is_dsa(self) -> bool:
        return self.value.startswith("DSA")

    @property
    def is_modified(self) -> bool:
        return "modified" in self.value


def default_utility(policy: Policy, model: SystemModel) -> Optional[UtilitySpec]:
    if policy is Policy.DSA_MMF:
        return max_min_utility()
    if policy is Policy.DSA_MSR:
        return sum_utility()
    if policy is Policy.DSA_CUSTOM:
        return proportional_fair_utility(model.config.A_max)
    return None


class SimulationError(RuntimeError):
    def __init__(self, slot: int, cause: Exception):
        super().__init__(f"slot {slot}: {cause}")
        self.slot = slot
        self.cause = cause


@dataclass(frozen=True)
class StabilityResult:
    stable: bool
    slope: float
    r2: float


@dataclass
class MetricsSeries:
    """Everything recorded by :func:`run`.

    Per-slot arrays have shape ``(horizon, K)``; queue values are taken at
    the start of each slot, before that slot's decision.
    """

    policy: Policy
    model: SystemModel
    horizon: int
    seed: int
    warmup: int
    L: np.ndarray
    Q: np.ndarray
    Y: np.ndarray
    A: np.ndarray
    nu: np.ndarray
    power: np.ndarray
    rate: np.ndarray
    served: np.ndarray
    arrived: np.ndarray
    final_state: QueueState
    runtime_s: float = 0.0
    realized_dpp: Optional[np.ndarray] = None
    dpp_bound: Optional[np.ndarray] = None
    stability: list = field(default_factory=list)

    @property
    def K(self) -> int:
        return self.model.K

    @property
    def measured(self) -> slice:
        return slice(self.warmup, self.horizon)

    @property
    def throughput(self) -> np.ndarray:
        """Time-average delivered bits per channel use."""
        n = self.horizon - self.warmup
        return self.served[self.measured].sum(axis=0) / (self.model.config.tau_c * n)

    @property
    def delay(self) -> np.ndarray:
        return delay_metrics(self)[0]

    @property
    def delay_per_bit(self) -> np.ndarray:
        return delay_metrics(self)[1]

    @property
    def unstable_users(self) -> list[int]:
        return [k for k, s in enumerate(self.stability) if not s.stable]

    @property
    def bound_violations(self) -> int:
        if self.realized_dpp is None:
            return 0
        return int(np.count_nonzero(self.realized_dpp > self.dpp_bound + 1e-9))


def policy_baseline_step(state: QueueState, policy: Policy, model: SystemModel,
                         tol: WsrTolerances = DEFAULT_TOL) -> ControlDecision:
    """Infinite-backlog power control with ungated admission.

    Modified variants only serve users whose reservoir or queue is non-empty;
    the others serve all K users every slot.
    """
    if policy.is_dsa:
        raise ValueError(f"{policy.value} is not a baseline policy")
    A = np.minimum(state.L, model.config.A_max)
    active = state.backlog > 0 if policy.is_modified else np.ones(model.K, dtype=bool)
    if policy in (Policy.MMF, Policy.MODIFIED_MMF):
        allocation = solve_mmf(active, model)
    else:
        allocation = solve_msr(active, model, tol)
    return ControlDecision(np.zeros(model.K), A, allocation)


def run(model: SystemModel, policy: Policy | str, horizon: int, seed: Optional[int] = None,
        utility: Optional[UtilitySpec] = None, check_bound: bool = False, warmup: int = 0,
        tol: WsrTolerances = DEFAULT_TOL, probe_window: Optional[int] = None) -> MetricsSeries:
    """Simulate ``horizon`` slots starting from empty queues.

    Each slot draws arrivals, takes the policy decision on the current
    state, and applies the queue update. With ``check_bound`` the realized
    drift-plus-penalty and its upper bound are recorded for every slot
    (DSA policies only).
    """
    policy = Policy(policy)
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if not 0 <= warmup < horizon:
        raise ValueError("warmup must lie in [0, horizon)")
    seed = model.config.rng_seed if seed is None else int(seed)
    if policy.is_dsa and utility is None:
        utility = default_utility(policy, model)
    check_bound = check_bound and policy.is_dsa

    K = model.K
    arrivals = ArrivalProcess(model.arrival_prob, model.B_max, seed)
    rec = {name: np.zeros((horizon, K)) for name in
           ("L", "Q", "Y", "A", "nu", "power", "rate", "served", "arrived")}
    if check_bound:
        realized = np.zeros(horizon)
        bound = np.zeros(horizon)
        C = nominal_constant(model.single_user_max_rates(), model.mean_arrivals, model.config.eta)

    state = QueueState.empty(K)
    t0 = time.perf_counter()
    for t in range(horizon):
        B = arrivals.draw()
        try:
            if policy.is_dsa:
                decision = decide_slot(state, utility, model, tol)
            else:
                decision = policy_baseline_step(state, policy, model, tol)
        except SolverError as exc:
            raise SimulationError(t, exc) from exc
        nxt = update_queues(state, decision.A, decision.allocation.rates, decision.nu, B)

        rec["L"][t] = state.L
        rec["Q"][t] = state.Q
        rec["Y"][t] = state.Y
        rec["A"][t] = decision.A
        rec["nu"][t] = decision.nu
        rec["power"][t] = decision.allocation.powers
        rec["rate"][t] = decision.allocation.rates
        rec["served"][t] = np.minimum(state.Q, decision.allocation.rates)
        rec["arrived"][t] = B.B
        if check_bound:
            bound[t] = drift_penalty_bound(state, decision, utility, model, constant=C)
            realized[t] = realized_drift_plus_penalty(state, nxt, decision, utility, model)
        state = nxt

    series = MetricsSeries(policy=policy, model=model, horizon=horizon, seed=seed,
                           warmup=warmup, final_state=state,
                           runtime_s=time.perf_counter() - t0, **rec)
    if check_bound:
        series.realized_dpp = realized
        series.dpp_bound = bound
        n_bad = series.bound_violations
        if n_bad:
            worst = int(np.argmax(realized - bound))
            log.warning("drift-plus-penalty bound exceeded on %d of %d slots "
                        "(worst slot %d: realized %.4g > bound %.4g)", n_bad, horizon, worst,
                        realized[worst], bound[worst])
    if horizon >= 8:
        window = probe_window or horizon // 4
        backlog = series.L + series.Q
        series.stability = [
            stability_probe(backlog[:, k], window, lam=model.mean_arrivals[k]) for k in range(K)]
    return series


def delay_metrics(series: MetricsSeries) -> tuple[np.ndarray, np.ndarray]:
    """Little's-law delay per user, in seconds and in seconds per packet bit.

    ``W_k = slot_duration * mean(L_k + Q_k) / mean(delivered_k)``, with the
    backlog including the reservoir. Users that delivered nothing report
    ``inf``.
    """
    sl = series.measured
    backlog = (series.L[sl] + series.Q[sl]).mean(axis=0)
    delivered = series.served[sl].mean(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        delay = np.where(delivered > 0,
                         series.model.config.slot_duration * backlog / delivered, np.inf)
    return delay, delay / series.model.B_max


def delay_curve(series: MetricsSeries) -> np.ndarray:
    """Running Little's-law delay after each slot, shape ``(horizon, K)``."""
    backlog = np.cumsum(series.L + series.Q, axis=0)
    delivered = np.cumsum(series.served, axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(delivered > 0,
                        series.model.config.slot_duration * backlog / delivered, np.inf)


def linear_fit(y) -> tuple[float, float]:
    """Least-squares slope and R^2 of ``y`` against its index."""
    y = np.asarray(y, dtype=float)
    x = np.arange(y.size, dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        return float(slope), 0.0
    ss_res = float(np.sum((y - (slope * x + intercept)) ** 2))
    return float(slope), 1.0 - ss_res / ss_tot


def stability_probe(trajectory, window: int, lam: Optional[float] = None,
                    threshold: Optional[float] = None, r2_min: float = 0.9) -> StabilityResult:
    """Flag a queue as unstable when its final window trends upward.

    Unstable means slope above ``threshold`` (default 1% of ``lam`` bits per
    slot) with R^2 above ``r2_min``.
    """
    y = np.asarray(trajectory, dtype=float)
    if window < 2 or y.size < 2 * window:
        raise ValueError(f"need at least {2 * window} samples for window={window}")
    if threshold is None:
        if lam is None:
            raise ValueError("give either lam or threshold")
        threshold = 0.01 * lam
    slope, r2 = linear_fit(y[-window:])
    return StabilityResult(not (slope > threshold and r2 > r2_min), slope, r2)


SLOT_COLUMNS = ("slot", "user", "L", "Q", "Y", "A", "nu", "power", "rate", "served",
                "arrived", "cum_arrived", "cum_admitted", "cum_served")
SUMMARY_COLUMNS = ("user", "throughput_bits_per_channel_use", "delay_s", "delay_s_per_bit",
                   "mean_backlog_bits", "stable", "slope_bits_per_slot", "r2")
CURVE_COLUMNS = ("slot", "user", "delay_s", "delay_s_per_bit")


def _fmt(x) -> str:
    return repr(float(x))


def emit_csv(series: MetricsSeries, out_dir, prefix: str = "", every: int = 1) -> dict:
    """Write ``slots.csv``, ``summary.csv`` and ``delay_curve.csv``.

    Rows in ``slots.csv`` hold the queues at the start of the slot, the
    decision taken in it, and cumulative counters after it. ``every``
    decimates the per-slot files. Returns the written paths.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {name: out / f"{prefix}{name}.csv" for name in ("slots", "summary", "delay_curve")}

    cum_arr = np.cumsum(series.arrived, axis=0)
    cum_adm = np.cumsum(series.A, axis=0)
    cum_srv = np.cumsum(series.served, axis=0)
    with open(paths["slots"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SLOT_COLUMNS)
        for t in range(0, series.horizon, every):
            for k in range(series.K):
                w.writerow([t, k] + [_fmt(a[t, k]) for a in (
                    series.L, series.Q, series.Y, series.A, series.nu, series.power,
                    series.rate, series.served, series.arrived, cum_arr, cum_adm, cum_srv)])

    delay, per_bit = delay_metrics(series)
    backlog = (series.L + series.Q)[series.measured].mean(axis=0)
    with open(paths["summary"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        for k in range(series.K):
            s = series.stability[k] if series.stability else None
            w.writerow([k, _fmt(series.throughput[k]), _fmt(delay[k]), _fmt(per_bit[k]),
                        _fmt(backlog[k]),
                        "" if s is None else int(s.stable),
                        "" if s is None else _fmt(s.slope),
                        "" if s is None else _fmt(s.r2)])

    curve = delay_curve(series)
    with open(paths["delay_curve"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CURVE_COLUMNS)
        for t in range(every - 1, series.horizon, every):
            for k in range(series.K):
                w.writerow([t, k, _fmt(curve[t, k]), _fmt(curve[t, k] / series.model.B_max[k])])
    return paths
