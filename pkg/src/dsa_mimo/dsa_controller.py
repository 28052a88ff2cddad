"""Per-slot drift-plus-penalty control: auxiliary variables, admission, rates.

The Lyapunov function is ``0.5 * sum Q^2 + 0.5 * eta * sum Y^2``. Each slot
the controller picks auxiliary variables ``nu``, admitted bits ``A`` and a
power allocation that minimize the per-slot upper bound on
drift-minus-V-times-utility.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .power_control import PowerAllocation, WsrInstance, WsrTolerances, DEFAULT_TOL, solve_wsr
from .queueing import QueueState
from .system_model import SystemModel

MAX_MIN = "max-min"
SUM = "sum"
CUSTOM = "custom"


class AuxiliaryConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class UtilitySpec:
    """Concave, element-wise non-decreasing utility of the auxiliary vector.

    ``gradient`` is required for custom utilities, which are solved by
    projected gradient ascent.
    """

    kind: str
    value: Callable[[np.ndarray], float]
    gradient: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        if self.kind not in (MAX_MIN, SUM, CUSTOM):
            raise ValueError(f"unknown utility kind {self.kind!r}")
        if self.kind == CUSTOM and self.gradient is None:
            raise ValueError("custom utilities need a gradient")

    def __call__(self, nu) -> float:
        return float(self.value(np.asarray(nu, dtype=float)))

    def spot_check_concavity(self, K: int, A_max: float, rng, trials: int = 200,
                             atol: float = 1e-9) -> bool:
        """Random midpoint-concavity and monotonicity check on the box."""
        for _ in range(trials):
            x = rng.uniform(0, A_max, K)
            y = rng.uniform(0, A_max, K)
            mid = self(0.5 * (x + y))
            if mid < 0.5 * (self(x) + self(y)) - atol * max(1.0, abs(mid)):
                return False
            if self(np.maximum(x, y)) < self(x) - atol * max(1.0, abs(mid)):
                return False
        return True


def max_min_utility() -> UtilitySpec:
    return UtilitySpec(MAX_MIN, lambda nu: float(np.min(nu)))


def sum_utility() -> UtilitySpec:
    return UtilitySpec(SUM, lambda nu: float(np.sum(nu)), lambda nu: np.ones_like(nu))


def proportional_fair_utility(scale: float) -> UtilitySpec:
    """``scale * sum log(1 + nu_k / scale)``, in bits."""
    return UtilitySpec(
        CUSTOM,
        lambda nu: float(scale * np.sum(np.log1p(nu / scale))),
        lambda nu: 1.0 / (1.0 + nu / scale),
    )


@dataclass(frozen=True)
class ControlDecision:
    nu: np.ndarray
    A: np.ndarray
    allocation: PowerAllocation
    drift_penalty_bound: Optional[float] = None


def auxiliary_objective(utility: UtilitySpec, nu, Y, V: float, eta: float) -> float:
    nu = np.asarray(nu, dtype=float)
    return V * utility(nu) - eta * float(np.dot(Y, nu))


def solve_auxiliary(utility: UtilitySpec, Y, V: float, eta: float, A_max: float) -> np.ndarray:
    """Maximize ``V f(nu) - eta * Y . nu`` over ``[0, A_max]^K``.

    Max-min and sum utilities have threshold solutions; on the boundary
    (V equal to the threshold) the zero branch is taken.
    """
    Y = np.asarray(Y, dtype=float)
    if np.any(Y < 0):
        raise ValueError("virtual queues must be non-negative")
    if not V > 0 or not 0 < eta <= 1:
        raise ValueError("need V > 0 and 0 < eta <= 1")
    if utility.kind == MAX_MIN:
        level = A_max if V > eta * Y.sum() else 0.0
        return np.full(Y.size, level)
    if utility.kind == SUM:
        return np.where(V > eta * Y, A_max, 0.0)
    return projected_gradient_auxiliary(utility, Y, V, eta, A_max)


def projected_gradient_auxiliary(utility: UtilitySpec, Y, V: float, eta: float, A_max: float,
                                 tol: float = 1e-12, max_iter: int = 20000) -> np.ndarray:
    """Projected gradient ascent for the auxiliary subproblem.

    Step rule: the first trial step moves the steepest coordinate by A_max;
    Armijo backtracking (factor 1/2, sufficient-increase 1e-4) and doubling
    after each accepted step. Stops when an iterate moves less than
    ``tol * A_max`` in every coordinate.

    Max-min utilities are non-smooth; they are handled in the lifted form
    ``max V s - eta Y . nu  s.t. s <= nu_k``, where the objective is linear
    and the projection is onto a polyhedron.
    """
    Y = np.asarray(Y, dtype=float)
    if utility.kind == MAX_MIN:
        x = _pga_max_min(Y, V, eta, A_max, tol, max_iter)
        return _snap_to_bounds(utility, x, Y, V, eta, A_max)

    def h(x):
        return auxiliary_objective(utility, x, Y, V, eta)

    x = np.full(Y.size, 0.5 * A_max)
    hx = h(x)
    step = None
    for _ in range(max_iter):
        g = V * np.asarray(utility.gradient(x), dtype=float) - eta * Y
        gmax = np.max(np.abs(g))
        if gmax == 0.0:
            return _snap_to_bounds(utility, x, Y, V, eta, A_max)
        if step is None:
            step = A_max / gmax
        while True:
            x_new = np.clip(x + step * g, 0.0, A_max)
            h_new = h(x_new)
            if h_new >= hx + 1e-4 * np.dot(g, x_new - x) or step * gmax < tol * A_max:
                break
            step *= 0.5
        moved = np.max(np.abs(x_new - x))
        x, hx = x_new, h_new
        if moved <= tol * A_max:
            return _snap_to_bounds(utility, x, Y, V, eta, A_max)
        step *= 2.0
    raise AuxiliaryConvergenceError(f"projected gradient did not converge in {max_iter} iterations")


def _snap_to_bounds(utility, x, Y, V, eta, A_max, rel=1e-9):
    """Move coordinates lying within ``rel * A_max`` of a box face onto it.

    Bisection inside the projection leaves iterates a few ulps off the
    active faces; the snapped point is kept only if it is no worse.
    """
    band = rel * A_max
    snapped = np.where(x <= band, 0.0, np.where(x >= A_max - band, A_max, x))
    before = auxiliary_objective(utility, x, Y, V, eta)
    after = auxiliary_objective(utility, snapped, Y, V, eta)
    return snapped if after >= before else x


def _project_lifted(v, s, A_max):
    """Euclidean projection of (v, s) onto {s <= nu_k, 0 <= nu_k <= A_max}."""
    floor = np.maximum(v, 0.0)

    def slope(t):
        return (t - s) + np.sum(np.where(t > floor, t - v, 0.0))

    if slope(A_max) <= 0.0:
        t = A_max
    else:
        lo, hi = min(s, 0.0), A_max
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if slope(mid) > 0.0:
                hi = mid
            else:
                lo = mid
            if hi - lo <= 1e-15 * A_max:
                break
        t = 0.5 * (lo + hi)
    return np.minimum(np.maximum(v, max(t, 0.0)), A_max), t


def _pga_max_min(Y, V, eta, A_max, tol, max_iter):
    g_nu = -eta * Y
    g_s = V
    scale = max(V, np.max(np.abs(g_nu)))
    step = A_max / scale
    nu = np.full(Y.size, 0.5 * A_max)
    s = float(nu.min())
    for _ in range(max_iter):
        nu_new, s_new = _project_lifted(nu + step * g_nu, s + step * g_s, A_max)
        moved = max(np.max(np.abs(nu_new - nu)), abs(s_new - s))
        nu, s = nu_new, s_new
        if moved <= tol * A_max:
            return nu
        step *= 2.0
    raise AuxiliaryConvergenceError(f"projected gradient did not converge in {max_iter} iterations")


def admit(L, Q, Y, eta: float, A_max: float) -> np.ndarray:
    """Admit ``min(L, A_max)`` where ``Q <= eta * Y``, nothing elsewhere."""
    L = np.asarray(L, dtype=float)
    Q = np.asarray(Q, dtype=float)
    Y = np.asarray(Y, dtype=float)
    return np.where(Q <= eta * Y, np.minimum(L, A_max), 0.0)


def decide_slot(state: QueueState, utility: UtilitySpec, model: SystemModel,
                tol: WsrTolerances = DEFAULT_TOL) -> ControlDecision:
    """One DSA slot: auxiliary variables, admission, then WSR with weights Q."""
    cfg = model.config
    nu = solve_auxiliary(utility, state.Y, cfg.V, cfg.eta, cfg.A_max)
    A = admit(state.L, state.Q, state.Y, cfg.eta, cfg.A_max)
    allocation = solve_wsr(WsrInstance(state.Q, tol), model)
    return ControlDecision(nu, A, allocation)


# --------------------------------------------------------------------------
# drift diagnostics

def lyapunov(Q, Y, eta: float) -> float:
    Q = np.asarray(Q, dtype=float)
    Y = np.asarray(Y, dtype=float)
    return 0.5 * float(Q @ Q) + 0.5 * eta * float(Y @ Y)


def nominal_constant(R_max, lam, eta: float) -> float:
    """``0.5 sum R_max^2 + (2 eta + 1)/2 sum lam^2``."""
    R_max = np.asarray(R_max, dtype=float)
    lam = np.asarray(lam, dtype=float)
    return 0.5 * float(R_max @ R_max) + 0.5 * (2 * eta + 1) * float(lam @ lam)


def realized_constant(decision: ControlDecision, eta: float) -> float:
    """Per-realization constant ``0.5 sum R^2 + (1+eta)/2 sum A^2 + eta/2 sum nu^2``.

    The drift bound holds slot by slot with this in place of the
    expectation-based constant.
    """
    R = decision.allocation.rates
    A = decision.A
    nu = decision.nu
    return 0.5 * float(R @ R) + 0.5 * (1 + eta) * float(A @ A) + 0.5 * eta * float(nu @ nu)


def drift_penalty_bound(state: QueueState, decision: ControlDecision, utility: UtilitySpec,
                        model: SystemModel, lam=None, R_max=None,
                        constant: Optional[float] = None) -> float:
    """Right-hand side of the drift-plus-penalty bound for a realized decision.

    ``lam`` defaults to the exact Bernoulli means and ``R_max`` to the
    single-user full-power rates.
    """
    cfg = model.config
    if constant is None:
        lam = model.mean_arrivals if lam is None else lam
        R_max = model.single_user_max_rates() if R_max is None else R_max
        constant = nominal_constant(R_max, lam, cfg.eta)
    A = decision.A
    admission = float(A @ (cfg.eta * state.Y - state.Q))
    auxiliary = auxiliary_objective(utility, decision.nu, state.Y, cfg.V, cfg.eta)
    service = float(state.Q @ decision.allocation.rates)
    return constant - admission - auxiliary - service


def realized_drift_plus_penalty(state: QueueState, next_state: QueueState,
                                decision: ControlDecision, utility: UtilitySpec,
                                model: SystemModel) -> float:
    cfg = model.config
    drift = lyapunov(next_state.Q, next_state.Y, cfg.eta) - lyapunov(state.Q, state.Y, cfg.eta)
    return drift - cfg.V * utility(decision.nu)
