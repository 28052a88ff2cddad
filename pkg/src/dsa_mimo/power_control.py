"""Per-slot power allocation for the MRC uplink.

Weighted sum rate (WSR) is solved through the common SINR denominator. With
``D = sum_j beta_j p_j`` held fixed, each SINR becomes ``a_k p_k`` with
``a_k = M gamma_k / (1 + D)``, and the weighted log-sum subject to
``sum_k beta_k p_k = D`` is concave with a water-filling solution. A 1-D
search over D (grid, then golden section) recovers the global optimum.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .system_model import SystemModel, gamma_array, rate_bits, sinr_mrc

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0

_OK, _BISECT_FAILED, _GOLDEN_FAILED = 0, 1, 2


class SolverError(RuntimeError):
    """Raised when a power-control solver misses its tolerance."""


@dataclass(frozen=True)
class WsrTolerances:
    grid_points: int = 256
    xtol_rel: float = 1e-8    # golden-section width, relative to the D range
    feas_tol: float = 1e-10   # |sum beta p - D|, absolute
    rtol: float = 1e-6        # refined optimum may not trail the grid best by more
    max_bisect: int = 200
    max_golden: int = 200


DEFAULT_TOL = WsrTolerances()


@dataclass(frozen=True)
class WsrInstance:
    weights: np.ndarray
    tol: WsrTolerances = field(default=DEFAULT_TOL)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1:
            raise ValueError("weights must be a 1-D array")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite and non-negative")
        object.__setattr__(self, "weights", w)

    @property
    def active_set(self) -> np.ndarray:
        return np.flatnonzero(self.weights > 0)

    @property
    def tau_p(self) -> int:
        return int(np.count_nonzero(self.weights > 0))


@dataclass(frozen=True)
class PowerAllocation:
    powers: np.ndarray
    rates: np.ndarray
    objective: float
    tau_p_used: int

    @classmethod
    def zeros(cls, K: int) -> "PowerAllocation":
        return cls(np.zeros(K), np.zeros(K), 0.0, 0)


def _allocation(model: SystemModel, powers, tau_p, objective_of) -> PowerAllocation:
    rates = model.rates(powers, tau_p) if tau_p > 0 else np.zeros(model.K)
    return PowerAllocation(powers, rates, float(objective_of(rates)), tau_p)


# --------------------------------------------------------------------------
# numba kernels

@njit(cache=True)
def _fill(mu, w, a, beta, pmax, p):
    s = 0.0
    for k in range(w.size):
        if w[k] > 0.0:
            x = w[k] / (mu * beta[k]) - 1.0 / a[k]
            if x < 0.0:
                x = 0.0
            elif x > pmax[k]:
                x = pmax[k]
            p[k] = x
            s += beta[k] * x
        else:
            p[k] = 0.0
    return s


@njit(cache=True)
def _inner(D, w, gain, beta, pmax, feas_tol, max_bisect, p):
    """Best weighted log-sum at interference level D; writes powers to ``p``.

    Returns (value, ok).
    """
    K = w.size
    a = gain / (1.0 + D)
    d_max = 0.0
    for k in range(K):
        if w[k] > 0.0:
            d_max += beta[k] * pmax[k]
    if D <= 0.0:
        for k in range(K):
            p[k] = 0.0
        return 0.0, True
    if D >= d_max:
        val = 0.0
        for k in range(K):
            if w[k] > 0.0:
                p[k] = pmax[k]
                val += w[k] * math.log1p(a[k] * pmax[k])
            else:
                p[k] = 0.0
        return val, True

    mu_lo = np.inf
    mu_hi = 0.0
    for k in range(K):
        if w[k] > 0.0:
            top = w[k] * a[k] / beta[k]
            bottom = top / (1.0 + a[k] * pmax[k])
            mu_hi = max(mu_hi, top)
            mu_lo = min(mu_lo, bottom)

    ok = False
    for _ in range(max_bisect):
        mu = math.sqrt(mu_lo * mu_hi)
        s = _fill(mu, w, a, beta, pmax, p)
        if abs(s - D) <= feas_tol:
            ok = True
            break
        if s > D:
            mu_lo = mu
        else:
            mu_hi = mu

    # score the powers at their realized interference, not the nominal D
    s = 0.0
    for k in range(K):
        s += beta[k] * p[k]
    val = 0.0
    for k in range(K):
        if w[k] > 0.0:
            val += w[k] * math.log1p(gain[k] * p[k] / (1.0 + s))
    return val, ok


@njit(cache=True)
def _solve_wsr(w, gain, beta, pmax, n_grid, xtol_rel, feas_tol, rtol,
               max_bisect, max_golden):
    K = w.size
    p = np.zeros(K)
    d_max = 0.0
    for k in range(K):
        if w[k] > 0.0:
            d_max += beta[k] * pmax[k]

    best_i = 0
    best_g = -np.inf
    for i in range(n_grid):
        D = d_max * i / (n_grid - 1)
        g, ok = _inner(D, w, gain, beta, pmax, feas_tol, max_bisect, p)
        if not ok:
            return p, D, _BISECT_FAILED
        if g > best_g:  # strict: ties keep the smaller D
            best_g = g
            best_i = i

    lo = d_max * max(best_i - 1, 0) / (n_grid - 1)
    hi = d_max * min(best_i + 1, n_grid - 1) / (n_grid - 1)
    width = xtol_rel * d_max
    c = hi - _INV_PHI * (hi - lo)
    d = lo + _INV_PHI * (hi - lo)
    gc, ok_c = _inner(c, w, gain, beta, pmax, feas_tol, max_bisect, p)
    gd, ok_d = _inner(d, w, gain, beta, pmax, feas_tol, max_bisect, p)
    if not (ok_c and ok_d):
        return p, c, _BISECT_FAILED
    converged = False
    for _ in range(max_golden):
        if hi - lo <= width:
            converged = True
            break
        if gc >= gd:
            hi = d
            d = c
            gd = gc
            c = hi - _INV_PHI * (hi - lo)
            gc, ok = _inner(c, w, gain, beta, pmax, feas_tol, max_bisect, p)
        else:
            lo = c
            c = d
            gc = gd
            d = lo + _INV_PHI * (hi - lo)
            gd, ok = _inner(d, w, gain, beta, pmax, feas_tol, max_bisect, p)
        if not ok:
            return p, c, _BISECT_FAILED
    if not converged:
        return p, 0.5 * (lo + hi), _GOLDEN_FAILED

    d_ref = c if gc >= gd else d
    g_ref = max(gc, gd)
    if g_ref < best_g - rtol * abs(best_g):
        return p, d_ref, _GOLDEN_FAILED
    d_best = d_ref if g_ref > best_g else d_max * best_i / (n_grid - 1)
    _inner(d_best, w, gain, beta, pmax, feas_tol, max_bisect, p)
    return p, d_best, _OK


# --------------------------------------------------------------------------
# public solvers

def wsr_objective(weights, powers, model: SystemModel, tau_p: int) -> np.ndarray:
    """Weighted sum rate (bits/slot); ``powers`` may carry leading batch axes."""
    p = np.asarray(powers, dtype=float)
    gamma = gamma_array(model.betas, model.p_pilot, tau_p)
    interference = 1.0 + p @ model.betas
    sinr = model.config.M * p * gamma / interference[..., None]
    rates = (model.config.tau_c - tau_p) * np.log2(1.0 + sinr)
    return rates @ np.asarray(weights, dtype=float)


def solve_wsr(instance: WsrInstance, model: SystemModel) -> PowerAllocation:
    """Maximize the weighted sum rate over the per-user power boxes.

    Users with zero weight get zero power and no pilot. An all-zero weight
    vector returns the all-zero allocation.

    Raises
    ------
    SolverError
        If the inner bisection or the golden-section search misses its
        tolerance within the iteration cap.
    """
    w = instance.weights
    if w.size != model.K:
        raise ValueError(f"expected {model.K} weights, got {w.size}")
    tau_p = instance.tau_p
    if tau_p == 0:
        return PowerAllocation.zeros(model.K)
    tol = instance.tol
    gain = model.config.M * gamma_array(model.betas, model.p_pilot, tau_p)
    p, D, status = _solve_wsr(w, gain, model.betas, model.p_max, tol.grid_points,
                              tol.xtol_rel, tol.feas_tol, tol.rtol,
                              tol.max_bisect, tol.max_golden)
    if status == _BISECT_FAILED:
        raise SolverError(f"water-filling bisection did not reach feasibility at D={D:.6g}")
    if status == _GOLDEN_FAILED:
        raise SolverError(f"golden-section search over D did not converge near D={D:.6g}")
    powers = np.clip(p, 0.0, model.p_max)
    return _allocation(model, powers, tau_p, lambda r: r @ w)


def solve_msr(active, model: SystemModel, tol: WsrTolerances = DEFAULT_TOL) -> PowerAllocation:
    """Sum-rate maximization over the ``active`` users (boolean mask or indices)."""
    mask = _mask(active, model.K)
    return solve_wsr(WsrInstance(mask.astype(float), tol), model)


def solve_mmf(active, model: SystemModel) -> PowerAllocation:
    """Max-min SINR power control over the ``active`` users.

    With MRC every SINR shares the denominator, so setting
    ``p_k = c / gamma_k`` equalizes them and the common SINR grows with c.
    The tightest budget fixes ``c = min_k gamma_k p_max_k``.
    """
    mask = _mask(active, model.K)
    tau_p = int(mask.sum())
    if tau_p == 0:
        return PowerAllocation.zeros(model.K)
    gamma = gamma_array(model.betas, model.p_pilot, tau_p)
    c = np.min(gamma[mask] * model.p_max[mask])
    powers = np.where(mask, np.minimum(c / gamma, model.p_max), 0.0)
    return _allocation(model, powers, tau_p, lambda r: r[mask].min())


def _mask(active, K: int) -> np.ndarray:
    a = np.asarray(active)
    if a.dtype == bool:
        if a.shape != (K,):
            raise ValueError(f"active mask must have shape ({K},)")
        return a.copy()
    mask = np.zeros(K, dtype=bool)
    mask[a.astype(int)] = True
    return mask


# --------------------------------------------------------------------------
# brute-force oracle, used for validation only

def oracle_wsr(instance: WsrInstance, model: SystemModel,
               grid_points_per_dim: int = 400) -> PowerAllocation:
    """Exhaustive search of the WSR objective on a uniform power grid.

    The grid includes the box corners; ties go to the lexicographically
    smallest power vector.
    """
    if model.K > 3:
        raise ValueError(f"oracle_wsr is limited to K <= 3, got K={model.K}")
    if grid_points_per_dim < 2:
        raise ValueError("grid_points_per_dim must be >= 2")
    w = instance.weights
    tau_p = instance.tau_p
    if tau_p == 0:
        return PowerAllocation.zeros(model.K)
    axes = [np.linspace(0.0, pm, grid_points_per_dim) for pm in model.p_max]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, model.K)
    values = wsr_objective(w, grid, model, tau_p)
    powers = grid[int(np.argmax(values))]
    return _allocation(model, powers, tau_p, lambda r: r @ w)


def refine_oracle(instance: WsrInstance, model: SystemModel, start: PowerAllocation,
                  points: int = 11, max_rounds: int = 400, shrink: float = 4.0,
                  min_half: float = 1e-12) -> PowerAllocation:
    """Local grid pattern search started from ``start``.

    The window recenters on the best point; it shrinks only when that point
    is no improvement, so the search can walk out of the first window.
    """
    w = instance.weights
    tau_p = instance.tau_p
    if tau_p == 0:
        return PowerAllocation.zeros(model.K)
    x = np.asarray(start.powers, dtype=float)
    best = float(wsr_objective(w, x, model, tau_p))
    half = model.p_max / 8.0
    for _ in range(max_rounds):
        axes = [np.clip(np.linspace(x[k] - half[k], x[k] + half[k], points), 0.0, model.p_max[k])
                for k in range(model.K)]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, model.K)
        values = wsr_objective(w, grid, model, tau_p)
        i = int(np.argmax(values))
        if values[i] > best:
            best = float(values[i])
            x = grid[i]
        else:
            half = half / shrink
            if np.all(half <= min_half * model.p_max):
                break
    return _allocation(model, x, tau_p, lambda r: r @ w)


def random_feasible_min_sinr(model: SystemModel, active, n: int, rng) -> np.ndarray:
    """Min-SINR over ``active`` users for ``n`` uniform random power vectors."""
    mask = _mask(active, model.K)
    tau_p = int(mask.sum())
    gamma = gamma_array(model.betas, model.p_pilot, tau_p)
    p = rng.uniform(0.0, 1.0, size=(n, model.K)) * model.p_max * mask
    sinr = model.config.M * p * gamma / (1.0 + p @ model.betas)[:, None]
    return sinr[:, mask].min(axis=1)


def subset_models(model: SystemModel, size: int):
    """Yield (indices, sub-model) for every user subset of ``size``."""
    for idx in itertools.combinations(range(model.K), size):
        yield idx, SystemModel(model.config, tuple(model.users[i] for i in idx))


__all__ = [
    "PowerAllocation", "SolverError", "WsrInstance", "WsrTolerances",
    "oracle_wsr", "refine_oracle", "solve_mmf", "solve_msr", "solve_wsr",
    "wsr_objective", "sinr_mrc", "rate_bits",
]
