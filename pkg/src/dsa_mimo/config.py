"""YAML run configurations and the figure presets.

A configuration file looks like::

    preset: fig5            # optional; everything below overrides it
    system:
      M: 100
      tau_c: 100
      slot_duration: 0.001
      A_max: 2000
      V: 100000
      eta: 0.5
      rng_seed: 0
    user_defaults:          # applied to every user before per-user keys
      p_max: 1.0
      arrival_prob: 0.5
      B_max: 500
    users:                  # give snr_db or beta; p_pilot defaults to p_max
      - {snr_db: -0.62}
      - {snr_db: 22.36, arrival_prob: 0.3}
    policy: DSA-MSR
    horizon: 20000
    seed: 1
    warmup: 0

Unknown keys anywhere raise :class:`ConfigError`.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from .engine import Policy
from .power_control import solve_msr
from .system_model import REFERENCE_SNR_DB, SystemConfig, SystemModel, UserProfile, beta_from_snr

TAU_C = 100

# name -> (arrival probability, policies compared, default horizon)
PRESETS = {
    "fig3": (0.4, (Policy.DSA_MMF, Policy.MMF, Policy.MODIFIED_MMF), 10_000),
    "fig4": (0.4, (Policy.DSA_MMF, Policy.MMF, Policy.MODIFIED_MMF), 10_000),
    "fig5": (0.5, (Policy.DSA_MSR, Policy.MSR, Policy.MODIFIED_MSR), 10_000),
    "fig6": (0.5, (Policy.DSA_MSR, Policy.MSR, Policy.MODIFIED_MSR), 20_000),
}

_TOP_KEYS = {"preset", "system", "user_defaults", "users", "policy", "horizon", "seed", "warmup"}
_SYSTEM_KEYS = {f.name for f in fields(SystemConfig)}
_USER_KEYS = {"snr_db", "beta", "p_pilot", "p_max", "arrival_prob", "B_max"}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    model: SystemModel
    policies: tuple[Policy, ...]
    horizon: int
    seed: int
    warmup: int = 0
    preset: Optional[str] = None


def reference_system(**overrides) -> SystemConfig:
    base = dict(M=100, tau_c=TAU_C, slot_duration=1e-3, A_max=20.0 * TAU_C,
                V=1000.0 * TAU_C, eta=0.5, rng_seed=0)
    base.update(overrides)
    return SystemConfig(**base)


def _user_dicts(arrival_prob: float) -> list[dict]:
    return [dict(snr_db=s, p_max=1.0, arrival_prob=arrival_prob, B_max=5.0 * TAU_C)
            for s in REFERENCE_SNR_DB]


def preset(name: str) -> RunConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    prob, policies, horizon = PRESETS[name]
    model = SystemModel(reference_system(), tuple(_build_user(u) for u in _user_dicts(prob)))
    if name in ("fig5", "fig6"):
        check_msr_overload(model)
    return RunConfig(model, policies, horizon, seed=0, preset=name)


def check_msr_overload(model: SystemModel, user: int = 0) -> tuple[float, float]:
    """Compare ``user``'s mean arrival with its infinite-backlog MSR rate.

    Warns when the arrival rate does not exceed that rate, i.e. when the
    MSR baseline would not be driven unstable.
    """
    rate = float(solve_msr(np.ones(model.K, dtype=bool), model).rates[user])
    lam = float(model.mean_arrivals[user])
    if lam <= rate:
        warnings.warn(f"user {user}: arrival rate {lam:.1f} bits/slot does not exceed its "
                      f"MSR rate {rate:.1f}; the MSR baselines may stay stable")
    return lam, rate


def _check_keys(block: dict, allowed: set, where: str):
    if not isinstance(block, dict):
        raise ConfigError(f"{where} must be a mapping")
    unknown = set(block) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(sorted(unknown))}")


def _build_user(spec: dict) -> UserProfile:
    if ("snr_db" in spec) == ("beta" in spec):
        raise ConfigError("each user needs exactly one of snr_db or beta")
    try:
        p_max = float(spec["p_max"])
        beta = float(spec["beta"]) if "beta" in spec else beta_from_snr(float(spec["snr_db"]), p_max)
        return UserProfile(beta=beta, p_pilot=float(spec.get("p_pilot", p_max)), p_max=p_max,
                           arrival_prob=float(spec["arrival_prob"]), B_max=float(spec["B_max"]))
    except KeyError as exc:
        raise ConfigError(f"user is missing {exc.args[0]!r}") from None
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def parse_config(raw: dict) -> RunConfig:
    """Build a :class:`RunConfig` from an already-parsed mapping."""
    _check_keys(raw, _TOP_KEYS, "top level")
    base = preset(raw["preset"]) if "preset" in raw else None

    system = dict(vars(base.model.config)) if base else {}
    sys_block = raw.get("system", {})
    _check_keys(sys_block, _SYSTEM_KEYS, "system")
    system.update(sys_block)
    try:
        cfg = SystemConfig(**system) if base or sys_block else reference_system()
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"system: {exc}") from None

    defaults = raw.get("user_defaults", {})
    _check_keys(defaults, _USER_KEYS, "user_defaults")
    if "users" in raw:
        if not isinstance(raw["users"], list) or not raw["users"]:
            raise ConfigError("users must be a non-empty list")
        user_specs = []
        for i, u in enumerate(raw["users"]):
            _check_keys(u, _USER_KEYS, f"users[{i}]")
            user_specs.append({**defaults, **u})
    elif base:
        prob = PRESETS[raw["preset"]][0]
        user_specs = [{**u, **defaults} for u in _user_dicts(prob)]
    else:
        raise ConfigError("no users given and no preset to take them from")

    try:
        model = SystemModel(cfg, tuple(_build_user(u) for u in user_specs))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    if "policy" in raw:
        names = raw["policy"] if isinstance(raw["policy"], list) else [raw["policy"]]
        try:
            policies = tuple(Policy(n) for n in names)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    elif base:
        policies = base.policies
    else:
        raise ConfigError("policy is required without a preset")

    horizon = int(raw.get("horizon", base.horizon if base else 10_000))
    seed = int(raw.get("seed", cfg.rng_seed))
    warmup = int(raw.get("warmup", 0))
    if horizon < 1:
        raise ConfigError("horizon must be >= 1")
    if not 0 <= warmup < horizon:
        raise ConfigError("warmup must lie in [0, horizon)")
    return RunConfig(model, policies, horizon, seed, warmup, raw.get("preset"))


def load_config(path) -> RunConfig:
    text = Path(path).read_text(encoding="utf-8")
    try:
        raw = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return parse_config(raw)


def with_overrides(rc: RunConfig, seed=None, horizon=None, policy=None) -> RunConfig:
    kw = {}
    if seed is not None:
        kw["seed"] = int(seed)
    if horizon is not None:
        kw["horizon"] = int(horizon)
    if policy is not None:
        kw["policies"] = (Policy(policy),)
    return replace(rc, **kw)
