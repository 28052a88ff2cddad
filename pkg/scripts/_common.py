"""Shared helpers for the experiment scripts."""

from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np

from dsa_mimo.config import preset, with_overrides
from dsa_mimo.engine import delay_metrics, emit_csv, run


def parse(name: str, description: str) -> argparse.Namespace:
    ap = argparse.ArgumentParser(description=description)
    ap.add_argument("-o", "--out", type=Path, default=Path("results") / name)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--horizon", type=int)
    ap.add_argument("--every", type=int, default=10, help="decimation of per-slot CSVs")
    return ap.parse_args()


def run_preset(name: str, args) -> dict:
    """Run every policy of preset ``name`` and write its CSVs; returns the series."""
    rc = with_overrides(preset(name), seed=args.seed, horizon=args.horizon)
    out = {}
    for policy in rc.policies:
        s = run(rc.model, policy, rc.horizon, seed=rc.seed)
        emit_csv(s, args.out, prefix=f"{policy.value}_", every=args.every)
        out[policy.value] = s
        print(f"{policy.value}: {rc.horizon} slots in {s.runtime_s:.1f}s, "
              f"unstable users {s.unstable_users or 'none'}")
    return out


def table(header: str, rows: dict[str, np.ndarray], fmt: str = "{:9.4f}") -> None:
    K = len(next(iter(rows.values())))
    print(header)
    print(f"{'user':>5} " + " ".join(f"{k:>22}" for k in rows))
    for k in range(K):
        print(f"{k + 1:>5} " + " ".join(f"{fmt.format(v[k]):>22}" for v in rows.values()))


def delays(series: dict) -> dict[str, np.ndarray]:
    return {p: delay_metrics(s)[0] for p, s in series.items()}
