"""Command line entry point: ``dsa-mimo {run,preset,validate}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import PRESETS, ConfigError, RunConfig, load_config, preset, with_overrides
from .engine import Policy, SimulationError, emit_csv, run

log = logging.getLogger("dsa_mimo")

EXIT_CONFIG = 2
EXIT_SOLVER = 3


def _execute(rc: RunConfig, out_dir: Path, every: int) -> None:
    for policy in rc.policies:
        series = run(rc.model, policy, rc.horizon, seed=rc.seed, warmup=rc.warmup)
        paths = emit_csv(series, out_dir, prefix=f"{policy.value}_", every=every)
        unstable = series.unstable_users
        log.info("%s: %d slots in %.1fs, unstable users %s -> %s", policy.value, rc.horizon,
                 series.runtime_s, unstable or "none", paths["summary"])


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="dsa-mimo", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate a YAML configuration")
    p_run.add_argument("config", type=Path)
    p_run.add_argument("-o", "--out", type=Path, default=Path("out"))
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--horizon", type=int)
    p_run.add_argument("--policy", choices=[p.value for p in Policy])
    p_run.add_argument("--every", type=int, default=1, help="decimation of per-slot CSVs")

    p_pre = sub.add_parser("preset", help="run one of the figure presets")
    p_pre.add_argument("name", choices=sorted(PRESETS))
    p_pre.add_argument("-o", "--out", type=Path, default=Path("out"))
    p_pre.add_argument("--seed", type=int)
    p_pre.add_argument("--horizon", type=int)
    p_pre.add_argument("--policy", choices=[p.value for p in Policy])
    p_pre.add_argument("--every", type=int, default=1)

    p_val = sub.add_parser("validate", help="solver-versus-oracle battery")
    p_val.add_argument("--k2", type=int, default=50)
    p_val.add_argument("--k3", type=int, default=20)
    p_val.add_argument("--seed", type=int, default=2024)

    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(message)s")

    if args.command == "validate":
        from .validation import run_battery
        return 0 if run_battery(args.k2, args.k3, args.seed) else 1

    try:
        rc = load_config(args.config) if args.command == "run" else preset(args.name)
        rc = with_overrides(rc, args.seed, args.horizon, args.policy)
        if rc.warmup >= rc.horizon:
            raise ConfigError("warmup must be smaller than horizon")
    except (ConfigError, OSError) as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    try:
        _execute(rc, args.out, args.every)
    except SimulationError as exc:
        log.error("solver failure at %s", exc)
        return EXIT_SOLVER
    return 0


if __name__ == "__main__":
    sys.exit(main())
