"""Running delay of the weakest user over time for the sum-rate policies.

The full curves for every user are in ``<policy>_delay_curve.csv``; this
script prints a coarse view of user 1 at ten evenly spaced checkpoints.
"""

import numpy as np

from dsa_mimo.engine import delay_curve

from _common import parse, run_preset

if __name__ == "__main__":
    args = parse("fig6", __doc__)
    series = run_preset("fig6", args)
    curves = {p: delay_curve(s)[:, 0] for p, s in series.items()}
    T = len(next(iter(curves.values())))
    marks = np.linspace(T // 10, T, 10, dtype=int) - 1
    print(f"{'slot':>7} " + " ".join(f"{p:>22}" for p in curves))
    for t in marks:
        print(f"{t + 1:>7} " + " ".join(f"{c[t]:>22.5f}" for c in curves.values()))
