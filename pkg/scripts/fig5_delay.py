"""Per-user average delay of the sum-rate policies, p = 0.5."""

from _common import delays, parse, run_preset, table

if __name__ == "__main__":
    args = parse("fig5", __doc__)
    table("delay [s]", delays(run_preset("fig5", args)), fmt="{:9.5f}")
