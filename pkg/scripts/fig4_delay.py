"""Per-user average delay (Little's law) of the max-min policies, p = 0.4."""

from _common import delays, parse, run_preset, table

if __name__ == "__main__":
    args = parse("fig4", __doc__)
    table("delay [s]", delays(run_preset("fig4", args)), fmt="{:9.5f}")
