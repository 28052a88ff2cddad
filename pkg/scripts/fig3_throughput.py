"""Per-user throughput (bits per channel use) of the max-min policies, p = 0.4."""

from _common import parse, run_preset, table

if __name__ == "__main__":
    args = parse("fig3", __doc__)
    series = run_preset("fig3", args)
    table("throughput [bits/channel use]", {p: s.throughput for p, s in series.items()})
