"""Compare the WSR solver with brute-force oracles and check MMF optimality."""

import sys

from dsa_mimo.validation import run_battery

if __name__ == "__main__":
    sys.exit(0 if run_battery() else 1)
