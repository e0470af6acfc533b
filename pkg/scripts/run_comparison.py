#!/usr/bin/env python3
"""Compare hard-core and soft-core trajectories started from identical
full states and fit the two-floor error model err ~ C_eps*eps + C_delta*delta.

Outputs (errors.csv, fit.json, manifest.json) land in --out.

Usage:
    python3 scripts/run_comparison.py --out out/compare
    python3 scripts/run_comparison.py --quick
"""

import argparse
import os
import sys

from piston1d.cli import run

CONFIGS = os.path.join(os.path.dirname(__file__), "configs")

QUICK = [
    "ensemble.n_phases=4",
    "ensemble.epsilon_list=[0.05,0.02,0.01]",
    "ensemble.delta_list=[0.1,0.05,0.025]",
]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=os.path.join("out", "compare"))
    ap.add_argument("--quick", action="store_true")
    args = ap.parse_args()

    argv = ["compare"] + (QUICK if args.quick else []) \
        + ["--config", os.path.join(CONFIGS, "comparison.json"),
           "--out", args.out]
    return run(argv)


if __name__ == "__main__":
    sys.exit(main())
