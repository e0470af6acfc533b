#!/usr/bin/env python3
"""Run the O(epsilon) convergence experiment and print the fitted slopes.

Hard mode sweeps epsilon at delta = 0; soft mode repeats the sweep for
several skin widths delta. Outputs (errors.csv, fit.json, loglog.gp,
manifest.json) land in --out.

Usage:
    python3 scripts/run_convergence.py --mode hard --out out/hard
    python3 scripts/run_convergence.py --mode soft --quick
"""

import argparse
import os
import sys

from piston1d.cli import run

CONFIGS = os.path.join(os.path.dirname(__file__), "configs")

QUICK = [
    "ensemble.n_phases=4",
    "ensemble.epsilon_list=[0.1,0.05,0.02]",
]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--mode", choices=("hard", "soft"), default="hard")
    ap.add_argument("--out", default=None)
    ap.add_argument("--quick", action="store_true",
                    help="fewer phases and a coarser epsilon grid")
    ap.add_argument("--jobs", type=int, default=None)
    args = ap.parse_args()

    out = args.out or os.path.join("out", f"converge_{args.mode}")
    overrides = list(QUICK) if args.quick else []
    if args.quick and args.mode == "soft":
        overrides.append("ensemble.delta_list=[0.1,0.05]")
    argv = (["converge"] + overrides
            + ["--config", os.path.join(CONFIGS, f"{args.mode}.json"),
               "--out", out])
    if args.jobs is not None:
        argv += ["--jobs", str(args.jobs)]
    return run(argv)


if __name__ == "__main__":
    sys.exit(main())
