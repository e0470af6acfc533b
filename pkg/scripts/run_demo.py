#!/usr/bin/env python3
"""End-to-end demo: simulate one hard-core and one soft-core trajectory,
solve the averaged equation, run the collision-rate audit, and solve a
three-piston chain. Artifacts land under --out.

Usage:
    python3 scripts/run_demo.py --out out/demo
"""

import argparse
import os
import sys

from piston1d.cli import run

CONFIGS = os.path.join(os.path.dirname(__file__), "configs")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=os.path.join("out", "demo"))
    args = ap.parse_args()

    jobs = [
        ("simulate", "hard.json", "hard", []),
        ("simulate", "soft.json", "soft", ["epsilon=0.05"]),
        ("average", "hard.json", "averaged", ["ensemble.T=10.0"]),
        ("audit", "hard.json", "audit", []),
        ("npiston", "npiston.json", "npiston", []),
    ]
    for verb, config, sub, overrides in jobs:
        code = run([verb] + overrides
                   + ["--config", os.path.join(CONFIGS, config),
                      "--out", os.path.join(args.out, sub)])
        if code != 0:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
