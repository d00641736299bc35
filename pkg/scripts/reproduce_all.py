#!/usr/bin/env python3
"""Run the five preset experiments and write a combined summary.

    python3 scripts/reproduce_all.py results/ [--workers 4] [--e5-runs 160000]
"""

import argparse
import logging
import time
from pathlib import Path

from irislab.experiments import PRESETS, preset, run_experiment, write_summary


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("out", type=Path)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--e5-runs", type=int, default=160_000,
                   help="E5 needs this many runs for every percent cell up to R=34 to hold 10^4 samples")
    p.add_argument("--only", nargs="*", choices=sorted(PRESETS), help="subset of experiments")
    args = p.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    for name in args.only or sorted(PRESETS):
        extra = {"runs": args.e5_runs} if name == "E5" else {}
        cfg = preset(name, seed=args.seed, workers=args.workers, out=str(args.out / name), **extra)
        t0 = time.perf_counter()
        run_experiment(cfg)
        print(f"{name}: {len(cfg.combos())} combination(s) x {cfg.runs} runs in {time.perf_counter() - t0:.1f} s")

    _, table = write_summary(args.out)
    print(table)


if __name__ == "__main__":
    main()
