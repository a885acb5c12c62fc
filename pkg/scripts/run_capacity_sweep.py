#!/usr/bin/env python3
"""Ergodic capacity versus feedback interval, one curve per C_fb.

The full sweep (T = 1..100, four feedback capacities, 1e4 trials per
point) takes a few minutes on one core; pass --trials 1000 for a quick
look.
"""

import argparse

from diffcsi.harness import ExperimentConfig, run_scenario


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=10000)
    ap.add_argument("--seed", type=int, default=12345)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default="capacity_sweep.csv")
    args = ap.parse_args()

    cfg = ExperimentConfig(scenario="fig4", trials=args.trials,
                           seed=args.seed, workers=args.workers)
    with open(args.out, "w") as fh:
        fh.write(run_scenario(cfg))
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
