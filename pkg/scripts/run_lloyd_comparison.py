#!/usr/bin/env python3
"""Lloyd-quantized feedback sessions against the theoretical capacity.

For each bit budget R the interval is the smallest T with R <= C_fb*T;
a codebook is trained at that operating point and simulated sessions are
averaged next to the rate-distortion theory curve.
"""

import argparse

from diffcsi.harness import ExperimentConfig, run_scenario


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--c-fb", type=float, default=1.0)
    ap.add_argument("--r-max", type=int, default=8)
    ap.add_argument("--sessions", type=int, default=50)
    ap.add_argument("--seed", type=int, default=12345)
    ap.add_argument("--out", default="lloyd_comparison.csv")
    args = ap.parse_args()

    cfg = ExperimentConfig(scenario="fig5", c_fb=[args.c_fb],
                           r_max=args.r_max, lloyd_sessions=args.sessions,
                           trials=4000, seed=args.seed)
    with open(args.out, "w") as fh:
        fh.write(run_scenario(cfg))
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
