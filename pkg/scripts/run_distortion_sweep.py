#!/usr/bin/env python3
"""Distortion versus feedback interval for the reference 2x2 channel."""

import argparse

from diffcsi.harness import ExperimentConfig, run_scenario


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--c-fb", type=float, default=2.0)
    ap.add_argument("--t-max", type=int, default=100)
    ap.add_argument("--out", default="distortion_sweep.csv")
    args = ap.parse_args()

    cfg = ExperimentConfig(scenario="fig2", c_fb=[args.c_fb], t_max=args.t_max)
    with open(args.out, "w") as fh:
        fh.write(run_scenario(cfg))
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
