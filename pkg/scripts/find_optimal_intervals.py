#!/usr/bin/env python3
"""Solve for the distortion-minimizing feedback interval per C_fb."""

import argparse

from diffcsi.channel import ChannelParams
from diffcsi.ratedist import optimal_interval


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--c-fb", type=float, nargs="+", default=[0.5, 1.0, 2.0, 4.0])
    ap.add_argument("--f-d", type=float, default=9.26)
    args = ap.parse_args()

    params = ChannelParams(n_t=2, n_r=2, sigma_h2=1.0, sigma_hhat2=1.2,
                           f_d=args.f_d, t_block=1e-3)
    print(f"{'C_fb':>6} {'x_opt':>12} {'T_opt':>10} {'T_int':>6} {'d_min':>12}")
    for c_fb in args.c_fb:
        opt = optimal_interval(params, c_fb)
        print(f"{c_fb:>6g} {opt.x_opt:>12.8f} {opt.t_opt_real:>10.4f} "
              f"{opt.t_opt_int:>6d} {opt.d_min:>12.8f}")


if __name__ == "__main__":
    main()
