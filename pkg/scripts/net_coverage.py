"""Empirical near-net coverage against the lower bound over a range of eps.

Usage: python scripts/net_coverage.py [--k 2] [--N0 64] [--trials 1000]
"""

import argparse

import numpy as np

from mmireg.net import net_check


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--k", type=int, default=2)
    ap.add_argument("--r", type=float, default=1.0)
    ap.add_argument("--N0", type=int, default=64)
    ap.add_argument("--trials", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--eps", type=float, nargs="+",
                    default=list(np.round(np.arange(0.1, 1.05, 0.1), 2)))
    args = ap.parse_args()
    print("eps,empiricalCoverage,coverageBound,sigma")
    for eps in args.eps:
        res = net_check(args.k, args.r, args.N0, eps, args.trials, args.seed)
        print(f"{eps},{res.empirical_coverage:.6g},{res.bound:.6g},"
              f"{res.binomial_sigma:.3g}")


if __name__ == "__main__":
    main()
