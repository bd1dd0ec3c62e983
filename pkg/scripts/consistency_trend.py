"""Median Monte-Carlo L2 loss of the full estimator as n grows.

Usage: python scripts/consistency_trend.py [--mode step|lipschitz] [--n 200 2000]
"""

import argparse

import numpy as np

from mmireg.model import ModelConstants, make_ground_truth, sample_dataset
from mmireg.pipeline import NetConfig, fit_mmi, l2_loss_mc


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--d", type=int, default=8)
    ap.add_argument("--k", type=int, default=1)
    ap.add_argument("--s-star", type=int, default=1)
    ap.add_argument("--eta", type=float, default=0.1)
    ap.add_argument("--N0", type=int, default=32)
    ap.add_argument("--mode", choices=("step", "lipschitz"), default="step")
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--n-mc", type=int, default=20_000)
    ap.add_argument("--n", type=int, nargs="+", default=[200, 500, 1000, 2000])
    args = ap.parse_args()
    print("n,median_l2,min,max")
    for n in args.n:
        losses = []
        for seed in range(args.seeds):
            c = ModelConstants(d=args.d, k=args.k, s_star=args.s_star, eta=args.eta)
            gt = make_ground_truth(c, seed)
            fit = fit_mmi(sample_dataset(gt, n, [seed, 1]), NetConfig(args.N0, seed),
                          mode=args.mode)
            losses.append(l2_loss_mc(fit.predict, gt, args.n_mc, [seed, 2]))
        print(f"{n},{np.median(losses):.6g},{min(losses):.6g},{max(losses):.6g}")


if __name__ == "__main__":
    main()
