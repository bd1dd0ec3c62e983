"""Median Procrustes distance of the subspace estimate as n grows.

Usage: python scripts/subspace_trend.py [--d 30] [--s-star 2] [--seeds 5] [--n 500 5000]
"""

import argparse

import numpy as np

from mmireg.fantope import estimate_Q
from mmireg.model import ModelConstants, make_ground_truth, sample_dataset
from mmireg.pipeline import procrustes_dist, theory_params


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--d", type=int, default=30)
    ap.add_argument("--k", type=int, default=1)
    ap.add_argument("--s-star", type=int, default=2)
    ap.add_argument("--eta", type=float, default=0.0)
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--n", type=int, nargs="+", default=[500, 1000, 2000, 5000])
    args = ap.parse_args()
    print("n,median_procrustes,min,max")
    for n in args.n:
        dists = []
        for seed in range(args.seeds):
            c = ModelConstants(d=args.d, k=args.k, s_star=args.s_star, eta=args.eta)
            gt = make_ground_truth(c, seed)
            tau, lam = theory_params(gt.constants.theta, n, args.d)
            est = estimate_Q(sample_dataset(gt, n, [seed, 1]), tau, lam, args.k)
            dists.append(procrustes_dist(est.Q, gt.Qstar))
        print(f"{n},{np.median(dists):.6g},{min(dists):.6g},{max(dists):.6g}")


if __name__ == "__main__":
    main()
