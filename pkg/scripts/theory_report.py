"""Schedules and the three-term failure bound for a synthetic configuration.

Usage: python scripts/theory_report.py [--eps 5] [--delta 0.05] [--n 1e12 4e12]
"""

import argparse

from mmireg.errors import EpsilonTooSmallError
from mmireg.model import ModelConstants, make_ground_truth
from mmireg.pipeline import failure_bound


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--d", type=int, default=10)
    ap.add_argument("--k", type=int, default=1)
    ap.add_argument("--s-star", type=int, default=1)
    ap.add_argument("--eta", type=float, default=0.0)
    ap.add_argument("--N0", type=int, default=64)
    ap.add_argument("--eps", type=float, default=5.0)
    ap.add_argument("--delta", type=float, default=0.05)
    ap.add_argument("--n", type=float, nargs="+", default=[1e10, 1e12, 4e12, 1e14])
    args = ap.parse_args()
    c = make_ground_truth(ModelConstants(d=args.d, k=args.k, s_star=args.s_star,
                                         eta=args.eta), 0).constants
    print(f"# theta={c.theta:.6g} rho_zero={c.rho_zero:.6g} p_star={c.p_star:.6g}")
    print("n,tau,lambda,procrustesBound,z,eps0,alpha,netTerm,sdpTerm,logSampleTerm,bound")
    for n in args.n:
        try:
            r = failure_bound(args.eps, args.delta, c, n, args.d, args.N0)
        except EpsilonTooSmallError as exc:
            print(f"{n:.6g},# {exc}")
            continue
        print(f"{n:.6g},{r.tau:.6g},{r.lam:.6g},{r.procrustes_bound:.6g},{r.z_value:.6g},"
              f"{r.eps0:.6g},{r.alpha:.6g},{r.net_term:.3g},{r.sdp_term:.3g},"
              f"{r.log_sample_term:.6g},{r.total:.6g}")


if __name__ == "__main__":
    main()
