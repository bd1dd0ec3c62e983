"""Command-line front end.

Exit codes: 0 success, 2 bad input (config, data, model files, arguments),
3 environment failure (unwritable output, other OS errors).
"""

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from .errors import MmiError
from .io import (ConfigError, load_config, load_dataset, model_from_json, model_to_json,
                 read_sidecar, sidecar_constants, sidecar_path, write_dataset, write_rows)
from .model import make_ground_truth, sample_dataset
from .net import net_check
from .pipeline import (NetConfig, fit_mmi, l2_loss_mc, procrustes_align, procrustes_bound,
                       z_bound)

EXIT_OK, EXIT_USER, EXIT_ENV = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def _data_seed(seed):
    return [int(seed), 1]


def _mc_seed(seed):
    return [int(seed), 2]


def _require_file(path, what):
    if path is None:
        raise ConfigError(f"missing --{what}")
    if not Path(path).is_file():
        raise ConfigError(f"{what} file not found: {path}")
    return Path(path)


def _out_dir(path):
    out = Path(path or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _truth_from_sidecar(meta):
    return make_ground_truth(sidecar_constants(meta), int(meta["seed"]))


def cmd_generate(args):
    cfg = load_config(_require_file(args.config, "config"), require=("n",))
    seed = cfg.seed if args.seed is None else args.seed
    gt = make_ground_truth(cfg.constants(), seed)
    data = sample_dataset(gt, cfg.n, _data_seed(seed))
    out = _out_dir(args.out)
    write_dataset(data, out / "data.csv", seed)
    print(out / "data.csv")
    return EXIT_OK


def _fit(cfg, data, seed, mode):
    return fit_mmi(data, NetConfig(cfg.N0, seed), cfg.sdp(), mode, tau=cfg.tau, lam=cfg.lam)


def cmd_fit(args):
    cfg = load_config(_require_file(args.config, "config"))
    data_path = _require_file(args.data, "data")
    seed = cfg.seed if args.seed is None else args.seed
    mode = args.mode or cfg.mode
    data = load_dataset(data_path, cfg.constants())
    if data.n % 2:
        raise ConfigError(f"sample split requires even N (got {data.n} rows)")
    t0 = time.perf_counter()
    fit = _fit(cfg, data, seed, mode)
    wall = 1e3 * (time.perf_counter() - t0)
    meta = read_sidecar(sidecar_path(data_path))
    proc, l2 = "", ""
    if meta is not None:
        gt = _truth_from_sidecar(meta)
        proc = procrustes_align(fit.Qn, gt.Qstar)[1]
        l2 = l2_loss_mc(fit.predict, gt, cfg.n_mc, _mc_seed(seed))
    out = _out_dir(args.out)
    seeds = {"net": int(seed), "data": None if meta is None else int(meta["seed"])}
    (out / "model.json").write_text(model_to_json(fit, data.constants, seeds))
    write_rows(out / "metrics.csv", ["empiricalLoss", "procrustesDist", "l2LossMC", "wallTimeMs"],
               [[fit.empirical_loss, proc, l2, wall]])
    print(out / "model.json")
    return EXIT_OK


def evaluate(fit, gt, n_mc, seed):
    """``(l2LossMC, procrustesDist, zBoundAtSchedule)`` for a fitted model."""
    c = gt.constants
    P, dist = procrustes_align(fit.Qn, gt.Qstar)
    eps1 = float(np.linalg.norm(P @ gt.Rstar - fit.Rbar))
    zval = z_bound(eps1, procrustes_bound(c, fit.lam), c.C, c.eta, c.k, c.r)
    return l2_loss_mc(fit.predict, gt, n_mc, seed), dist, zval


def cmd_eval(args):
    model_path = _require_file(args.model, "model")
    truth_path = _require_file(args.truth, "truth")
    if args.nmc is None or args.nmc < 1:
        raise ConfigError("--nmc must be >= 1")
    fit, _ = model_from_json(model_path.read_text())
    meta = read_sidecar(truth_path)
    gt = _truth_from_sidecar(meta)
    if gt.constants.d != fit.Qn.shape[0] or gt.constants.k != fit.Qn.shape[1]:
        raise ConfigError("model and ground truth disagree on (d, k)")
    seed = 0 if args.seed is None else args.seed
    row = evaluate(fit, gt, args.nmc, _mc_seed(seed))
    out = _out_dir(args.out)
    write_rows(out / "eval.csv", ["l2LossMC", "procrustesDist", "zBoundAtSchedule"], [list(row)])
    print(out / "eval.csv")
    return EXIT_OK


def sweep_rows(cfg, mode):
    ns = cfg.n_grid or ((cfg.n,) if cfg.n is not None else ())
    ds = cfg.d_grid or (cfg.d,)
    seeds = cfg.seeds or (cfg.seed,)
    if not ns:
        raise ConfigError("sweep needs 'nGrid' or 'n'")
    for n in ns:
        if n % 2:
            raise ConfigError(f"sample split requires even N (nGrid has {n})")
    rows = []
    for n in sorted(set(ns)):
        for d in sorted(set(ds)):
            for seed in sorted(set(seeds)):
                gt = make_ground_truth(cfg.constants(d), seed)
                data = sample_dataset(gt, n, _data_seed(seed))
                fit = _fit(cfg, data, seed, mode)
                l2 = l2_loss_mc(fit.predict, gt, cfg.n_mc, _mc_seed(seed))
                dist = procrustes_align(fit.Qn, gt.Qstar)[1]
                rows.append([n, d, seed, float(l2), float(dist), float(fit.empirical_loss)])
    return rows


def cmd_sweep(args):
    cfg = load_config(_require_file(args.config, "config"))
    rows = sweep_rows(cfg, args.mode or cfg.mode)
    out = _out_dir(args.out)
    write_rows(out / "sweep.csv",
               ["n", "d", "seed", "l2LossMC", "procrustesDist", "empiricalLoss"], rows)
    print(out / "sweep.csv")
    return EXIT_OK


def cmd_netcheck(args):
    params = {"k": 2, "r": 1.0, "N0": 64, "eps": 0.6, "trials": 1000, "seed": 0}
    if args.config:
        doc = json.loads(_require_file(args.config, "config").read_text())
        unknown = set(doc) - set(params)
        if unknown:
            raise ConfigError(f"unknown config field '{sorted(unknown)[0]}'")
        params.update(doc)
    for key in params:
        val = getattr(args, key.lower() if key != "N0" else "N0", None)
        if val is not None:
            params[key] = val
    if params["trials"] < 1:
        raise ConfigError("trials must be >= 1")
    if params["k"] < 1 or not params["r"] > 0 or params["N0"] < 1 or not params["eps"] > 0:
        raise ConfigError("need k >= 1, r > 0, N0 >= 1 and eps > 0")
    res = net_check(int(params["k"]), float(params["r"]), int(params["N0"]),
                    float(params["eps"]), int(params["trials"]), int(params["seed"]))
    header = ["empiricalCoverage", "lemmaBound"]
    row = [float(res.empirical_coverage), float(res.bound)]
    if args.out:
        out = _out_dir(args.out)
        write_rows(out / "netcheck.csv", header, [row])
    print(",".join(header))
    print(",".join(format(v, ".17g") for v in row))
    return EXIT_OK


def build_parser():
    p = _Parser(prog="mmireg", description="Sparse monotone multi-index regression.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--config")
        sp.add_argument("--out")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--mode", choices=("step", "lipschitz"))

    g = sub.add_parser("generate", help="draw a synthetic dataset")
    common(g)
    g.set_defaults(func=cmd_generate)

    f = sub.add_parser("fit", help="fit a model to a dataset CSV")
    common(f)
    f.add_argument("--data")
    f.set_defaults(func=cmd_fit)

    e = sub.add_parser("eval", help="score a fitted model against its ground truth")
    common(e)
    e.add_argument("--model")
    e.add_argument("--truth")
    e.add_argument("--nmc", type=int, default=10_000)
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("sweep", help="fit and score over a grid of n and d")
    common(s)
    s.set_defaults(func=cmd_sweep)

    nc = sub.add_parser("netcheck", help="empirical near-net coverage")
    common(nc)
    nc.add_argument("--k", type=int)
    nc.add_argument("--r", type=float)
    nc.add_argument("--N0", type=int)
    nc.add_argument("--eps", type=float)
    nc.add_argument("--trials", type=int)
    nc.set_defaults(func=cmd_netcheck)
    return p


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except (ConfigError, MmiError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USER
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ENV


if __name__ == "__main__":
    sys.exit(main())
