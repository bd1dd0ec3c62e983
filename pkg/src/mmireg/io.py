"""Run configs, dataset CSV files and model JSON documents."""

import csv
import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .fantope import SdpConfig
from .model import Dataset, ModelConstants

MODEL_VERSION = 1


class ConfigError(ValueError):
    """User-facing input problem (bad config, malformed file)."""


def fmt(x):
    return format(float(x), ".17g")


# ---------------------------------------------------------------------------
# run configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RunConfig:
    d: int
    k: int
    s_star: int
    eta: float
    r: float = 1.0
    C: float = 1.0
    b: float = 1.0
    theta: Optional[float] = None
    n: Optional[int] = None
    N0: int = 32
    seed: int = 0
    mode: str = "step"
    lam: Optional[float] = None
    tau: Optional[float] = None
    admm_rho: float = 1.0
    max_iter: int = 5000
    primal_tol: float = 1e-7
    dual_tol: float = 1e-7
    penalty_sign: str = "subtract"
    n_mc: int = 10_000
    n_grid: Optional[tuple] = None
    d_grid: Optional[tuple] = None
    seeds: Optional[tuple] = None

    def constants(self, d=None):
        return ModelConstants(d=self.d if d is None else d, k=self.k, s_star=self.s_star,
                              r=self.r, C=self.C, b=self.b, eta=self.eta, theta=self.theta)

    def sdp(self):
        return SdpConfig(lam=self.lam, rho=self.admm_rho, max_iter=self.max_iter,
                         primal_tol=self.primal_tol, dual_tol=self.dual_tol,
                         penalty_sign=self.penalty_sign)


# JSON key -> (field, type); types are used for light validation
_KEYS = {
    "d": ("d", int), "k": ("k", int), "sStar": ("s_star", int), "eta": ("eta", float),
    "r": ("r", float), "C": ("C", float), "b": ("b", float), "theta": ("theta", float),
    "n": ("n", int), "N0": ("N0", int), "seed": ("seed", int), "mode": ("mode", str),
    "lambda": ("lam", float), "tau": ("tau", float), "admmRho": ("admm_rho", float),
    "maxIter": ("max_iter", int), "primalTol": ("primal_tol", float),
    "dualTol": ("dual_tol", float), "penaltySign": ("penalty_sign", str),
    "nMC": ("n_mc", int), "nGrid": ("n_grid", list), "dGrid": ("d_grid", list),
    "seeds": ("seeds", list),
}
_REQUIRED = ("d", "k", "sStar", "eta")


def _coerce(key, val, typ):
    if typ is list:
        if not isinstance(val, list) or not val or not all(
                isinstance(v, int) and not isinstance(v, bool) for v in val):
            raise ConfigError(f"field '{key}' must be a nonempty list of integers")
        return tuple(val)
    if isinstance(val, bool):
        raise ConfigError(f"field '{key}' has the wrong type")
    if typ is int:
        if isinstance(val, float) and val.is_integer():
            val = int(val)
        if not isinstance(val, int):
            raise ConfigError(f"field '{key}' must be an integer")
        return val
    if typ is float:
        if not isinstance(val, (int, float)):
            raise ConfigError(f"field '{key}' must be a number")
        return float(val)
    if not isinstance(val, str):
        raise ConfigError(f"field '{key}' must be a string")
    return val


def parse_config(doc, require=()):
    """Build a :class:`RunConfig` from a flat dict; unknown keys are rejected."""
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    for key in doc:
        if key not in _KEYS:
            raise ConfigError(f"unknown config field '{key}'")
    for key in _REQUIRED + tuple(require):
        if key not in doc or doc[key] is None:
            raise ConfigError(f"missing required field '{key}'")
    kwargs = {}
    for key, val in doc.items():
        if val is None:
            continue
        name, typ = _KEYS[key]
        kwargs[name] = _coerce(key, val, typ)
    cfg = RunConfig(**kwargs)
    if cfg.mode not in ("step", "lipschitz"):
        raise ConfigError("field 'mode' must be 'step' or 'lipschitz'")
    if cfg.n is not None and cfg.n < 1:
        raise ConfigError("field 'n' must be >= 1")
    if cfg.N0 < 1:
        raise ConfigError("field 'N0' must be >= 1")
    if cfg.n_mc < 1:
        raise ConfigError("field 'nMC' must be >= 1")
    # surface invariant violations under the offending JSON key
    aliases = {"rho": "admmRho", "tolerances": "primalTol/dualTol", "penalty_sign": "penaltySign"}
    by_field = {name: key for key, (name, _) in _KEYS.items()}
    for probe in (cfg.constants, cfg.sdp):
        try:
            probe()
        except ValueError as exc:
            words = re.findall(r"[A-Za-z_]+", str(exc))
            hit = [by_field.get(w) or aliases.get(w) for w in words]
            hit = list(dict.fromkeys(h for h in hit if h))
            raise ConfigError(f"invalid config ({', '.join(hit) or 'value'}): {exc}") from exc
    for dd in cfg.d_grid or ():
        try:
            cfg.constants(dd)
        except ValueError as exc:
            raise ConfigError(f"invalid config (dGrid): {exc}") from exc
    return cfg


def load_config(path, require=()):
    try:
        text = Path(path).read_text()
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return parse_config(doc, require)


def constants_to_json(c):
    out = {"d": c.d, "k": c.k, "sStar": c.s_star, "r": c.r, "C": c.C, "b": c.b,
           "eta": c.eta}
    for key, val in (("theta", c.theta), ("rhoZero", c.rho_zero), ("pStar", c.p_star)):
        if val is not None:
            out[key] = float(val)
    return out


# ---------------------------------------------------------------------------
# datasets
# ---------------------------------------------------------------------------

def sidecar_path(csv_path):
    p = Path(csv_path)
    return p.with_suffix(".json")


def write_dataset(data, path, seed):
    path = Path(path)
    d = data.X.shape[1]
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x{j + 1}" for j in range(d)] + ["y"])
        for x, y in zip(data.X, data.Y):
            w.writerow([fmt(v) for v in x] + [fmt(y)])
    c = data.constants
    meta = {"d": c.d, "k": c.k, "sStar": c.s_star, "r": c.r, "C": c.C, "b": c.b,
            "eta": c.eta, "seed": seed, "n": data.n}
    sidecar_path(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def read_dataset_arrays(path):
    """Parse a dataset CSV into ``(X, Y)``; errors name the bad line."""
    rows = []
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ConfigError(f"{path}: empty file (line 1)") from None
        d = len(header) - 1
        expect = [f"x{j + 1}" for j in range(d)] + ["y"]
        if d < 1 or [h.strip() for h in header] != expect:
            raise ConfigError(f"{path}: bad header on line 1")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != d + 1:
                raise ConfigError(f"{path}: line {lineno} has {len(row)} fields, expected {d + 1}")
            try:
                vals = [float(v) for v in row]
            except ValueError:
                raise ConfigError(f"{path}: line {lineno} has a non-numeric field") from None
            if not np.all(np.isfinite(vals)):
                raise ConfigError(f"{path}: line {lineno} has a non-finite value")
            rows.append(vals)
    if not rows:
        raise ConfigError(f"{path}: no data rows")
    arr = np.array(rows)
    return arr[:, :-1], arr[:, -1]


def read_sidecar(path):
    p = Path(path)
    if not p.exists():
        return None
    try:
        meta = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}: not valid JSON") from exc
    for key in ("d", "k", "sStar", "r", "C", "b", "eta", "seed"):
        if key not in meta:
            raise ConfigError(f"{p}: missing field '{key}'")
    return meta


def sidecar_constants(meta):
    return ModelConstants(d=int(meta["d"]), k=int(meta["k"]), s_star=int(meta["sStar"]),
                          r=float(meta["r"]), C=float(meta["C"]), b=float(meta["b"]),
                          eta=float(meta["eta"]))


def load_dataset(path, constants):
    X, Y = read_dataset_arrays(path)
    if X.shape[1] != constants.d:
        raise ConfigError(f"dataset has {X.shape[1]} covariates but d={constants.d}")
    return Dataset(X, Y, constants)


# ---------------------------------------------------------------------------
# model documents
# ---------------------------------------------------------------------------

def model_to_json(fit, constants, seeds):
    doc = {
        "version": MODEL_VERSION,
        "mode": fit.mode,
        "Qn": np.asarray(fit.Qn).tolist(),
        "Rbar": np.asarray(fit.Rbar).tolist(),
        "In": [int(i) for i in fit.In],
        "anchors": [[np.atleast_1d(p).tolist(), float(f)] for p, f in fit.anchors],
        "constants": constants_to_json(constants),
        "seeds": seeds,
        "empiricalLoss": float(fit.empirical_loss),
        "sdpConverged": bool(fit.sdp_converged),
        "tau": float(fit.tau),
        "lambda": float(fit.lam),
        "n": int(fit.n),
        "netIndex": [int(i) for i in fit.net_index],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def model_from_json(text):
    from .pipeline import FitResult

    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"model file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("version") != MODEL_VERSION:
        raise ConfigError(f"unsupported model version {doc.get('version') if isinstance(doc, dict) else None}")
    try:
        c = doc["constants"]
        k = int(c["k"])
        anchors = doc["anchors"]
        points = np.array([a[0] for a in anchors], dtype=float).reshape(len(anchors), k)
        F = np.array([a[1] for a in anchors], dtype=float)
        fit = FitResult(np.array(doc["Qn"], dtype=float).reshape(int(c["d"]), k),
                        np.array(doc["Rbar"], dtype=float).reshape(k, k),
                        tuple(int(i) for i in doc["In"]), points, F, doc["mode"],
                        float(doc["empiricalLoss"]), bool(doc["sdpConverged"]),
                        float(doc["tau"]), float(doc["lambda"]), int(doc["n"]),
                        float(c["b"]), tuple(doc.get("netIndex", ())))
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise ConfigError(f"malformed model file: {exc}") from exc
    if fit.mode not in ("step", "lipschitz"):
        raise ConfigError(f"unknown mode {fit.mode!r} in model file")
    return fit, doc


def write_rows(path, header, rows):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) if isinstance(v, float) else v for v in row])

