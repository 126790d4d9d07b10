"""Command-line front end.

    hqer fit --data f.csv --response y --features x1,x2 --tau 0.7 --gamma 0.5
    hqer expectile --law t:3 --tau 0.8 --gamma 0.5
    hqer match --law normal --gamma 0.5 --alpha 0.25
    hqer are-table --layout table2 [--law normal] [--format wide|long]
    hqer simulate --spec scenario.json --seed 7 [--summary out.json]
    hqer select-gamma --data f.csv --response y --features x --alpha 0.6 --seed 7

Exit codes: 0 ok, 2 configuration error, 3 data error, 4 no convergence.
JSON keeps full precision; table CSVs are rounded to three decimals.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import warnings
from importlib import resources

import numpy as np

from . import infer, sim
from .dist import format_law, parse_law
from .errors import (
    ConfigError,
    ConvergenceError,
    DataError,
    DomainError,
    HQERError,
    ModelError,
    NumericError,
    UnsupportedError,
)
from .expectile import kth_expectile, match_quantile_level, population_expectile
from .fit import Dataset, SolverOptions, fit
from .loss import LossParams

EXIT_CONFIG, EXIT_DATA, EXIT_CONVERGENCE = 2, 3, 4


def load_csv(path, response, features):
    """Read ``response`` and ``features`` columns; prepend an intercept.

    Rows with a missing or non-numeric cell in any referenced column are
    dropped with a warning.  Returns ``(Dataset, dropped_count)``.
    """
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = [h.strip() for h in next(reader)]
            except StopIteration:
                raise DataError(f"{path}: empty file") from None
            rows = list(reader)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    cols = [response] + list(features)
    for c in cols:
        if c not in header:
            raise ConfigError(f"column {c!r} not found in {path}")
    idx = [header.index(c) for c in cols]
    good, dropped = [], 0
    for r in rows:
        if not any(cell.strip() for cell in r):
            continue
        try:
            vals = [float(r[i]) for i in idx]
        except (ValueError, IndexError):
            dropped += 1
            continue
        if not all(math.isfinite(v) for v in vals):
            dropped += 1
            continue
        good.append(vals)
    if dropped:
        warnings.warn(f"{path}: dropped {dropped} row(s) with missing or non-numeric cells", stacklevel=2)
    if not good:
        raise DataError(f"{path}: no usable rows")
    if len(good) < 2:
        raise DataError(f"{path}: need at least two usable rows")
    a = np.array(good)
    try:
        data = Dataset.from_features(a[:, 0], a[:, 1:], features)
    except ModelError as exc:
        raise DataError(str(exc)) from None
    return data, dropped


def load_schema(name):
    text = resources.files("hqer").joinpath("schemas", f"{name}.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def _clean(obj):
    # JSON has no NaN/inf; numpy scalars are not serializable
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def _dump(obj, out):
    out.write(json.dumps(_clean(obj), indent=2))
    out.write("\n")


def _features(text):
    names = [s.strip() for s in text.split(",") if s.strip()]
    if not names:
        raise ConfigError("--features is empty")
    return names


def _opts(args):
    return SolverOptions(tol=args.tol, max_iter=args.max_iter)


def _method_name(m):
    return {"hqer": "hqer", "quantile": "quantile", "qr": "quantile", "expectile": "expectile",
            "er": "expectile", "kth": "kth"}[m]


def cmd_fit(args, out):
    data, dropped = load_csv(args.data, args.response, _features(args.features))
    method = _method_name(args.method)
    opts = _opts(args)
    gamma = args.gamma if method == "hqer" else None
    if method == "kth" and args.k is None:
        raise ConfigError("--method kth needs --k")
    res = fit(data, method, args.tau, gamma=gamma, k=args.k, opts=opts)
    doc = res.as_dict()
    doc["n"] = data.n
    doc["dropped_rows"] = dropped
    if args.bootstrap:
        if args.seed is None:
            raise ConfigError("--bootstrap needs --seed")
        fitter = lambda d: fit(d, method, args.tau, gamma=gamma, k=args.k, opts=opts)
        bc = infer.bootstrap_cov(data, res.params, args.bootstrap, args.seed, opts, fitter=fitter)
        sd = dict(zip(data.feature_names, map(float, bc.se)))
        doc["bootstrap"] = {
            "replicates": bc.replicates, "failures": bc.failures, "seed": bc.seed, "sd": sd,
            "flagged": bc.flagged,
            "table": {k: f"{doc['beta'][k]:.3f} ({sd[k]:.3f})" for k in data.feature_names},
        }
    _dump(doc, out)
    return 0 if res.converged else EXIT_CONVERGENCE


def cmd_expectile(args, out):
    law = parse_law(args.law)
    p = LossParams(args.tau, 1.0 if args.k is not None else args.gamma, args.k)
    val = kth_expectile(p, law) if args.k is not None else population_expectile(p, law)
    _dump({"law": format_law(law), "tau": p.tau, "gamma": p.gamma, "k": p.k, "expectile": val}, out)
    return 0


def cmd_match(args, out):
    law = parse_law(args.law)
    p = LossParams(0.5, 1.0 if args.k is not None else args.gamma, args.k)
    lvl = match_quantile_level(p, law, args.alpha, literal=args.literal_inverse)
    _dump({"law": format_law(law), "gamma": p.gamma, "k": p.k, "alpha": lvl.alpha,
           "matched_tau": lvl.tau, "target": lvl.target, "literal_inverse": args.literal_inverse}, out)
    return 0


def cmd_are_table(args, out):
    if args.layout not in sim.LAYOUTS:
        raise ConfigError(f"unknown layout {args.layout!r}; choose from {sorted(sim.LAYOUTS)}")
    layout = sim.LAYOUTS[args.layout]
    law = parse_law(args.law) if args.law else parse_law(layout["law"])
    kw = {"literal_inverse": args.literal_inverse, "literal_sign": args.literal_sign}
    if args.format == "long":
        if layout["kind"] != "are":
            raise ConfigError("--format long is only available for efficiency layouts")
        out.write(sim.emit_long(sim.are_grid(law, layout["alphas"], layout["rows"], **kw)))
    else:
        out.write(sim.emit_table(sim.table_grid(args.layout, law, **kw), args.layout))
    return 0


def cmd_simulate(args, out):
    try:
        with open(args.spec, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read spec file: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"spec file is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("spec file must hold a JSON object")
    doc["seed"] = args.seed
    spec = sim.ScenarioSpec.from_dict(doc)
    result = sim.run_scenario(spec)
    out.write(result.to_csv())
    if args.summary:
        with open(args.summary, "w", encoding="utf-8") as fh:
            _dump(result.to_dict(), fh)
    return 0


def cmd_select_gamma(args, out):
    data, _ = load_csv(args.data, args.response, _features(args.features))
    grid = [float(g) for g in args.grid.split(",")] if args.grid else [g / 10 for g in range(1, 10)]
    rep = infer.select_gamma(data, args.alpha, grid, split_frac=args.split, seed=args.seed,
                             repeats=args.repeats, opts=_opts(args))
    _dump(rep.as_dict(), out)
    return 0


def _unit(x):
    v = float(x)
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError(f"{x} is not in (0, 1)")
    return v


def _weight(x):
    v = float(x)
    if not 0 <= v <= 1:
        raise argparse.ArgumentTypeError(f"{x} is not in [0, 1]")
    return v


def build_parser():
    ap = argparse.ArgumentParser(prog="hqer", description="Hybrid quantile-expectile regression tools.")
    sub = ap.add_subparsers(dest="command", required=True)

    def solver(p):
        p.add_argument("--tol", type=float, default=1e-8)
        p.add_argument("--max-iter", type=int, default=200)

    def csv_in(p):
        p.add_argument("--data", required=True)
        p.add_argument("--response", required=True)
        p.add_argument("--features", required=True, help="comma-separated column names")

    p = sub.add_parser("fit", help="fit a linear model")
    csv_in(p)
    p.add_argument("--method", default="hqer", choices=["hqer", "quantile", "qr", "expectile", "er", "kth"])
    p.add_argument("--tau", type=_unit, required=True)
    p.add_argument("--gamma", type=_weight, default=0.5)
    p.add_argument("--k", type=float)
    p.add_argument("--bootstrap", type=int, metavar="B")
    p.add_argument("--seed", type=int)
    solver(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("expectile", help="population expectile of a law")
    p.add_argument("--law", required=True)
    p.add_argument("--tau", type=_unit, required=True)
    p.add_argument("--gamma", type=_weight, default=0.5)
    p.add_argument("--k", type=float, help="kth-power expectile instead")
    p.set_defaults(func=cmd_expectile)

    p = sub.add_parser("match", help="level whose functional equals the alpha-quantile")
    p.add_argument("--law", required=True)
    p.add_argument("--alpha", type=_unit, required=True)
    p.add_argument("--gamma", type=_weight, default=0.5)
    p.add_argument("--k", type=float)
    p.add_argument("--literal-inverse", action="store_true",
                   help="legacy inverse without gamma in the denominator")
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("are-table", help="efficiency or variance table")
    p.add_argument("--layout", required=True)
    p.add_argument("--law")
    p.add_argument("--format", choices=["wide", "long"], default="wide")
    p.add_argument("--literal-inverse", action="store_true")
    p.add_argument("--literal-sign", action="store_true")
    p.set_defaults(func=cmd_are_table)

    p = sub.add_parser("simulate", help="Monte Carlo scenario")
    p.add_argument("--spec", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--summary", help="write a JSON summary here")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("select-gamma", help="split-sample choice of gamma")
    csv_in(p)
    p.add_argument("--alpha", type=_unit, required=True)
    p.add_argument("--grid", help="comma-separated gammas (default 0.1,...,0.9)")
    p.add_argument("--split", type=_unit, default=0.8)
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--seed", type=int, required=True)
    solver(p)
    p.set_defaults(func=cmd_select_gamma)
    return ap


def main(argv=None, out=None):
    out = sys.stdout if out is None else out
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else 0
    if getattr(args, "seed", None) is not None and args.seed < 0:
        print("hqer: error: --seed must be non-negative", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args, out)
    except (DataError, ModelError) as exc:
        print(f"hqer: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ConvergenceError, NumericError) as exc:
        print(f"hqer: no convergence: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (ConfigError, DomainError, UnsupportedError) as exc:
        print(f"hqer: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except HQERError as exc:
        print(f"hqer: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
