"""Monte Carlo scenarios and table layouts.

A scenario draws ``R`` datasets from either the scale-location model
``y = mu + sigma e`` or the location-shift model ``y = b0 + b1 x + e``,
fits every requested method at every level, and compares the Monte Carlo
variance of ``sqrt(n) (beta_hat - beta_target)`` with the asymptotic value.

Levels are read as quantile levels ``alpha`` (each method is matched to the
``alpha``-quantile) or, with ``level_kind="tau"``, as raw loss levels.

The efficiency and variance tables are computed from the asymptotic
formulas in :mod:`hqer.avar`; :func:`emit_table` lays them out as CSV.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import avar
from .dist import ErrorDistribution, format_law, parse_law
from .errors import ConfigError, DomainError, HQERError
from .expectile import kth_expectile, match_quantile_level, population_expectile
from .fit import Dataset, SolverOptions, fit
from .loss import LossParams
from .parallel import ordered_map
from .rng import make_rng

__all__ = [
    "MethodSpec",
    "ScenarioSpec",
    "CellResult",
    "ScenarioResult",
    "run_scenario",
    "LAYOUTS",
    "table_grid",
    "are_grid",
    "emit_table",
    "emit_long",
]


@dataclass(frozen=True)
class MethodSpec:
    """``name`` is QR, ER, kth or HQER; ``gamma`` for HQER, ``k`` for kth."""

    name: str
    gamma: float | None = None
    k: float | None = None

    def __post_init__(self):
        name = avar._canon(self.name)
        object.__setattr__(self, "name", name)
        if name == "HQER" and self.gamma is None:
            raise ConfigError("HQER method needs gamma")
        if name == "kth" and self.k is None:
            raise ConfigError("kth method needs k")

    @property
    def gamma_or_k(self):
        return {"QR": 0.0, "ER": 1.0, "kth": self.k, "HQER": self.gamma}[self.name]

    @property
    def label(self):
        if self.name == "HQER":
            return f"HQER_{self.gamma:.2f}"
        if self.name == "kth":
            return "kthER" if self.k == 1.5 else f"kthER_{self.k:.2f}"
        return self.name

    def params(self, tau):
        if self.name == "QR":
            return LossParams(tau, 0.0)
        if self.name == "ER":
            return LossParams(tau, 1.0)
        if self.name == "kth":
            return LossParams(tau, 1.0, self.k)
        return LossParams(tau, self.gamma)


@dataclass(frozen=True)
class ScenarioSpec:
    model: str
    error_law: ErrorDistribution
    n: int
    levels: tuple
    methods: tuple
    replicates: int
    seed: int
    mu: float = 0.0
    sigma: float = 1.0
    beta0: float = 15.0
    beta1: float = 90.0
    x_law: ErrorDistribution = field(default_factory=lambda: ErrorDistribution.uniform(0.0, 1.0))
    level_kind: str = "alpha"

    def __post_init__(self):
        if self.model not in ("scale_location", "location_shift"):
            raise ConfigError(f"unknown model {self.model!r}")
        if self.level_kind not in ("alpha", "tau"):
            raise ConfigError("level_kind must be 'alpha' or 'tau'")
        p = 1 if self.model == "scale_location" else 2
        if self.n <= 10 * p:
            raise ConfigError("n must exceed 10 p")
        if self.replicates < 1:
            raise ConfigError("need at least one replicate")
        if not self.levels or any(not (0 < a < 1) for a in self.levels):
            raise ConfigError("levels must lie in (0, 1)")
        if not self.methods:
            raise ConfigError("no methods given")
        if self.seed is None:
            raise ConfigError("a seed is required")
        if self.sigma <= 0:
            raise ConfigError("sigma must be positive")

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        try:
            d["error_law"] = parse_law(d.get("error_law", "normal"))
            if "x_law" in d:
                d["x_law"] = parse_law(d["x_law"])
            d["levels"] = tuple(float(a) for a in d["levels"])
            d["methods"] = tuple(MethodSpec(**m) if isinstance(m, dict) else MethodSpec(*m)
                                 for m in d["methods"])
            d["n"] = int(d["n"])
            d["replicates"] = int(d["replicates"])
            d["seed"] = int(d["seed"])
            return cls(**d)
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, HQERError):
                raise
            raise ConfigError(f"bad scenario spec: {exc}") from None

    def to_dict(self):
        d = asdict(self)
        d["error_law"] = format_law(self.error_law)
        d["x_law"] = format_law(self.x_law)
        d["levels"] = list(self.levels)
        d["methods"] = [asdict(m) for m in self.methods]
        return d


@dataclass
class CellResult:
    method: str
    gamma_or_k: float
    level: float
    tau: float
    target: np.ndarray
    mean_beta: np.ndarray
    empirical_var: np.ndarray
    asymptotic_var: np.ndarray
    relative_gap: np.ndarray
    fits: int
    failures: int

    @property
    def flagged(self):
        return self.failures > 0.05 * (self.fits + self.failures)


@dataclass
class ScenarioResult:
    spec: ScenarioSpec
    cells: list

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["method", "gamma_or_k", "level", "tau", "coef", "target", "mean_beta",
                    "empirical_var", "asymptotic_var", "relative_gap", "failures", "flagged"])
        for c in self.cells:
            for j in range(len(c.target)):
                w.writerow([c.method, c.gamma_or_k, c.level, repr(c.tau), j, repr(float(c.target[j])),
                            repr(float(c.mean_beta[j])), repr(float(c.empirical_var[j])),
                            repr(float(c.asymptotic_var[j])), repr(float(c.relative_gap[j])),
                            c.failures, c.flagged])
        return buf.getvalue()

    def to_dict(self):
        return {
            "spec": self.spec.to_dict(),
            "cells": [{
                "method": c.method, "gamma_or_k": c.gamma_or_k, "level": c.level, "tau": c.tau,
                "target": c.target.tolist(), "mean_beta": c.mean_beta.tolist(),
                "empirical_var": c.empirical_var.tolist(), "asymptotic_var": c.asymptotic_var.tolist(),
                "relative_gap": c.relative_gap.tolist(), "fits": c.fits, "failures": c.failures,
                "flagged": c.flagged,
            } for c in self.cells],
        }


def _functional(m, law, tau):
    """Location functional of method ``m`` at loss level ``tau``."""
    if m.name == "QR":
        return float(law.quantile(tau))
    if m.name == "kth":
        return kth_expectile(LossParams(tau, 1.0, m.k), law)
    return population_expectile(m.params(tau), law)


def _scalar_var_at_tau(m, law, tau, xi):
    if m.name == "QR":
        return avar.qr_variance(law, tau)
    if m.name == "ER":
        return avar.er_variance(law, xi, tau)
    if m.name == "kth":
        return avar.kth_variance(law, xi, tau, m.k)
    return avar.hqer_scalar_variance(LossParams(tau, m.gamma), law.shifted(-xi))


def _cell_setup(spec, m, level):
    law = spec.error_law
    if spec.level_kind == "alpha":
        lvl, var = avar.scalar_variance(m.name, law, m.params(0.5), level)
        tau, xi = lvl.tau, lvl.target
    else:
        tau = level
        xi = _functional(m, law, tau)
        var = _scalar_var_at_tau(m, law, tau, xi)
    if spec.model == "scale_location":
        target = np.array([spec.mu + spec.sigma * xi])
        asym = np.array([spec.sigma ** 2 * var])
    else:
        target = np.array([spec.beta0 + xi, spec.beta1])
        asym = var * np.diag(np.linalg.inv(avar.design_moment(spec.x_law)))
    return tau, target, asym


def _draw(spec, r):
    rng = make_rng(spec.seed, r)
    n = spec.n
    if spec.model == "scale_location":
        e = spec.error_law.sample(n, rng=rng)
        return Dataset(spec.mu + spec.sigma * e, np.ones((n, 1)))
    x = spec.x_law.sample(n, rng=rng)
    e = spec.error_law.sample(n, rng=rng)
    return Dataset.from_features(spec.beta0 + spec.beta1 * x + e, x)


def run_scenario(spec, opts=None, workers=None):
    """Run all replicates; deterministic for a given spec."""
    opts = opts or SolverOptions()
    cells = [(m, a) for m in spec.methods for a in spec.levels]
    setup = [_cell_setup(spec, m, a) for m, a in cells]

    def replicate(r):
        data = _draw(spec, r)
        out = []
        for (m, _), (tau, _, _) in zip(cells, setup):
            try:
                res = fit(data, m.name, tau, gamma=m.gamma, k=m.k, opts=opts)
                out.append(res.beta if res.converged else None)
            except HQERError:
                out.append(None)
        return out

    per_rep = ordered_map(replicate, range(spec.replicates), workers)
    results = []
    for j, ((m, a), (tau, target, asym)) in enumerate(zip(cells, setup)):
        betas = np.array([rep[j] for rep in per_rep if rep[j] is not None])
        fails = spec.replicates - len(betas)
        if len(betas) >= 2:
            z = math.sqrt(spec.n) * (betas - target)
            ev = np.var(z, axis=0, ddof=1)
            mb = betas.mean(axis=0)
        else:
            ev = np.full(len(target), np.nan)
            mb = betas.mean(axis=0) if len(betas) else np.full(len(target), np.nan)
        results.append(CellResult(m.name, m.gamma_or_k, float(a), float(tau), target, mb, ev, asym,
                                  np.abs(ev - asym) / asym, len(betas), fails))
    return ScenarioResult(spec, results)


# tables ------------------------------------------------------------------

_ARE_ROWS = ((MethodSpec("ER"), MethodSpec("kth", k=1.5))
             + tuple(MethodSpec("HQER", gamma=g / 10) for g in range(9, 0, -1))
             + (MethodSpec("QR"),))
_A_SHORT = (0.55, 0.63, 0.70, 0.83, 0.92, 0.97)
_A_CHI = (0.03, 0.08, 0.17, 0.25, 0.33, 0.37, 0.45, 0.55, 0.63, 0.70, 0.75, 0.83, 0.90, 0.92, 0.97)
_A_VAR = (0.04, 0.09, 0.16, 0.20, 0.33, 0.55, 0.60, 0.75, 0.80, 0.91, 0.96)

LAYOUTS = {
    "table2": {"law": "normal", "alphas": _A_SHORT, "rows": _ARE_ROWS, "kind": "are"},
    "table3": {"law": "t:3", "alphas": _A_SHORT, "rows": _ARE_ROWS, "kind": "are"},
    "table4": {"law": "chisq:6", "alphas": _A_CHI, "rows": _ARE_ROWS, "kind": "are"},
    "table5": {"law": "normal", "alphas": _A_VAR, "rows": _ARE_ROWS, "kind": "variance"},
    "table6": {"law": "t:3", "alphas": _A_VAR, "rows": _ARE_ROWS, "kind": "variance"},
}


def are_grid(law, alphas, rows=_ARE_ROWS, **kw):
    """AvarReport for every (row, alpha); failed cells are ``None``."""
    out = []
    for m in rows:
        for a in alphas:
            try:
                out.append(avar.method_avar(m.name, law, m.params(0.5), a, **kw))
            except HQERError:
                out.append(None)
    return out


def table_grid(layout, law=None, **kw):
    """Compute the cells of a named layout as ``{(row_label, alpha): value}``."""
    if layout not in LAYOUTS:
        raise ConfigError(f"unknown layout {layout!r}")
    spec = LAYOUTS[layout]
    law = parse_law(spec["law"]) if law is None else law
    grid = {}
    for m in spec["rows"]:
        for a in spec["alphas"]:
            try:
                if spec["kind"] == "are":
                    grid[(m.label, a)] = avar.method_avar(m.name, law, m.params(0.5), a, **kw).are
                else:
                    ls = avar.location_shift_avar(m.name, law, m.params(0.5), a, **kw)
                    grid[(m.label + "_b0", a)] = ls.table_beta0
                    grid[(m.label + "_b1", a)] = ls.table_beta1
            except HQERError:
                pass
    return grid


def _fmt(v, digits):
    if v is None or (isinstance(v, float) and not math.isfinite(v)):
        return "NA"
    return f"{v:.{digits}f}"


def emit_table(grid, layout, digits=3):
    """Wide CSV: one row per method, one column per level, values rounded.

    ``grid`` is the output of :func:`table_grid` for table2..table6, or for
    ``table8`` a list of dicts with keys ``alpha``, ``gamma``, ``beta`` and
    ``sd`` (and optionally ``p_alpha``).  Missing cells print ``NA``.
    """
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if layout == "table8":
        rows = sorted(grid, key=lambda r: r["alpha"])
        w.writerow(["quantity"] + [f"{r['alpha']:.2f}" for r in rows])
        w.writerow(["optimal_gamma"] + [_fmt(r.get("gamma"), 2) for r in rows])
        p = max(len(r.get("beta") or ()) for r in rows) if rows else 0
        for j in range(p):
            w.writerow([f"beta{j}"] + [_fmt(_get(r.get("beta"), j), digits) for r in rows])
        for j in range(p):
            w.writerow([f"sd_beta{j}"] + [_fmt(_get(r.get("sd"), j), digits) for r in rows])
        if any("p_alpha" in r for r in rows):
            w.writerow(["p_alpha"] + [_fmt(r.get("p_alpha"), digits) for r in rows])
        return buf.getvalue()
    if layout not in LAYOUTS:
        raise ConfigError(f"unknown layout {layout!r}")
    spec = LAYOUTS[layout]
    w.writerow(["method"] + [f"{a:.2f}" for a in spec["alphas"]])
    labels = [m.label for m in spec["rows"]]
    if spec["kind"] == "variance":
        labels = [lab + suf for lab in labels for suf in ("_b0", "_b1")]
    for lab in labels:
        w.writerow([lab] + [_fmt(grid.get((lab, a)), digits) for a in spec["alphas"]])
    return buf.getvalue()


def _get(seq, j):
    try:
        return float(seq[j])
    except (TypeError, IndexError):
        return None


def emit_long(reports):
    """Long CSV with one row per AvarReport, full precision."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    cols = ["method", "gamma_or_k", "alpha", "matched_tau", "variance", "mle_variance", "are"]
    w.writerow(cols)
    for r in reports:
        if r is None:
            continue
        d = r.as_dict()
        w.writerow([d[c] if c == "method" else repr(float(d[c])) for c in cols])
    return buf.getvalue()


def read_table(text):
    """Parse a wide table CSV back into ``{(row, column): float or None}``."""
    rows = list(csv.reader(io.StringIO(text)))
    head = rows[0][1:]
    out = {}
    for r in rows[1:]:
        for c, v in zip(head, r[1:]):
            out[(r[0], c)] = None if v == "NA" else float(v)
    return out


def spec_from_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return ScenarioSpec.from_dict(json.load(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read spec file: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"spec file is not valid JSON: {exc}") from None
