"""Finite-sample inference: pairs bootstrap, the residual-sign diagnostic
and split-sample selection of the mixing weight gamma.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, HQERError, NumericError
from .fit import SolverOptions, _ztol, fit_hqer, stationarity
from .loss import LossParams
from .parallel import ordered_map
from .rng import make_rng

__all__ = [
    "GammaSelectionReport",
    "BootstrapCovariance",
    "score_vector",
    "select_gamma",
    "bootstrap_cov",
    "residual_proportion",
]


@dataclass
class GammaSelectionReport:
    grid: list
    scores: list
    chosen_gamma: float
    split: tuple
    seed: int
    alpha: float
    repeats: int = 1
    failed: list = field(default_factory=list)

    def as_dict(self):
        return {"alpha": self.alpha, "grid": list(map(float, self.grid)),
                "scores": [None if not np.isfinite(s) else float(s) for s in self.scores],
                "chosen_gamma": float(self.chosen_gamma), "split": list(self.split),
                "seed": int(self.seed), "repeats": self.repeats,
                "failed": list(map(float, self.failed))}


@dataclass
class BootstrapCovariance:
    cov: np.ndarray
    replicates: int
    failures: int
    seed: int
    betas: np.ndarray = field(repr=False, default=None)

    @property
    def flagged(self):
        return self.failures >= 0.05 * self.replicates

    @property
    def se(self):
        return np.sqrt(np.clip(np.diag(self.cov), 0.0, None))


def score_vector(data, params, beta):
    """Mean of ``x_i * score_kernel(e_i)``.

    Residuals that are exactly zero (at rounding level) take the element of
    their subgradient interval that brings the vector closest to zero, so
    the result vanishes at an exact minimizer even when the optimum lies on
    a kink.
    """
    beta = np.asarray(beta, dtype=float)
    e = data.y - data.X @ beta
    g, _, _ = stationarity(data.X, e, params, _ztol(data.y))
    return -g


def _canonical_order(data):
    # sort rows so the split does not depend on how the input was ordered
    keys = [data.X[:, j] for j in range(data.p - 1, -1, -1)] + [data.y]
    return np.lexsort(keys)


def _split(data, split_frac, seed, r):
    n = data.n
    n_c = int(round(split_frac * n))
    if n_c < data.p + 1 or n - n_c < data.p + 1:
        raise DomainError("both parts of the split need at least p + 1 rows")
    order = _canonical_order(data)
    perm = make_rng(seed, r).permutation(n)
    idx = order[perm]
    return np.sort(idx[:n_c]), np.sort(idx[n_c:])


def select_gamma(data, alpha, grid, split_frac=0.8, seed=None, repeats=1, opts=None, workers=None):
    """Pick gamma minimizing the validation score norm.

    For each repeat the rows are shuffled with the seeded stream
    ``(seed, repeat)``, the first ``round(split_frac * n)`` rows train an
    HQER fit at level ``alpha`` per gamma, and the Euclidean norm of
    :func:`score_vector` on the remaining rows is recorded.  Scores are
    averaged over repeats; ties go to the smallest gamma.
    """
    if seed is None:
        raise DomainError("select_gamma needs an explicit seed")
    grid = [float(g) for g in grid]
    if not grid:
        raise DomainError("empty gamma grid")
    if any(not (0 < g < 1) for g in grid):
        raise DomainError("gamma grid values must lie in (0, 1)")
    if not (0 < split_frac < 1):
        raise DomainError("split_frac must lie in (0, 1)")
    opts = opts or SolverOptions()
    splits = [_split(data, split_frac, seed, r) for r in range(int(repeats))]

    def one(g):
        vals = []
        for tr, va in splits:
            try:
                res = fit_hqer(data.subset(tr), LossParams(alpha, g), opts)
            except HQERError:
                return np.nan
            if not res.converged:
                return np.nan
            vals.append(np.linalg.norm(score_vector(data.subset(va), LossParams(alpha, g), res.beta)))
        return float(np.mean(vals))

    scores = ordered_map(one, grid, workers)
    ok = [i for i, s in enumerate(scores) if np.isfinite(s)]
    if not ok:
        raise NumericError("every gamma in the grid failed to fit")
    best = min(ok, key=lambda i: (scores[i], grid[i]))
    n_c = len(splits[0][0])
    return GammaSelectionReport(grid, scores, grid[best], (n_c, data.n - n_c), int(seed), float(alpha),
                                int(repeats), [grid[i] for i, s in enumerate(scores) if not np.isfinite(s)])


def bootstrap_cov(data, params, B, seed, opts=None, fitter=None, workers=None):
    """Pairs bootstrap covariance of the coefficient vector.

    Replicate ``b`` resamples rows with the stream ``(seed, b)``.  Fits that
    raise or fail to converge count as failures and are dropped.
    """
    if B < 50:
        raise DomainError("use at least 50 bootstrap replicates")
    if seed is None:
        raise DomainError("bootstrap_cov needs an explicit seed")
    opts = opts or SolverOptions()
    fitter = fitter or (lambda d: fit_hqer(d, params, opts))
    n = data.n

    def one(b):
        idx = make_rng(seed, b).integers(0, n, n)
        try:
            res = fitter(data.subset(idx))
        except HQERError:
            return None
        return res.beta if res.converged else None

    out = ordered_map(one, range(int(B)), workers)
    betas = np.array([b for b in out if b is not None])
    failures = int(B) - len(betas)
    if len(betas) < 2:
        raise NumericError("too few successful bootstrap replicates")
    cov = np.atleast_2d(np.cov(betas.T, ddof=1))
    cov = 0.5 * (cov + cov.T)
    return BootstrapCovariance(cov, int(B), failures, int(seed), betas)


def residual_proportion(fit):
    """Share of residuals that are less than or equal to zero."""
    return float(np.mean(np.asarray(fit.residuals) <= 0))
