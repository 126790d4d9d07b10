"""Scalar tau-gamma expectiles.

The population expectile is the root of the first-order condition

    h(t) = (1 - gamma) (F(t) - tau)
           + 2 gamma [(1 - tau) E(t - Y)_+ - tau E(Y - t)_+],

which is strictly increasing in ``t`` for ``gamma > 0``.  Because ``h`` is
affine in ``tau`` it can also be solved for ``tau`` given ``t``; that is
the inverse map used to line up every method at a common quantile.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .errors import DomainError, NumericError
from .loss import LossParams

__all__ = [
    "MatchedLevel",
    "foc",
    "population_expectile",
    "empirical_expectile",
    "fixed_point_map",
    "inverse_expectile",
    "kth_expectile",
    "kth_level",
    "match_quantile_level",
]


@dataclass(frozen=True)
class MatchedLevel:
    """Level ``tau`` whose expectile equals the ``alpha``-quantile ``target``."""

    alpha: float
    tau: float
    target: float


def foc(params, law, t):
    """First-order condition ``h(t)``; its root is the population expectile."""
    tau, g = params.tau, params.gamma
    F = law.cdf(t)
    below = t * F - law.partial_mean(t)  # E(t - Y)_+
    above = law.upper_tail_mean(t)  # E(Y - t)_+
    return (1 - g) * (F - tau) + 2 * g * ((1 - tau) * below - tau * above)


def _bracket(fun, law):
    a, b = law.quantile(1e-3), law.quantile(1 - 1e-3)
    lo, hi = law.support()
    width = max(b - a, 1.0)
    fa, fb = fun(a), fun(b)
    for _ in range(200):
        if fa <= 0:
            break
        a = max(a - width, lo) if math.isfinite(lo) else a - width
        width *= 2
        fa = fun(a)
    width = max(b - a, 1.0)
    for _ in range(200):
        if fb >= 0:
            break
        b = min(b + width, hi) if math.isfinite(hi) else b + width
        width *= 2
        fb = fun(b)
    if fa > 0 or fb < 0:
        raise NumericError("could not bracket the expectile")
    return a, b, fa, fb


def _root(fun, law):
    a, b, fa, fb = _bracket(fun, law)
    if fa == 0:
        return a
    if fb == 0:
        return b
    return optimize.brentq(fun, a, b, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=500)


def population_expectile(params, law):
    """Population tau-gamma expectile of ``law``.

    ``gamma = 0`` returns the ``tau``-quantile.
    """
    if params.gamma == 0:
        return float(law.quantile(params.tau))
    return float(_root(lambda t: foc(params, law, t), law))


def _empirical_slopes(params, y, theta):
    # left and right derivatives of the mean loss in theta
    tau, g = params.tau, params.gamma
    e = y - theta
    out = []
    for pos in (e >= 0, e > 0):
        w = np.where(pos, tau, 1 - tau)
        out.append(-np.mean(w * ((1 - g) * np.where(pos, 1.0, -1.0) + 2 * g * e)))
    return out[0], out[1]


def empirical_expectile(params, sample):
    """Minimizer of ``mean(C(y_i - t))`` over ``t``.

    The mean loss is convex and piecewise quadratic with breaks at the data.
    A bisection over the sorted sample locates the piece holding the
    minimizer; on that piece the derivative is linear, so one exact Newton
    step finishes the job.  A kink at a data point is returned as is.
    """
    y = np.asarray(sample, dtype=float).ravel()
    if y.size == 0:
        raise DomainError("empty sample")
    if not np.all(np.isfinite(y)):
        raise DomainError("sample must be finite")
    u = np.unique(y)
    if u.size == 1:
        return float(u[0])
    # j = number of data points whose right derivative is negative
    lo, hi = 0, u.size
    while lo < hi:
        mid = (lo + hi) // 2
        if _empirical_slopes(params, y, u[mid])[1] < 0:
            lo = mid + 1
        else:
            hi = mid
    j = lo
    if j < u.size and _empirical_slopes(params, y, u[j])[0] <= 0:
        return float(u[j])
    a = u[j - 1] if j > 0 else -math.inf
    b = u[j] if j < u.size else math.inf
    tau, g = params.tau, params.gamma
    if g == 0:
        raise NumericError("flat piece without a kink; gamma must be positive")
    # on (a, b): points >= b are above, points <= a below
    above = y >= b if j < u.size else np.zeros(y.size, bool)
    w = np.where(above, tau, 1 - tau)
    sg = np.where(above, 1.0, -1.0)
    t = np.sum(w * ((1 - g) * sg + 2 * g * y)) / (2 * g * np.sum(w))
    return float(min(max(t, a), b))


def fixed_point_map(params, sample, theta):
    """Right-hand side of the weighted-average fixed-point form.

    A minimizer lying strictly between sample points is a fixed point of
    this map; at a sample point only the subgradient condition holds.
    """
    y = np.asarray(sample, dtype=float).ravel()
    tau, g = params.tau, params.gamma
    w = np.where(y - theta >= 0, tau, 1 - tau)
    sw = np.sum(w)
    return float(np.sum(w * y) / sw + (1 - g) / (2 * g) * (y.size * tau - np.sum(y <= theta)) / sw)


def inverse_expectile(params, law, s, literal=False):
    """Level ``tau`` whose tau-gamma expectile equals ``s``.

    Solves the first-order condition, which is affine in ``tau``.  With
    ``literal=True`` the gamma factors on the two moment terms of the
    denominator are dropped; that variant does not invert the expectile
    and exists only to regenerate legacy matched-level tables.
    """
    g = params.gamma
    F = law.cdf(s)
    A = law.partial_mean(s) - s * F  # -E(s - Y)_+
    m = law.mean()
    num = 2 * g * A - (1 - g) * F
    if literal:
        den = 4 * A + 2 * (s - m) - (1 - g)
    else:
        den = 4 * g * A + 2 * g * (s - m) - (1 - g)
    if abs(den) < 1e-14:
        raise NumericError("inverse expectile denominator vanishes")
    return float(num / den)


def kth_level(k, law, s):
    """Level ``tau`` whose kth-power expectile equals ``s``.

    The first-order condition ``tau E(Y-s)_+^(k-1) = (1-tau) E(s-Y)_+^(k-1)``
    is affine in ``tau`` and is solved directly.
    """
    lower = law.power_moment(s, k - 1, "lower")
    upper = law.power_moment(s, k - 1, "upper")
    return float(lower / (lower + upper))


def kth_expectile(params, law):
    """Population kth-power expectile (root of its first-order condition)."""
    if params.k is None:
        raise DomainError("kth_expectile needs LossParams.k")
    q, tau = params.k - 1, params.tau

    def fun(t):
        return tau * law.power_moment(t, q, "upper") - (1 - tau) * law.power_moment(t, q, "lower")

    # fun decreases in t, so flip it for the shared bracketing helper
    return float(_root(lambda t: -fun(t), law))


def match_quantile_level(params, law, alpha, literal=False):
    """Find the level at which the method's location functional hits the alpha-quantile.

    ``params.k`` selects the kth-power comparator; otherwise ``params.gamma``
    picks quantile (0), expectile (1) or the hybrid in between.  ``params.tau``
    is ignored.
    """
    if not (0 < alpha < 1):
        raise DomainError("alpha must lie in (0, 1)")
    target = float(law.quantile(alpha))
    if params.k is not None:
        tau = kth_level(params.k, law, target)
    elif params.gamma == 0:
        tau = float(alpha)
    else:
        tau = inverse_expectile(params, law, target, literal=literal)
    return MatchedLevel(float(alpha), tau, target)
