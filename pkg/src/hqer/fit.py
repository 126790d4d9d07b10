"""Linear-model fitting under the hybrid loss and its comparators.

``fit_hqer`` minimizes

    T_n(beta) = mean(C(y_i - x_i' beta) - C(y_i))

with Newton steps.  The objective is convex and piecewise quadratic, with
kinks wherever a residual crosses zero, so two details matter:

* Stationarity is measured by the minimum-norm subgradient.  Residuals
  that are numerically zero contribute any value in their subdifferential
  interval, chosen by a small box-constrained least-squares problem.
* Zero residuals whose multiplier sits strictly inside its interval are
  held at zero while the Newton step is computed (an active set).  The
  step length then comes from an exact one-dimensional minimization,
  which is cheap because the objective along a line is again piecewise
  quadratic.  Armijo backtracking is available as an option.

Comparators: quantile regression by majorize-minimize, expectile
regression by reweighted least squares, kth-power expectile regression by
damped Newton.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .errors import DomainError, ModelError
from .loss import (
    LossParams,
    asym_sq_loss,
    hessian_kernel,
    hqer_loss,
    kth_curvature,
    kth_loss,
    kth_score,
    pinball_loss,
    score_kernel,
)

__all__ = [
    "Dataset",
    "SolverOptions",
    "FitResult",
    "objective",
    "gradient",
    "hessian",
    "stationarity",
    "fit_hqer",
    "fit_quantile",
    "fit_expectile",
    "fit_kth_power",
    "fit",
]


@dataclass(frozen=True, eq=False)
class Dataset:
    """Response ``y`` (n,) and design ``X`` (n, p).

    With ``intercept=True`` (the default) the first column of ``X`` must be
    all ones.  Use :meth:`from_features` to prepend it.
    """

    y: np.ndarray
    X: np.ndarray
    feature_names: tuple = None
    intercept: bool = True

    def __post_init__(self):
        y = np.array(self.y, dtype=float).ravel()
        X = np.array(self.X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        n, p = X.shape
        if y.size != n:
            raise ModelError(f"y has {y.size} rows but X has {n}")
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(X))):
            raise ModelError("data contain non-finite values")
        if n <= p:
            raise ModelError(f"need more rows than columns (n={n}, p={p})")
        if self.intercept and not np.all(X[:, 0] == 1.0):
            raise ModelError("first column of X must be the intercept (all ones)")
        sv = np.linalg.svd(X, compute_uv=False)
        if sv[-1] <= 1e-10 * sv[0]:
            raise ModelError("design matrix is rank deficient")
        names = self.feature_names
        if names is None:
            names = ("(Intercept)",) + tuple(f"x{j}" for j in range(1, p)) if self.intercept \
                else tuple(f"x{j}" for j in range(p))
        names = tuple(str(v) for v in names)
        if len(names) != p:
            raise ModelError("feature_names length does not match X")
        y.flags.writeable = False
        X.flags.writeable = False
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "feature_names", names)

    @classmethod
    def from_features(cls, y, Z, names=None):
        """Build a dataset with an intercept column prepended to ``Z``."""
        Z = np.asarray(Z, dtype=float)
        if Z.ndim == 1:
            Z = Z[:, None]
        X = np.column_stack([np.ones(len(Z)), Z])
        if names is not None:
            names = ("(Intercept)",) + tuple(names)
        return cls(y, X, names)

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    def subset(self, idx):
        return Dataset(self.y[idx], self.X[idx], self.feature_names, self.intercept)


@dataclass(frozen=True)
class SolverOptions:
    """Convergence controls shared by every fitter.

    ``init`` is ``"auto"`` (least squares when gamma >= 0.5, least absolute
    deviations otherwise), ``"ls"``, ``"lad"`` or an explicit vector.
    ``line_search`` is ``"exact"`` or ``"armijo"``.
    """

    tol: float = 1e-8
    max_iter: int = 200
    init: object = "auto"
    line_search: str = "exact"
    armijo: float = 1e-4
    backtrack: float = 0.5
    max_halvings: int = 30


@dataclass
class FitResult:
    beta: np.ndarray
    method: str
    params: LossParams
    objective: float
    iterations: int
    converged: bool
    grad_norm: float
    residuals: np.ndarray
    p_alpha: float
    feature_names: tuple = ()
    diagnostics: dict = field(default_factory=dict)

    def as_dict(self):
        p = self.params
        return {
            "method": self.method,
            "tau": p.tau,
            "gamma": p.gamma,
            "k": p.k,
            "beta": dict(zip(self.feature_names, map(float, self.beta))),
            "objective": self.objective,
            "iterations": self.iterations,
            "converged": self.converged,
            "grad_norm": self.grad_norm,
            "p_alpha": self.p_alpha,
            "diagnostics": dict(self.diagnostics),
        }


# objective pieces -------------------------------------------------------

def objective(data, params, beta, method="hqer"):
    """Mean loss at ``beta`` minus the mean loss at ``beta = 0``."""
    e = data.y - data.X @ beta
    loss = _loss_fn(method)
    return float(np.mean(loss(params, e) - loss(params, data.y)))


def _loss_fn(method):
    return {"hqer": hqer_loss, "quantile": pinball_loss, "expectile": asym_sq_loss, "kth": kth_loss}[method]


def gradient(data, params, beta):
    """``-(1/n) X' score_kernel(e)`` (right-limit convention at zero residuals)."""
    e = data.y - data.X @ beta
    return -(data.X.T @ score_kernel(params, e)) / data.n


def hessian(data, params, beta):
    """``(1/n) X' diag(2 gamma psi(e)) X``."""
    e = data.y - data.X @ beta
    return (data.X.T * hessian_kernel(params, e)) @ data.X / data.n


def _ztol(y):
    return 1e-11 * (1.0 + float(np.max(np.abs(y))))


def stationarity(X, e, params, ztol):
    """Minimum-norm subgradient of the mean hybrid loss.

    Returns ``(g, zero, cz)`` where ``zero`` flags residuals treated as zero
    and ``cz`` are their chosen subgradient elements.
    """
    n = X.shape[0]
    zero = np.abs(e) <= ztol
    c = score_kernel(params, e)
    r = X[~zero].T @ c[~zero] / n
    if not zero.any():
        return -r, zero, np.empty(0)
    lo = -(1 - params.gamma) * (1 - params.tau)
    hi = (1 - params.gamma) * params.tau
    Xz = X[zero]
    if hi - lo <= 0:
        cz = np.zeros(Xz.shape[0])
    else:
        sol = optimize.lsq_linear(Xz.T / n, -r, bounds=(lo, hi), method="bvls", tol=1e-15)
        cz = np.clip(sol.x, lo, hi)
    return -(r + Xz.T @ cz / n), zero, cz


def _line_min(e, a, params):
    """Exact minimizer over ``t >= 0`` of ``sum C(e_i - t a_i)``."""
    tau, g = params.tau, params.gamma
    keep = a != 0
    e, a = e[keep], a[keep]
    if e.size == 0:
        return 0.0
    bp = e / a
    sa = np.sign(a)

    def deriv(t, right=True):
        above = bp > t if right else bp >= t
        s = np.where(above, sa, -sa)
        w = np.where(s > 0, tau, 1 - tau)
        return -np.sum(a * w * ((1 - g) * s + 2 * g * a * (bp - t)))

    def slope(t):
        s = np.where(bp > t, sa, -sa)
        return np.sum(a * a * 2 * g * np.where(s > 0, tau, 1 - tau))

    def solve_piece(t0, t1):
        d0, sl = deriv(t0), slope(t0)
        if sl <= 0:
            return t1
        return min(max(t0 - d0 / sl, t0), t1)

    if deriv(0.0) >= 0:
        return 0.0
    B = np.unique(bp[bp > 0])
    lo, hi = 0, B.size
    while lo < hi:
        mid = (lo + hi) // 2
        if deriv(B[mid]) < 0:
            lo = mid + 1
        else:
            hi = mid
    k = lo
    t0 = B[k - 1] if k > 0 else 0.0
    if k == B.size:
        return solve_piece(t0, math.inf)
    if deriv(B[k], right=False) <= 0:
        return float(B[k])
    return solve_piece(t0, B[k])


def _finish(data, params, beta, method, it, converged, gnorm, diag):
    e = data.y - data.X @ beta
    return FitResult(
        beta=beta,
        method=method,
        params=params,
        objective=objective(data, params, beta, {"HQER": "hqer", "Quantile": "quantile",
                                                   "Expectile": "expectile", "KthPower": "kth"}[method]),
        iterations=it,
        converged=bool(converged),
        grad_norm=float(gnorm),
        residuals=e,
        p_alpha=float(np.mean(e <= 0)),
        feature_names=data.feature_names,
        diagnostics=diag,
    )


def _ls(data):
    return np.linalg.lstsq(data.X, data.y, rcond=None)[0]


def _initial(data, params, opts):
    init = opts.init
    if isinstance(init, str):
        if init == "auto":
            init = "ls" if params.gamma >= 0.5 else "lad"
        if init == "ls":
            return _ls(data)
        if init == "lad":
            # a rough least-absolute-deviations fit is enough to start Newton
            return _mm_quantile(data, 0.5, (1e-2, 1e-3, 1e-4), 50, 1e-6)[0]
        raise DomainError(f"unknown init {init!r}")
    beta = np.array(init, dtype=float).ravel()
    if beta.size != data.p:
        raise DomainError("init vector has wrong length")
    return beta


def _kkt_direction(H, g, A):
    p = H.shape[0]
    if A.shape[0] == 0:
        return np.linalg.solve(H, -g)
    m = A.shape[0]
    K = np.zeros((p + m, p + m))
    K[:p, :p] = H
    K[:p, p:] = A.T
    K[p:, :p] = A
    rhs = np.concatenate([-g, np.zeros(m)])
    sol = np.linalg.lstsq(K, rhs, rcond=None)[0]
    return sol[:p]


def fit_hqer(data, params, opts=None):
    """Minimize the hybrid empirical loss by active-set Newton steps.

    ``gamma = 0`` is delegated to :func:`fit_quantile`.
    """
    opts = opts or SolverOptions()
    if params.gamma == 0:
        return fit_quantile(data, params.tau, opts)
    X, y, n, p = data.X, data.y, data.n, data.p
    tau, g = params.tau, params.gamma
    ztol = _ztol(y)
    beta = _initial(data, params, opts)
    diag = {"damped_steps": 0, "steepest_steps": 0, "line_search": opts.line_search}
    lo_b, hi_b = -(1 - g) * (1 - tau), (1 - g) * tau
    span = hi_b - lo_b
    converged, gnorm, it = False, math.inf, 0
    for it in range(opts.max_iter + 1):
        e = y - X @ beta
        gvec, zero, cz = stationarity(X, e, params, ztol)
        gnorm = float(np.max(np.abs(gvec)))
        if gnorm <= opts.tol:
            converged = True
            break
        if it == opts.max_iter:
            break
        # weights: signs of nonzero residuals, sides of released zero residuals
        pos = e > 0
        interior = np.zeros(n, bool)
        if zero.any():
            zi = np.flatnonzero(zero)
            if span > 0:
                inside = (cz > lo_b + 1e-12 * span) & (cz < hi_b - 1e-12 * span)
                interior[zi[inside]] = True
                pos[zi[~inside]] = cz[~inside] >= hi_b - 1e-12 * span
        w = 2 * g * np.where(pos, tau, 1 - tau)
        H = (X.T * w) @ X / n
        A = X[interior]
        try:
            d = _kkt_direction(H, gvec, A)
        except np.linalg.LinAlgError:
            d = None
        if d is None or not np.all(np.isfinite(d)) or gvec @ d >= 0:
            lam = 1e-8 * np.trace(H) / p
            d = _kkt_direction(H + lam * np.eye(p), gvec, A)
            diag["damped_steps"] += 1
        e_line = np.where(zero, 0.0, e)
        t = _step(data, params, beta, e_line, d, gvec, opts)
        if t <= 0:
            d = -gvec
            t = _step(data, params, beta, e_line, d, gvec, opts)
            diag["steepest_steps"] += 1
            if t <= 0:
                break
        beta = beta + t * d
    return _finish(data, params, beta, "HQER", it, converged, gnorm, diag)


def _step(data, params, beta, e, d, gvec, opts):
    a = data.X @ d
    if opts.line_search == "exact":
        return _line_min(e, a, params)
    f0 = objective(data, params, beta)
    slope = gvec @ d
    t = 1.0
    for _ in range(opts.max_halvings + 1):
        if objective(data, params, beta + t * d) <= f0 + opts.armijo * t * slope:
            return t
        t *= opts.backtrack
    return 0.0


def _quantile_gnorm(data, tau, beta):
    e = data.y - data.X @ beta
    g, _, _ = stationarity(data.X, e, LossParams(tau, 0.0), _ztol(data.y))
    return float(np.max(np.abs(g)))


def _mm_quantile(data, tau, eps_stages, max_iter, step_tol=1e-10):
    X, y = data.X, data.y
    beta = _ls(data)
    total, settled = 0, True
    for eps in eps_stages:
        for _ in range(max_iter):
            total += 1
            r = y - X @ beta
            w = 1.0 / (eps + np.abs(r))
            M = (X.T * w) @ X
            new = np.linalg.solve(M, X.T @ (w * y) + (2 * tau - 1) * X.sum(axis=0))
            step = np.max(np.abs(new - beta))
            beta = new
            if step <= step_tol * (1 + np.max(np.abs(beta))):
                break
        else:
            settled = False
    return beta, total, settled


def fit_quantile(data, tau, opts=None):
    """Quantile regression by majorize-minimize with annealed smoothing.

    Each stage solves weighted least-squares problems with weights
    ``1/(eps + |r|)``; ``eps`` is annealed from 1e-2 to 1e-8.  The MM
    answer is then polished to the basic solution through the ``p``
    smallest residuals when that lowers the objective.
    """
    opts = opts or SolverOptions()
    params = LossParams(tau, 0.0)
    X, y, p = data.X, data.y, data.p
    beta, total, settled = _mm_quantile(data, tau, 10.0 ** -np.arange(2, 9), opts.max_iter)
    obj = lambda b: objective(data, params, b, "quantile")
    # polish: interpolate the p points closest to the fitted plane
    best = obj(beta)
    r = y - X @ beta
    idx = np.argsort(np.abs(r))[:p]
    cand = np.linalg.lstsq(X[idx], y[idx], rcond=None)[0]
    if obj(cand) <= best:
        beta = cand
    gnorm = _quantile_gnorm(data, tau, beta)
    # a basic solution is exact when its subgradient vanishes; otherwise
    # accept the smoothed answer if every annealing stage settled
    return _finish(data, params, beta, "Quantile", total, gnorm <= opts.tol or settled, gnorm,
                   {"mm_iterations": total, "basic_solution": gnorm <= opts.tol})


def fit_expectile(data, tau, opts=None):
    """Expectile regression by iteratively reweighted least squares."""
    opts = opts or SolverOptions()
    params = LossParams(tau, 1.0)
    X, y = data.X, data.y
    beta = _ls(data)
    w_old = None
    it = 0
    for it in range(1, opts.max_iter + 1):
        e = y - X @ beta
        w = np.where(e >= 0, tau, 1 - tau)
        if w_old is not None and np.array_equal(w, w_old):
            break
        beta = np.linalg.solve((X.T * w) @ X, X.T @ (w * y))
        w_old = w
    e = y - X @ beta
    gvec = -(X.T @ (2 * np.where(e >= 0, tau, 1 - tau) * e)) / data.n
    gnorm = float(np.max(np.abs(gvec)))
    return _finish(data, params, beta, "Expectile", it, gnorm <= opts.tol, gnorm, {})


def fit_kth_power(data, tau, k, opts=None):
    """kth-power expectile regression by damped Newton.

    The curvature ``k(k-1)|e|^(k-2) psi(e)`` has its residual floored at
    1e-10 so it stays finite for ``k < 2``.
    """
    opts = opts or SolverOptions()
    params = LossParams(tau, 1.0, k)
    X, y, n = data.X, data.y, data.n
    beta = _ls(data)
    obj = lambda b: objective(data, params, b, "kth")
    f = obj(beta)
    converged, gnorm, it = False, math.inf, 0
    diag = {"gradient_steps": 0}
    for it in range(opts.max_iter + 1):
        e = y - X @ beta
        gvec = -(X.T @ kth_score(params, e)) / n
        gnorm = float(np.max(np.abs(gvec)))
        if gnorm <= opts.tol:
            converged = True
            break
        if it == opts.max_iter:
            break
        H = (X.T * kth_curvature(params, e)) @ X / n
        d = np.linalg.solve(H, -gvec)
        t, moved = 1.0, False
        for _ in range(opts.max_halvings + 1):
            cand = beta + t * d
            fc = obj(cand)
            if fc <= f + opts.armijo * t * (gvec @ d):
                beta, f, moved = cand, fc, True
                break
            t *= opts.backtrack
        if not moved:
            # Newton direction is useless next to a kink; fall back to a
            # scaled gradient step with the same backtracking rule
            d = -gvec / max(np.trace(H) / data.p, 1e-12)
            t = 1.0
            for _ in range(2 * opts.max_halvings):
                cand = beta + t * d
                fc = obj(cand)
                if fc <= f + opts.armijo * t * (gvec @ d):
                    beta, f, moved = cand, fc, True
                    break
                t *= opts.backtrack
            diag["gradient_steps"] += 1
            if not moved:
                break
    return _finish(data, params, beta, "KthPower", it, converged, gnorm, diag)


def fit(data, method, tau, gamma=None, k=None, opts=None):
    """Dispatch by method name: ``hqer``, ``quantile``, ``expectile``, ``kth``."""
    method = method.lower()
    if method == "hqer":
        return fit_hqer(data, LossParams(tau, 0.5 if gamma is None else gamma), opts)
    if method in ("quantile", "qr"):
        return fit_quantile(data, tau, opts)
    if method in ("expectile", "er"):
        return fit_expectile(data, tau, opts)
    if method in ("kth", "kther", "kth_power"):
        if k is None:
            raise DomainError("kth-power fit needs k")
        return fit_kth_power(data, tau, k, opts)
    raise DomainError(f"unknown method {method!r}")
