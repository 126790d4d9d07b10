"""Asymptotic variances and relative efficiencies.

For every method the estimator is lined up at a common target, the
``alpha``-quantile of the error law, by choosing the method's level so its
location functional equals that quantile (see
:func:`hqer.expectile.match_quantile_level`).  The efficiency of a method is
the maximum-likelihood variance divided by the method's variance.

The hybrid estimator's covariance is the sandwich ``Jt^-1 Kt Jt^-T`` with

    Jt = (1 - gamma) J + 2 gamma d(tau) K,    Kt = varsigma K,

where ``varsigma`` is the variance of the score
``W = (1 - gamma)(tau - 1{e < 0}) + 2 gamma psi(e) e`` of the centred error.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dist import ErrorDistribution
from .errors import DomainError, NumericError, UnsupportedError
from .expectile import match_quantile_level
from .loss import LossParams

__all__ = [
    "SandwichSpec",
    "AvarReport",
    "LocationShiftAvar",
    "METHODS",
    "d_tau",
    "varsigma",
    "hqer_sandwich",
    "hqer_scalar_variance",
    "qr_variance",
    "er_variance",
    "kth_variance",
    "mle_avar",
    "method_avar",
    "location_shift_avar",
    "design_moment",
]

METHODS = ("QR", "ER", "kth", "HQER")


@dataclass(frozen=True)
class SandwichSpec:
    """Inputs of the sandwich covariance.

    ``law`` must be the law of the error centred at the hybrid expectile,
    so that 0 is its tau-gamma expectile.  ``density_weighted_moment`` (J)
    defaults to ``f(0) K``, the homoscedastic case.
    """

    params: LossParams
    law: ErrorDistribution
    design_second_moment: np.ndarray
    density_weighted_moment: np.ndarray = None
    literal_sign: bool = False


@dataclass
class AvarReport:
    method: str
    alpha: float
    matched_tau: float
    target: float
    variance: float
    mle_variance: float
    are: float
    gamma: float | None = None
    k: float | None = None

    @property
    def gamma_or_k(self):
        if self.method == "kth":
            return self.k
        if self.method == "QR":
            return 0.0
        if self.method == "ER":
            return 1.0
        return self.gamma

    def as_dict(self):
        return {"method": self.method, "gamma_or_k": self.gamma_or_k, "alpha": self.alpha,
                "matched_tau": self.matched_tau, "variance": self.variance,
                "mle_variance": self.mle_variance, "are": self.are}


@dataclass
class LocationShiftAvar:
    """Coefficient variances in ``y = b0 + b1 x + e``.

    ``var_beta*`` are scalar variance times the diagonal of ``M^-1`` with
    ``M = E[(1, x)(1, x)']``.  ``table_beta*`` divide by ``M^-1[0, 0]`` so
    the intercept entry equals the scalar variance; for ``x ~ U(0, 1)`` that
    is a division by 4.
    """

    var_beta0: float
    var_beta1: float
    table_beta0: float
    table_beta1: float
    scalar: float
    m_inv: np.ndarray = field(repr=False)


def d_tau(params, F0):
    """``(1 - tau) F0 + tau (1 - F0)``, the mean asymmetric weight."""
    tau = params.tau
    return (1 - tau) * F0 + tau * (1 - F0)


def _second_moment_ok(law):
    if not math.isfinite(law.variance()):
        raise UnsupportedError(f"{law} has no finite second moment")


def varsigma(params, centered_law, literal_sign=False):
    """Variance of the hybrid score at the centred error.

    Uses partial moments split at zero.  ``literal_sign=True`` flips the
    sign of the squared-loss part of the score (a transcription variant
    kept for audits; it is not the derivative of the loss).
    """
    tau, g = params.tau, params.gamma
    law = centered_law
    F0 = law.cdf(0.0)
    if g == 0:
        return (tau - 1) ** 2 * F0 + tau ** 2 * (1 - F0) - (tau - F0) ** 2
    _second_moment_ok(law)
    s = -1.0 if literal_sign else 1.0
    lower1 = law.partial_mean(0.0)  # E[e 1{e<0}]
    upper1 = law.mean() - lower1
    lower2 = law.power_moment(0.0, 2.0, "lower")  # E[e^2 1{e<0}]
    upper2 = law.power_moment(0.0, 2.0, "upper")
    a_lo, a_hi = (1 - g) * (tau - 1), (1 - g) * tau
    b_lo, b_hi = s * 2 * g * (1 - tau), s * 2 * g * tau
    mean = a_lo * F0 + a_hi * (1 - F0) + b_lo * lower1 + b_hi * upper1
    second = (a_lo ** 2 * F0 + a_hi ** 2 * (1 - F0)
              + 2 * (a_lo * b_lo * lower1 + a_hi * b_hi * upper1)
              + b_lo ** 2 * lower2 + b_hi ** 2 * upper2)
    out = second - mean * mean
    if not out > 0:
        raise NumericError("score variance is not positive")
    return out


def hqer_sandwich(spec):
    """``Sigma = Jt^-1 (varsigma K) Jt^-T``."""
    p, law = spec.params, spec.law
    K = np.atleast_2d(np.asarray(spec.design_second_moment, dtype=float))
    J = spec.density_weighted_moment
    J = law.density(0.0) * K if J is None else np.atleast_2d(np.asarray(J, dtype=float))
    d = d_tau(p, law.cdf(0.0))
    Jt = (1 - p.gamma) * J + 2 * p.gamma * d * K
    Kt = varsigma(p, law, spec.literal_sign) * K
    try:
        Ji = np.linalg.inv(Jt)
    except np.linalg.LinAlgError:
        raise NumericError("curvature matrix is singular") from None
    S = Ji @ Kt @ Ji.T
    S = 0.5 * (S + S.T)
    if np.any(np.linalg.eigvalsh(S) <= 0):
        raise NumericError("sandwich covariance is not positive definite")
    return S


def hqer_scalar_variance(params, centered_law, literal_sign=False):
    """Location-model variance ``varsigma / ((1 - gamma) f(0) + 2 gamma d)^2``."""
    spec = SandwichSpec(params, centered_law, np.eye(1), literal_sign=literal_sign)
    return float(hqer_sandwich(spec)[0, 0])


def qr_variance(law, alpha):
    """``alpha (1 - alpha) / f(q_alpha)^2``."""
    f = law.density(law.quantile(alpha))
    return alpha * (1 - alpha) / f ** 2


def er_variance(law, target, tau):
    """Expectile-regression variance ``E[psi^2 (e - b)^2] / (1 - tau + (2 tau - 1) P(e > b))^2``.

    ``target`` must be the ``tau``-expectile of ``law``.
    """
    _second_moment_ok(law)
    w = lambda t: (tau if t >= target else 1 - tau)
    num = law.expect(lambda t: w(t) ** 2 * (t - target) ** 2, kinks=(target,), epsabs=1e-12, epsrel=1e-12)
    den = 1 - tau + (2 * tau - 1) * law.sf(target)
    return num / den ** 2


def kth_variance(law, target, tau, k):
    """kth-power expectile variance.

    ``E[psi^2 |e - b|^(2(k-1))] / E[(k-1) |e - b|^(k-2) psi]^2`` with
    ``target = b`` the kth-power ``tau``-expectile.
    """
    if 2 * (k - 1) >= 2:
        _second_moment_ok(law)
    up = lambda q: law.power_moment(target, q, "upper")
    lo = lambda q: law.power_moment(target, q, "lower")
    num = tau ** 2 * up(2 * (k - 1)) + (1 - tau) ** 2 * lo(2 * (k - 1))
    den = (k - 1) * (tau * up(k - 2) + (1 - tau) * lo(k - 2))
    return num / den ** 2


def _fisher(law, variant):
    # (F11, F12, F22) per unit sigma for the raw law
    k, par = law.kind, law.params
    if k == "normal":
        return 1.0, 0.0, {"table": 3.0, "exact": 2.0, "literal": 1.0}[variant]
    if k == "t":
        nu = par[0]
        if nu <= 2:
            raise UnsupportedError("the Student MLE variance needs nu > 2")
        f22 = 2 * nu / (nu + 3) if variant == "exact" else 3 * (nu + 1) / (nu + 3)
        return (nu + 1) / (nu + 3), 0.0, f22
    if k == "chisq":
        nu = par[0]
        if nu <= 4:
            raise UnsupportedError("the chi-square MLE variance needs nu > 4")
        if variant == "literal":
            return (nu * nu - 16 * nu + 52) / (16 * (nu - 4)), 0.5, 1 + nu / 2
        return 1 / (2 * (nu - 4)), 0.5, (nu / 2 if variant == "exact" else 1 + nu / 2)
    raise UnsupportedError(f"no MLE variance for {k}")


def mle_avar(law, target, literal=False, exact=False):
    """MLE variance of ``mu + sigma * target`` in the scale-location family.

    Reported at ``sigma = 1`` on the scale of ``law`` as
    ``(F22 - 2 F12 t + F11 t^2) / (F11 F22 - F12^2)`` with ``t`` the target
    on the raw scale.  By default the scale entry is ``F22 = E[(g e)^2]``
    with ``g = (log f)'``, the convention the published efficiency tables
    follow (normal: ``1 + t^2 / 3``).  ``exact=True`` uses the Fisher
    information ``E[(1 + g e)^2]`` instead (normal: ``1 + t^2 / 2``).
    ``literal=True`` uses the transcribed normal and chi-square
    coefficients, kept for audits only.
    """
    if literal and exact:
        raise DomainError("choose at most one of literal and exact")
    f11, f12, f22 = _fisher(law, "literal" if literal else "exact" if exact else "table")
    c, s = law._affine
    x = c + s * (target - law.shift)  # target on the raw scale
    v = (f22 - 2 * f12 * x + f11 * x * x) / (f11 * f22 - f12 * f12)
    return v / s ** 2


def _params_of(method, params):
    if method == "QR":
        return LossParams(0.5, 0.0)
    if method == "ER":
        return LossParams(0.5, 1.0)
    if params is None:
        raise DomainError(f"{method} needs LossParams")
    if method == "kth":
        if params.k is None:
            raise DomainError("kth method needs k")
        return LossParams(0.5, 1.0, params.k)
    return LossParams(0.5, params.gamma)


def _canon(method):
    m = str(method).strip()
    table = {"qr": "QR", "quantile": "QR", "er": "ER", "expectile": "ER", "kth": "kth",
             "kther": "kth", "kth_power": "kth", "hqer": "HQER"}
    try:
        return table[m.lower()]
    except KeyError:
        raise DomainError(f"unknown method {method!r}") from None


def scalar_variance(method, law, params, alpha, literal_inverse=False, literal_sign=False):
    """Matched level and location-model variance of one method at ``alpha``."""
    method = _canon(method)
    mp = _params_of(method, params)
    lvl = match_quantile_level(mp, law, alpha, literal=literal_inverse and method == "HQER")
    if method == "QR":
        var = qr_variance(law, alpha)
    elif method == "ER":
        var = er_variance(law, lvl.target, lvl.tau)
    elif method == "kth":
        var = kth_variance(law, lvl.target, lvl.tau, mp.k)
    else:
        p = LossParams(lvl.tau, mp.gamma)
        var = hqer_scalar_variance(p, law.shifted(-lvl.target), literal_sign)
    return lvl, var


def method_avar(method, law, params, alpha, literal_inverse=False, literal_sign=False, literal_mle=False):
    """Asymptotic variance and efficiency of one method at level ``alpha``.

    ``method`` is ``"QR"``, ``"ER"``, ``"kth"`` (needs ``params.k``) or
    ``"HQER"`` (uses ``params.gamma``); ``params.tau`` is ignored because
    the level is matched to the ``alpha``-quantile.  The ``literal_*``
    switches reproduce transcription variants for audits.
    """
    method = _canon(method)
    lvl, var = scalar_variance(method, law, params, alpha, literal_inverse, literal_sign)
    mle = mle_avar(law, lvl.target, literal=literal_mle)
    gamma = {"QR": 0.0, "ER": 1.0}.get(method, None if params is None else params.gamma)
    return AvarReport(method, float(alpha), lvl.tau, lvl.target, float(var), float(mle), float(mle / var),
                      gamma=None if method == "kth" else gamma,
                      k=params.k if method == "kth" else None)


def design_moment(x_law):
    """``M = E[(1, x)(1, x)']`` for a scalar covariate law."""
    m1 = x_law.mean()
    m2 = x_law.variance() + m1 * m1
    return np.array([[1.0, m1], [m1, m2]])


def location_shift_avar(method, law, params, alpha, x_law=None, **kw):
    """Coefficient variances in the one-covariate location-shift model."""
    if x_law is None:
        x_law = ErrorDistribution.uniform(0.0, 1.0)
    _, var = scalar_variance(method, law, params, alpha, **kw)
    Minv = np.linalg.inv(design_moment(x_law))
    v0, v1 = var * Minv[0, 0], var * Minv[1, 1]
    return LocationShiftAvar(float(v0), float(v1), float(v0 / Minv[0, 0]), float(v1 / Minv[0, 0]),
                             float(var), Minv)
