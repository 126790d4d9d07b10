"""Error laws and the integral primitives built on them.

Every law is a raw base law ``X`` (standard normal, Student t, chi-square,
exponential, uniform) pushed through the affine map

    Y = (X - c) / s + shift

where ``(c, s)`` is ``(0, 1)`` for the raw law and ``(E X, sd X)`` when
``standardized`` is set.  The extra ``shift`` lets callers centre a law at
an arbitrary point (for instance at the matched quantile) without losing
the closed forms.

Densities, distribution functions and quantiles come from
``scipy.special`` directly; partial moments use closed forms for all five
families.  Generic expectations go through adaptive quadrature.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy import integrate, special

from .errors import DomainError, NumericError, UnsupportedError
from .rng import make_rng

__all__ = ["ErrorDistribution", "parse_law"]

KINDS = ("normal", "t", "chisq", "exp", "unif")
_OVERFLOW = 1e280
_LOG_SQRT_2PI = 0.5 * math.log(2 * math.pi)


@dataclass(frozen=True)
class ErrorDistribution:
    """An immutable error law.

    Parameters
    ----------
    kind : {"normal", "t", "chisq", "exp", "unif"}
    params : tuple of float
        ``()`` for normal, ``(nu,)`` for t and chisq, ``(rate,)`` for exp,
        ``(lo, hi)`` for unif.
    standardized : bool
        Rescale to mean 0 and variance 1.
    shift : float
        Added after standardization.
    """

    kind: str
    params: tuple = ()
    standardized: bool = False
    shift: float = 0.0

    def __post_init__(self):
        kind, par = self.kind, tuple(float(v) for v in self.params)
        object.__setattr__(self, "params", par)
        object.__setattr__(self, "shift", float(self.shift))
        if kind not in KINDS:
            raise DomainError(f"unknown law kind {kind!r}")
        want = {"normal": 0, "t": 1, "chisq": 1, "exp": 1, "unif": 2}[kind]
        if len(par) != want:
            raise DomainError(f"{kind} takes {want} parameter(s), got {len(par)}")
        if not all(math.isfinite(v) for v in par) or not math.isfinite(self.shift):
            raise DomainError("law parameters must be finite")
        if kind == "t" and par[0] <= 1:
            # no finite absolute first moment
            raise DomainError("Student t requires nu > 1")
        if kind in ("chisq", "exp") and par[0] <= 0:
            raise DomainError(f"{kind} parameter must be positive")
        if kind == "unif" and not par[0] < par[1]:
            raise DomainError("uniform law needs lo < hi")
        if self.standardized and kind == "t" and par[0] <= 2:
            raise UnsupportedError("standardizing t needs nu > 2")

    # constructors -----------------------------------------------------
    @classmethod
    def normal(cls):
        return cls("normal")

    @classmethod
    def student_t(cls, nu, standardized=False):
        return cls("t", (nu,), standardized)

    @classmethod
    def chisq(cls, nu, standardized=False):
        return cls("chisq", (nu,), standardized)

    @classmethod
    def exponential(cls, rate=1.0, standardized=False):
        return cls("exp", (rate,), standardized)

    @classmethod
    def uniform(cls, lo=0.0, hi=1.0, standardized=False):
        return cls("unif", (lo, hi), standardized)

    def shifted(self, a):
        """Law of ``Y + a``."""
        return replace(self, shift=self.shift + float(a))

    def __str__(self):
        return format_law(self)

    # raw base law -----------------------------------------------------
    def _raw_mean(self):
        k, p = self.kind, self.params
        if k in ("normal", "t"):
            return 0.0
        if k == "chisq":
            return p[0]
        if k == "exp":
            return 1.0 / p[0]
        return 0.5 * (p[0] + p[1])

    def _raw_var(self):
        k, p = self.kind, self.params
        if k == "normal":
            return 1.0
        if k == "t":
            return p[0] / (p[0] - 2) if p[0] > 2 else math.inf
        if k == "chisq":
            return 2 * p[0]
        if k == "exp":
            return 1.0 / p[0] ** 2
        return (p[1] - p[0]) ** 2 / 12.0

    @property
    def _affine(self):
        if self.standardized:
            return self._raw_mean(), math.sqrt(self._raw_var())
        return 0.0, 1.0

    def _to_raw(self, y):
        c, s = self._affine
        return c + s * (np.asarray(y, dtype=float) - self.shift)

    def _from_raw(self, x):
        c, s = self._affine
        return (x - c) / s + self.shift

    def _pdf_raw(self, x):
        k, p = self.kind, self.params
        if k == "normal":
            return np.exp(-0.5 * x * x - _LOG_SQRT_2PI)
        if k == "t":
            nu = p[0]
            logc = special.gammaln(0.5 * (nu + 1)) - special.gammaln(0.5 * nu) - 0.5 * math.log(nu * math.pi)
            return np.exp(logc - 0.5 * (nu + 1) * np.log1p(x * x / nu))
        if k == "chisq":
            h = 0.5 * p[0]
            with np.errstate(divide="ignore", invalid="ignore"):
                xs = np.where(x > 0, x, 1.0)
                v = np.exp((h - 1) * np.log(xs) - 0.5 * xs - h * math.log(2) - special.gammaln(h))
            if h == 1:
                at0 = 0.5
            else:
                at0 = math.inf if h < 1 else 0.0
            return np.where(x > 0, v, np.where(x == 0, at0, 0.0))
        if k == "exp":
            lam = p[0]
            return np.where(x >= 0, lam * np.exp(-lam * np.maximum(x, 0.0)), 0.0)
        lo, hi = p
        return np.where((x >= lo) & (x <= hi), 1.0 / (hi - lo), 0.0)

    def _cdf_raw(self, x):
        k, p = self.kind, self.params
        if k == "normal":
            return special.ndtr(x)
        if k == "t":
            return special.stdtr(p[0], x)
        if k == "chisq":
            return special.gammainc(0.5 * p[0], 0.5 * np.maximum(x, 0.0))
        if k == "exp":
            return -np.expm1(-p[0] * np.maximum(x, 0.0))
        lo, hi = p
        return np.clip((x - lo) / (hi - lo), 0.0, 1.0)

    def _sf_raw(self, x):
        k, p = self.kind, self.params
        if k == "normal":
            return special.ndtr(-x)
        if k == "t":
            return special.stdtr(p[0], -x)
        if k == "chisq":
            return special.gammaincc(0.5 * p[0], 0.5 * np.maximum(x, 0.0))
        if k == "exp":
            return np.exp(-p[0] * np.maximum(x, 0.0))
        lo, hi = p
        return np.clip((hi - x) / (hi - lo), 0.0, 1.0)

    def _ppf_raw(self, q):
        k, p = self.kind, self.params
        if k == "normal":
            return special.ndtri(q)
        if k == "t":
            return special.stdtrit(p[0], q)
        if k == "chisq":
            return 2.0 * special.gammaincinv(0.5 * p[0], q)
        if k == "exp":
            return -np.log1p(-q) / p[0]
        lo, hi = p
        return lo + q * (hi - lo)

    def _lower_mean_raw(self, x):
        # G_X(x) = E[X 1{X <= x}]
        k, p = self.kind, self.params
        if k == "normal":
            return -self._pdf_raw(x)
        if k == "t":
            return -self._upper_mean_raw(x)
        if k == "chisq":
            return p[0] * special.gammainc(0.5 * p[0] + 1, 0.5 * np.maximum(x, 0.0))
        if k == "exp":
            return 1.0 / p[0] - self._upper_mean_raw(x)
        lo, hi = p
        xc = np.clip(x, lo, hi)
        return (xc * xc - lo * lo) / (2 * (hi - lo))

    def _upper_mean_raw(self, x):
        # E[X 1{X > x}]
        k, p = self.kind, self.params
        if k == "normal":
            return self._pdf_raw(x)
        if k == "t":
            nu = p[0]
            return (nu + x * x) / (nu - 1) * self._pdf_raw(x)
        if k == "chisq":
            return p[0] * special.gammaincc(0.5 * p[0] + 1, 0.5 * np.maximum(x, 0.0))
        if k == "exp":
            lam = p[0]
            xp = np.maximum(x, 0.0)
            return (xp + 1.0 / lam) * np.exp(-lam * xp)
        lo, hi = p
        xc = np.clip(x, lo, hi)
        return (hi * hi - xc * xc) / (2 * (hi - lo))

    # public primitives --------------------------------------------------
    def support(self):
        """Closed support ``(lower, upper)``; infinite ends are ``±inf``."""
        k, p = self.kind, self.params
        lo, hi = {"normal": (-math.inf, math.inf), "t": (-math.inf, math.inf),
                  "chisq": (0.0, math.inf), "exp": (0.0, math.inf)}.get(k, p)
        return float(self._from_raw(lo)), float(self._from_raw(hi))

    def density(self, y):
        y = _finite(y)
        c, s = self._affine
        return _out(s * self._pdf_raw(self._to_raw(y)))

    def cdf(self, y):
        y = _finite(y)
        return _out(self._cdf_raw(self._to_raw(y)))

    def sf(self, y):
        """Survival function ``1 - cdf(y)`` without cancellation."""
        y = _finite(y)
        return _out(self._sf_raw(self._to_raw(y)))

    def quantile(self, p):
        """Quantile function, polished so that ``|cdf(q) - p| <= 1e-10``."""
        p = np.asarray(p, dtype=float)
        if np.any(~(p > 0) | ~(p < 1)):
            raise DomainError("quantile level must lie strictly inside (0, 1)")
        x = np.asarray(self._ppf_raw(p), dtype=float)
        # two Newton polish steps on the raw scale, kept only if they help
        for _ in range(2):
            f = self._pdf_raw(x)
            err = self._cdf_raw(x) - p
            with np.errstate(divide="ignore", invalid="ignore"):
                cand = np.where(f > 0, x - err / f, x)
            better = np.abs(self._cdf_raw(cand) - p) < np.abs(err)
            x = np.where(better & np.isfinite(cand), cand, x)
        return _out(self._from_raw(x))

    def mean(self):
        c, s = self._affine
        return (self._raw_mean() - c) / s + self.shift

    def variance(self):
        return self._raw_var() / self._affine[1] ** 2

    def partial_mean(self, y):
        """``G(y) = E[Y 1{Y <= y}]``, the lower partial moment."""
        y = _finite(y)
        c, s = self._affine
        x = self._to_raw(y)
        G = (self._lower_mean_raw(x) - c * self._cdf_raw(x)) / s + self.shift * self._cdf_raw(x)
        return _out(G)

    def upper_tail_mean(self, y):
        """Stop-loss transform ``E[(Y - y)_+]``."""
        y = _finite(y)
        x = self._to_raw(y)
        t = (self._upper_mean_raw(x) - x * self._sf_raw(x)) / self._affine[1]
        return _out(np.maximum(t, 0.0))

    def expect(self, h, kinks=(), epsabs=1e-9, epsrel=1e-9, limit=200):
        """``E[h(Y)]`` by adaptive quadrature.

        ``h`` is called with a scalar.  The integration range is split at
        the support ends, the declared ``kinks`` and a few quantiles so that
        the adaptive rule sees where the mass is.
        """
        lo, hi = self.support()
        pts = {float(self.quantile(q)) for q in (1e-3, 0.5, 1 - 1e-3)}
        pts |= {float(k) for k in kinks if lo < k < hi}
        pts = sorted(v for v in pts if lo < v < hi)
        edges = [lo] + pts + [hi]
        total = 0.0
        for a, b in zip(edges[:-1], edges[1:]):
            if not a < b:
                continue
            total += _quad(lambda t: h(t) * float(self.density(t)), a, b, epsabs, epsrel, limit)
        return total

    def power_moment(self, c, q, side, epsabs=1e-11, epsrel=1e-11):
        """One-sided absolute power moment.

        ``side="upper"`` gives ``E[(Y - c)_+^q]``; ``side="lower"`` gives
        ``E[(c - Y)_+^q]``.  Any ``q > -1`` is allowed; near ``c`` the
        substitution ``u = r**(q + 1)`` removes the singularity of ``r**q``.
        """
        if q <= -1:
            raise DomainError("power moment needs q > -1")
        lo, hi = self.support()
        sgn = 1.0 if side == "upper" else -1.0
        if side not in ("upper", "lower"):
            raise DomainError("side must be 'upper' or 'lower'")
        reach = (hi - c) if sgn > 0 else (c - lo)
        if reach <= 0:
            return 0.0
        f = lambda r: float(self.density(c + sgn * r))
        r1 = min(1.0, reach)
        a = q + 1.0
        near = _quad(lambda u: f(u ** (1.0 / a)), 0.0, r1 ** a, epsabs, epsrel, 200) / a
        far = 0.0
        if reach > r1:
            scale = max(1.0, math.sqrt(self.variance()) if math.isfinite(self.variance()) else 1.0)
            cuts = [r1] + [r for r in (5 * scale, 20 * scale) if r1 < r < reach] + [reach]
            for a_, b_ in zip(cuts[:-1], cuts[1:]):
                far += _quad(lambda r: r ** q * f(r), a_, b_, epsabs, epsrel, 200)
        return near + far

    def sample(self, n, seed=None, rng=None):
        """Draw ``n`` values; pass either an integer ``seed`` or a generator."""
        n = int(n)
        if n < 1:
            raise DomainError("sample size must be at least 1")
        if rng is None:
            rng = make_rng(seed)
        k, p = self.kind, self.params
        if k == "normal":
            x = rng.standard_normal(n)
        elif k == "t":
            x = rng.standard_t(p[0], n)
        elif k == "chisq":
            x = rng.chisquare(p[0], n)
        elif k == "exp":
            x = rng.exponential(1.0 / p[0], n)
        else:
            x = rng.uniform(p[0], p[1], n)
        return self._from_raw(x)


def _finite(y):
    y = np.asarray(y, dtype=float)
    if not np.all(np.isfinite(y)):
        raise DomainError("argument must be finite")
    return y


def _out(v):
    v = np.asarray(v, dtype=float)
    return float(v) if v.ndim == 0 else v


def _quad(fun, a, b, epsabs, epsrel, limit):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(fun, a, b, epsabs=epsabs, epsrel=epsrel, limit=limit)
    if not math.isfinite(val) or abs(val) > _OVERFLOW:
        raise NumericError("integral diverges")
    if err > max(1e-6, 1e-6 * abs(val)):
        raise NumericError(f"quadrature did not converge (error estimate {err:.3g})")
    return val


def parse_law(text):
    """Parse ``normal``, ``t:3``, ``chisq:6``, ``chisq:6:std``, ``exp:1``, ``unif:0:1``.

    A trailing ``:std`` requests the standardized law and ``@a`` shifts it.
    """
    body, _, shift = str(text).strip().lower().partition("@")
    parts = [s.strip() for s in body.split(":")]
    std = False
    if parts and parts[-1] == "std":
        std, parts = True, parts[:-1]
    if not parts or not parts[0]:
        raise DomainError(f"empty law spec {text!r}")
    kind = {"n": "normal", "norm": "normal", "gauss": "normal", "student": "t",
            "chi2": "chisq", "exponential": "exp", "uniform": "unif"}.get(parts[0], parts[0])
    try:
        par = tuple(float(v) for v in parts[1:])
    except ValueError:
        raise DomainError(f"bad numeric parameter in {text!r}") from None
    if kind == "exp" and not par:
        par = (1.0,)
    if kind == "unif" and not par:
        par = (0.0, 1.0)
    try:
        shift = float(shift) if shift else 0.0
    except ValueError:
        raise DomainError(f"bad shift in {text!r}") from None
    return ErrorDistribution(kind, par, std, shift)


def format_law(law):
    """Inverse of :func:`parse_law`; a nonzero shift is appended as ``@a``."""
    body = ":".join([law.kind] + [f"{v:g}" for v in law.params])
    if law.standardized:
        body += ":std"
    if law.shift:
        body += f"@{law.shift!r}"
    return body
