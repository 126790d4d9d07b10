"""Asymmetric losses and their derivatives.

All kernels are vectorized over ``s`` and return a float for scalar input.
The sign convention of :func:`score_kernel` is ``-d/ds`` of the loss with
respect to the location, so a regression gradient reads
``-(1/n) X.T @ score_kernel(params, residuals)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = [
    "LossParams",
    "psi",
    "pinball_loss",
    "asym_sq_loss",
    "hqer_loss",
    "kth_loss",
    "score_kernel",
    "hessian_kernel",
    "kth_score",
    "kth_curvature",
]


@dataclass(frozen=True)
class LossParams:
    """Asymmetry level ``tau``, mixing weight ``gamma`` and optional power ``k``.

    ``gamma = 0`` is the pinball (quantile) loss, ``gamma = 1`` the
    asymmetric squared (expectile) loss.  ``k`` is only used by the
    kth-power comparator.
    """

    tau: float
    gamma: float = 0.5
    k: float | None = None

    def __post_init__(self):
        tau, gamma = float(self.tau), float(self.gamma)
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "gamma", gamma)
        if not (0.0 < tau < 1.0):
            raise DomainError(f"tau must lie in (0, 1), got {tau}")
        if not (0.0 <= gamma <= 1.0) or math.isnan(gamma):
            raise DomainError(f"gamma must lie in [0, 1], got {gamma}")
        if self.k is not None:
            k = float(self.k)
            object.__setattr__(self, "k", k)
            if not (1.0 < k <= 2.0):
                raise DomainError(f"k must lie in (1, 2], got {k}")


def _as(s):
    return np.asarray(s, dtype=float)


def _out(v):
    return float(v) if np.ndim(v) == 0 else v


def psi(p, s):
    """Asymmetric weight: ``tau`` for ``s >= 0``, ``1 - tau`` otherwise."""
    s = _as(s)
    return _out(np.where(s >= 0, p.tau, 1.0 - p.tau))


def pinball_loss(p, s):
    s = _as(s)
    return _out(np.where(s >= 0, p.tau, 1.0 - p.tau) * np.abs(s))


def asym_sq_loss(p, s):
    s = _as(s)
    return _out(np.where(s >= 0, p.tau, 1.0 - p.tau) * s * s)


def hqer_loss(p, s):
    """Convex mix ``(1 - gamma) * pinball + gamma * asymmetric squared``."""
    s = _as(s)
    w = np.where(s >= 0, p.tau, 1.0 - p.tau)
    return _out((1.0 - p.gamma) * (w * np.abs(s)) + p.gamma * (w * (s * s)))


def kth_loss(p, s):
    if p.k is None:
        raise DomainError("kth_loss needs LossParams.k")
    s = _as(s)
    return _out(np.where(s >= 0, p.tau, 1.0 - p.tau) * np.abs(s) ** p.k)


def score_kernel(p, s):
    """``-dC/ds`` written as ``psi(s) * ((1 - gamma) * sign(s) + 2 gamma s)``.

    At ``s = 0`` the right limit ``(1 - gamma) * tau`` is returned.
    """
    s = _as(s)
    pos = s >= 0
    w = np.where(pos, p.tau, 1.0 - p.tau)
    return _out(w * ((1.0 - p.gamma) * np.where(pos, 1.0, -1.0) + 2.0 * p.gamma * s))


def hessian_kernel(p, s):
    """Almost-everywhere second derivative ``2 gamma psi(s)``."""
    s = _as(s)
    return _out(2.0 * p.gamma * np.where(s >= 0, p.tau, 1.0 - p.tau))


def kth_score(p, s):
    """``-dQ/ds`` for the kth-power loss: ``k psi(s) |s|^(k-1) sign(s)``."""
    s = _as(s)
    w = np.where(s >= 0, p.tau, 1.0 - p.tau)
    return _out(p.k * w * np.sign(s) * np.abs(s) ** (p.k - 1.0))


def kth_curvature(p, s, floor=1e-10):
    """``k (k-1) |s|^(k-2) psi(s)`` with ``|s|`` floored to keep it finite."""
    s = _as(s)
    w = np.where(s >= 0, p.tau, 1.0 - p.tau)
    return _out(p.k * (p.k - 1.0) * np.maximum(np.abs(s), floor) ** (p.k - 2.0) * w)
