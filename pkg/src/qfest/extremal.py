"""Least-favorable boundary signals for the Pinsker-type filters.

Stationarity of the bias-variance objective under the boundary constraint
gives ``theta*_j**2 = 2 eps**4 sigma_j**4 h_j / sum theta_i**2 (1 - h_i)``.
With the bias factor replaced by its leading value this reads

* polynomial:  ``theta*_j**2 = 2 eps**4 sigma_j**4 W**(2a) / L * (1 - (j/W)**(2a))_+``
* exponential: ``theta*_j**2 = 2 eps**4 sigma_j**4 / L * (exp(2b W**r) - exp(2b j**r))_+``

Both only meet the boundary asymptotically, so the vector is rescaled by one
positive factor to land exactly on ``sum a_i**2 theta_i**2 = L``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ExtremalError
from .filters import MAX_SUPPORT, exp_window, poly_window
from .model import Ellipsoid, ExponentialEllipsoid, PolynomialEllipsoid, Signal, indices


@dataclass(frozen=True)
class ExtremalSignal:
    signal: Signal
    rescaled: bool
    raw_norm: float
    window: float


def _logsumexp(x: np.ndarray) -> float:
    m = float(np.max(x))
    return m + math.log(math.fsum(np.exp(x - m)))


def _finish(log_theta_sq: np.ndarray, log_wsq: np.ndarray, L: float, window: float) -> ExtremalSignal:
    # work in logs: exp(2 b W^r) and the weights may leave double range
    log_raw = _logsumexp(log_wsq + log_theta_sq)
    with np.errstate(over="ignore"):
        raw_norm = math.exp(log_raw) if log_raw < 709.0 else math.inf
    scaled = log_theta_sq + (math.log(L) - log_raw)
    return ExtremalSignal(Signal(np.exp(0.5 * scaled)), True, raw_norm, window)


def _support(window: float) -> int:
    if not window >= 2:
        raise ExtremalError(f"window {window:.6g} < 2: least-favorable signal is degenerate")
    if window > MAX_SUPPORT + 1:
        raise ExtremalError(f"window {window:.6g} exceeds the supported length {MAX_SUPPORT}")
    n = int(math.floor(window))
    # the positive part vanishes at j = W exactly
    return n - 1 if n == window else n


def least_favorable_poly(
    alpha: float,
    gamma: float,
    L: float,
    epsilon: float,
    window: Optional[float] = None,
) -> ExtremalSignal:
    """Least-favorable signal on the boundary of the polynomial class.

    ``window`` defaults to the (un-floored) formula window.
    """
    if window is None:
        window = poly_window(alpha, gamma, L, epsilon).window
    n = _support(window)
    j = indices(n)
    log_theta_sq = (
        math.log(2.0 * epsilon**4 / L)
        + 4.0 * gamma * np.log(j)
        + 2.0 * alpha * math.log(window)
        + np.log1p(-((j / window) ** (2.0 * alpha)))
    )
    return _finish(log_theta_sq, 2.0 * alpha * np.log(j), L, window)


def least_favorable_exp(
    beta: float,
    r: float,
    gamma: float,
    L: float,
    epsilon: float,
    window: Optional[float] = None,
) -> ExtremalSignal:
    """Least-favorable signal on the boundary of the exponential class."""
    if window is None:
        window = exp_window(beta, r, gamma, L, epsilon).window
    n = _support(window)
    j = indices(n)
    wr = window**r
    log_theta_sq = (
        math.log(2.0 * epsilon**4 / L)
        + 4.0 * gamma * np.log(j)
        + 2.0 * beta * wr
        + np.log(-np.expm1(2.0 * beta * (j**r - wr)))
    )
    return _finish(log_theta_sq, 2.0 * beta * j**r, L, window)


def least_favorable(
    ellipsoid: Ellipsoid, gamma: float, epsilon: float, window: Optional[float] = None
) -> ExtremalSignal:
    if isinstance(ellipsoid, PolynomialEllipsoid):
        return least_favorable_poly(ellipsoid.alpha, gamma, ellipsoid.L, epsilon, window)
    if isinstance(ellipsoid, ExponentialEllipsoid):
        return least_favorable_exp(ellipsoid.beta, ellipsoid.r, gamma, ellipsoid.L, epsilon, window)
    raise TypeError(f"unknown ellipsoid {ellipsoid!r}")
