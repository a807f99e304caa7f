"""Optimal shrinkage filters and windows for polynomial and exponential classes."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import WindowError
from .model import Ellipsoid, ExponentialEllipsoid, PolynomialEllipsoid, indices

WINDOW_LOG_TOL = 1e-10
MAX_BISECTIONS = 200
# doublings allowed while searching for the upper bracket (W <= 2**1000)
MAX_DOUBLINGS = 1000
# longest filter we are willing to materialize
MAX_SUPPORT = 10**8


@dataclass(frozen=True)
class FilterSeq:
    """Shrinkage weights ``h_1..h_floor(W)``; zero beyond the stored support."""

    weights: np.ndarray
    window: float

    def __post_init__(self) -> None:
        arr = np.array(self.weights, dtype=float).ravel()
        arr.setflags(write=False)
        object.__setattr__(self, "weights", arr)

    @property
    def support(self) -> int:
        return len(self.weights)

    def padded(self, n: int) -> np.ndarray:
        out = np.zeros(max(n, self.support))
        out[: self.support] = self.weights
        return out

    @classmethod
    def zeros(cls, n: int = 0) -> "FilterSeq":
        return cls(np.zeros(n), float(max(n, 1)))


@dataclass(frozen=True)
class WindowSolution:
    window: float
    residual: float
    constant_c: Optional[float] = None

    @property
    def cutoff(self) -> int:
        """Integer index cutoff ``floor(W)``, clamped below at 1."""
        if self.window < 1:
            warnings.warn(
                f"window {self.window:.6g} < 1: epsilon too large for asymptotics, clamping to 1",
                stacklevel=2,
            )
            return 1
        return int(math.floor(self.window))

    @property
    def clamped(self) -> float:
        """Real window clamped below at 1."""
        return max(self.window, 1.0)


def _check_window(window: float) -> int:
    if not (window >= 1 and math.isfinite(window)):
        raise ValueError(f"window must be finite and >= 1, got {window}")
    if window > MAX_SUPPORT + 1:
        raise ValueError(f"window {window:.6g} exceeds the supported length {MAX_SUPPORT}")
    return int(math.floor(window))


def poly_filter(alpha: float, window: float) -> FilterSeq:
    """``h_i = (1 - (i/W)**(2 alpha))_+`` for i = 1..floor(W)."""
    if not alpha > 0:
        raise ValueError(f"alpha must be > 0, got {alpha}")
    n = _check_window(window)
    i = indices(n)
    h = np.clip(1.0 - (i / window) ** (2.0 * alpha), 0.0, 1.0)
    return FilterSeq(h, float(window))


def exp_filter(beta: float, r: float, window: float) -> FilterSeq:
    """``h_i = (1 - exp(2 beta (i**r - W**r)))_+`` for i = 1..floor(W)."""
    if not beta > 0:
        raise ValueError(f"beta must be > 0, got {beta}")
    if not 0 < r <= 2:
        raise ValueError(f"r must lie in (0, 2], got {r}")
    n = _check_window(window)
    i = indices(n)
    # expm1 keeps h accurate when i**r is far below W**r
    h = np.clip(-np.expm1(2.0 * beta * (i**r - window**r)), 0.0, 1.0)
    return FilterSeq(h, float(window))


def matching_filter(ellipsoid: Ellipsoid, window: float) -> FilterSeq:
    """Optimal filter of the ellipsoid's family at the given window."""
    if isinstance(ellipsoid, PolynomialEllipsoid):
        return poly_filter(ellipsoid.alpha, window)
    return exp_filter(ellipsoid.beta, ellipsoid.r, window)


def _check_epsilon(epsilon: float) -> None:
    if not 0 < epsilon < 1:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")


def poly_window(alpha: float, gamma: float, L: float, epsilon: float) -> WindowSolution:
    """Closed-form window for the polynomial class (un-floored).

    ``W = (L**2 (4g+4a+1)(4g+2a+1) / (4a))**(1/(4a+4g+1)) * eps**(-4/(4a+4g+1))``
    """
    if not alpha > 0 or not L > 0 or not gamma >= 0:
        raise ValueError("need alpha > 0, gamma >= 0, L > 0")
    _check_epsilon(epsilon)
    d = 4 * alpha + 4 * gamma + 1
    base = L**2 * d * (4 * gamma + 2 * alpha + 1) / (4 * alpha)
    log_w = (math.log(base) - 4.0 * math.log(epsilon)) / d
    return WindowSolution(math.exp(log_w), 0.0)


def constant_c(beta: float, r: float, gamma: float, L: float) -> float:
    """Right-hand constant of the exponential window equation.

    ``gamma`` is accepted for signature symmetry; no branch depends on it.
    """
    if not 0 < r <= 2:
        raise ValueError(f"r must lie in (0, 2], got {r}")
    if r < 1:
        return 2.0 * beta * r * L**2
    if r == 1:
        # (e^{4b} - 1) / (2 e^{2b}) = sinh(2b)
        return L**2 * math.sinh(2.0 * beta)
    if r < 2:
        return L**2 / 2.0
    return L**2 / (2.0 * math.exp(2.0 * beta))


def exp_window_log_lhs(W: float, beta: float, r: float, gamma: float) -> float:
    """Log of ``W**(4g + (1-r)_+) * exp(4 b W**r - 2 b r W**(r-1) 1{r>1})``."""
    power = 4.0 * gamma + max(1.0 - r, 0.0)
    out = power * math.log(W) + 4.0 * beta * W**r
    if r > 1:
        out -= 2.0 * beta * r * W ** (r - 1.0)
    return out


def exp_window(
    beta: float, r: float, gamma: float, L: float, epsilon: float
) -> WindowSolution:
    """Solve the exponential-class window equation by log-space bisection.

    The log left side is strictly increasing on ``W >= 1`` for every
    ``r in (0, 2]``: its derivative is ``4g/W + 4brW**(r-1) - 2br(r-1)W**(r-2)``
    plus ``(1-r)/W`` when ``r < 1``, and ``4brW**(r-1) > 2br(r-1)W**(r-2)``
    for ``W >= 1, r <= 2``. The bracket is therefore ``[1, 2**k]``.

    Raises
    ------
    WindowError
        If the left side at ``W = 1`` already exceeds ``c eps**-4``.
    """
    if not beta > 0 or not L > 0 or not gamma >= 0:
        raise ValueError("need beta > 0, gamma >= 0, L > 0")
    _check_epsilon(epsilon)
    c = constant_c(beta, r, gamma, L)
    target = math.log(c) - 4.0 * math.log(epsilon)

    def g(W: float) -> float:
        return exp_window_log_lhs(W, beta, r, gamma) - target

    lo, hi = 1.0, 2.0
    g_lo = g(lo)
    if g_lo > WINDOW_LOG_TOL:
        raise WindowError(
            f"epsilon too large for this class: no window >= 1 solves the equation "
            f"(log lhs at W=1 exceeds target by {g_lo:.3g})"
        )
    if abs(g_lo) <= WINDOW_LOG_TOL:
        return WindowSolution(1.0, abs(g_lo), c)
    for _ in range(MAX_DOUBLINGS):
        if g(hi) >= 0:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise WindowError("window equation: no upper bracket found")

    best_w, best_res = lo, abs(g(lo))
    for _ in range(MAX_BISECTIONS):
        mid = 0.5 * (lo + hi)
        val = g(mid)
        if abs(val) < best_res:
            best_w, best_res = mid, abs(val)
        if best_res <= WINDOW_LOG_TOL or mid in (lo, hi):
            break
        if val < 0:
            lo = mid
        else:
            hi = mid
    if best_res > WINDOW_LOG_TOL:
        raise WindowError(f"bisection stalled with log residual {best_res:.3g}")
    return WindowSolution(best_w, best_res, c)


def optimal_window(ellipsoid: Ellipsoid, gamma: float, epsilon: float) -> WindowSolution:
    if isinstance(ellipsoid, PolynomialEllipsoid):
        return poly_window(ellipsoid.alpha, gamma, ellipsoid.L, epsilon)
    if isinstance(ellipsoid, ExponentialEllipsoid):
        return exp_window(ellipsoid.beta, ellipsoid.r, gamma, ellipsoid.L, epsilon)
    raise TypeError(f"unknown ellipsoid {ellipsoid!r}")


def optimal_filter(ellipsoid: Ellipsoid, gamma: float, epsilon: float) -> FilterSeq:
    """Filter at the formula window, window clamped below at 1."""
    sol = optimal_window(ellipsoid, gamma, epsilon)
    if sol.window < 1:
        sol.cutoff  # emits the clamping warning
    return matching_filter(ellipsoid, sol.clamped)
