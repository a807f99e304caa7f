"""Theoretical rates and constants, and the two asymptotic lemmas with exact oracles.

Lemma functions come in pairs: ``*_asymptote`` evaluates the leading-order
formula, ``*_exact`` the quantity it approximates. Both have ``log_*``
counterparts, which the ratio helpers use so that ``exp(b v**s)`` never has to
fit in a double.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import NumericalOverflowWarning
from .model import LOG_MAX, Problem, Signal, indices


def _saturating_exp(log_value: float, what: str) -> float:
    if log_value > LOG_MAX:
        warnings.warn(f"{what} overflows double range; saturated to +inf",
                      NumericalOverflowWarning, stacklevel=3)
        return math.inf
    return math.exp(log_value)


def rate_exponent(alpha: float, gamma: float) -> float:
    """Exponent ``16a / (4a + 4g + 1)`` of the polynomial-class rate."""
    return 16.0 * alpha / (4.0 * alpha + 4.0 * gamma + 1.0)


def is_regular(alpha: float, gamma: float) -> bool:
    """True in the parametric regime ``alpha > gamma + 1/4``."""
    return alpha > gamma + 0.25


def constant_B(alpha: float, gamma: float) -> float:
    return 4.0 * alpha / ((4 * gamma + 4 * alpha + 1) * (4 * gamma + 2 * alpha + 1))


def constant_C(alpha: float, gamma: float, L: float) -> float:
    """Risk constant of the polynomial class.

    ``C = L**(2(4g+1)/d) / (4g+1) * ((2a+4g+1)/(4a))**(-4a/d) * d**((4g+1)/d)``
    with ``d = 4a + 4g + 1``.
    """
    if not alpha > 0 or not gamma >= 0 or not L > 0:
        raise ValueError("need alpha > 0, gamma >= 0, L > 0")
    d = 4 * alpha + 4 * gamma + 1
    g1 = 4 * gamma + 1
    log_c = (
        2 * g1 / d * math.log(L)
        - math.log(g1)
        - 4 * alpha / d * math.log((2 * alpha + 4 * gamma + 1) / (4 * alpha))
        + g1 / d * math.log(d)
    )
    return math.exp(log_c)


def constant_C_from_B(alpha: float, gamma: float, L: float) -> float:
    """Same constant via ``(L**(2(4g+1)) B**(4a))**(1/d) * d / (4g+1)``."""
    d = 4 * alpha + 4 * gamma + 1
    g1 = 4 * gamma + 1
    B = constant_B(alpha, gamma)
    return (L ** (2 * g1) * B ** (4 * alpha)) ** (1 / d) * d / g1


@dataclass(frozen=True)
class RateBound:
    rate_exponent: float
    constant: float

    def value_at(self, epsilon: float) -> float:
        return self.constant * epsilon**self.rate_exponent


def poly_rate_bound(alpha: float, gamma: float, L: float) -> RateBound:
    return RateBound(rate_exponent(alpha, gamma), constant_C(alpha, gamma, L))


def nonparam_rate(alpha: float, gamma: float, L: float, epsilon: float) -> float:
    """``C(a, g, L) * eps**(16a / (4a + 4g + 1))``."""
    if not 0 < epsilon <= 1:
        raise ValueError(f"epsilon must lie in (0, 1], got {epsilon}")
    return poly_rate_bound(alpha, gamma, L).value_at(epsilon)


def second_order_bound_exp(beta: float, r: float, gamma: float, epsilon: float) -> float:
    """``2 eps**4 / (4g+1) * (log(1/eps) / b)**((4g+1)/r)``."""
    if not 0 < epsilon < math.exp(-1):
        raise ValueError(f"epsilon must lie in (0, 1/e), got {epsilon}")
    g1 = 4.0 * gamma + 1.0
    return 2.0 * epsilon**4 / g1 * (math.log(1.0 / epsilon) / beta) ** (g1 / r)


def efficiency_term(signal: Signal, problem: Problem) -> float:
    """``4 eps**2 sum sigma_i**2 theta_i**2``, the parametric part of the risk."""
    th = signal.coeffs
    return 4.0 * problem.epsilon**2 * math.fsum(problem.variance(signal.support) * (th * th))


# --- integral lemma: int_0^v x^a exp(b x^s) dx ~ v^(a-s+1) exp(b v^s) / (b s)

def _check_integral_args(a: float, b: float, s: float, v: float) -> None:
    if not (a > 0 and b > 0 and s > 0 and v > 0):
        raise ValueError("integral lemma needs a, b, s, v > 0")


def log_lemma_integral_asymptote(a: float, b: float, s: float, v: float) -> float:
    _check_integral_args(a, b, s, v)
    return (a - s + 1) * math.log(v) + b * v**s - math.log(b * s)


def log_lemma_integral_exact(a: float, b: float, s: float, v: float) -> float:
    """Log of the integral by adaptive quadrature (relative tolerance 1e-12).

    The integrand is scaled by ``exp(-b v**s)`` and breakpoints are placed at
    multiples of its decay length ``1 / (b s v**(s-1))`` below ``v``.
    """
    _check_integral_args(a, b, s, v)
    peak = b * v**s

    def f(x: float) -> float:
        if x <= 0.0:
            return 0.0
        return math.exp(a * math.log(x) + b * x**s - peak)

    scale = 1.0 / (b * s * v ** (s - 1.0))
    points = sorted({v - k * scale for k in (1, 4, 16, 64, 256) if 0 < v - k * scale < v})
    val, _ = integrate.quad(f, 0.0, v, points=points or None, limit=500,
                            epsabs=0.0, epsrel=1e-12)
    return math.log(val) + peak


def lemma_integral_asymptote(a: float, b: float, s: float, v: float) -> float:
    return _saturating_exp(log_lemma_integral_asymptote(a, b, s, v), "integral asymptote")


def lemma_integral_exact(a: float, b: float, s: float, v: float) -> float:
    return _saturating_exp(log_lemma_integral_exact(a, b, s, v), "integral")


def lemma_integral_ratio(a: float, b: float, s: float, v: float) -> float:
    """exact / asymptote, computed in log space."""
    return math.exp(log_lemma_integral_exact(a, b, s, v) - log_lemma_integral_asymptote(a, b, s, v))


# --- sum lemma: sum_{i<=N} i^a exp(b i^r), three regimes in r

def _check_sum_args(a: float, b: float, r: float, N: int) -> None:
    if not (a >= 0 and b > 0 and r > 0):
        raise ValueError("sum lemma needs a >= 0, b > 0, r > 0")
    if N < 1 or int(N) != N:
        raise ValueError(f"N must be a positive integer, got {N}")


def log_lemma_sum_asymptote(a: float, b: float, r: float, N: int) -> float:
    _check_sum_args(a, b, r, N)
    if r > 1:
        return a * math.log(N) + b * N**r
    if r < 1:
        return (a + 1 - r) * math.log(N) + b * N**r - math.log(b * r)
    # r == 1; also exact in the leading order for a == 0 (geometric series)
    return a * math.log(N) + b * (N + 1) - math.log(math.expm1(b))


def log_lemma_sum_exact(a: float, b: float, r: float, N: int) -> float:
    """Log of the direct sum, terms scaled by the largest before an fsum."""
    _check_sum_args(a, b, r, N)
    i = indices(int(N))
    log_terms = a * np.log(i) + b * i**r
    m = float(np.max(log_terms))
    return m + math.log(math.fsum(np.exp(log_terms - m)))


def lemma_sum_asymptote(a: float, b: float, r: float, N: int) -> float:
    return _saturating_exp(log_lemma_sum_asymptote(a, b, r, N), "sum asymptote")


def lemma_sum_exact(a: float, b: float, r: float, N: int) -> float:
    return _saturating_exp(log_lemma_sum_exact(a, b, r, N), "sum")


def lemma_sum_ratio(a: float, b: float, r: float, N: int) -> float:
    return math.exp(log_lemma_sum_exact(a, b, r, N) - log_lemma_sum_asymptote(a, b, r, N))
