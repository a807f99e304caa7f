"""The estimator and its exact quadratic-risk decomposition.

For a filter ``h`` and signal ``theta`` the risk of
``Q~ = sum h_i (Y_i**2 - eps**2 sigma_i**2)`` splits as
``a0 + a1 + a2 - a3`` with

* ``a0 = (sum theta_i**2 (1 - h_i))**2``           squared bias
* ``a1 = 2 eps**4 sum h_i**2 sigma_i**4``         pure-noise variance
* ``a2 = 4 eps**2 sum sigma_i**2 theta_i**2``     efficiency term
* ``a3 = 4 eps**2 sum (1 - h_i**2) sigma_i**2 theta_i**2``

All sums are accumulated with :func:`math.fsum` in ascending index order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, TruncationError
from .filters import FilterSeq
from .model import Ellipsoid, Observations, Problem, Signal, indices

# vertices scanned beyond the filter support before giving up
MAX_VERTEX_SCAN = 10_000_000


@dataclass(frozen=True)
class RiskDecomposition:
    """Exact risk terms; ``total = a0 + a1 + a2 - a3`` and ``second_order = total - a2``."""

    a0: float
    a1: float
    a2: float
    a3: float
    total: float
    second_order: float

    @property
    def bias_variance(self) -> float:
        """``a0 + a1``, the objective the optimal window balances."""
        return self.a0 + self.a1


def estimate(observations: Observations, filt: FilterSeq) -> float:
    """Return ``sum_{i <= floor(W)} h_i (Y_i**2 - eps**2 i**(2 gamma))``."""
    n = filt.support
    if observations.count < n:
        raise TruncationError(
            f"{observations.count} observations cannot feed a filter of support {n}"
        )
    if n == 0:
        return 0.0
    y = observations.values[:n]
    prob = observations.problem
    centered = y * y - prob.epsilon**2 * prob.variance(n)
    return math.fsum(filt.weights * centered)


def _aligned(signal: Signal, filt: FilterSeq, problem: Problem):
    n = max(signal.support, filt.support)
    return signal.padded(n), filt.padded(n), problem.variance(n)


def exact_risk(signal: Signal, filt: FilterSeq, problem: Problem) -> RiskDecomposition:
    theta, h, var = _aligned(signal, filt, problem)
    eps2 = problem.epsilon**2
    th2 = theta * theta
    a0 = math.fsum(th2 * (1.0 - h)) ** 2
    a1 = 2.0 * eps2 * eps2 * math.fsum(h * h * var * var)
    a2 = 4.0 * eps2 * math.fsum(var * th2)
    # (1 - h)(1 + h) avoids cancellation in 1 - h**2 for h near 1
    a3 = 4.0 * eps2 * math.fsum((1.0 - h) * (1.0 + h) * var * th2)
    # a2 - a3 is summed termwise as h**2 sigma**2 theta**2: subtracting the two
    # rounded totals loses every digit when both dwarf the risk
    gap = 4.0 * eps2 * math.fsum(h * h * var * th2)
    total = math.fsum((a0, a1, gap))
    second_order = math.fsum((a0, a1, -a3))
    return RiskDecomposition(a0, a1, a2, a3, total, second_order)


def mse_alternative(signal: Signal, filt: FilterSeq, problem: Problem) -> float:
    """Total risk as bias**2 + variance, without the a0..a3 split.

    Exists as an independent consistency check on :func:`exact_risk`.
    """
    theta, h, var = _aligned(signal, filt, problem)
    eps2 = problem.epsilon**2
    th2 = theta * theta
    bias = math.fsum(np.concatenate((h * th2, -th2)))
    variance_signal = 4.0 * eps2 * math.fsum(h * h * var * th2)
    variance_noise = 2.0 * eps2 * eps2 * math.fsum(h * h * var * var)
    return math.fsum((bias * bias, variance_signal, variance_noise))


@dataclass(frozen=True)
class WorstCase:
    """Suprema of risk functionals over an ellipsoid for a fixed filter.

    ``*_vertex`` is the maximizing index ``k`` (signal ``sqrt(L)/a_k`` at
    ``k``), or 0 when the zero signal is the maximizer.
    """

    total: float
    second_order: float
    bias_variance: float
    total_vertex: int
    second_order_vertex: int
    bias_variance_vertex: int

    def signal(self, ellipsoid: Ellipsoid, which: str = "total") -> Signal:
        k = getattr(self, f"{which}_vertex")
        if k == 0:
            return Signal.zero()
        coeffs = np.zeros(k)
        coeffs[-1] = math.sqrt(ellipsoid.L) * math.exp(
            -0.5 * float(ellipsoid.log_weight_sq(np.array([float(k)]))[0])
        )
        return Signal(coeffs)


def worst_case_risk(filt: FilterSeq, ellipsoid: Ellipsoid, problem: Problem) -> WorstCase:
    """Exact suprema of total, second-order and ``a0 + a1`` risk over the ellipsoid.

    In the variables ``u_i = theta_i**2`` each functional is
    ``(c.u)**2 + d.u + a1`` with ``c_i = 1 - h_i >= 0``, a convex function on
    the simplex ``{u >= 0, sum a_i**2 u_i <= L}``. Its maximum is attained at
    the origin or at a vertex ``u = (L / a_k**2) e_k``, so the supremum is an
    enumeration over ``k``. Past the filter support ``c_k = 1`` and the vertex
    value is at most ``(L / a_k**2)**2``, which gives the stopping rule.
    """
    eps2 = problem.epsilon**2
    a1 = 2.0 * eps2 * eps2 * math.fsum(filt.weights**2 * problem.variance(filt.support) ** 2)
    L = ellipsoid.L

    def vertex_values(k_idx: np.ndarray, h: np.ndarray):
        u = L * np.exp(-ellipsoid.log_weight_sq(k_idx))
        var = k_idx ** (2.0 * problem.gamma)
        bias = ((1.0 - h) * u) ** 2
        eff = 4.0 * eps2 * var * u
        return u, (
            bias + h * h * eff,  # a0 + (a2 - a3)
            bias - (1.0 - h) * (1.0 + h) * eff,  # a0 - a3
            bias,  # a0
        )

    best = [0.0, 0.0, 0.0]
    arg = [0, 0, 0]

    def absorb(k_idx: np.ndarray, values) -> None:
        for j, v in enumerate(values):
            m = int(np.argmax(v))
            if v[m] > best[j]:
                best[j] = float(v[m])
                arg[j] = int(k_idx[m])

    n = filt.support
    if n:
        absorb(indices(n), vertex_values(indices(n), filt.weights)[1])

    start, chunk = n + 1, 64
    while True:
        if start > MAX_VERTEX_SCAN:
            raise NumericalError("worst-case vertex scan did not terminate")
        k_idx = np.arange(start, start + chunk, dtype=float)
        u, values = vertex_values(k_idx, np.zeros(chunk))
        absorb(k_idx, values)
        # beyond the support every vertex value is <= u_k**2 with u_k nonincreasing;
        # the second-order value u (u - 4 eps^2 sigma^2) also stays <= 0 once negative
        u_last, var_last = u[-1], k_idx[-1] ** (2.0 * problem.gamma)
        ceiling = u_last**2
        done_second = ceiling <= best[1] or u_last <= 4.0 * eps2 * var_last
        if ceiling <= best[0] and ceiling <= best[2] and done_second:
            break
        start += chunk
        chunk *= 2

    return WorstCase(
        total=math.fsum((a1, best[0])),
        second_order=math.fsum((a1, best[1])),
        bias_variance=math.fsum((a1, best[2])),
        total_vertex=arg[0],
        second_order_vertex=arg[1],
        bias_variance_vertex=arg[2],
    )
