"""Gaussian sequence model: problems, signals, smoothness ellipsoids and sampling.

Observations follow ``Y_i = theta_i + eps * i**gamma * Z_i`` with ``Z_i`` i.i.d.
standard normal. Signals are finitely supported; every coefficient past the
stored support is exactly zero.
"""

from __future__ import annotations

import csv
import functools
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Union

import numpy as np

from .errors import NumericalOverflowWarning, TruncationError

# log(DBL_MAX); exp of anything larger is +inf
LOG_MAX = math.log(np.finfo(float).max)

SEED_LIMIT = 2**64


def _frozen(values: Iterable[float]) -> np.ndarray:
    arr = np.array(values, dtype=float).ravel()
    arr.setflags(write=False)
    return arr


def indices(n: int) -> np.ndarray:
    """1-based index vector ``1..n`` as floats."""
    return np.arange(1, n + 1, dtype=float)


@dataclass(frozen=True)
class Problem:
    """Noise law of the sequence model.

    ``gamma`` is the growth exponent of the noise standard deviation
    ``sigma_i = i**gamma`` and ``epsilon`` the global noise level.
    """

    gamma: float
    epsilon: float

    def __post_init__(self) -> None:
        if not (self.gamma >= 0 and math.isfinite(self.gamma)):
            raise ValueError(f"gamma must be finite and >= 0, got {self.gamma}")
        if not (self.epsilon > 0 and math.isfinite(self.epsilon)):
            raise ValueError(f"epsilon must be finite and > 0, got {self.epsilon}")
        if self.epsilon >= 1:
            warnings.warn(
                f"epsilon={self.epsilon} >= 1: asymptotic formulas do not apply",
                stacklevel=3,
            )

    def sigma(self, n: int) -> np.ndarray:
        return indices(n) ** self.gamma

    def variance(self, n: int) -> np.ndarray:
        """``sigma_i**2`` for i = 1..n."""
        return indices(n) ** (2.0 * self.gamma)


@dataclass(frozen=True)
class Signal:
    coeffs: np.ndarray = field(default_factory=lambda: _frozen(()))

    def __post_init__(self) -> None:
        arr = _frozen(self.coeffs)
        if not np.all(np.isfinite(arr)):
            raise ValueError("signal coefficients must be finite")
        object.__setattr__(self, "coeffs", arr)

    @classmethod
    def zero(cls) -> "Signal":
        return cls(())

    @property
    def support(self) -> int:
        return len(self.coeffs)

    def padded(self, n: int) -> np.ndarray:
        """Coefficients 1..n, zero-filled past the support (n >= support)."""
        out = np.zeros(max(n, self.support))
        out[: self.support] = self.coeffs
        return out

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Signal):
            return NotImplemented
        return np.array_equal(self.coeffs, other.coeffs)

    def __hash__(self) -> int:
        return hash(self.coeffs.tobytes())


@dataclass(frozen=True)
class PolynomialEllipsoid:
    """Sobolev-type class ``sum i**(2 alpha) theta_i**2 <= L``."""

    alpha: float
    L: float

    def __post_init__(self) -> None:
        if not self.alpha > 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        if not self.L > 0:
            raise ValueError(f"L must be > 0, got {self.L}")

    def log_weight_sq(self, idx: np.ndarray) -> np.ndarray:
        return 2.0 * self.alpha * np.log(idx)


@dataclass(frozen=True)
class ExponentialEllipsoid:
    """Analytic-type class ``sum exp(2 beta i**r) theta_i**2 <= L``."""

    beta: float
    r: float
    L: float

    def __post_init__(self) -> None:
        if not self.beta > 0:
            raise ValueError(f"beta must be > 0, got {self.beta}")
        if not 0 < self.r <= 2:
            raise ValueError(f"r must lie in (0, 2], got {self.r}")
        if not self.L > 0:
            raise ValueError(f"L must be > 0, got {self.L}")

    def log_weight_sq(self, idx: np.ndarray) -> np.ndarray:
        return 2.0 * self.beta * idx**self.r


Ellipsoid = Union[PolynomialEllipsoid, ExponentialEllipsoid]


def weight_sq(ellipsoid: Ellipsoid, n: int) -> np.ndarray:
    """``a_i**2`` for i = 1..n, saturating to +inf (with a warning) on overflow."""
    logw = ellipsoid.log_weight_sq(indices(n))
    if np.any(logw > LOG_MAX):
        warnings.warn(
            f"ellipsoid weight overflow at index {int(np.argmax(logw > LOG_MAX)) + 1}",
            NumericalOverflowWarning,
            stacklevel=2,
        )
    with np.errstate(over="ignore"):
        return np.exp(logw)


@dataclass(frozen=True)
class Observations:
    values: np.ndarray
    problem: Problem
    seed: int
    replicate: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", _frozen(self.values))

    @property
    def count(self) -> int:
        return len(self.values)


def quadratic_functional(signal: Signal) -> float:
    """Return ``Q(theta) = sum theta_i**2``."""
    return math.fsum(signal.coeffs * signal.coeffs)


def ellipsoid_norm(signal: Signal, ellipsoid: Ellipsoid) -> float:
    """Return ``sum a_i**2 theta_i**2``; membership in the class is ``<= L``.

    Terms are formed in log space so tiny coefficients paired with huge
    weights stay finite. A term that still exceeds double range makes the
    result +inf and emits :class:`NumericalOverflowWarning`.
    """
    theta = signal.coeffs
    nz = np.flatnonzero(theta)
    if nz.size == 0:
        return 0.0
    idx = nz + 1.0
    log_terms = ellipsoid.log_weight_sq(idx) + 2.0 * np.log(np.abs(theta[nz]))
    if np.any(log_terms > LOG_MAX):
        warnings.warn(
            "ellipsoid norm overflows double range; saturated to +inf",
            NumericalOverflowWarning,
            stacklevel=2,
        )
        return math.inf
    total = math.fsum(np.exp(log_terms))
    if math.isinf(total):
        warnings.warn(
            "ellipsoid norm overflows double range; saturated to +inf",
            NumericalOverflowWarning,
            stacklevel=2,
        )
    return total


@functools.lru_cache(maxsize=64)
def _philox_key(seed: int) -> tuple[int, int]:
    key = np.random.SeedSequence(seed).generate_state(2, np.uint64)
    return int(key[0]), int(key[1])


def replicate_rng(seed: int, replicate: int = 0) -> np.random.Generator:
    """Independent generator for replicate ``replicate`` under ``seed``.

    The 64-bit seed is hashed into a Philox key by ``SeedSequence``; the
    replicate index occupies the third 64-bit counter word, so each replicate
    owns a disjoint block of 2**128 counter values. The stream depends only on
    ``(seed, replicate)``, never on scheduling.
    """
    if not 0 <= seed < SEED_LIMIT:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    if not 0 <= replicate < SEED_LIMIT:
        raise ValueError(f"replicate index out of range: {replicate}")
    key = np.array(_philox_key(seed), dtype=np.uint64)
    counter = np.array([0, 0, replicate, 0], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(counter=counter, key=key))


def sample_observations(
    signal: Signal,
    problem: Problem,
    count: int,
    seed: int,
    replicate: int = 0,
) -> Observations:
    """Draw ``Y_1..Y_count`` from the sequence model.

    Raises
    ------
    TruncationError
        If ``count`` is smaller than the signal support.
    """
    if count < 1:
        raise ValueError(f"count must be positive, got {count}")
    if count < signal.support:
        raise TruncationError(
            f"count={count} truncates a signal supported on {signal.support} indices"
        )
    z = replicate_rng(seed, replicate).standard_normal(count)
    noise = (problem.epsilon * problem.sigma(count)) * z
    return Observations(signal.padded(count) + noise, problem, seed, replicate)


def load_signal_csv(path: str | Path) -> Signal:
    """Read a one-column CSV of coefficients; a non-numeric first row is a header."""
    coeffs: list[float] = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or not row[0].strip():
                continue
            try:
                coeffs.append(float(row[0]))
            except ValueError:
                if lineno == 1 and not coeffs:
                    continue
                raise ValueError(f"{path}:{lineno}: not a number: {row[0]!r}") from None
    return Signal(coeffs)
