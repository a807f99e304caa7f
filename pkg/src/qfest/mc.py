"""Seeded Monte Carlo risk estimation and the brute-force window search."""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError
from .filters import FilterSeq, matching_filter, optimal_window
from .model import Ellipsoid, Problem, Signal, quadratic_functional, sample_observations
from .risk import estimate, worst_case_risk

MIN_REPLICATES = 100
# replicates per work unit; fixed so results never depend on the worker count
BLOCK_SIZE = 2048
GRID_RESOLUTION = 32


@dataclass(frozen=True)
class McResult:
    mean: float
    std_error: float
    replicates: int
    seed: int


def _squared_errors(signal: Signal, filt: FilterSeq, problem: Problem, count: int,
                    target: float, seed: int, start: int, stop: int) -> np.ndarray:
    out = np.empty(stop - start)
    for j, k in enumerate(range(start, stop)):
        obs = sample_observations(signal, problem, count, seed, replicate=k)
        out[j] = (estimate(obs, filt) - target) ** 2
    return out


def mc_risk(
    signal: Signal,
    filt: FilterSeq,
    problem: Problem,
    replicates: int,
    seed: int,
    threads: int = 1,
) -> McResult:
    """Monte Carlo estimate of ``E[(Q~ - Q(theta))**2]``.

    Replicate ``k`` draws its noise from ``replicate_rng(seed, k)``. Squared
    errors land in an index-ordered buffer that is reduced sequentially, so
    the result is bit-identical for any ``threads``.
    """
    if replicates < MIN_REPLICATES:
        raise ValueError(f"need at least {MIN_REPLICATES} replicates, got {replicates}")
    count = max(signal.support, filt.support, 1)
    target = quadratic_functional(signal)
    bounds = [(s, min(s + BLOCK_SIZE, replicates)) for s in range(0, replicates, BLOCK_SIZE)]

    def run(block: tuple[int, int]) -> np.ndarray:
        return _squared_errors(signal, filt, problem, count, target, seed, *block)

    if threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, bounds))
    else:
        parts = [run(b) for b in bounds]
    errs = np.concatenate(parts)

    # shift by the first value: exact for constant samples, fewer digits lost otherwise
    x0 = float(errs[0])
    dev = errs - x0
    mean = x0 + math.fsum(dev) / replicates
    centered = errs - mean
    var = math.fsum(centered * centered) / (replicates - 1)
    return McResult(mean, math.sqrt(var / replicates), replicates, seed)


@dataclass(frozen=True)
class GridSearchResult:
    best_window: float
    best_risk: float
    formula_window: float
    formula_risk: float

    @property
    def ratio(self) -> float:
        return self.formula_risk / self.best_risk


def window_objective(ellipsoid: Ellipsoid, problem: Problem, window: float) -> float:
    """Worst-case ``a0 + a1`` over the ellipsoid for the filter at ``window``."""
    filt = matching_filter(ellipsoid, window)
    return worst_case_risk(filt, ellipsoid, problem).bias_variance


def grid_search_window(
    ellipsoid: Ellipsoid,
    gamma: float,
    epsilon: float,
    window_range: Optional[tuple[float, float]] = None,
    resolution: int = GRID_RESOLUTION,
    threads: int = 1,
) -> GridSearchResult:
    """Minimize the worst-case bias-variance objective over a window grid.

    The grid has ``resolution`` points per unit window (integers included)
    and always contains the formula window, so ``best_risk <= formula_risk``.
    """
    formula = optimal_window(ellipsoid, gamma, epsilon).window
    if window_range is None:
        window_range = (1.0, 3.0 * max(formula, 1.0))
    lo, hi = float(window_range[0]), float(window_range[1])
    lo = max(lo, 1.0)
    if hi < lo:
        raise ConfigError(f"empty window range [{window_range[0]}, {window_range[1]}]")
    if lo > 1.0 or hi < 3.0 * formula:
        warnings.warn(
            f"window range [{lo}, {hi}] does not cover [1, {3 * formula:.4g}]",
            stacklevel=2,
        )
    if resolution < 1:
        raise ValueError("resolution must be >= 1")
    steps = int(math.floor((hi - lo) * resolution + 1e-9))
    grid = lo + np.arange(steps + 1) / resolution
    if lo <= formula <= hi:
        grid = np.append(grid, formula)

    problem = Problem(gamma, epsilon)

    def objective(w: float) -> float:
        return window_objective(ellipsoid, problem, float(w))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            risks = np.array(list(pool.map(objective, grid)))
    else:
        risks = np.array([objective(w) for w in grid])
    best = int(np.argmin(risks))
    formula_risk = objective(formula) if formula >= 1 else objective(1.0)
    return GridSearchResult(float(grid[best]), float(risks[best]), formula, formula_risk)
