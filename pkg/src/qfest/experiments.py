"""Verification pipelines behind the CLI subcommands.

Each pipeline takes an :class:`ExperimentConfig` and returns a :class:`Report`
holding a table plus a pass flag and headline metrics. Sweeps over epsilon
run on a thread pool; row order always follows the input order.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from . import asymptotics as asym
from .config import ExperimentConfig
from .errors import ConfigError, NumericalError
from .extremal import least_favorable
from .filters import matching_filter, optimal_window
from .mc import grid_search_window, mc_risk
from .model import Ellipsoid, PolynomialEllipsoid, Problem, load_signal_csv
from .risk import RiskDecomposition, exact_risk, worst_case_risk

RISK_CURVE_COLUMNS = ("epsilon", "window", "a0", "a1", "a2", "a3",
                      "total", "second_order", "bound", "ratio")

DEFAULT_TOLERANCE = {
    "risk-curve": 0.5,
    "rate-check": 0.05,
    "constant-check": 0.1,
    "lemma-check": 0.05,
}
GRID_MAX_RATIO = {"polynomial": 1.05, "exponential": 1.10}


@dataclass
class Report:
    command: str
    params: dict[str, Any]
    passed: bool
    metrics: dict[str, Any]
    columns: Sequence[str]
    rows: list[tuple] = field(default_factory=list)

    def summary(self) -> dict[str, Any]:
        return {"command": self.command, "params": self.params,
                "pass": self.passed, "metrics": self.metrics}


def _sweep(cfg: ExperimentConfig, fn: Callable[[float], Any]) -> list[Any]:
    if cfg.threads > 1 and len(cfg.epsilons) > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            return list(pool.map(fn, cfg.epsilons))
    return [fn(e) for e in cfg.epsilons]


def _tolerance(cfg: ExperimentConfig, command: str) -> float:
    return cfg.tolerance if cfg.tolerance is not None else DEFAULT_TOLERANCE[command]


def trend_slope(epsilons: Sequence[float], values: Sequence[float]) -> float:
    """Least-squares slope of ``values`` against ``log10(1/eps)``.

    Negative means the values decrease as epsilon shrinks.
    """
    x = -np.log10(np.asarray(epsilons, dtype=float))
    y = np.asarray(values, dtype=float)
    if len(x) < 2:
        return 0.0
    return float(np.polyfit(x, y, 1)[0])


def loglog_slope(epsilons: Sequence[float], values: Sequence[float]) -> float:
    return float(np.polyfit(np.log(epsilons), np.log(values), 1)[0])


@dataclass(frozen=True)
class WorstCasePoint:
    """Formula window, matching filter and least-favorable risk at one epsilon."""

    epsilon: float
    window: float
    risk: RiskDecomposition


def least_favorable_point(ellipsoid: Ellipsoid, gamma: float, epsilon: float) -> WorstCasePoint:
    window = optimal_window(ellipsoid, gamma, epsilon).clamped
    filt = matching_filter(ellipsoid, window)
    theta = least_favorable(ellipsoid, gamma, epsilon, window=window).signal
    return WorstCasePoint(epsilon, window, exact_risk(theta, filt, Problem(gamma, epsilon)))


def theoretical_bound(ellipsoid: Ellipsoid, gamma: float, epsilon: float) -> float:
    """Rate-level bound: ``C eps**rate`` (polynomial) or the exponential second-order bound."""
    if isinstance(ellipsoid, PolynomialEllipsoid):
        return asym.nonparam_rate(ellipsoid.alpha, gamma, ellipsoid.L, epsilon)
    return asym.second_order_bound_exp(ellipsoid.beta, ellipsoid.r, gamma, epsilon)


def _total_is_bounded(ellipsoid: Ellipsoid, gamma: float) -> bool:
    # irregular polynomial regime: the full risk is nonparametric
    return isinstance(ellipsoid, PolynomialEllipsoid) and not asym.is_regular(ellipsoid.alpha, gamma)


def risk_curve(cfg: ExperimentConfig) -> Report:
    """Least-favorable risk decomposition against the theoretical bound.

    ``ratio`` is ``total / bound`` in the irregular polynomial regime and
    ``second_order / bound`` otherwise, matching what each bound controls.
    """
    ell = cfg.ellipsoid()
    total_mode = _total_is_bounded(ell, cfg.gamma)

    def row(eps: float) -> tuple:
        pt = least_favorable_point(ell, cfg.gamma, eps)
        bound = theoretical_bound(ell, cfg.gamma, eps)
        r = pt.risk
        num = r.total if total_mode else r.second_order
        return (eps, pt.window, r.a0, r.a1, r.a2, r.a3, r.total, r.second_order, bound, num / bound)

    rows = _sweep(cfg, row)
    tol = _tolerance(cfg, "risk-curve")
    last = min(rows, key=lambda t: t[0])[-1]
    metrics = {
        "regime": "total" if total_mode else "second_order",
        "ratio_at_smallest_epsilon": last,
        "ratio_trend_slope": trend_slope([t[0] for t in rows], [abs(t[-1] - 1) for t in rows]),
    }
    return Report("risk-curve", cfg.params("risk-curve"), abs(last - 1) <= tol, metrics,
                  RISK_CURVE_COLUMNS, rows)


def _require_span(epsilons: Sequence[float]) -> None:
    if len(epsilons) < 4:
        raise ConfigError(f"rate-check needs at least 4 epsilon values, got {len(epsilons)}")
    if math.log10(max(epsilons) / min(epsilons)) < 3 - 1e-9:
        raise ConfigError("rate-check needs epsilon values spanning at least 3 decades")


def worst_second_order(ellipsoid: Ellipsoid, gamma: float, epsilon: float) -> tuple[float, float]:
    """Formula window and the exact worst-case second-order risk over the class."""
    window = optimal_window(ellipsoid, gamma, epsilon).clamped
    filt = matching_filter(ellipsoid, window)
    wc = worst_case_risk(filt, ellipsoid, Problem(gamma, epsilon))
    return window, wc.second_order


def rate_check(cfg: ExperimentConfig) -> Report:
    """Log-log slope of the worst-case second-order risk against epsilon.

    For the exponential class the logarithmic factor of the bound is divided
    out first, leaving a pure ``eps**4`` law.
    """
    _require_span(cfg.epsilons)
    ell = cfg.ellipsoid()

    def row(eps: float) -> tuple:
        window, so = worst_second_order(ell, cfg.gamma, eps)
        return (eps, window, so, theoretical_bound(ell, cfg.gamma, eps))

    rows = _sweep(cfg, row)
    eps = np.array([t[0] for t in rows])
    so = np.array([t[2] for t in rows])
    if isinstance(ell, PolynomialEllipsoid):
        theory = asym.rate_exponent(ell.alpha, cfg.gamma)
        y = so
    else:
        theory = 4.0
        y = so / (np.log(1 / eps) / ell.beta) ** ((4 * cfg.gamma + 1) / ell.r)
    if np.any(y <= 0):
        raise NumericalError("worst-case second-order risk is not positive on this grid")
    slope = loglog_slope(eps, y)
    dev = abs(slope - theory) / theory
    metrics = {"slope": slope, "theoretical_exponent": theory, "relative_deviation": dev}
    return Report("rate-check", cfg.params("rate-check"), dev <= _tolerance(cfg, "rate-check"),
                  metrics, ("epsilon", "window", "worst_second_order", "bound"), rows)


def constant_check(cfg: ExperimentConfig) -> Report:
    """Ratio of least-favorable ``a0 + a1`` to the theoretical bound."""
    ell = cfg.ellipsoid()

    def row(eps: float) -> tuple:
        pt = least_favorable_point(ell, cfg.gamma, eps)
        bound = theoretical_bound(ell, cfg.gamma, eps)
        t = pt.risk.bias_variance
        return (eps, pt.window, t, bound, t / bound)

    rows = _sweep(cfg, row)
    last = min(rows, key=lambda t: t[0])
    ratio = last[-1]
    metrics = {"epsilon": last[0], "ratio": ratio}
    if isinstance(ell, PolynomialEllipsoid):
        metrics["constant_C"] = asym.constant_C(ell.alpha, cfg.gamma, ell.L)
    return Report("constant-check", cfg.params("constant-check"),
                  abs(ratio - 1) <= _tolerance(cfg, "constant-check"), metrics,
                  ("epsilon", "window", "a0_plus_a1", "bound", "ratio"), rows)


def lemma_check(cfg: ExperimentConfig) -> Report:
    """Exact-to-asymptote ratio curves for the sum and integral lemmas."""
    tol = _tolerance(cfg, "lemma-check")
    rows: list[tuple] = []
    metrics: dict[str, Any] = {}
    passed = True
    if cfg.lemma in ("sum", "both"):
        a, b, r = cfg.lemma_a, cfg.lemma_b, cfg.lemma_r
        for n in cfg.lemma_n:
            N = int(n)
            ex = asym.log_lemma_sum_exact(a, b, r, N)
            ap = asym.log_lemma_sum_asymptote(a, b, r, N)
            rows.append(("sum", a, b, r, N, ex, ap, math.exp(ex - ap)))
        metrics["sum_ratio"] = rows[-1][-1]
        passed &= abs(rows[-1][-1] - 1) <= tol
    if cfg.lemma in ("integral", "both"):
        a, b, s = cfg.lemma_a, cfg.lemma_b, cfg.lemma_s
        for v in cfg.lemma_v:
            ex = asym.log_lemma_integral_exact(a, b, s, v)
            ap = asym.log_lemma_integral_asymptote(a, b, s, v)
            rows.append(("integral", a, b, s, v, ex, ap, math.exp(ex - ap)))
        metrics["integral_ratio"] = rows[-1][-1]
        passed &= abs(rows[-1][-1] - 1) <= tol
    return Report("lemma-check", cfg.params("lemma-check"), bool(passed), metrics,
                  ("lemma", "a", "b", "exponent", "point", "log_exact", "log_asymptote", "ratio"),
                  rows)


def mc_validate(cfg: ExperimentConfig) -> Report:
    """Monte Carlo risk against the exact decomposition, per epsilon."""
    ell = cfg.ellipsoid()
    fixed = load_signal_csv(cfg.signal_path) if cfg.signal_path else None
    rows = []
    for eps in cfg.epsilons:
        window = optimal_window(ell, cfg.gamma, eps).clamped
        filt = matching_filter(ell, window)
        signal = fixed if fixed is not None else least_favorable(ell, cfg.gamma, eps, window).signal
        problem = Problem(cfg.gamma, eps)
        exact = exact_risk(signal, filt, problem).total
        res = mc_risk(signal, filt, problem, cfg.replicates, cfg.seed, threads=cfg.threads)
        z = (res.mean - exact) / res.std_error if res.std_error > 0 else (
            0.0 if res.mean == exact else math.inf)
        rows.append((eps, window, exact, res.mean, res.std_error, z, abs(z) <= cfg.z_max))
    max_z = max(abs(t[5]) for t in rows)
    return Report("mc-validate", cfg.params("mc-validate"), all(t[-1] for t in rows),
                  {"max_abs_z": max_z},
                  ("epsilon", "window", "exact_total", "mc_mean", "std_error", "z_score", "pass"),
                  rows)


def grid_check(cfg: ExperimentConfig) -> Report:
    """Formula window against a brute-force window grid, per epsilon."""
    ell = cfg.ellipsoid()
    max_ratio = 1 + cfg.tolerance if cfg.tolerance is not None else GRID_MAX_RATIO[cfg.family]

    def row(eps: float) -> tuple:
        rng = None
        if cfg.window_min is not None or cfg.window_max is not None:
            formula = optimal_window(ell, cfg.gamma, eps).window
            rng = (cfg.window_min or 1.0, cfg.window_max or 3.0 * max(formula, 1.0))
        g = grid_search_window(ell, cfg.gamma, eps, rng, resolution=cfg.resolution)
        return (eps, g.formula_window, g.formula_risk, g.best_window, g.best_risk, g.ratio)

    rows = _sweep(cfg, row)
    ratios = [t[-1] for t in rows]
    slope = trend_slope([t[0] for t in rows], ratios)
    passed = all(r <= max_ratio for r in ratios) and (len(rows) < 3 or slope <= 0)
    metrics = {"max_ratio": max(ratios), "allowed_ratio": max_ratio, "trend_slope": slope}
    return Report("grid-check", cfg.params("grid-check"), passed, metrics,
                  ("epsilon", "formula_window", "formula_risk", "best_window", "best_risk", "ratio"),
                  rows)


def dump_extremal(cfg: ExperimentConfig) -> Report:
    if len(cfg.epsilons) != 1:
        raise ConfigError("dump-extremal needs exactly one epsilon value")
    ell = cfg.ellipsoid()
    eps = cfg.epsilons[0]
    window = optimal_window(ell, cfg.gamma, eps).clamped
    ext = least_favorable(ell, cfg.gamma, eps, window)
    rows = [(i + 1, float(v)) for i, v in enumerate(ext.signal.coeffs)]
    metrics = {"window": ext.window, "support": ext.signal.support, "raw_norm": ext.raw_norm}
    return Report("dump-extremal", cfg.params("dump-extremal"), True, metrics,
                  ("index", "value"), rows)


COMMANDS: dict[str, Callable[[ExperimentConfig], Report]] = {
    "risk-curve": risk_curve,
    "rate-check": rate_check,
    "constant-check": constant_check,
    "lemma-check": lemma_check,
    "mc-validate": mc_validate,
    "grid-check": grid_check,
    "dump-extremal": dump_extremal,
}
