import math
import warnings

import numpy as np
import pytest

from qfest import (
    ConfigError,
    ExponentialEllipsoid,
    FilterSeq,
    PolynomialEllipsoid,
    Problem,
    Signal,
    exact_risk,
    grid_search_window,
    mc_risk,
    optimal_window,
    quadratic_functional,
)
from qfest.config import dyadic_grid
from qfest.experiments import trend_slope
from qfest.mc import BLOCK_SIZE, window_objective


class TestMcRisk:
    def test_single_coordinate(self):
        res = mc_risk(Signal([1.0]), FilterSeq([1.0], 1.0), Problem(0, 0.5), 20_000, seed=3)
        assert abs(res.mean - 1.125) <= 4 * res.std_error
        assert res.replicates == 20_000 and res.seed == 3

    def test_zero_filter_is_deterministic(self):
        sig = Signal([0.5, -0.25, 0.125])
        res = mc_risk(sig, FilterSeq.zeros(3), Problem(1, 0.3), 500, seed=1)
        assert res.mean == quadratic_functional(sig) ** 2
        assert res.std_error == 0.0

    def test_thread_count_invariance(self):
        args = (Signal([0.4, 0.3]), FilterSeq([0.9, 0.4], 2.2), Problem(1, 0.2))
        reps = 2 * BLOCK_SIZE + 17
        base = mc_risk(*args, reps, seed=99, threads=1)
        for t in (2, 4, 8):
            other = mc_risk(*args, reps, seed=99, threads=t)
            assert (other.mean, other.std_error) == (base.mean, base.std_error)

    def test_seed_changes_result(self):
        args = (Signal([0.4]), FilterSeq([1.0], 1.0), Problem(0, 0.2))
        assert mc_risk(*args, 200, seed=1).mean != mc_risk(*args, 200, seed=2).mean

    def test_too_few_replicates(self):
        with pytest.raises(ValueError):
            mc_risk(Signal([1.0]), FilterSeq([1.0], 1.0), Problem(0, 0.5), 99, seed=0)

    def test_standard_error_shrinks_like_root_n(self):
        args = (Signal([0.8, 0.2]), FilterSeq([0.9, 0.5], 2.5), Problem(0.5, 0.3))
        small = mc_risk(*args, 1_000, seed=11)
        large = mc_risk(*args, 100_000, seed=11)
        assert small.std_error / large.std_error == pytest.approx(10.0, rel=0.25)
        exact = exact_risk(*args).total
        assert abs(large.mean - exact) <= 4 * large.std_error


class TestGridSearch:
    def test_polynomial_ratio(self):
        res = grid_search_window(PolynomialEllipsoid(1, 1), 1.0, 1e-3)
        assert 1.0 <= res.ratio <= 1.05
        assert res.best_risk <= res.formula_risk

    def test_exponential_ratio(self):
        res = grid_search_window(ExponentialEllipsoid(1, 1, 1), 0.0, 1e-3)
        assert 1.0 <= res.ratio <= 1.10

    def test_formula_value_is_objective(self):
        ell = PolynomialEllipsoid(1, 1)
        res = grid_search_window(ell, 1.0, 1e-2)
        assert res.formula_window == optimal_window(ell, 1.0, 1e-2).window
        assert res.formula_risk == window_objective(ell, Problem(1.0, 1e-2), res.formula_window)

    def test_grid_minimum_is_brute_force_minimum(self):
        ell = PolynomialEllipsoid(1, 1)
        res = grid_search_window(ell, 1.0, 0.05, resolution=4)
        p = Problem(1.0, 0.05)
        grid = 1.0 + np.arange(0, int(3 * res.formula_window * 4) + 1) / 4
        brute = min(window_objective(ell, p, w) for w in grid)
        assert res.best_risk <= brute

    def test_threads_match(self):
        ell = ExponentialEllipsoid(1, 1, 1)
        a = grid_search_window(ell, 0.0, 1e-3, threads=1)
        b = grid_search_window(ell, 0.0, 1e-3, threads=4)
        assert a == b

    def test_empty_range(self):
        with pytest.raises(ConfigError):
            grid_search_window(PolynomialEllipsoid(1, 1), 1.0, 1e-3, window_range=(10, 5))

    def test_narrow_range_warns(self):
        with pytest.warns(UserWarning, match="does not cover"):
            grid_search_window(PolynomialEllipsoid(1, 1), 1.0, 1e-2, window_range=(1, 5))

    def test_full_range_is_silent(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            grid_search_window(PolynomialEllipsoid(1, 1), 1.0, 1e-2, window_range=(1, 100))

    @pytest.mark.parametrize("ell,gamma", [(PolynomialEllipsoid(1, 1), 1.0),
                                           (ExponentialEllipsoid(1, 1, 1), 0.0)])
    def test_ratio_trends_down(self, ell, gamma):
        eps = dyadic_grid(1e-1, 1e-4)
        ratios = [grid_search_window(ell, gamma, e).ratio for e in eps]
        assert trend_slope(eps, ratios) <= 0
        assert math.isclose(min(ratios), 1.0, abs_tol=0.01)
