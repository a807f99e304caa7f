"""Pinsker-type estimation of quadratic functionals in Gaussian sequence inverse problems."""

from .asymptotics import (
    constant_B,
    constant_C,
    efficiency_term,
    lemma_integral_asymptote,
    lemma_integral_exact,
    lemma_sum_asymptote,
    lemma_sum_exact,
    nonparam_rate,
    second_order_bound_exp,
)
from .errors import (
    ConfigError,
    ExtremalError,
    NumericalError,
    NumericalOverflowWarning,
    TruncationError,
    WindowError,
)
from .extremal import ExtremalSignal, least_favorable, least_favorable_exp, least_favorable_poly
from .filters import (
    FilterSeq,
    WindowSolution,
    constant_c,
    exp_filter,
    exp_window,
    matching_filter,
    optimal_filter,
    optimal_window,
    poly_filter,
    poly_window,
)
from .mc import GridSearchResult, McResult, grid_search_window, mc_risk
from .model import (
    ExponentialEllipsoid,
    Observations,
    PolynomialEllipsoid,
    Problem,
    Signal,
    ellipsoid_norm,
    load_signal_csv,
    quadratic_functional,
    sample_observations,
)
from .risk import RiskDecomposition, WorstCase, estimate, exact_risk, mse_alternative, worst_case_risk

__version__ = "0.1.0"
