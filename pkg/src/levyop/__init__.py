"""Nonlocal parabolic operators driven by general Levy measures on the periodic grid."""
from ._accel import backend
from .grid import GridField, apply_levy_direct, apply_multiplier, fractional_laplacian
from .measure import (
    Atoms, AxisStable, DyadicComb, LevyMeasure, Polar, RadialDensity, Scaled, Sum, TimeDependentMeasure,
    check_assumptions,
)
from .solver import EvolutionProblem, PiecewiseForcing, apriori_ratio, solve
from .symbol import Symbol, certify_lower_bound, certify_upper_bound

__version__ = "0.1.0"
