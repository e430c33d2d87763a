"""
Finite-window hypotheses for dichotomies on Z.
"""

from .checker import (
    NORM_BOUND,
    DENSITY,
    WINDOWS,
    GLOBAL,
    FiniteTimeHypothesis,
    StageResult,
    FiniteTimeReport,
    largest_gap,
    window_family,
    global_family,
    finite_time_check,
)

__all__ = [
    'NORM_BOUND',
    'DENSITY',
    'WINDOWS',
    'GLOBAL',
    'FiniteTimeHypothesis',
    'StageResult',
    'FiniteTimeReport',
    'largest_gap',
    'window_family',
    'global_family',
    'finite_time_check',
]
