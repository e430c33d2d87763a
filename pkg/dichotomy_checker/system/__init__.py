"""
Difference equations x(k+1) = A(k) x(k) and their transition operators.
"""

from .sequence import (
    Interval,
    TailRule,
    TransitionCache,
    CoefficientSequence,
    zero_sequence,
)
from .transition import (
    TransitionOperator,
    transition,
    transition_matrix,
    restricted_backward,
    perturb_sequence,
)

__all__ = [
    'Interval',
    'TailRule',
    'TransitionCache',
    'CoefficientSequence',
    'zero_sequence',
    'TransitionOperator',
    'transition',
    'transition_matrix',
    'restricted_backward',
    'perturb_sequence',
]
