"""
Extending dichotomies to the end of a half-line and embedding them into Z.
"""

from .extender import (
    DIMENSION_MISMATCH,
    NOT_INJECTIVE,
    KERNEL_NOT_IN_STABLE,
    ExtensionVerdict,
    can_extend_plus,
    extend_plus,
    can_extend_minus,
    extend_minus,
)
from .embedding import tail_matrix, embed_in_Z

__all__ = [
    'DIMENSION_MISMATCH',
    'NOT_INJECTIVE',
    'KERNEL_NOT_IN_STABLE',
    'ExtensionVerdict',
    'can_extend_plus',
    'extend_plus',
    'can_extend_minus',
    'extend_minus',
    'tail_matrix',
    'embed_in_Z',
]
