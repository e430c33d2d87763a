"""
Changing, re-basing and gluing projection families of half-line dichotomies.
"""

from .surgery import (
    PLUS,
    MINUS,
    WitnessVerdict,
    transversality,
    change_complement_plus,
    change_complement_minus,
    rebase_at_m,
    glue_half_lines,
    nonuniqueness_witness,
)

__all__ = [
    'PLUS',
    'MINUS',
    'WitnessVerdict',
    'transversality',
    'change_complement_plus',
    'change_complement_minus',
    'rebase_at_m',
    'glue_half_lines',
    'nonuniqueness_witness',
]
