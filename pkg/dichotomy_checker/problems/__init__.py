"""
JSON problem files and report envelopes.
"""

from .loader import (
    Problem,
    parse_matrix,
    parse_interval,
    parse_sequence,
    parse_family,
    parse_perturbation,
    parse_problem,
    load_problem,
    report_envelope,
)

__all__ = [
    'Problem',
    'parse_matrix',
    'parse_interval',
    'parse_sequence',
    'parse_family',
    'parse_perturbation',
    'parse_problem',
    'load_problem',
    'report_envelope',
]
