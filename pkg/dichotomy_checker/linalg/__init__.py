"""
Subspace algebra on dense matrices.
"""

from .subspaces import (
    Subspace,
    as_matrix,
    rank_of,
    kernel_of,
    range_of,
    image,
    preimage,
    subspace_sum,
    intersection,
    orthogonal_complement,
    complement,
    make_projection,
    projection_range,
    projection_nullspace,
    subspace_distance,
    restricted_singular_values,
    restricted_norm,
)

__all__ = [
    'Subspace',
    'as_matrix',
    'rank_of',
    'kernel_of',
    'range_of',
    'image',
    'preimage',
    'subspace_sum',
    'intersection',
    'orthogonal_complement',
    'complement',
    'make_projection',
    'projection_range',
    'projection_nullspace',
    'subspace_distance',
    'restricted_singular_values',
    'restricted_norm',
]
