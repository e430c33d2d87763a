"""
Roughness of dichotomies under multiplicative perturbations A(k)(I + B(k)).
"""

from .constants import (
    RoughnessConstants,
    contraction_constant,
    predicted_constants,
    GrowthBoundInput,
    SequenceBound,
    sequence_bound,
    OdeConstants,
    ode_constants,
)
from .solver import (
    GreensKernel,
    ForcingProblem,
    FixedPointSolution,
    required_margin,
    bounded_solution_fixed_point,
    banded_bvp_solution,
    representation_residual,
    contraction_ratio,
)
from .perturbation import (
    RoughnessReport,
    random_perturbation,
    constant_perturbation,
    perturbation_norm,
    perturbed_projection,
    perturbed_projections,
    verify_roughness,
)

__all__ = [
    'RoughnessConstants',
    'contraction_constant',
    'predicted_constants',
    'GrowthBoundInput',
    'SequenceBound',
    'sequence_bound',
    'OdeConstants',
    'ode_constants',
    'GreensKernel',
    'ForcingProblem',
    'FixedPointSolution',
    'required_margin',
    'bounded_solution_fixed_point',
    'banded_bvp_solution',
    'representation_residual',
    'contraction_ratio',
    'RoughnessReport',
    'random_perturbation',
    'constant_perturbation',
    'perturbation_norm',
    'perturbed_projection',
    'perturbed_projections',
    'verify_roughness',
]
