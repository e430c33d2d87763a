"""
Dichotomy certificates: projection families, verification, constant
estimation and subspace estimation.
"""

from .family import (
    ProjectionFamily,
    FormA,
    FormB,
    DichotomyCertificate,
    as_form_a,
    as_form_b,
)
from .verifier import (
    InvarianceReport,
    VerificationReport,
    SubspaceIdentityReport,
    check_invariance,
    projected_flow,
    verify_certificate,
    check_subspace_identities,
)
from .estimator import estimate_constants, convert_certificate, form_from_dict
from .subspaces import (
    SubspaceEstimate,
    OracleVerdict,
    estimate_stable_subspace,
    estimate_unstable_subspace,
    bounded_solution_oracle,
)

__all__ = [
    'ProjectionFamily',
    'FormA',
    'FormB',
    'DichotomyCertificate',
    'as_form_a',
    'as_form_b',
    'InvarianceReport',
    'VerificationReport',
    'SubspaceIdentityReport',
    'check_invariance',
    'projected_flow',
    'verify_certificate',
    'check_subspace_identities',
    'estimate_constants',
    'convert_certificate',
    'form_from_dict',
    'SubspaceEstimate',
    'OracleVerdict',
    'estimate_stable_subspace',
    'estimate_unstable_subspace',
    'bounded_solution_oracle',
]
