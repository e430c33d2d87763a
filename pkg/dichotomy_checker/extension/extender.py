"""
Extending half-line dichotomies to the end of the half-line, one step at a
time so that the first obstruction is located exactly.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np
import scipy.linalg

from ..config import ToleranceConfig, get_tolerances
from ..errors import ComplementError, ExtensionObstructed, NotComplementary
from ..dichotomy.estimator import estimate_constants
from ..dichotomy.family import DichotomyCertificate, FormA, ProjectionFamily, as_form_a
from ..linalg import Subspace, complement, image, kernel_of, make_projection, preimage, subspace_sum
from ..projections.surgery import change_complement_minus
from ..system.sequence import Interval
from ..system.transition import transition_matrix

logger = logging.getLogger(__name__)

DIMENSION_MISMATCH = "DimensionMismatch"
NOT_INJECTIVE = "NotInjectiveOnNullspace"
KERNEL_NOT_IN_STABLE = "KernelNotInStable"


@dataclass
class ExtensionVerdict:
    side: str
    m: int
    to: int
    extendable: bool
    preimage_dim: Optional[int]
    required_rank: int
    obstruction: Optional[str] = None
    projection_preserved: bool = False
    smallest_singular_value: Optional[float] = None

    def as_dict(self) -> Dict:
        return {
            "side": self.side,
            "m": self.m,
            "to": self.to,
            "extendable": self.extendable,
            "preimage_dim": self.preimage_dim,
            "required_rank": self.required_rank,
            "obstruction": self.obstruction,
            "projection_preserved": self.projection_preserved,
            "smallest_singular_value": self.smallest_singular_value,
        }


def can_extend_plus(cert: DichotomyCertificate, m: Optional[int] = None, to: int = 0,
                    tol: Optional[ToleranceConfig] = None) -> ExtensionVerdict:
    """
    Whether a dichotomy on [m, inf) extends down to ``to``: the preimage of
    R P(m) under Phi(m, to) must have dimension r.
    """
    tol = tol if tol is not None else get_tolerances()
    m = cert.verified_window.start if m is None else m
    if m <= to:
        raise ValueError(f"Extension needs m > {to}, got m={m}")
    phi = transition_matrix(cert.seq, m, to)
    dim = preimage(phi, cert.family.range_space(m), tol).dim
    extendable = dim == cert.rank
    logger.debug(f"Plus-side criterion at m={m}: preimage dim {dim}, rank {cert.rank}")
    return ExtensionVerdict(
        side="plus",
        m=m,
        to=to,
        extendable=extendable,
        preimage_dim=dim,
        required_rank=cert.rank,
        obstruction=None if extendable else DIMENSION_MISMATCH,
        projection_preserved=extendable,
    )


def _restricted_inverse_norm(a: np.ndarray, nullspace: Subspace) -> float:
    """Norm of the inverse of A restricted to a nullspace it maps one to one."""
    if nullspace.dim == 0:
        return 0.0
    sigma_min = float(scipy.linalg.svdvals(a @ nullspace.basis)[-1])
    return math.inf if sigma_min == 0.0 else 1.0 / sigma_min


def extend_plus(cert: DichotomyCertificate, to: int = 0,
                tol: Optional[ToleranceConfig] = None) -> DichotomyCertificate:
    """
    Extend a dichotomy on [m, inf) to [to, inf) with P(k) unchanged for k >= m.

    For j = m-1 down to ``to``: U = A(j)^-1(R P(j+1)) must have dimension r,
    V completes ker A(j) to A(j)^-1(N P(j+1)), and P(j) projects onto U
    along V.

    Raises:
        ExtensionObstructed: at the first j where the construction fails
    """
    tol = tol if tol is not None else get_tolerances()
    window = cert.verified_window
    m = window.start
    if m <= to:
        raise ValueError(f"Certificate already starts at {m} <= {to}")
    seq, family = cert.seq, cert.family
    r = cert.rank
    alpha = cert.alpha
    growth = math.exp(alpha)
    K = as_form_a(cert.form).L
    identity = np.eye(seq.n)

    new_family = family.with_projections({}, interval=Interval.half_plus(to))
    for j in range(m - 1, to - 1, -1):
        a = seq.matrix(j)
        stable_next = new_family.range_space(j + 1)
        unstable_next = new_family.nullspace(j + 1)
        u = preimage(a, stable_next, tol)
        if u.dim != r:
            raise ExtensionObstructed(
                f"A({j})^-1 of the stable subspace at {j + 1} has dimension {u.dim}, expected {r}",
                index=j, obstruction=DIMENSION_MISMATCH,
            )
        try:
            v = complement(kernel_of(a, tol), within=preimage(a, unstable_next, tol), tol=tol)
            p = make_projection(u, v, tol)
        except (ComplementError, NotComplementary) as e:
            raise ExtensionObstructed(f"No splitting at j={j}: {e}", index=j,
                                      obstruction=DIMENSION_MISMATCH) from e
        new_family = new_family.with_projections({j: p})

        norm_a = float(np.linalg.norm(a, 2))
        norm_p = float(np.linalg.norm(p, 2))
        inverse = _restricted_inverse_norm(a, new_family.nullspace(j))
        inverse_projected = inverse * float(np.linalg.norm(identity - new_family.at(j + 1), 2))
        k1 = max(K, K * norm_a * growth, norm_a * norm_p * growth, norm_p)
        k2 = max(K, inverse * K * growth, inverse_projected * growth,
                 float(np.linalg.norm(identity - p, 2)))
        K = max(k1, k2)
        logger.debug(f"Extended plus side to j={j}: K1 = {k1:.6g}, K2 = {k2:.6g}")

    extended_window = Interval.finite(to, window.end)
    measured = estimate_constants(seq, new_family, extended_window, alpha=alpha, tol=tol)
    logger.info(f"Extended {seq.label or 'sequence'} from [{m}, inf) to [{to}, inf)")
    return measured.replace(
        guaranteed=FormA(L=K, alpha=alpha),
        notes=list(cert.notes) + [f"extended from {m} down to {to}; projection preserved for k >= {m}"],
    )


def can_extend_minus(cert: DichotomyCertificate, m: Optional[int] = None, to: int = 0,
                     preserve_projection: bool = False,
                     tol: Optional[ToleranceConfig] = None) -> ExtensionVerdict:
    """
    Whether a dichotomy on (-inf, m] extends up to ``to``.

    Extension with the same rank needs Phi(to, m) one to one on N P(m).
    Keeping P(k) for k <= m additionally needs ker Phi(to, m) inside R P(m);
    with ``preserve_projection`` a failure of that second condition makes
    the verdict negative.
    """
    tol = tol if tol is not None else get_tolerances()
    m = cert.verified_window.end if m is None else m
    if m >= to:
        raise ValueError(f"Extension needs m < {to}, got m={m}")
    phi = transition_matrix(cert.seq, to, m)
    unstable = cert.family.nullspace(m)
    sigma_min = float(scipy.linalg.svdvals(phi @ unstable.basis)[-1]) if unstable.dim else math.inf
    injective = sigma_min > tol.tol_rank
    kernel_inside = cert.family.range_space(m).contains(kernel_of(phi, tol), tol)

    obstruction = None
    if not injective:
        obstruction = NOT_INJECTIVE
    elif preserve_projection and not kernel_inside:
        obstruction = KERNEL_NOT_IN_STABLE
    return ExtensionVerdict(
        side="minus",
        m=m,
        to=to,
        extendable=obstruction is None,
        preimage_dim=None,
        required_rank=cert.rank,
        obstruction=obstruction,
        projection_preserved=injective and kernel_inside,
        smallest_singular_value=None if math.isinf(sigma_min) else sigma_min,
    )


def extend_minus(cert: DichotomyCertificate, to: int = 0,
                 tol: Optional[ToleranceConfig] = None) -> DichotomyCertificate:
    """
    Extend a dichotomy on (-inf, m] to (-inf, to].

    When ker Phi(to, m) is not inside R P(m) the range at m is first
    re-chosen so that it is, which changes P(k) for k <= m. Each step then
    sets N P(j+1) = A(j) N P(j) and takes for R P(j+1) the span of A(j) R P(j)
    and ker Phi(to, j+1), completed orthogonally.

    Raises:
        ExtensionObstructed: when some A(j) is not one to one on N P(j)
    """
    tol = tol if tol is not None else get_tolerances()
    verdict = can_extend_minus(cert, to=to, tol=tol)
    m = verdict.m
    if verdict.obstruction == NOT_INJECTIVE:
        raise ExtensionObstructed(
            f"Phi({to}, {m}) is not one to one on the unstable subspace at {m}",
            index=m, obstruction=NOT_INJECTIVE,
        )
    seq, alpha = cert.seq, cert.alpha
    notes = list(cert.notes)

    if not verdict.projection_preserved:
        kernel = kernel_of(transition_matrix(seq, to, m), tol)
        new_range = complement(cert.family.nullspace(m), containing=kernel, tol=tol)
        cert = change_complement_minus(cert, new_range, tol)
        notes.append(f"range at {m} re-chosen to contain ker Phi({to}, {m}); "
                     f"projection_preserved=false")
        logger.info(f"Re-chose the stable subspace at {m} before extending")
    else:
        notes.append(f"projection_preserved=true for k <= {m}")

    family = cert.family
    K = as_form_a(cert.form).L
    growth = math.exp(alpha)
    identity = np.eye(seq.n)
    left = family.left_constant if verdict.projection_preserved else None
    projections = {k: family.at(k) for k in cert.verified_window.indices()}
    new_family = ProjectionFamily(interval=Interval.half_minus(to), projections=projections,
                                  rank=family.rank, left_constant=left)

    for j in range(m, to):
        a = seq.matrix(j)
        unstable = new_family.nullspace(j)
        sigma_min = float(scipy.linalg.svdvals(a @ unstable.basis)[-1]) if unstable.dim else math.inf
        if sigma_min <= tol.tol_rank:
            raise ExtensionObstructed(f"A({j}) is not one to one on the unstable subspace",
                                      index=j, obstruction=NOT_INJECTIVE)
        u = image(a, unstable, tol)
        carried = image(a, new_family.range_space(j), tol)
        later_kernel = kernel_of(transition_matrix(seq, to, j + 1), tol)
        try:
            stable_next = complement(u, containing=subspace_sum(carried, later_kernel, tol), tol=tol)
            p = make_projection(stable_next, u, tol)
        except (ComplementError, NotComplementary) as e:
            raise ExtensionObstructed(f"No splitting at j={j}: {e}", index=j,
                                      obstruction=DIMENSION_MISMATCH) from e
        new_family = new_family.with_projections({j + 1: p})

        norm_p = float(np.linalg.norm(p, 2))
        norm_q = float(np.linalg.norm(identity - p, 2))
        inverse = 1.0 / sigma_min if unstable.dim else 0.0
        K = max(K, norm_p, K * float(np.linalg.norm(a, 2)) * growth, norm_q,
                K * growth * inverse * norm_q)
        logger.debug(f"Extended minus side to {j + 1}: K = {K:.6g}")

    extended_window = Interval.finite(cert.verified_window.start, to)
    measured = estimate_constants(seq, new_family, extended_window, alpha=alpha, tol=tol)
    logger.info(f"Extended {seq.label or 'sequence'} from (-inf, {m}] to (-inf, {to}]")
    return measured.replace(guaranteed=FormA(L=K, alpha=alpha),
                            notes=notes + [f"extended from {m} up to {to}"])
