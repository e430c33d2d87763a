"""
Projection surgery on half-line dichotomies: changing the complement,
re-basing at an interior point, gluing two half-lines and exhibiting
non-unique projections for noninvertible systems.

Plus-side certificates are based at the start of their window, minus-side
certificates at the end of theirs.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np
import scipy.linalg

from ..config import ToleranceConfig, get_tolerances
from ..errors import (
    ComplementConstraintViolated,
    NotComplementary,
    RankMismatch,
    TransversalityFailure,
)
from ..dichotomy.estimator import estimate_constants
from ..dichotomy.family import DichotomyCertificate, FormB, ProjectionFamily, as_form_b
from ..linalg import (
    Subspace,
    complement,
    image,
    kernel_of,
    make_projection,
    orthogonal_complement,
    preimage,
    rank_of,
    subspace_distance,
    subspace_sum,
)
from ..system.sequence import Interval
from ..system.transition import transition_matrix

logger = logging.getLogger(__name__)

PLUS = "plus"
MINUS = "minus"


def transversality(s1: Subspace, s2: Subspace) -> float:
    """Smallest singular value of [B1 B2]; zero when the subspaces are not transversal."""
    joint = np.hstack([s1.basis, s2.basis])
    if joint.shape[1] == 0:
        return 1.0
    return float(scipy.linalg.svdvals(joint)[-1])


def _require_complement(w: Subspace, s: Subspace, what: str, tol: ToleranceConfig):
    if w.ambient_dim != s.ambient_dim or w.dim + s.dim != s.ambient_dim:
        raise NotComplementary(f"W (dim {w.dim}) cannot complement {what} (dim {s.dim}) in R^{s.ambient_dim}")
    if transversality(w, s) <= tol.tol_rank:
        raise NotComplementary(f"W meets {what} nontrivially")


def _tightened(cert: DichotomyCertificate, family: ProjectionFamily, guaranteed: FormB,
               notes: List[str], tol: ToleranceConfig,
               window: Optional[Interval] = None) -> DichotomyCertificate:
    window = window if window is not None else cert.verified_window
    measured = estimate_constants(cert.seq, family, window, alpha=cert.alpha, tol=tol)
    return measured.replace(guaranteed=guaranteed, notes=list(cert.notes) + notes)


def change_complement_plus(cert: DichotomyCertificate, w: Subspace,
                           tol: Optional[ToleranceConfig] = None) -> DichotomyCertificate:
    """
    The unique invariant family Q with R Q(k) = R P(k) and N Q(a) = W on the
    certificate window [a, b]: N Q(k) = Phi(k, a) W.

    Raises:
        NotComplementary: when W is not a complement of R P(a)
    """
    tol = tol if tol is not None else get_tolerances()
    window = cert.verified_window
    a = window.start
    family = cert.family
    _require_complement(w, family.range_space(a), f"R P({a})", tol)
    angle = transversality(w, family.range_space(a))

    projections = {}
    for k in window.indices():
        w_k = image(transition_matrix(cert.seq, k, a), w, tol)
        projections[k] = make_projection(family.range_space(k), w_k, tol)
    new_family = ProjectionFamily(interval=family.interval, projections=projections, rank=family.rank)

    b = as_form_b(cert.form)
    q0 = float(np.linalg.norm(projections[a], 2))
    m1 = b.M + b.K ** 2 * b.M * q0
    guaranteed = FormB(M=1.0 + m1, K=b.K * b.M * (1.0 + m1), alpha=b.alpha)
    logger.info(f"Changed plus-side complement at {a}: |Q({a})| = {q0:.6g}, transversality {angle:.3e}")
    return _tightened(cert, new_family, guaranteed,
                      [f"complement changed at {a}; transversality {angle:.6g}"], tol)


def change_complement_minus(cert: DichotomyCertificate, w: Subspace,
                            tol: Optional[ToleranceConfig] = None) -> DichotomyCertificate:
    """
    The unique invariant family Q with N Q(k) = N P(k) and R Q(b) = W on the
    certificate window [a, b]: R Q(k) = Phi(b, k)^-1(W).

    Raises:
        NotComplementary: when W is not a complement of N P(b)
    """
    tol = tol if tol is not None else get_tolerances()
    window = cert.verified_window
    end = window.end
    family = cert.family
    _require_complement(w, family.nullspace(end), f"N P({end})", tol)
    angle = transversality(w, family.nullspace(end))

    projections = {}
    for k in window.indices():
        w_k = preimage(transition_matrix(cert.seq, end, k), w, tol)
        projections[k] = make_projection(w_k, family.nullspace(k), tol)
    new_family = ProjectionFamily(interval=family.interval, projections=projections, rank=family.rank)

    b = as_form_b(cert.form)
    shift = float(np.linalg.norm(family.at(end) - projections[end], 2))
    guaranteed = FormB(
        M=b.M + b.K ** 2 * b.M * shift,
        K=max(b.K, b.K * b.M * (1.0 + b.K * shift)),
        alpha=b.alpha,
    )
    logger.info(f"Changed minus-side complement at {end}: |P-Q| = {shift:.6g}, transversality {angle:.3e}")
    return _tightened(cert, new_family, guaranteed,
                      [f"complement changed at {end}; transversality {angle:.6g}"], tol)


def rebase_at_m(cert: DichotomyCertificate, m: int, w: Subspace, side: str,
                tol: Optional[ToleranceConfig] = None) -> DichotomyCertificate:
    """
    Prescribe the complementary subspace at an interior point m.

    Plus side: N Q(m) = W and R Q(m) = R P(m); the complement at the base a
    is the orthogonal complement of ker Phi(m, a) inside Phi(m, a)^-1(W).
    Minus side: R Q(m) = W and N Q(m) = N P(m); needs ker Phi(b, m) inside
    W, and uses Phi(b, m)W plus its orthogonal completion against N P(b)
    as the complement at the base b.

    Raises:
        ComplementConstraintViolated: minus side with ker Phi(b, m) not in W
        NotComplementary: when W is not a complement at m
    """
    tol = tol if tol is not None else get_tolerances()
    window = cert.verified_window
    family = cert.family

    if side == PLUS:
        a = window.start
        if not a <= m <= window.end:
            raise ValueError(f"m={m} lies outside the plus-side window {window}")
        _require_complement(w, family.range_space(m), f"R P({m})", tol)
        phi = transition_matrix(cert.seq, m, a)
        v = complement(kernel_of(phi, tol), within=preimage(phi, w, tol), tol=tol)
        return change_complement_plus(cert, v, tol)

    if side == MINUS:
        end = window.end
        if not window.start <= m <= end:
            raise ValueError(f"m={m} lies outside the minus-side window {window}")
        _require_complement(w, family.nullspace(m), f"N P({m})", tol)
        phi = transition_matrix(cert.seq, end, m)
        kernel = kernel_of(phi, tol)
        if not w.contains(kernel, tol):
            raise ComplementConstraintViolated(
                f"ker Phi({end}, {m}) (dim {kernel.dim}) is not contained in W"
            )
        v = complement(family.nullspace(end), containing=image(phi, w, tol), tol=tol)
        return change_complement_minus(cert, v, tol)

    raise ValueError(f"Unknown side '{side}'")


def glue_half_lines(cert_plus: DichotomyCertificate, cert_minus: DichotomyCertificate,
                    tol: Optional[ToleranceConfig] = None) -> DichotomyCertificate:
    """
    Join a plus-side certificate on [c, b] and a minus-side certificate on
    [a, c] into one certificate on [a, b] sharing
    P(c) = projection onto R P+(c) along N P-(c).

    Raises:
        RankMismatch: when the two ranks differ
        TransversalityFailure: when R P+(c) and N P-(c) meet nontrivially
    """
    tol = tol if tol is not None else get_tolerances()
    if cert_plus.seq is not cert_minus.seq and cert_plus.seq.label != cert_minus.seq.label:
        raise ValueError("Half-line certificates belong to different sequences")
    if cert_plus.rank != cert_minus.rank:
        raise RankMismatch(f"Plus-side rank {cert_plus.rank} != minus-side rank {cert_minus.rank}")
    c = cert_plus.verified_window.start
    if cert_minus.verified_window.end != c:
        raise ValueError(f"Plus side starts at {c} but minus side ends at {cert_minus.verified_window.end}")

    stable = cert_plus.family.range_space(c)
    unstable = cert_minus.family.nullspace(c)
    angle = transversality(stable, unstable)
    if subspace_sum(stable, unstable, tol).dim < stable.ambient_dim or angle <= tol.tol_rank:
        raise TransversalityFailure(
            f"Stable subspace of the plus side and unstable subspace of the minus side meet at {c}"
        )

    plus = change_complement_plus(cert_plus, unstable, tol)
    minus = change_complement_minus(cert_minus, stable, tol)
    projections = dict(minus.family.projections)
    projections.update(plus.family.projections)
    window = Interval.finite(cert_minus.verified_window.start, cert_plus.verified_window.end)
    family = ProjectionFamily(interval=cert_plus.seq.interval, projections=projections, rank=cert_plus.rank)

    form_plus, form_minus = as_form_b(plus.form), as_form_b(minus.form)
    alpha = min(form_plus.alpha, form_minus.alpha)
    k_glue = max(form_plus.K, form_minus.K)
    guaranteed = FormB(M=max(form_plus.M, form_minus.M), K=k_glue ** 2, alpha=alpha)
    measured = estimate_constants(cert_plus.seq, family, window, alpha=alpha, tol=tol)
    logger.info(f"Glued half-lines at {c}: transversality {angle:.3e}, L = {measured.form.L:.6g}")
    return measured.replace(guaranteed=guaranteed,
                            notes=[f"glued at {c}; transversality {angle:.6g}"])


@dataclass
class WitnessVerdict:
    found: bool
    side: str
    m: int
    certificates: Tuple[DichotomyCertificate, ...] = ()
    agreement_at_m: Optional[float] = None
    differing_index: Optional[int] = None
    gap: Optional[float] = None
    reason: str = ""

    def as_dict(self) -> Dict:
        return {
            "found": self.found,
            "verdict": "Witness" if self.found else "NoWitness",
            "side": self.side,
            "m": self.m,
            "agreement_at_m": self.agreement_at_m,
            "differing_index": self.differing_index,
            "gap": self.gap,
            "reason": self.reason,
            "certificates": [c.as_dict() for c in self.certificates],
        }


def _rotate_toward(basis: np.ndarray, direction: np.ndarray) -> np.ndarray:
    """Turn the first basis vector 45 degrees toward ``direction`` (orthogonalized against the basis)."""
    d = direction - basis @ (basis.T @ direction)
    d = d / np.linalg.norm(d)
    rotated = basis.copy()
    rotated[:, 0] = (basis[:, 0] + d) / math.sqrt(2.0)
    return rotated


def nonuniqueness_witness(cert: DichotomyCertificate, m: int, side: str,
                          tol: Optional[ToleranceConfig] = None) -> WitnessVerdict:
    """
    Two dichotomy projections that agree at m but differ at the base point,
    possible only when the transition between them is singular.
    """
    tol = tol if tol is not None else get_tolerances()
    window = cert.verified_window
    family = cert.family
    n = cert.seq.n

    if side == PLUS:
        base = window.start
        phi = transition_matrix(cert.seq, m, base)
    elif side == MINUS:
        base = window.end
        phi = transition_matrix(cert.seq, base, m)
    else:
        raise ValueError(f"Unknown side '{side}'")

    if rank_of(phi, tol) == n:
        return WitnessVerdict(found=False, side=side, m=m,
                              reason="transition is invertible, the projection is unique")
    kernel = kernel_of(phi, tol)

    if side == PLUS:
        canonical = family.nullspace(base)
        if canonical.dim == 0:
            return WitnessVerdict(found=False, side=side, m=m, reason="rank n family is unique")
        second = Subspace.from_columns(_rotate_toward(canonical.basis, kernel.basis[:, 0]), tol)
        first_cert = change_complement_plus(cert, canonical, tol)
        second_cert = change_complement_plus(cert, second, tol)
        gap = subspace_distance(first_cert.family.nullspace(base), second_cert.family.nullspace(base))
    else:
        canonical = family.range_space(base)
        unstable = family.nullspace(base)
        carried = image(phi, family.range_space(m), tol)
        free = orthogonal_complement(carried, within=canonical, tol=tol)
        if unstable.dim == 0 or free.dim == 0:
            return WitnessVerdict(found=False, side=side, m=m,
                                  reason="no freedom left in the range at the base point")
        rotated = _rotate_toward(free.basis, unstable.basis[:, 0])
        second = Subspace.from_columns(np.hstack([carried.basis, rotated]), tol)
        first_cert = change_complement_minus(cert, canonical, tol)
        second_cert = change_complement_minus(cert, second, tol)
        gap = subspace_distance(first_cert.family.range_space(base), second_cert.family.range_space(base))

    agreement = float(np.linalg.norm(first_cert.family.at(m) - second_cert.family.at(m), 2))
    logger.info(f"Witness on the {side} side at m={m}: agreement {agreement:.3e}, gap at {base} {gap:.6g}")
    return WitnessVerdict(
        found=True,
        side=side,
        m=m,
        certificates=(first_cert, second_cert),
        agreement_at_m=agreement,
        differing_index=base,
        gap=gap,
        reason=f"kernel of the transition has dimension {kernel.dim}",
    )
