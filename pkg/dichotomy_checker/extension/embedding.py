"""
Embedding a dichotomy on an interval or half-line into one on the whole
line with the same constants.
"""

import logging
import math
from typing import Optional, Tuple

import numpy as np

from ..dichotomy.family import DichotomyCertificate, ProjectionFamily
from ..system.sequence import CoefficientSequence, Interval, TailRule

logger = logging.getLogger(__name__)


def tail_matrix(projection: np.ndarray, alpha: float) -> np.ndarray:
    """e^{-alpha} P + e^{alpha} (I - P): contracts R P and expands N P at rate alpha."""
    identity = np.eye(projection.shape[0])
    return math.exp(-alpha) * projection + math.exp(alpha) * (identity - projection)


def _embedding_interval(cert: DichotomyCertificate, interval: Optional[Interval]) -> Interval:
    if interval is not None:
        return interval
    if cert.family.interval.kind == "whole":
        return cert.verified_window
    return cert.family.interval


def embed_in_Z(cert: DichotomyCertificate,
               interval: Optional[Interval] = None) -> Tuple[CoefficientSequence, DichotomyCertificate]:
    """
    Extend A(k) outside J by constant matrices built from the end projections.

    Below a = start of J the system uses e^{-alpha}P(a) + e^{alpha}(I-P(a)),
    from b = end of J on it uses the same expression in P(b); the projection
    is continued by P(a) and P(b). The certificate keeps its constants.

    ``interval`` defaults to the family's interval, or to the verified
    window when the family lives on the whole line.
    """
    J = _embedding_interval(cert, interval)
    seq, family, alpha = cert.seq, cert.family, cert.alpha
    if J.kind == "whole":
        return seq, cert

    left_rule = seq.left_tail_rule if seq.left_tail_rule is not None else seq.tail_rule
    tail_rule = seq.tail_rule
    left_constant, right_constant = family.left_constant, family.right_constant

    if J.kind == "finite":
        steps = range(J.start, J.end)
        projections = {k: family.at(k) for k in J.indices()}
    elif J.kind == "half_plus":
        # A(J.start) must be explicit so that the left rule applies strictly below J
        known = [k for k in seq.explicit_window if k >= J.start]
        steps = range(J.start, max(known + [J.start]) + 1)
        projections = {k: p for k, p in family.projections.items() if k >= J.start}
        projections[J.start] = family.at(J.start)
    else:
        known = [k for k in seq.explicit_window if k < J.end]
        steps = range(min(known + [J.end - 1]), J.end)
        projections = {k: p for k, p in family.projections.items() if k <= J.end}
        projections[J.end] = family.at(J.end)

    if J.kind in ("finite", "half_plus"):
        p_a = family.at(J.start)
        left_rule = TailRule.constant(tail_matrix(p_a, alpha))
        left_constant = p_a
    if J.kind in ("finite", "half_minus"):
        p_b = family.at(J.end)
        tail_rule = TailRule.constant(tail_matrix(p_b, alpha))
        right_constant = p_b

    extended = CoefficientSequence(
        n=seq.n,
        interval=Interval.whole(),
        explicit_window={k: seq.matrix(k) for k in steps},
        tail_rule=tail_rule,
        left_tail_rule=left_rule,
        norm_bound=None if seq.norm_bound is None else max(seq.norm_bound, math.exp(alpha)),
        label=f"{seq.label or 'sequence'}~Z",
    )
    extended_family = ProjectionFamily(
        interval=Interval.whole(),
        projections=projections,
        rank=family.rank,
        left_constant=left_constant,
        right_constant=right_constant,
    )
    logger.info(f"Embedded {seq.label or 'sequence'} on {J} into Z")
    embedded = DichotomyCertificate(
        seq=extended,
        family=extended_family,
        form=cert.form,
        verified_window=cert.verified_window,
        guaranteed=cert.guaranteed,
        notes=list(cert.notes) + [f"embedded into Z from {J}"],
    )
    return extended, embedded
