"""
Transition operators Phi(k, m) = A(k-1)...A(m) and the restricted inverses
Phi(m, k)(I - P(k)) between projection nullspaces.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from ..config import ToleranceConfig, get_tolerances
from ..errors import DimensionMismatch, IndexOutsideInterval, NotInjectiveOnNullspace, OverflowDetected
from .sequence import CoefficientSequence, TailRule

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class TransitionOperator:
    source: int
    target: int
    matrix: np.ndarray


def transition_matrix(seq: CoefficientSequence, k: int, m: int) -> np.ndarray:
    """
    Phi(k, m) for k >= m, extended incrementally from the largest cached
    product Phi(j, m) with j <= k.

    Raises:
        IndexOutsideInterval: when k < m or a step leaves the interval
        OverflowDetected: when the product stops being finite
    """
    if k < m:
        raise IndexOutsideInterval(f"Transition needs k >= m, got k={k}, m={m}")
    if not (seq.interval.contains(m) and seq.interval.contains(k)):
        raise IndexOutsideInterval(f"Transition ({k}, {m}) leaves {seq.interval}")
    if k == m:
        return np.eye(seq.n)

    cached = seq.cache.get(m, k)
    if cached is not None:
        return cached

    j = k - 1
    product = None
    while j > m:
        product = seq.cache.get(m, j)
        if product is not None:
            break
        j -= 1
    if product is None:
        j, product = m, np.eye(seq.n)

    for step in range(j, k):
        product = seq.matrix(step) @ product
        if not np.all(np.isfinite(product)):
            raise OverflowDetected(f"Phi({step + 1}, {m}) overflowed")
        seq.cache.put(m, step + 1, product)
    return product


def transition(seq: CoefficientSequence, k: int, m: int) -> TransitionOperator:
    """Phi(k, m) wrapped with its indices."""
    return TransitionOperator(source=m, target=k, matrix=transition_matrix(seq, k, m))


def restricted_backward(seq: CoefficientSequence, family, m: int, k: int,
                        tol: Optional[ToleranceConfig] = None) -> np.ndarray:
    """
    The matrix Phi(m, k)(I - P(k)): inverse of Phi(k, m) from N P(m) onto
    N P(k), composed with the projection onto N P(k) along R P(k).

    Args:
        seq: The coefficient sequence
        family: Projection family with ``at(k)`` and ``nullspace(k)``
        m: Earlier index
        k: Later index, k >= m

    Raises:
        NotInjectiveOnNullspace: when Phi(k, m) collapses part of N P(m)
    """
    tol = tol if tol is not None else get_tolerances()
    complementary_k = np.eye(seq.n) - family.at(k)
    if k == m:
        return complementary_k

    phi = transition_matrix(seq, k, m)
    null_m = family.nullspace(m)
    if null_m.dim == 0:
        return np.zeros((seq.n, seq.n))

    restricted = phi @ null_m.basis
    singular_values = scipy.linalg.svdvals(restricted)
    smallest = float(singular_values[-1])
    if smallest <= tol.tol_rank:
        raise NotInjectiveOnNullspace(
            f"Phi({k}, {m}) is not one to one on the nullspace of P({m}) "
            f"(smallest singular value {smallest:.3e})"
        )
    coords = scipy.linalg.pinv(restricted)
    return null_m.basis @ coords @ complementary_k


def perturb_sequence(seq: CoefficientSequence, perturbation: CoefficientSequence,
                     label: Optional[str] = None) -> CoefficientSequence:
    """
    The multiplicatively perturbed sequence A(k)(I + B(k)).

    Explicit matrices are produced wherever either input has one; the tails
    combine when both are constant.
    """
    if perturbation.n != seq.n:
        raise DimensionMismatch(f"Perturbation dimension {perturbation.n} != {seq.n}")
    identity = np.eye(seq.n)
    explicit = {}
    for k in sorted(set(seq.explicit_window) | set(perturbation.explicit_window)):
        if seq.interval.step_contains(k):
            explicit[k] = seq.matrix(k) @ (identity + perturbation.matrix(k))

    def combine(rule_a, rule_b):
        if rule_a is None:
            return None
        if rule_a.kind == "constant" and rule_b is not None and rule_b.kind == "constant":
            return TailRule.constant(rule_a.matrices[0] @ (identity + rule_b.matrices[0]))
        if rule_b is not None and rule_b.kind == "constant" and not np.any(rule_b.matrices[0]):
            return rule_a
        return TailRule()

    tail = combine(seq.tail_rule, perturbation.tail_rule)
    left = combine(seq.left_tail_rule, perturbation.left_tail_rule or perturbation.tail_rule)
    if tail.kind == "none" and seq.tail_rule.kind != "none":
        logger.warning("Perturbed tail is only defined on the explicit window")
    return CoefficientSequence(
        n=seq.n,
        interval=seq.interval,
        explicit_window=explicit,
        tail_rule=tail,
        left_tail_rule=left,
        label=label if label is not None else f"{seq.label}+B",
    )
