"""
Checks of invariance and of the dichotomy inequalities on finite windows.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np
import scipy.linalg

from ..config import ToleranceConfig, get_tolerances
from ..linalg import kernel_of, preimage, subspace_distance, subspace_sum
from ..system.sequence import CoefficientSequence, Interval
from ..system.transition import restricted_backward, transition_matrix
from .family import DichotomyCertificate, FormB, ProjectionFamily

logger = logging.getLogger(__name__)


@dataclass
class InvarianceReport:
    max_residual: float
    worst_k: Optional[int]
    passed: bool
    tolerance: float

    def as_dict(self) -> Dict:
        return {
            "max_residual": self.max_residual,
            "worst_k": self.worst_k,
            "passed": self.passed,
            "tolerance": self.tolerance,
        }


@dataclass
class VerificationReport:
    """
    Outcome of checking a certificate on a window.

    Margins are relative: (bound - value) / bound, so 0 means the inequality
    is tight and a negative value means it fails.
    """
    passed: bool
    form: Dict
    window: Interval
    worst_margin: float
    worst_pair: Optional[Tuple[int, int]]
    worst_inequality: Optional[str]
    pairs_checked: int
    tolerance: float
    invariance: InvarianceReport
    unstable_vacuous: bool = False
    failures: List[Dict] = field(default_factory=list)

    def as_dict(self) -> Dict:
        return {
            "passed": self.passed,
            "constants": self.form,
            "window": self.window.as_dict(),
            "worst_margin": self.worst_margin,
            "worst_pair": None if self.worst_pair is None else {"k": self.worst_pair[0], "m": self.worst_pair[1]},
            "worst_inequality": self.worst_inequality,
            "pairs_checked": self.pairs_checked,
            "tolerance": self.tolerance,
            "invariance": self.invariance.as_dict(),
            "unstable_vacuous": self.unstable_vacuous,
            "failures": self.failures[:20],
        }


def check_invariance(seq: CoefficientSequence, family: ProjectionFamily, window: Interval,
                     tol: Optional[ToleranceConfig] = None) -> InvarianceReport:
    """
    Largest residual |A(k)P(k) - P(k+1)A(k)| over the steps of a window,
    relative to max(1, |A(k)|).
    """
    tol = tol if tol is not None else get_tolerances()
    worst, where = 0.0, None
    for k in window.steps():
        a = seq.matrix(k)
        residual = float(np.linalg.norm(a @ family.at(k) - family.at(k + 1) @ a, 2))
        residual /= max(1.0, float(np.linalg.norm(a, 2)))
        if residual > worst:
            worst, where = residual, k
    passed = worst < tol.tol_residual
    if not passed:
        logger.info(f"Invariance fails at k={where} with residual {worst:.3e}")
    return InvarianceReport(max_residual=worst, worst_k=where, passed=passed, tolerance=tol.tol_residual)


def projected_flow(seq: CoefficientSequence, family: ProjectionFamily, m: int, end: int,
                   start: Optional[np.ndarray] = None) -> Iterator[Tuple[int, np.ndarray]]:
    """
    Yield (k, X(k)) for k = m..end, where X(m) = ``start`` (P(m) by default)
    and X(k+1) = P(k+1)A(k)X(k).

    For an invariant family X(k) = Phi(k,m)X(m) whenever X(m) lies in
    R P(m). Projecting at every step keeps rounding error in N P(k)
    from being amplified along the unstable directions.
    """
    stable = family.at(m) if start is None else start
    yield m, stable
    for k in range(m + 1, end + 1):
        stable = family.at(k) @ (seq.matrix(k - 1) @ stable)
        yield k, stable


class _MarginTracker:
    def __init__(self):
        self.worst = math.inf
        self.pair = None
        self.inequality = None
        self.failures = []
        self.count = 0

    def record(self, value: float, bound: float, k: int, m: int, inequality: str, tol: float):
        margin = (bound - value) / bound
        self.count += 1
        if margin < self.worst:
            self.worst, self.pair, self.inequality = margin, (k, m), inequality
        if margin < -tol:
            self.failures.append({"k": k, "m": m, "inequality": inequality,
                                  "value": value, "bound": bound, "margin": margin})


def verify_certificate(cert: DichotomyCertificate, window: Optional[Interval] = None,
                       tol: Optional[ToleranceConfig] = None) -> VerificationReport:
    """
    Check the certificate's inequalities for every pair m <= k in the window.

    Form A checks |Phi(k,m)P(m)| <= L e^{-alpha(k-m)} and the restricted
    inverse |Phi(m,k)(I-P(k))| <= L e^{-alpha(k-m)}. Form B checks
    |P(k)|, |I-P(k)| <= M, the decay of Phi(k,m) on R P(m) with constant K
    and the growth of Phi(k,m) on N P(m) with constant 1/K.

    Decay is measured along ``projected_flow``. Invariance itself is checked
    separately, so a non-invariant family still fails.

    Raises:
        NotInjectiveOnNullspace: propagated from the restricted inverse
    """
    tol = tol if tol is not None else get_tolerances()
    window = window if window is not None else cert.verified_window
    seq, family, form = cert.seq, cert.family, cert.form
    n = seq.n

    invariance = check_invariance(seq, family, window, tol)
    tracker = _MarginTracker()
    unstable_vacuous = family.rank == n

    if isinstance(form, FormB):
        identity = np.eye(n)
        for k in window.indices():
            p = family.at(k)
            tracker.record(float(np.linalg.norm(p, 2)), form.M, k, k, "projection_bound", tol.tol_residual)
            tracker.record(float(np.linalg.norm(identity - p, 2)), form.M, k, k,
                           "complement_bound", tol.tol_residual)

    indices = list(window.indices())
    for m in indices:
        for k, stable in projected_flow(seq, family, m, window.end, _stable_start(family, m, form)):
            t = k - m
            if isinstance(form, FormB):
                bound = form.K * math.exp(-form.alpha * t)
                if stable.shape[1]:
                    tracker.record(float(scipy.linalg.svdvals(stable)[0]), bound, k, m,
                                   "stable_decay", tol.tol_residual)
                _check_form_b_growth(cert, k, m, bound, tracker, tol)
            else:
                bound = form.L * math.exp(-form.alpha * t)
                tracker.record(float(np.linalg.norm(stable, 2)), bound, k, m,
                               "decay", tol.tol_residual)
                if not unstable_vacuous:
                    back = restricted_backward(seq, family, m, k, tol)
                    tracker.record(float(np.linalg.norm(back, 2)), bound, k, m,
                                   "restricted_inverse", tol.tol_residual)

    passed = invariance.passed and tracker.worst >= -tol.tol_residual
    logger.info(f"Verified {cert.seq.label or 'sequence'} on {window}: "
                f"{'pass' if passed else 'fail'}, worst margin {tracker.worst:.3e}")
    return VerificationReport(
        passed=passed,
        form=form.as_dict(),
        window=window,
        worst_margin=float(tracker.worst) if tracker.count else 0.0,
        worst_pair=tracker.pair,
        worst_inequality=tracker.inequality,
        pairs_checked=tracker.count,
        tolerance=tol.tol_residual,
        invariance=invariance,
        unstable_vacuous=unstable_vacuous,
        failures=tracker.failures,
    )


def _stable_start(family: ProjectionFamily, m: int, form) -> np.ndarray:
    """P(m) for form A, an orthonormal basis of R P(m) for form B."""
    if isinstance(form, FormB):
        return family.range_space(m).basis
    return family.at(m)


def _check_form_b_growth(cert: DichotomyCertificate, k: int, m: int, bound: float,
                         tracker: _MarginTracker, tol: ToleranceConfig):
    unstable = cert.family.nullspace(m)
    if unstable.dim:
        phi = transition_matrix(cert.seq, k, m)
        # growth: sigma_min >= K^-1 e^{alpha t}, tracked as the reciprocal decay bound
        sigma_min = float(scipy.linalg.svdvals(phi @ unstable.basis)[-1])
        value = math.inf if sigma_min == 0.0 else 1.0 / sigma_min
        tracker.record(value, bound, k, m, "unstable_growth", tol.tol_residual)


@dataclass
class SubspaceIdentityReport:
    k: int
    m: int
    stable_preimage_gap: float
    unstable_preimage_gap: float
    kernel_outside_stable: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return max(self.stable_preimage_gap, self.unstable_preimage_gap,
                   self.kernel_outside_stable) < self.tolerance

    def as_dict(self) -> Dict:
        return {
            "k": self.k,
            "m": self.m,
            "stable_preimage_gap": self.stable_preimage_gap,
            "unstable_preimage_gap": self.unstable_preimage_gap,
            "kernel_outside_stable": self.kernel_outside_stable,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


def check_subspace_identities(cert: DichotomyCertificate, k: int, m: int,
                              tol: Optional[ToleranceConfig] = None) -> SubspaceIdentityReport:
    """
    Gaps in the subspace identities that every invariant dichotomy obeys:
    Phi(k,m)^-1(R P(k)) = R P(m), Phi(k,m)^-1(N P(k)) = N P(m) + ker Phi(k,m)
    and ker Phi(k,m) inside R P(m).
    """
    tol = tol if tol is not None else get_tolerances()
    family = cert.family
    phi = transition_matrix(cert.seq, k, m)
    kernel = kernel_of(phi, tol)

    stable_gap = subspace_distance(preimage(phi, family.range_space(k), tol), family.range_space(m))
    unstable_gap = subspace_distance(
        preimage(phi, family.nullspace(k), tol),
        subspace_sum(family.nullspace(m), kernel, tol),
    )
    if kernel.dim:
        stable_m = family.range_space(m)
        outside = float(np.linalg.norm(kernel.basis - stable_m.projector() @ kernel.basis, 2))
    else:
        outside = 0.0
    return SubspaceIdentityReport(
        k=k, m=m,
        stable_preimage_gap=stable_gap,
        unstable_preimage_gap=unstable_gap,
        kernel_outside_stable=outside,
        tolerance=tol.tol_residual,
    )
