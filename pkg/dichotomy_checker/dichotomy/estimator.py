"""
Fitting dichotomy constants on a window and converting between the two
certificate forms.
"""

import logging
import math
from typing import Dict, Optional

import numpy as np

from ..config import ToleranceConfig, get_config, get_tolerances
from ..errors import NoDecay
from ..system.sequence import CoefficientSequence, Interval
from ..system.transition import restricted_backward
from .family import (
    DichotomyCertificate,
    DichotomyForm,
    FormA,
    FormB,
    ProjectionFamily,
    as_form_a,
    as_form_b,
)
from .verifier import projected_flow

logger = logging.getLogger(__name__)


def _worst_norm_by_lag(seq: CoefficientSequence, family: ProjectionFamily, window: Interval,
                       tol: ToleranceConfig) -> Dict[int, float]:
    """max over pairs with k - m = t of |Phi(k,m)P(m)| and |Phi(m,k)(I-P(k))|."""
    by_lag: Dict[int, float] = {}
    indices = list(window.indices())
    skip_backward = family.rank == seq.n
    for m in indices:
        for k, stable in projected_flow(seq, family, m, window.end):
            t = k - m
            value = float(np.linalg.norm(stable, 2))
            if not skip_backward:
                value = max(value, float(np.linalg.norm(restricted_backward(seq, family, m, k, tol), 2)))
            if value > by_lag.get(t, 0.0):
                by_lag[t] = value
    return by_lag


def _l_of_alpha(by_lag: Dict[int, float], alpha: float) -> float:
    return max(1.0, max(value * math.exp(alpha * t) for t, value in by_lag.items()))


def estimate_constants(seq: CoefficientSequence, family: ProjectionFamily, window: Interval,
                       alpha: Optional[float] = None,
                       tol: Optional[ToleranceConfig] = None) -> DichotomyCertificate:
    """
    Smallest Form A constant L for a given exponent, or the largest exponent
    whose constant stays below L_cap.

    With ``alpha`` given, L(alpha) is the maximum over pairs of
    |Phi(k,m)P(m)| e^{alpha(k-m)} and |Phi(m,k)(I-P(k))| e^{alpha(k-m)},
    floored at 1. Without it, alpha is found by bisection.

    Raises:
        NoDecay: when no exponent beats the rate a window of this length
            allows for free
    """
    tol = tol if tol is not None else get_tolerances()
    settings = get_config().get_estimation_config()
    by_lag = _worst_norm_by_lag(seq, family, window, tol)

    if alpha is not None:
        L = _l_of_alpha(by_lag, alpha)
        logger.debug(f"L({alpha:.6g}) = {L:.6g} on {window}")
        return DichotomyCertificate(seq=seq, family=family, form=FormA(L=L, alpha=alpha),
                                    verified_window=window)

    L_cap = float(settings.get('L_cap', 1e6))
    iterations = int(settings.get('bisection_iterations', 200))
    horizon = max(by_lag)
    L0 = _l_of_alpha(by_lag, 0.0)
    if L0 > L_cap or horizon == 0:
        raise NoDecay(f"L(0) = {L0:.3e} already exceeds L_cap = {L_cap:.3e} on {window}")
    window_rate = math.log(L_cap / L0) / horizon

    lo, hi = 0.0, 1.0
    while _l_of_alpha(by_lag, hi) <= L_cap:
        lo, hi = hi, 2.0 * hi
        if hi > 1e6:
            break
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if _l_of_alpha(by_lag, mid) <= L_cap:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-12 * max(1.0, hi):
            break

    if lo <= window_rate * (1.0 + 1e-9):
        raise NoDecay(
            f"Fitted exponent {lo:.6g} is no better than the window-length rate {window_rate:.6g}"
        )
    L = _l_of_alpha(by_lag, lo)
    logger.info(f"Fitted alpha = {lo:.6g}, L = {L:.6g} on {window}")
    return DichotomyCertificate(seq=seq, family=family, form=FormA(L=L, alpha=lo),
                                verified_window=window)


def convert_certificate(cert: DichotomyCertificate, target_form: str) -> DichotomyCertificate:
    """
    Re-express the constants: Form B to Form A uses L = K M, Form A to
    Form B uses M = K = L. Converting back and forth squares L, which is
    recorded in the certificate notes.
    """
    target = target_form.upper()
    if target not in ("A", "B"):
        raise ValueError(f"Unknown certificate form '{target_form}'")
    if target == cert.form.name:
        return cert

    notes = list(cert.notes)
    if target == "A":
        new_form = as_form_a(cert.form)
        notes.append(f"converted from form B: L = K*M = {new_form.L:.6g}")
        if any(note.startswith("converted from form A") for note in cert.notes):
            original = next(note for note in cert.notes if note.startswith("converted from form A"))
            notes.append(f"constant inflation: round trip gives L = {new_form.L:.6g} ({original})")
            logger.warning(f"Round-trip conversion inflated L to {new_form.L:.6g}")
    else:
        new_form = as_form_b(cert.form)
        notes.append(f"converted from form A: M = K = L = {cert.form.L:.6g}")
    return cert.replace(form=new_form, notes=notes)


def form_from_dict(data: Dict) -> DichotomyForm:
    """Build a form from ``{"form": "A", "L":..., "alpha":...}`` or the Form B analogue."""
    form = str(data.get("form", "A")).upper()
    if form == "B":
        return FormB(M=float(data["M"]), K=float(data["K"]), alpha=float(data["alpha"]))
    return FormA(L=float(data["L"]), alpha=float(data["alpha"]))
