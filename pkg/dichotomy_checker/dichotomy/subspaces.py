"""
Stable and unstable subspaces from singular value growth, and bounded
solution oracles on half-lines.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
import scipy.linalg

from ..config import ToleranceConfig, get_config, get_tolerances
from ..errors import NoGap
from ..linalg import Subspace
from ..system.sequence import CoefficientSequence
from ..system.transition import restricted_backward, transition_matrix
from .family import ProjectionFamily

logger = logging.getLogger(__name__)

COLLAPSED = -math.inf


@dataclass
class SubspaceEstimate:
    at_k: int
    subspace: Subspace
    growth_rates: List[float]
    gap_quality: float
    side: str = "stable"
    ladder: List[int] = field(default_factory=list)

    def as_dict(self) -> Dict:
        return {
            "at_k": self.at_k,
            "side": self.side,
            "dim": self.subspace.dim,
            "basis": self.subspace.basis.tolist(),
            "growth_rates": [None if math.isinf(rate) else rate for rate in self.growth_rates],
            "gap_quality": self.gap_quality,
            "ladder": list(self.ladder),
        }


def _fit_growth_rates(spectra: np.ndarray, ladder: np.ndarray, tol: ToleranceConfig) -> np.ndarray:
    """
    Per-index slopes of log sigma_i(N) against N.

    Indices that are numerically zero at every N are collapsed directions
    (kernel of the transition) and get slope -inf.
    """
    top = spectra[:, :1]
    collapsed = np.all(spectra <= tol.tol_rank * np.maximum(top, np.finfo(float).tiny), axis=0)
    logs = np.log(np.maximum(spectra, np.finfo(float).tiny))
    if len(ladder) == 1:
        slopes = logs[0] / ladder[0]
    else:
        slopes = np.polyfit(ladder.astype(float), logs, 1)[0]
    slopes = np.where(collapsed, COLLAPSED, slopes)
    return slopes


def _gap_quality(slopes: np.ndarray) -> float:
    positive = slopes[slopes > 0]
    negative = slopes[(slopes < 0) & np.isfinite(slopes)]
    upper = float(positive.min()) if positive.size else 0.0
    lower = float(negative.max()) if negative.size else 0.0
    return upper - lower


def _check_gap(slopes: np.ndarray, tol_slope: float, where: str):
    finite = slopes[np.isfinite(slopes)]
    ties = finite[np.abs(finite) <= tol_slope]
    if ties.size:
        raise NoGap(f"Growth rates {np.round(ties, 6).tolist()} at {where} are within "
                    f"{tol_slope} of zero; the stable dimension is ambiguous")


def _ladder_and_slope(ladder: Optional[Sequence[int]], tol_slope: Optional[float]):
    settings = get_config().get_estimation_config()
    if ladder is None:
        ladder = settings.get('default_ladder', [10, 20, 30])
    ladder = np.array(sorted(set(int(N) for N in ladder)))
    if ladder.size == 0 or ladder[0] <= 0:
        raise ValueError(f"Ladder must contain positive horizons, got {ladder.tolist()}")
    if tol_slope is None:
        tol_slope = float(settings.get('tol_slope', 1e-3))
    return ladder, tol_slope


def estimate_stable_subspace(seq: CoefficientSequence, m: int, ladder: Optional[Sequence[int]] = None,
                             tol_slope: Optional[float] = None,
                             tol: Optional[ToleranceConfig] = None) -> SubspaceEstimate:
    """
    Estimate R P(m) as the right singular directions of Phi(m+N, m) whose
    singular values decay as N grows.

    Raises:
        NoGap: when a fitted rate is too close to zero to classify
    """
    tol = tol if tol is not None else get_tolerances()
    ladder, tol_slope = _ladder_and_slope(ladder, tol_slope)

    spectra = []
    right_vectors = None
    for N in ladder:
        _, s, vh = scipy.linalg.svd(transition_matrix(seq, m + int(N), m))
        spectra.append(s)
        right_vectors = vh
    slopes = _fit_growth_rates(np.array(spectra), ladder, tol)
    _check_gap(slopes, tol_slope, f"m={m}")

    stable = slopes < 0
    subspace = Subspace(right_vectors[stable].T.copy())
    logger.debug(f"Stable subspace at {m}: dim {subspace.dim}, rates {slopes}")
    return SubspaceEstimate(at_k=m, subspace=subspace, growth_rates=slopes.tolist(),
                            gap_quality=_gap_quality(slopes), side="stable", ladder=ladder.tolist())


def estimate_unstable_subspace(seq: CoefficientSequence, m: int, ladder: Optional[Sequence[int]] = None,
                               tol_slope: Optional[float] = None,
                               tol: Optional[ToleranceConfig] = None) -> SubspaceEstimate:
    """
    Estimate N P(m) as the left singular directions of Phi(m, m-N) whose
    singular values grow with N.

    Raises:
        NoGap: when a fitted rate is too close to zero to classify
    """
    tol = tol if tol is not None else get_tolerances()
    ladder, tol_slope = _ladder_and_slope(ladder, tol_slope)

    spectra = []
    left_vectors = None
    for N in ladder:
        u, s, _ = scipy.linalg.svd(transition_matrix(seq, m, m - int(N)))
        spectra.append(s)
        left_vectors = u
    slopes = _fit_growth_rates(np.array(spectra), ladder, tol)
    _check_gap(slopes, tol_slope, f"m={m}")

    unstable = slopes > 0
    subspace = Subspace(left_vectors[:, unstable].copy())
    return SubspaceEstimate(at_k=m, subspace=subspace, growth_rates=slopes.tolist(),
                            gap_quality=_gap_quality(slopes), side="unstable", ladder=ladder.tolist())


@dataclass
class OracleVerdict:
    side: str
    m: int
    horizon: int
    bounded: bool
    sup_norm: float
    envelope: float
    tolerance: float
    in_unstable_subspace: Optional[bool] = None
    initial_value_error: Optional[float] = None
    forward_residual: Optional[float] = None
    uniqueness_gap: Optional[float] = None
    solution: Dict[int, np.ndarray] = field(default_factory=dict)

    def as_dict(self) -> Dict:
        return {
            "side": self.side,
            "m": self.m,
            "horizon": self.horizon,
            "bounded": self.bounded,
            "sup_norm": self.sup_norm,
            "envelope": self.envelope,
            "tolerance": self.tolerance,
            "in_unstable_subspace": self.in_unstable_subspace,
            "initial_value_error": self.initial_value_error,
            "forward_residual": self.forward_residual,
            "uniqueness_gap": self.uniqueness_gap,
        }


def bounded_solution_oracle(seq: CoefficientSequence, m: int, xi, horizon: int,
                            family_hint: Optional[ProjectionFamily] = None,
                            side: str = "forward",
                            tol: Optional[ToleranceConfig] = None) -> OracleVerdict:
    """
    Decide whether the solution through xi at m stays bounded.

    Forward: iterate Phi(k, m) xi for k in [m, m+horizon] and compare the
    supremum with envelope_factor * |xi|. Backward: xi must lie in N P(m) of
    the hinted family; y(k) = Phi(k, m) xi for k <= m is rebuilt through the
    restricted inverses, once directly and once step by step, and the two
    reconstructions are compared.

    Raises:
        NotInjectiveOnNullspace: from the backward reconstruction
    """
    tol = tol if tol is not None else get_tolerances()
    xi = np.asarray(xi, dtype=float).reshape(-1)
    scale = max(float(np.linalg.norm(xi)), np.finfo(float).tiny)
    envelope = float(get_config().get('oracle.envelope_factor', 1e4)) * scale

    if side == "forward":
        sup_norm = 0.0
        for k in range(m, m + horizon + 1):
            sup_norm = max(sup_norm, float(np.linalg.norm(transition_matrix(seq, k, m) @ xi)))
        bounded = sup_norm <= envelope
        logger.debug(f"Forward oracle at m={m}: sup {sup_norm:.3e}, envelope {envelope:.3e}")
        return OracleVerdict(side=side, m=m, horizon=horizon, bounded=bounded,
                             sup_norm=sup_norm, envelope=envelope, tolerance=tol.tol_residual)

    if side != "backward":
        raise ValueError(f"Unknown oracle side '{side}'")
    if family_hint is None:
        raise ValueError("The backward oracle needs a projection family hint")

    outside = float(np.linalg.norm(family_hint.at(m) @ xi)) / scale
    if outside > tol.tol_residual:
        return OracleVerdict(side=side, m=m, horizon=horizon, bounded=False, sup_norm=math.inf,
                             envelope=envelope, tolerance=tol.tol_residual, in_unstable_subspace=False)

    direct = {}
    for k in range(m, m - horizon - 1, -1):
        direct[k] = restricted_backward(seq, family_hint, k, m, tol) @ xi

    stepped = {m: xi.copy()}
    for k in range(m - 1, m - horizon - 1, -1):
        stepped[k] = restricted_backward(seq, family_hint, k, k + 1, tol) @ stepped[k + 1]

    uniqueness_gap = max(float(np.linalg.norm(direct[k] - stepped[k])) for k in direct) / scale
    forward_residual = 0.0
    for k in range(m - horizon, m):
        forward_residual = max(forward_residual,
                               float(np.linalg.norm(seq.matrix(k) @ direct[k] - direct[k + 1])) / scale)
    sup_norm = max(float(np.linalg.norm(v)) for v in direct.values())
    return OracleVerdict(
        side=side,
        m=m,
        horizon=horizon,
        bounded=sup_norm <= envelope,
        sup_norm=sup_norm,
        envelope=envelope,
        tolerance=tol.tol_residual,
        in_unstable_subspace=True,
        initial_value_error=float(np.linalg.norm(direct[m] - xi)) / scale,
        forward_residual=forward_residual,
        uniqueness_gap=uniqueness_gap,
        solution=direct,
    )
