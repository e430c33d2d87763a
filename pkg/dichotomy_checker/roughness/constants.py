"""
Closed-form constants for perturbed dichotomies: the discrete roughness
constants, the geometric sequence bounds they are derived from, and the
continuous-time analogue.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, Optional, Sequence

import numpy as np

from ..errors import SigmaTooLarge

logger = logging.getLogger(__name__)


@dataclass
class RoughnessConstants:
    K: float
    alpha: float
    delta: float
    rho: float
    rho_delta: float
    admissible: bool
    beta: Optional[float] = None
    gamma: Optional[float] = None
    D1: Optional[float] = None
    D2: Optional[float] = None
    L: Optional[float] = None
    projection_bound: Optional[float] = None
    reason: str = ""

    def as_dict(self) -> Dict:
        return {
            "K": self.K,
            "alpha": self.alpha,
            "delta": self.delta,
            "rho": self.rho,
            "rho_delta": self.rho_delta,
            "admissible": self.admissible,
            "beta": self.beta,
            "gamma": self.gamma,
            "D1": self.D1,
            "D2": self.D2,
            "L": self.L,
            "projection_bound": self.projection_bound,
            "reason": self.reason,
        }


def contraction_constant(K: float, alpha: float) -> float:
    """rho = K (1 + e^-alpha) / (1 - e^-alpha)."""
    q = math.exp(-alpha)
    return K * (1.0 + q) / (1.0 - q)


def _check_inputs(K: float, alpha: float, delta: float):
    if not K >= 1:
        raise ValueError(f"K must be >= 1, got {K}")
    if not alpha > 0:
        raise ValueError(f"alpha must be > 0, got {alpha}")
    if not delta >= 0:
        raise ValueError(f"delta must be >= 0, got {delta}")


def predicted_constants(K: float, alpha: float, delta: float) -> RoughnessConstants:
    """
    Constants of the dichotomy of x(k+1) = A(k)(I + B(k))x(k) for |B(k)| <= delta.

    Inadmissible inputs (rho*delta >= 1, a negative radicand under the
    square root of beta, or a non-positive D denominator) give a verdict
    with the offending quantity in ``reason``.
    """
    _check_inputs(K, alpha, delta)
    rho = contraction_constant(K, alpha)
    rho_delta = rho * delta
    result = RoughnessConstants(K=K, alpha=alpha, delta=delta, rho=rho, rho_delta=rho_delta, admissible=False)
    if rho_delta >= 1.0:
        result.reason = f"rho*delta = {rho_delta:.6g} >= 1"
        return result

    sinh_a, cosh_a = math.sinh(alpha), math.cosh(alpha)
    radicand = sinh_a ** 2 - 2.0 * K * delta * sinh_a
    if radicand < 0.0:
        result.reason = f"sinh^2(alpha) - 2 K delta sinh(alpha) = {radicand:.6g} < 0"
        return result

    beta = -math.log(cosh_a - math.sqrt(radicand))
    gamma = beta + math.log(1.0 + 2.0 * K * math.exp(alpha) * delta * sinh_a)
    d1_denominator = 1.0 - K * delta / (1.0 - math.exp(-(alpha + beta)))
    d2_denominator = 1.0 - K * math.exp(alpha - gamma) * delta / (1.0 - math.exp(-(alpha + gamma)))
    result.beta, result.gamma = beta, gamma
    if d1_denominator <= 0.0 or d2_denominator <= 0.0:
        result.reason = f"D denominators {d1_denominator:.6g}, {d2_denominator:.6g} must be positive"
        return result

    D1, D2 = 1.0 / d1_denominator, 1.0 / d2_denominator
    L = K * (1.0 + K * delta / ((1.0 - rho_delta) * (1.0 - math.exp(-alpha)))) * max(D1, D2)
    q = math.exp(-(alpha + beta))
    result.D1, result.D2, result.L = D1, D2, L
    result.projection_bound = K * L * (1.0 + q) / (1.0 - q) * delta
    result.admissible = True
    logger.debug(f"Roughness constants for K={K}, alpha={alpha:.6g}, delta={delta:.6g}: "
                 f"beta={beta:.6g}, L={L:.6g}")
    return result


@dataclass
class GrowthBoundInput:
    """
    Nonnegative numbers mu_k with the constants D, alpha, delta of their
    implicit bound. Forward inputs start at ``anchor``; backward inputs end
    at it.
    """
    mu: Sequence[float]
    D: float
    alpha: float
    delta: float
    anchor: int = 0

    def __post_init__(self):
        self.mu = np.asarray(self.mu, dtype=float).reshape(-1)
        if np.any(self.mu < 0):
            raise ValueError("Sequence bound needs nonnegative mu_k")


@dataclass
class SequenceBound:
    side: str
    coefficient: float
    exponent: float
    sigma: float
    hypothesis_holds: bool
    hypothesis_slack: float
    conclusion_violation: float

    @property
    def consistent(self) -> bool:
        """False only when the hypothesis holds and the conclusion still fails."""
        return not (self.hypothesis_holds and self.conclusion_violation > 0.0)

    def as_dict(self) -> Dict:
        return {
            "side": self.side,
            "coefficient": self.coefficient,
            "exponent": self.exponent,
            "sigma": self.sigma,
            "hypothesis_holds": self.hypothesis_holds,
            "hypothesis_slack": self.hypothesis_slack,
            "conclusion_violation": self.conclusion_violation,
            "consistent": self.consistent,
        }


def _implicit_bound(mu: np.ndarray, D: float, alpha: float, delta: float, side: str) -> np.ndarray:
    """Right-hand side of the implicit inequality, with infinite sums cut at the data."""
    count = mu.size
    k = np.arange(count)[:, None]
    m = np.arange(count)[None, :]
    before = np.where(m < k, np.exp(-alpha * (k - m - 1)), 0.0)
    after = np.where(m >= k, np.exp(-alpha * (m + 1 - k)), 0.0)
    if side == "forward":
        lead = D * np.exp(-alpha * np.arange(count))
    else:
        # the last entry is mu_b; the backward sum stops at b - 1
        after[:, count - 1] = 0.0
        lead = D * np.exp(-alpha * (count - 1 - np.arange(count)))
    return lead + delta * (before @ mu) + delta * (after @ mu)


def sequence_bound(data: GrowthBoundInput, side: str = "forward",
                   rtol: float = 1e-12) -> SequenceBound:
    """
    Explicit exponential bound for a sequence obeying the implicit
    inequality mu_k <= D e^{-alpha|k-anchor|} + delta (two geometric sums).

    Forward: D / (1 - delta e^-alpha / (1 - e^-(alpha+beta))) e^{-beta(k-a)}.
    Backward: D / (1 - delta e^-gamma / (1 - e^-(alpha+gamma))) e^{-gamma(b-k)},
    gamma = beta + log(1 + 2 delta sinh alpha). The supplied mu is also
    checked against the hypothesis and the conclusion.

    Raises:
        SigmaTooLarge: when delta (1 + e^-alpha) / (1 - e^-alpha) >= 1
    """
    if side not in ("forward", "backward"):
        raise ValueError(f"Unknown side '{side}'")
    alpha, delta, D = data.alpha, data.delta, data.D
    q = math.exp(-alpha)
    sigma = delta * (1.0 + q) / (1.0 - q)
    if sigma >= 1.0:
        raise SigmaTooLarge(f"sigma = {sigma:.6g} >= 1")

    sinh_a = math.sinh(alpha)
    beta = -math.log(math.cosh(alpha) - math.sqrt(sinh_a ** 2 - 2.0 * delta * sinh_a))
    if side == "forward":
        exponent = beta
        coefficient = D / (1.0 - delta * q / (1.0 - math.exp(-(alpha + beta))))
        distance = np.arange(data.mu.size)
    else:
        exponent = beta + math.log(1.0 + 2.0 * delta * sinh_a)
        coefficient = D / (1.0 - delta * math.exp(-exponent) / (1.0 - math.exp(-(alpha + exponent))))
        distance = data.mu.size - 1 - np.arange(data.mu.size)

    mu = data.mu
    if mu.size:
        implicit = _implicit_bound(mu, D, alpha, delta, side)
        slack = float(np.min(implicit - mu))
        hypothesis_holds = bool(np.all(mu <= implicit * (1.0 + rtol) + rtol))
        explicit = coefficient * np.exp(-exponent * distance)
        violation = float(max(0.0, np.max(mu - explicit * (1.0 + rtol))))
    else:
        slack, hypothesis_holds, violation = 0.0, True, 0.0
    if hypothesis_holds and violation > 0.0:
        logger.warning(f"Sequence satisfies the implicit bound but exceeds the explicit one by {violation:.3e}")
    return SequenceBound(side=side, coefficient=coefficient, exponent=exponent, sigma=sigma,
                         hypothesis_holds=hypothesis_holds, hypothesis_slack=slack,
                         conclusion_violation=violation)


@dataclass
class OdeConstants:
    K: float
    alpha: float
    delta: float
    admissible: bool
    beta: Optional[float] = None
    L: Optional[float] = None
    projection_bound: Optional[float] = None

    def as_dict(self) -> Dict:
        return {
            "K": self.K,
            "alpha": self.alpha,
            "delta": self.delta,
            "admissible": self.admissible,
            "beta": self.beta,
            "L": self.L,
            "projection_bound": self.projection_bound,
        }


def ode_constants(K: float, alpha: float, delta: float) -> OdeConstants:
    """
    Continuous-time roughness constants for x' = (A(t) + B(t))x, |B| <= delta:
    beta = alpha sqrt(s), L = 2K(1 + K delta / (s alpha)) / (1 + sqrt(s)) with
    s = 1 - 2K delta / alpha, and |Q - P| <= 2KL delta / (alpha + beta).
    """
    _check_inputs(K, alpha, delta)
    s = 1.0 - 2.0 * K * delta / alpha
    if s <= 0.0:
        return OdeConstants(K=K, alpha=alpha, delta=delta, admissible=False)
    root = math.sqrt(s)
    beta = alpha * root
    L = 2.0 * K * (1.0 + K * delta / (s * alpha)) / (1.0 + root)
    return OdeConstants(K=K, alpha=alpha, delta=delta, admissible=True, beta=beta, L=L,
                        projection_bound=2.0 * K * L * delta / (alpha + beta))
