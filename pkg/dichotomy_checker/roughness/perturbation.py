"""
Projections of the multiplicatively perturbed system x(k+1) = A(k)(I+B(k))x(k)
computed by the impulse method, and end-to-end checks of the predicted
roughness constants.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

from ..config import ToleranceConfig, get_config, get_tolerances
from ..errors import NotAdmissible
from ..dichotomy.family import DichotomyCertificate, FormA, ProjectionFamily
from ..dichotomy.verifier import VerificationReport, check_invariance, verify_certificate
from ..extension.embedding import embed_in_Z
from ..linalg import rank_of
from ..system.sequence import CoefficientSequence, Interval, zero_sequence
from ..system.transition import perturb_sequence, restricted_backward
from .constants import RoughnessConstants, contraction_constant, predicted_constants
from .solver import ForcingProblem, GreensKernel, bounded_solution_fixed_point, required_margin

logger = logging.getLogger(__name__)


def random_perturbation(n: int, window: Interval, delta: float, seed: int = 0,
                        label: str = "B") -> CoefficientSequence:
    """
    B(k) on the steps of ``window`` with uniform entries in [-1, 1] rescaled
    to spectral norm exactly ``delta``; zero elsewhere.
    """
    rng = np.random.default_rng(seed)
    explicit = {}
    for k in window.steps():
        block = rng.uniform(-1.0, 1.0, size=(n, n))
        norm = float(np.linalg.norm(block, 2))
        explicit[k] = block * (delta / norm) if norm > 0 else block
    return zero_sequence(n, Interval.whole(), explicit=explicit, label=label)


def constant_perturbation(matrix, window: Optional[Interval] = None, label: str = "B") -> CoefficientSequence:
    """The same B on the steps of ``window``, or on all of Z when no window is given."""
    matrix = np.asarray(matrix, dtype=float)
    if window is None:
        return CoefficientSequence.constant(matrix, Interval.whole(), label=label)
    return zero_sequence(matrix.shape[0], Interval.whole(),
                         explicit={k: matrix for k in window.steps()}, label=label)


def perturbation_norm(perturbation: CoefficientSequence, window: Interval) -> float:
    """max |B(k)| over the steps of a window (B taken as zero where undefined)."""
    worst = 0.0
    for k in window.steps():
        if perturbation.interval.step_contains(k):
            worst = max(worst, float(np.linalg.norm(perturbation.matrix(k), 2)))
    return worst


def _on_whole_line(cert: DichotomyCertificate) -> DichotomyCertificate:
    if cert.seq.interval.kind == "whole" and cert.family.interval.kind == "whole":
        return cert
    _, embedded = embed_in_Z(cert)
    return embedded


def _solver_window(indices: List[int], K: float, alpha: float, rho_delta: float,
                   tol: ToleranceConfig) -> Interval:
    rho = contraction_constant(K, alpha)
    impulse_bound = rho * (1.0 / K) / (1.0 - rho_delta)
    minimum = int(get_config().get_roughness_config().get('min_margin', 10))
    margin = max(minimum, required_margin(K, alpha, impulse_bound, tol.tol_residual))
    return Interval.finite(min(indices) - margin - 1, max(indices) + margin)


def _admissible_window(indices: List[int], perturbation: CoefficientSequence, K: float, alpha: float,
                       tol: ToleranceConfig) -> Tuple[Interval, float, float]:
    """Grow the solver window until delta measured on it gives back the same window."""
    window = _solver_window(indices, K, alpha, 0.0, tol)
    for _ in range(8):
        delta = perturbation_norm(perturbation, window)
        rho_delta = contraction_constant(K, alpha) * delta
        if rho_delta >= 1.0:
            raise NotAdmissible(f"rho*delta = {rho_delta:.6g} >= 1 on {window}")
        grown = _solver_window(indices, K, alpha, rho_delta, tol)
        if grown == window:
            break
        window = grown
    return window, delta, rho_delta


def perturbed_projections(cert: DichotomyCertificate, perturbation: CoefficientSequence,
                          indices: Iterable[int], tol: Optional[ToleranceConfig] = None
                          ) -> Dict[int, np.ndarray]:
    """
    Q(m) for each m in ``indices``.

    For every basis vector xi, f = xi / K at m - 1 forces a unique bounded
    solution x with x(m) = Q(m) xi / K. All impulses share one kernel and
    one batched fixed point iteration.

    Raises:
        NotAdmissible: when rho*delta >= 1 on the solver window
        WindowTooSmall: propagated from the solver
    """
    tol = tol if tol is not None else get_tolerances()
    indices = sorted(set(int(m) for m in indices))
    if not indices:
        return {}
    cert = _on_whole_line(cert)
    n = cert.seq.n
    K, alpha = cert.K, cert.alpha

    window, delta, rho_delta = _admissible_window(indices, perturbation, K, alpha, tol)

    columns = n * len(indices)
    forcing = {}
    for position, m in enumerate(indices):
        impulse = np.zeros((n, columns))
        impulse[:, position * n:(position + 1) * n] = np.eye(n) / K
        forcing[m - 1] = forcing.get(m - 1, np.zeros((n, columns))) + impulse

    problem = ForcingProblem(perturbation=perturbation, forcing=forcing, window=window)
    kernel = GreensKernel(cert, window, tol)
    solution = bounded_solution_fixed_point(problem, cert, report_region=Interval.finite(indices[0], indices[-1]),
                                            kernel=kernel, tol=tol)
    projections = {}
    for position, m in enumerate(indices):
        projections[m] = K * solution.at(m)[:, position * n:(position + 1) * n]
    logger.info(f"Computed {len(indices)} perturbed projections, delta = {delta:.3g}, "
                f"rho*delta = {rho_delta:.3g}")
    return projections


def perturbed_projection(cert: DichotomyCertificate, perturbation: CoefficientSequence, m: int,
                         tol: Optional[ToleranceConfig] = None) -> np.ndarray:
    """Q(m) of the perturbed system; see ``perturbed_projections``."""
    return perturbed_projections(cert, perturbation, [m], tol)[m]


@dataclass
class RoughnessReport:
    passed: bool
    window: Interval
    delta: float
    constants: RoughnessConstants
    rank_preserved: bool = False
    max_projection_distance: Optional[float] = None
    projection_bound: Optional[float] = None
    idempotence_residual: Optional[float] = None
    verification: Optional[VerificationReport] = None
    measured_backward_rate: Optional[float] = None
    notes: List[str] = field(default_factory=list)

    def as_dict(self) -> Dict:
        return {
            "passed": self.passed,
            "window": self.window.as_dict(),
            "delta": self.delta,
            "predicted": self.constants.as_dict(),
            "rank_preserved": self.rank_preserved,
            "max_projection_distance": self.max_projection_distance,
            "projection_bound": self.projection_bound,
            "idempotence_residual": self.idempotence_residual,
            "verification": None if self.verification is None else self.verification.as_dict(),
            "measured_backward_rate": self.measured_backward_rate,
            "notes": list(self.notes),
        }


def _backward_decay_rate(seq: CoefficientSequence, family: ProjectionFamily, window: Interval,
                         tol: ToleranceConfig) -> Optional[float]:
    """Fitted exponent of max over pairs of |Psi(m,k)(I-Q(k))| against k - m."""
    by_lag: Dict[int, float] = {}
    indices = list(window.indices())
    for i, m in enumerate(indices):
        for k in indices[i + 1:]:
            value = float(np.linalg.norm(restricted_backward(seq, family, m, k, tol), 2))
            by_lag[k - m] = max(by_lag.get(k - m, 0.0), value)
    lags = np.array([t for t, v in sorted(by_lag.items()) if v > 0.0], dtype=float)
    if lags.size < 2:
        return None
    values = np.array([by_lag[int(t)] for t in lags])
    return float(-np.polyfit(lags, np.log(values), 1)[0])


def verify_roughness(cert: DichotomyCertificate, perturbation: CoefficientSequence, window: Interval,
                     tol: Optional[ToleranceConfig] = None) -> RoughnessReport:
    """
    Compute Q(k) on ``window`` and check it against the predicted constants:
    invariance under A(k)(I+B(k)), the dichotomy inequalities with (L, beta),
    |Q(k) - P(k)| against the stated bound and rank preservation.

    The backward inequalities are checked with beta; the faster backward
    rate is only measured and reported.
    """
    tol = tol if tol is not None else get_tolerances()
    whole = _on_whole_line(cert)
    n = whole.seq.n
    K, alpha = whole.K, whole.alpha

    try:
        _, delta, _ = _admissible_window(list(window.indices()), perturbation, K, alpha, tol)
    except NotAdmissible:
        delta = perturbation_norm(perturbation, _solver_window(list(window.indices()), K, alpha, 0.0, tol))
    constants = predicted_constants(K, alpha, delta)
    report = RoughnessReport(passed=False, window=window, delta=delta, constants=constants)
    if not constants.admissible:
        report.notes.append(f"inadmissible: {constants.reason}")
        return report

    projections = perturbed_projections(whole, perturbation, window.indices(), tol)
    ranks = {rank_of(q, tol) for q in projections.values()}
    report.rank_preserved = ranks == {whole.rank}
    report.idempotence_residual = max(float(np.linalg.norm(q @ q - q, 2)) for q in projections.values())
    report.max_projection_distance = max(float(np.linalg.norm(q - whole.family.at(k), 2))
                                         for k, q in projections.items())
    report.projection_bound = constants.projection_bound
    if not report.rank_preserved:
        report.notes.append(f"perturbed ranks {sorted(ranks)} differ from {whole.rank}")
        return report

    explicit = {}
    for k in Interval.finite(window.start - 1, window.end + 1).steps():
        if perturbation.interval.step_contains(k):
            explicit[k] = perturbation.matrix(k)
    perturbed = perturb_sequence(whole.seq, zero_sequence(n, Interval.whole(), explicit=explicit),
                                 label=f"{whole.seq.label or 'sequence'}+B")
    family = ProjectionFamily(interval=window, projections=projections, rank=whole.rank)
    invariance = check_invariance(perturbed, family, window, tol)
    if not invariance.passed:
        report.notes.append(f"invariance residual {invariance.max_residual:.3e} at k={invariance.worst_k}")

    perturbed_cert = DichotomyCertificate(seq=perturbed, family=family,
                                          form=FormA(L=constants.L, alpha=constants.beta),
                                          verified_window=window)
    report.verification = verify_certificate(perturbed_cert, window, tol)
    report.measured_backward_rate = _backward_decay_rate(perturbed, family, window, tol)

    distance_ok = report.max_projection_distance <= constants.projection_bound * (1.0 + tol.tol_residual)
    if not distance_ok:
        report.notes.append(f"|Q-P| = {report.max_projection_distance:.6g} exceeds "
                            f"the bound {constants.projection_bound:.6g}")
    report.passed = report.verification.passed and distance_ok
    logger.info(f"Roughness check on {window}: {'pass' if report.passed else 'fail'}, "
                f"worst margin {report.verification.worst_margin:.3e}")
    return report
