"""
Finite-time hypotheses for a dichotomy on Z: uniform dichotomies on the
windows [a, a+N] for a relatively dense set of base points a, and an
empirical check of the global dichotomy those windows are meant to imply.

No window length N0 is derived from the constants, so a pass here reports
that the hypotheses hold and, separately, that a global certificate was
observed on the scanned range. It never claims the implication itself.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from ..config import ToleranceConfig, get_tolerances
from ..errors import DichotomyError
from ..dichotomy.family import DichotomyCertificate, FormA, ProjectionFamily
from ..dichotomy.subspaces import estimate_stable_subspace, estimate_unstable_subspace
from ..dichotomy.verifier import verify_certificate
from ..linalg import complement, image, make_projection, orthogonal_complement
from ..system.sequence import CoefficientSequence, Interval

logger = logging.getLogger(__name__)

NORM_BOUND = "norm_bound"
DENSITY = "density"
WINDOWS = "window_dichotomies"
GLOBAL = "global_certificate"


@dataclass
class FiniteTimeHypothesis:
    """
    Window length N, base points (discovered when None), density gap,
    uniform window constants (K, alpha), coefficient bound M and the target
    global constants (Kbar, beta_bar).
    """
    N: int
    density: int
    K: float
    alpha: float
    M: float
    Kbar: float
    beta_bar: float
    base_points: Optional[Sequence[int]] = None

    def __post_init__(self):
        if self.N < 1:
            raise ValueError(f"Window length N must be positive, got {self.N}")
        if self.density < 1:
            raise ValueError(f"Density gap must be positive, got {self.density}")

    def parameter_violations(self) -> List[str]:
        """The constraints alpha > beta_bar > 0 and Kbar > 4 K^8 that fail."""
        problems = []
        if not self.alpha > self.beta_bar > 0:
            problems.append(f"need alpha > beta_bar > 0, got alpha={self.alpha}, beta_bar={self.beta_bar}")
        if not self.Kbar > 4.0 * self.K ** 8:
            problems.append(f"need Kbar > 4 K^8 = {4.0 * self.K ** 8:.6g}, got Kbar={self.Kbar}")
        return problems

    def as_dict(self) -> Dict:
        return {
            "N": self.N,
            "density": self.density,
            "K": self.K,
            "alpha": self.alpha,
            "M": self.M,
            "Kbar": self.Kbar,
            "beta_bar": self.beta_bar,
            "base_points": None if self.base_points is None else list(self.base_points),
        }


@dataclass
class StageResult:
    name: str
    passed: bool
    failure: Optional[str] = None
    details: Dict = field(default_factory=dict)

    def as_dict(self) -> Dict:
        return {"stage": self.name, "passed": self.passed, "failure": self.failure, "details": self.details}


@dataclass
class FiniteTimeReport:
    hypothesis: FiniteTimeHypothesis
    scan_range: Interval
    stages: List[StageResult]
    parameter_violations: List[str]
    base_points: List[int]

    def stage(self, name: str) -> StageResult:
        for stage in self.stages:
            if stage.name == name:
                return stage
        raise KeyError(name)

    @property
    def hypotheses_hold(self) -> bool:
        return not self.parameter_violations and all(s.passed for s in self.stages if s.name != GLOBAL)

    @property
    def conclusion_observed(self) -> bool:
        return self.stage(GLOBAL).passed

    @property
    def passed(self) -> bool:
        return self.hypotheses_hold and self.conclusion_observed

    def as_dict(self) -> Dict:
        return {
            "hypothesis": self.hypothesis.as_dict(),
            "scan_range": self.scan_range.as_dict(),
            "parameter_violations": list(self.parameter_violations),
            "hypotheses_hold": self.hypotheses_hold,
            "conclusion": "empirical",
            "conclusion_observed": self.conclusion_observed,
            "base_points": list(self.base_points),
            "stages": [s.as_dict() for s in self.stages],
        }


def _check_norm_bound(seq: CoefficientSequence, M: float, scan_range: Interval, N: int,
                      tol: ToleranceConfig) -> StageResult:
    covered = Interval.finite(scan_range.start, scan_range.end + N)
    worst, where = seq.max_norm(covered)
    passed = worst <= M * (1.0 + tol.tol_residual)
    return StageResult(NORM_BOUND, passed, failure=None if passed else "NormBoundExceeded",
                       details={"max_norm": worst, "at_k": where, "M": M, "tolerance": tol.tol_residual})


def largest_gap(points: Sequence[int], scan_range: Interval) -> Dict:
    """
    Longest run of consecutive integers in the scan range free of points.
    A set meets every interval of ``density`` integers exactly when this run
    is shorter than ``density``.
    """
    inside = sorted(p for p in set(points) if scan_range.contains(p))
    edges = [scan_range.start - 1] + inside + [scan_range.end + 1]
    worst, where = 0, None
    for left, right in zip(edges, edges[1:]):
        if right - left - 1 > worst:
            worst, where = right - left - 1, left + 1
    return {"longest_run": worst, "starts_at": where}


def _check_density(points: Sequence[int], scan_range: Interval, density: int) -> StageResult:
    gap = largest_gap(points, scan_range)
    passed = gap["longest_run"] < density
    gap["density"] = density
    return StageResult(DENSITY, passed, failure=None if passed else "NotRelativelyDense", details=gap)


def window_family(seq: CoefficientSequence, a: int, N: int,
                  tol: ToleranceConfig) -> ProjectionFamily:
    """
    Projections on [a, a+N]: P(a) projects orthogonally onto the estimated
    stable subspace at a, then N P(k+1) = A(k) N P(k) and R P(k+1) completes
    A(k) R P(k) orthogonally.
    """
    estimate = estimate_stable_subspace(seq, a, ladder=[math.ceil(N / 2), N], tol=tol)
    stable = estimate.subspace
    unstable = orthogonal_complement(stable, tol=tol)
    projections = {a: make_projection(stable, unstable, tol)}
    for k in range(a, a + N):
        matrix = seq.matrix(k)
        unstable = image(matrix, unstable, tol)
        stable = complement(unstable, containing=image(matrix, stable, tol), tol=tol)
        projections[k + 1] = make_projection(stable, unstable, tol)
    return ProjectionFamily.build(Interval.finite(a, a + N), projections, tol=tol)


def window_certificate(seq: CoefficientSequence, a: int, hyp: FiniteTimeHypothesis,
                       tol: ToleranceConfig) -> DichotomyCertificate:
    family = window_family(seq, a, hyp.N, tol)
    return DichotomyCertificate(seq=seq, family=family, form=FormA(L=hyp.K, alpha=hyp.alpha),
                                verified_window=Interval.finite(a, a + hyp.N))


def _check_windows(seq: CoefficientSequence, hyp: FiniteTimeHypothesis, candidates: List[int],
                   tol: ToleranceConfig) -> Tuple[StageResult, List[int]]:
    passing, failures, ranks = [], [], {}
    for a in candidates:
        try:
            cert = window_certificate(seq, a, hyp, tol)
            report = verify_certificate(cert, cert.verified_window, tol)
        except DichotomyError as e:
            failures.append({"a": a, "error": e.code, "message": str(e)})
            logger.debug(f"Window at {a} failed: {e}")
            continue
        if report.passed:
            passing.append(a)
            ranks[a] = cert.rank
        else:
            failures.append({"a": a, "worst_margin": report.worst_margin,
                             "worst_pair": report.worst_pair, "inequality": report.worst_inequality})

    distinct_ranks = sorted(set(ranks.values()))
    if hyp.base_points is not None:
        passed = not failures and len(distinct_ranks) <= 1
    else:
        passed = bool(passing) and len(distinct_ranks) <= 1
    failure = None
    if not passed:
        failure = "RankMismatch" if len(distinct_ranks) > 1 else "WindowCertificateFailed"
    details = {"checked": len(candidates), "passing": len(passing), "ranks": distinct_ranks,
               "failures": failures[:20]}
    logger.info(f"Window dichotomies: {len(passing)} of {len(candidates)} base points pass")
    return StageResult(WINDOWS, passed, failure=failure, details=details), passing


def global_family(seq: CoefficientSequence, scan_range: Interval, N: int,
                  tol: ToleranceConfig) -> ProjectionFamily:
    """P(k) onto the forward-decaying directions along the backward-growing ones."""
    ladder = [math.ceil(N / 2), N]
    projections = {}
    for k in scan_range.indices():
        stable = estimate_stable_subspace(seq, k, ladder=ladder, tol=tol).subspace
        unstable = estimate_unstable_subspace(seq, k, ladder=ladder, tol=tol).subspace
        projections[k] = make_projection(stable, unstable, tol)
    return ProjectionFamily.build(scan_range, projections, tol=tol)


def _check_global(seq: CoefficientSequence, hyp: FiniteTimeHypothesis, scan_range: Interval,
                  tol: ToleranceConfig) -> StageResult:
    try:
        family = global_family(seq, scan_range, hyp.N, tol)
        cert = DichotomyCertificate(seq=seq, family=family, form=FormA(L=hyp.Kbar, alpha=hyp.beta_bar),
                                    verified_window=scan_range)
        report = verify_certificate(cert, scan_range, tol)
    except DichotomyError as e:
        return StageResult(GLOBAL, False, failure="GlobalCertificateFailed",
                           details={"error": e.code, "message": str(e), "empirical": True})
    return StageResult(GLOBAL, report.passed, failure=None if report.passed else "GlobalCertificateFailed",
                       details={"empirical": True, "rank": family.rank, "verification": report.as_dict()})


def finite_time_check(seq: CoefficientSequence, hyp: FiniteTimeHypothesis, scan_range: Interval,
                      tol: Optional[ToleranceConfig] = None) -> FiniteTimeReport:
    """
    Check the finite-time hypotheses on ``scan_range`` and try the global
    certificate they lead to.

    Stages: |A(k)| <= M on the steps used; (K, alpha) dichotomies on
    [a, a+N] for the base points (all of the scan range when none are
    given, keeping those that pass); relative density of those base points
    with gap ``density``; and a global certificate with (Kbar, beta_bar).
    Every stage runs, so one report lists all failures.
    """
    tol = tol if tol is not None else get_tolerances()
    if not scan_range.is_finite:
        raise ValueError(f"Scan range must be finite, got {scan_range}")
    violations = hyp.parameter_violations()
    for problem in violations:
        logger.warning(problem)

    norm_stage = _check_norm_bound(seq, hyp.M, scan_range, hyp.N, tol)
    if hyp.base_points is None:
        candidates = list(scan_range.indices())
    else:
        candidates = sorted(set(int(a) for a in hyp.base_points))
    window_stage, passing = _check_windows(seq, hyp, candidates, tol)
    base_points = passing if hyp.base_points is None else candidates
    density_stage = _check_density(base_points, scan_range, hyp.density)
    global_stage = _check_global(seq, hyp, scan_range, tol)

    report = FiniteTimeReport(hypothesis=hyp, scan_range=scan_range,
                              stages=[norm_stage, density_stage, window_stage, global_stage],
                              parameter_violations=violations, base_points=base_points)
    failed = [s.name for s in report.stages if not s.passed]
    logger.info(f"Finite-time check on {scan_range}: "
                f"{'all stages pass' if not failed else 'failed ' + ', '.join(failed)}")
    return report
