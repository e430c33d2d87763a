"""
Bounded solutions of the forced perturbed equation

    x(k+1) = A(k)(I + B(k))x(k) + f(k)

through the Green's kernel of the unperturbed dichotomy, computed as the
fixed point of a contraction on a finite window, plus a direct banded
solve of the equivalent boundary value problem used as an oracle.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Tuple

import numpy as np
import scipy.linalg

from ..config import ToleranceConfig, get_config, get_tolerances
from ..errors import DimensionMismatch, NotAdmissible, WindowTooSmall
from ..dichotomy.family import DichotomyCertificate
from ..linalg import range_of
from ..system.sequence import CoefficientSequence, Interval
from ..system.transition import restricted_backward, transition_matrix
from .constants import contraction_constant

logger = logging.getLogger(__name__)

PLUS = "plus"
MINUS = "minus"


class GreensKernel:
    """
    Kernel blocks of the dichotomy on a finite window [a, b].

    ``forward[i, j]`` holds Phi(k, p)P(p) for p <= k and ``backward[i, j]``
    holds Phi(k, p)(I - P(p)) for k <= p, with i = k - a and j = p - a. The
    backward blocks are chained from one-step restricted inverses.
    """

    def __init__(self, cert: DichotomyCertificate, window: Interval,
                 tol: Optional[ToleranceConfig] = None):
        if not window.is_finite:
            raise ValueError(f"Green's kernel needs a finite window, got {window}")
        tol = tol if tol is not None else get_tolerances()
        self.cert = cert
        self.window = window
        self.start = window.start
        seq, family = cert.seq, cert.family
        n = seq.n
        size = window.length
        self.n = n
        self.size = size

        self.forward = np.zeros((size, size, n, n))
        self.backward = np.zeros((size, size, n, n))
        identity = np.eye(n)
        projections = [family.at(k) for k in window.indices()]
        for j, p in enumerate(window.indices()):
            for i in range(j, size):
                self.forward[i, j] = transition_matrix(seq, p + i - j, p) @ projections[j]

        one_step = [restricted_backward(seq, family, k, k + 1, tol) for k in window.steps()]
        for j in range(size):
            self.backward[j, j] = identity - projections[j]
            for i in range(j - 1, -1, -1):
                self.backward[i, j] = one_step[i] @ self.backward[i + 1, j]
        logger.debug(f"Built Green's kernel on {window} ({size} points)")

    def index(self, k: int) -> int:
        if not self.window.contains(k):
            raise ValueError(f"{k} is outside the kernel window {self.window}")
        return k - self.start

    def green(self, k: int, p: int) -> np.ndarray:
        """G(k, p) = Phi(k,p)P(p) for k > p, -Phi(k,p)(I-P(p)) for k <= p."""
        i, j = self.index(k), self.index(p)
        return self.forward[i, j] if i > j else -self.backward[i, j]

    def _green_blocks(self) -> np.ndarray:
        lower = np.tril(np.ones((self.size, self.size), dtype=bool), k=-1)
        return np.where(lower[:, :, None, None], self.forward, -self.backward)

    def _forcing_blocks(self) -> np.ndarray:
        """H(k, q) for the forcing term f(q-1): forward for k >= q, -backward for k < q."""
        lower = np.tril(np.ones((self.size, self.size), dtype=bool), k=0)
        return np.where(lower[:, :, None, None], self.forward, -self.backward)

    def operator_matrix(self, b_blocks: np.ndarray) -> np.ndarray:
        """
        The linear part of T as a dense matrix: (T_B u)(k) = sum_p G(k,p)B(p)u(p)
        over the steps p of the window.
        """
        size, n = self.size, self.n
        blocks = np.zeros((size, size, n, n))
        blocks[:, :size - 1] = np.einsum('ijab,jbc->ijac', self._green_blocks()[:, :size - 1], b_blocks)
        return blocks.transpose(0, 2, 1, 3).reshape(size * n, size * n)

    def forcing_vector(self, f_blocks: np.ndarray) -> np.ndarray:
        """
        sum over steps p of H(k, p+1) f(p), stacked over k. ``f_blocks`` has
        shape (size - 1, n) or (size - 1, n, columns).
        """
        size, n = self.size, self.n
        h = self._forcing_blocks()[:, 1:]
        if f_blocks.ndim == 2:
            return np.einsum('ijab,jb->ia', h, f_blocks).reshape(size * n)
        columns = f_blocks.shape[2]
        return np.einsum('ijab,jbc->iac', h, f_blocks).reshape(size * n, columns)

    def boundary_vector(self, eta: np.ndarray, side: str) -> np.ndarray:
        """Phi(k,a)P(a)eta on the plus side, Phi(k,b)(I-P(b))eta on the minus side."""
        if side == PLUS:
            blocks = self.forward[:, 0] @ eta
        elif side == MINUS:
            blocks = self.backward[:, self.size - 1] @ eta
        else:
            raise ValueError(f"Unknown boundary side '{side}'")
        return blocks.reshape(self.size * self.n, *eta.shape[1:])


@dataclass
class ForcingProblem:
    """
    Forcing f(k) and perturbation B(k) on a finite window. With ``side`` set,
    ``eta`` prescribes P(a)u(a) (plus) or (I - P(b))u(b) (minus).
    """
    perturbation: CoefficientSequence
    forcing: Mapping[int, np.ndarray]
    window: Interval
    eta: Optional[np.ndarray] = None
    side: Optional[str] = None

    def perturbation_blocks(self, n: int) -> np.ndarray:
        """B(k) over the steps of the window; zero where B is not defined."""
        blocks = np.zeros((self.window.length - 1, n, n))
        for j, k in enumerate(self.window.steps()):
            if self.perturbation.interval.step_contains(k):
                blocks[j] = self.perturbation.matrix(k)
        return blocks

    def forcing_blocks(self, n: int) -> np.ndarray:
        columns = None
        for value in self.forcing.values():
            value = np.asarray(value, dtype=float)
            columns = value.shape[1] if value.ndim == 2 else None
            break
        shape = (self.window.length - 1, n) if columns is None else (self.window.length - 1, n, columns)
        blocks = np.zeros(shape)
        for k, value in self.forcing.items():
            if not self.window.step_contains(k):
                raise DimensionMismatch(f"Forcing at {k} lies outside the steps of {self.window}")
            blocks[k - self.window.start] = np.asarray(value, dtype=float).reshape(shape[1:])
        return blocks

    def delta(self, n: int) -> float:
        blocks = self.perturbation_blocks(n)
        if blocks.size == 0:
            return 0.0
        return float(max(np.linalg.norm(b, 2) for b in blocks))


@dataclass
class FixedPointSolution:
    window: Interval
    report_region: Interval
    values: np.ndarray
    iterations: int
    converged: bool
    last_difference: float
    error_bound: float
    truncation_bound: float
    rho_delta: float
    solution: Dict[int, np.ndarray] = field(default_factory=dict)

    def at(self, k: int) -> np.ndarray:
        return self.values[k - self.window.start]

    def as_dict(self) -> Dict:
        return {
            "window": self.window.as_dict(),
            "report_region": self.report_region.as_dict(),
            "iterations": self.iterations,
            "converged": self.converged,
            "last_difference": self.last_difference,
            "error_bound": self.error_bound,
            "truncation_bound": self.truncation_bound,
            "rho_delta": self.rho_delta,
        }


def sup_norm(values: np.ndarray) -> float:
    """max over k of |u(k)|; multi-column solutions use the operator norm per k."""
    if values.ndim == 2:
        return float(np.max(np.linalg.norm(values, axis=1))) if values.size else 0.0
    return float(max(np.linalg.norm(v, 2) for v in values)) if values.size else 0.0


def required_margin(K: float, alpha: float, solution_bound: float, tolerance: float) -> int:
    """Smallest margin with K e^{-alpha margin} |u| / (1 - e^-alpha) < tolerance."""
    scale = K * solution_bound / (1.0 - math.exp(-alpha))
    if scale < tolerance:
        return 0
    return int(math.floor(math.log(scale / tolerance) / alpha)) + 1


def _check_admissible(cert: DichotomyCertificate, delta: float) -> float:
    rho_delta = contraction_constant(cert.K, cert.alpha) * delta
    if rho_delta >= 1.0:
        raise NotAdmissible(f"rho*delta = {rho_delta:.6g} >= 1 for K={cert.K:.6g}, alpha={cert.alpha:.6g}")
    return rho_delta


def _report_region(problem: ForcingProblem, margin: int, report_region: Optional[Interval]) -> Interval:
    window = problem.window
    low = 0 if problem.side == PLUS else margin
    high = 0 if problem.side == MINUS else margin
    if report_region is None:
        region = Interval.finite(window.start + low, window.end - high) \
            if window.start + low <= window.end - high else None
        if region is None:
            raise WindowTooSmall(f"Window {window} is shorter than twice the required margin {margin}")
        return region
    if report_region.start - window.start < low or window.end - report_region.end < high:
        raise WindowTooSmall(f"Report region {report_region} is closer than {margin} to the edges of {window}")
    return report_region


def solve_fixed_point(operator: np.ndarray, rhs: np.ndarray, rho_delta: float,
                      n: int) -> Tuple[np.ndarray, int, bool, float]:
    """
    Iterate u <- T_B u + rhs from zero until the successive sup-norm
    difference drops below (1 - rho*delta) tol_fixedpoint.
    """
    settings = get_config().get_roughness_config()
    tol_fixedpoint = float(settings.get('tol_fixedpoint', 1e-12))
    max_iterations = int(settings.get('max_iterations', 500))
    threshold = (1.0 - rho_delta) * tol_fixedpoint * max(1.0, float(np.max(np.abs(rhs))) if rhs.size else 1.0)

    u = np.zeros_like(rhs)
    difference = math.inf
    for iteration in range(1, max_iterations + 1):
        updated = operator @ u + rhs
        blocks = (updated - u).reshape(-1, n, *rhs.shape[1:])
        difference = sup_norm(blocks)
        u = updated
        if difference < threshold:
            return u, iteration, True, difference
    logger.warning(f"Fixed point iteration stopped after {max_iterations} steps "
                   f"with difference {difference:.3e}")
    return u, max_iterations, False, difference


def bounded_solution_fixed_point(problem: ForcingProblem, cert: DichotomyCertificate,
                                 report_region: Optional[Interval] = None,
                                 kernel: Optional[GreensKernel] = None,
                                 tol: Optional[ToleranceConfig] = None) -> FixedPointSolution:
    """
    The bounded solution u of x(k+1) = A(k)(I+B(k))x(k) + f(k) as the fixed
    point of the truncated operator T on the problem window.

    Raises:
        NotAdmissible: when rho*delta >= 1
        WindowTooSmall: when the report region is too close to a truncated
            window edge for the geometric tail to fall below tol_residual
    """
    tol = tol if tol is not None else get_tolerances()
    n = cert.seq.n
    delta = problem.delta(n)
    rho_delta = _check_admissible(cert, delta)
    kernel = kernel if kernel is not None else GreensKernel(cert, problem.window, tol)

    f_blocks = problem.forcing_blocks(n)
    rhs = kernel.forcing_vector(f_blocks) if f_blocks.size else np.zeros(kernel.size * n)
    eta_norm = 0.0
    if problem.side is not None and problem.eta is not None:
        eta = np.asarray(problem.eta, dtype=float)
        rhs = rhs + kernel.boundary_vector(eta, problem.side)
        eta_norm = float(np.linalg.norm(eta, 2))

    rho = contraction_constant(cert.K, cert.alpha)
    f_norm = float(max(np.linalg.norm(f, 2) for f in f_blocks)) if f_blocks.size else 0.0
    solution_bound = (rho * f_norm + cert.K * eta_norm) / (1.0 - rho_delta)
    margin = required_margin(cert.K, cert.alpha, solution_bound, tol.tol_residual)
    region = _report_region(problem, margin, report_region)

    operator = kernel.operator_matrix(problem.perturbation_blocks(n))
    u, iterations, converged, difference = solve_fixed_point(operator, rhs, rho_delta, n)
    values = u.reshape(kernel.size, n, *rhs.shape[1:])
    truncation = cert.K * math.exp(-cert.alpha * margin) * solution_bound / (1.0 - math.exp(-cert.alpha)) \
        if solution_bound else 0.0
    logger.info(f"Fixed point on {problem.window}: {iterations} iterations, "
                f"difference {difference:.3e}, rho*delta {rho_delta:.3g}")
    return FixedPointSolution(
        window=problem.window,
        report_region=region,
        values=values,
        iterations=iterations,
        converged=converged,
        last_difference=difference,
        error_bound=rho_delta / (1.0 - rho_delta) * difference,
        truncation_bound=truncation,
        rho_delta=rho_delta,
        solution={k: values[k - problem.window.start] for k in region.indices()},
    )


def _dense_to_banded(matrix: np.ndarray, lower: int, upper: int) -> np.ndarray:
    size = matrix.shape[0]
    ab = np.zeros((lower + upper + 1, size))
    for offset in range(-lower, upper + 1):
        diagonal = np.diagonal(matrix, offset=offset)
        if offset >= 0:
            ab[upper - offset, offset:] = diagonal
        else:
            ab[upper - offset, :size + offset] = diagonal
    return ab


def banded_bvp_solution(problem: ForcingProblem, cert: DichotomyCertificate) -> np.ndarray:
    """
    Solve the boundary value problem equivalent to the truncated fixed point
    directly: u(k+1) - A(k)(I+B(k))u(k) = f(k) on the steps, P(a)u(a) = 0
    (or P(a)eta) and (I-P(b))u(b) = 0 (or (I-P(b))eta), as one banded system.

    Returns the solution as an array of shape (points, n).
    """
    seq, family = cert.seq, cert.family
    n = seq.n
    window = problem.window
    a, b = window.start, window.end
    size = window.length
    r = family.rank
    identity = np.eye(n)

    stable_a = range_of(family.at(a)).basis
    unstable_b = range_of(identity - family.at(b)).basis
    rows = size * n
    matrix = np.zeros((rows, rows))
    rhs = np.zeros(rows)

    matrix[:r, :n] = stable_a.T @ family.at(a)
    matrix[rows - (n - r):, (size - 1) * n:] = unstable_b.T @ (identity - family.at(b))
    if problem.side is not None and problem.eta is not None:
        eta = np.asarray(problem.eta, dtype=float)
        if problem.side == PLUS:
            rhs[:r] = stable_a.T @ family.at(a) @ eta
        else:
            rhs[rows - (n - r):] = unstable_b.T @ (identity - family.at(b)) @ eta

    b_blocks = problem.perturbation_blocks(n)
    f_blocks = problem.forcing_blocks(n)
    for j, k in enumerate(window.steps()):
        row = r + j * n
        matrix[row:row + n, j * n:(j + 1) * n] = -seq.matrix(k) @ (identity + b_blocks[j])
        matrix[row:row + n, (j + 1) * n:(j + 2) * n] = identity
        if f_blocks.size:
            rhs[row:row + n] = f_blocks[j]

    lower, upper = r + n - 1, 2 * n - 1 - r
    solution = scipy.linalg.solve_banded((lower, upper), _dense_to_banded(matrix, lower, upper), rhs)
    return solution.reshape(size, n)


def representation_residual(problem: ForcingProblem, cert: DichotomyCertificate,
                            initial, kernel: Optional[GreensKernel] = None,
                            tol: Optional[ToleranceConfig] = None) -> float:
    """
    Propagate x(a) = ``initial`` through the forced perturbed equation and
    compare x with its representation by the boundary values P(a)x(a),
    (I-P(b))x(b) and the Green's kernel sums. Relative to max(1, sup|x|).
    """
    tol = tol if tol is not None else get_tolerances()
    seq = cert.seq
    n = seq.n
    window = problem.window
    kernel = kernel if kernel is not None else GreensKernel(cert, window, tol)
    identity = np.eye(n)

    b_blocks = problem.perturbation_blocks(n)
    f_blocks = problem.forcing_blocks(n)
    x = np.zeros((window.length, n))
    x[0] = np.asarray(initial, dtype=float).reshape(n)
    for j, k in enumerate(window.steps()):
        x[j + 1] = seq.matrix(k) @ (identity + b_blocks[j]) @ x[j]
        if f_blocks.size:
            x[j + 1] += f_blocks[j]

    represented = kernel.operator_matrix(b_blocks) @ x.reshape(-1)
    if f_blocks.size:
        represented = represented + kernel.forcing_vector(f_blocks)
    represented = represented + kernel.boundary_vector(x[0], PLUS) + kernel.boundary_vector(x[-1], MINUS)
    residual = float(np.max(np.linalg.norm(represented.reshape(-1, n) - x, axis=1)))
    return residual / max(1.0, sup_norm(x))


def contraction_ratio(problem: ForcingProblem, cert: DichotomyCertificate, rng: np.random.Generator,
                      trials: int = 20, kernel: Optional[GreensKernel] = None,
                      tol: Optional[ToleranceConfig] = None) -> Tuple[float, float]:
    """
    Largest observed |T u - T v| / |u - v| over random pairs, with the bound
    rho*delta it must respect.
    """
    tol = tol if tol is not None else get_tolerances()
    n = cert.seq.n
    kernel = kernel if kernel is not None else GreensKernel(cert, problem.window, tol)
    operator = kernel.operator_matrix(problem.perturbation_blocks(n))
    worst = 0.0
    for _ in range(trials):
        difference = rng.standard_normal(kernel.size * n)
        mapped = operator @ difference
        worst = max(worst, sup_norm(mapped.reshape(-1, n)) / sup_norm(difference.reshape(-1, n)))
    bound = contraction_constant(cert.K, cert.alpha) * problem.delta(n)
    return worst, bound
