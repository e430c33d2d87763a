"""
Dense subspace algebra: ranks, kernels, preimages, complements and
oblique projections built from a range and a nullspace.

Subspaces are stored as orthonormal column bases. Zero-dimensional
subspaces have an (n, 0) basis and go through every routine unchanged.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from ..config import ToleranceConfig, get_tolerances
from ..errors import (
    ComplementError,
    DimensionMismatch,
    InvalidMatrix,
    NotComplementary,
)

logger = logging.getLogger(__name__)


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Convert to a 2-D float array and reject empty or non-finite input."""
    arr = np.asarray(a, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise InvalidMatrix(f"{name} must be 2-dimensional, got shape {arr.shape}")
    if arr.shape[0] == 0:
        raise InvalidMatrix(f"{name} has no rows")
    if not np.all(np.isfinite(arr)):
        raise InvalidMatrix(f"{name} contains NaN or Inf entries")
    return arr


def _tol(tol: Optional[ToleranceConfig]) -> ToleranceConfig:
    return tol if tol is not None else get_tolerances()


def _orthonormal_columns(m: np.ndarray, cutoff: float) -> np.ndarray:
    """Orthonormal basis of the column span, dropping singular values <= cutoff."""
    n = m.shape[0]
    if m.shape[1] == 0:
        return np.zeros((n, 0))
    u, s, _ = scipy.linalg.svd(m, full_matrices=False)
    keep = int(np.sum(s > cutoff))
    return u[:, :keep]


def _null_space(m: np.ndarray, cutoff: float) -> np.ndarray:
    """Orthonormal basis of the nullspace, singular values <= cutoff count as zero."""
    cols = m.shape[1]
    if m.shape[0] == 0 or cols == 0:
        return np.eye(cols)
    _, s, vh = scipy.linalg.svd(m, full_matrices=True)
    rank = int(np.sum(s > cutoff))
    return vh[rank:].conj().T


@dataclass(frozen=True, eq=False)
class Subspace:
    """A linear subspace of R^n given by an orthonormal basis (columns)."""
    basis: np.ndarray

    def __post_init__(self):
        if self.basis.ndim != 2:
            raise InvalidMatrix(f"Subspace basis must be 2-D, got shape {self.basis.shape}")
        self.basis.setflags(write=False)

    @classmethod
    def from_columns(cls, columns, tol: Optional[ToleranceConfig] = None) -> "Subspace":
        """Span of the given columns, re-orthonormalized."""
        tol = _tol(tol)
        m = as_matrix(columns, "columns")
        scale = float(np.max(np.abs(m))) if m.size else 0.0
        if scale == 0.0:
            return cls.zero(m.shape[0])
        return cls(_orthonormal_columns(m, tol.tol_rank * np.linalg.norm(m, 2)))

    @classmethod
    def ambient(cls, n: int) -> "Subspace":
        return cls(np.eye(n))

    @classmethod
    def zero(cls, n: int) -> "Subspace":
        return cls(np.zeros((n, 0)))

    @classmethod
    def coordinate(cls, n: int, *indices: int) -> "Subspace":
        """Span of the standard basis vectors with the given (0-based) indices."""
        return cls(np.eye(n)[:, list(indices)])

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def projector(self) -> np.ndarray:
        """Orthogonal projector onto the subspace."""
        return self.basis @ self.basis.T

    def orthonormality_defect(self) -> float:
        if self.dim == 0:
            return 0.0
        return float(np.linalg.norm(self.basis.T @ self.basis - np.eye(self.dim), 2))

    def contains(self, other: "Subspace", tol: Optional[ToleranceConfig] = None) -> bool:
        """True when ``other`` is a subspace of ``self``."""
        tol = _tol(tol)
        _check_same_ambient(self, other)
        if other.dim == 0:
            return True
        residual = other.basis - self.projector() @ other.basis
        return float(np.linalg.norm(residual, 2)) <= np.sqrt(tol.tol_rank)

    def __repr__(self) -> str:
        return f"Subspace(dim={self.dim}, ambient_dim={self.ambient_dim})"


def _check_same_ambient(s1: Subspace, s2: Subspace):
    if s1.ambient_dim != s2.ambient_dim:
        raise DimensionMismatch(
            f"Subspaces live in R^{s1.ambient_dim} and R^{s2.ambient_dim}"
        )


def rank_of(a, tol: Optional[ToleranceConfig] = None) -> int:
    """Numerical rank: singular values above tol_rank times the largest one."""
    tol = _tol(tol)
    a = as_matrix(a)
    s = scipy.linalg.svdvals(a)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > tol.tol_rank * s[0]))


def kernel_of(a, tol: Optional[ToleranceConfig] = None) -> Subspace:
    """Orthonormal basis of the nullspace of ``a``."""
    tol = _tol(tol)
    a = as_matrix(a)
    return Subspace(scipy.linalg.null_space(a, rcond=tol.tol_rank))


def range_of(a, tol: Optional[ToleranceConfig] = None) -> Subspace:
    tol = _tol(tol)
    a = as_matrix(a)
    if not np.any(a):
        return Subspace.zero(a.shape[0])
    return Subspace(scipy.linalg.orth(a, rcond=tol.tol_rank))


def image(a, s: Subspace, tol: Optional[ToleranceConfig] = None) -> Subspace:
    """The subspace A(S)."""
    tol = _tol(tol)
    a = as_matrix(a)
    if a.shape[1] != s.ambient_dim:
        raise DimensionMismatch(f"Matrix with {a.shape[1]} columns applied to subspace of R^{s.ambient_dim}")
    if s.dim == 0:
        return Subspace.zero(a.shape[0])
    mapped = a @ s.basis
    scale = max(float(np.linalg.norm(a, 2)), np.finfo(float).tiny)
    return Subspace(_orthonormal_columns(mapped, tol.tol_rank * scale))


def preimage(a, s: Subspace, tol: Optional[ToleranceConfig] = None) -> Subspace:
    """
    The set {x : A x in span(S)}.

    Computed as the kernel of (I - P_S) A where P_S is the orthogonal
    projector onto S. The rank cutoff is taken relative to |A| so that
    round-off in (I - P_S) A is not mistaken for rank.
    """
    tol = _tol(tol)
    a = as_matrix(a)
    if a.shape[0] != s.ambient_dim:
        raise DimensionMismatch(f"Matrix with {a.shape[0]} rows and subspace of R^{s.ambient_dim}")
    residual_map = (np.eye(a.shape[0]) - s.projector()) @ a
    scale = float(np.linalg.norm(a, 2))
    if scale == 0.0:
        return Subspace.ambient(a.shape[1])
    return Subspace(_null_space(residual_map, tol.tol_rank * scale))


def subspace_sum(s1: Subspace, s2: Subspace, tol: Optional[ToleranceConfig] = None) -> Subspace:
    tol = _tol(tol)
    _check_same_ambient(s1, s2)
    stacked = np.hstack([s1.basis, s2.basis])
    if stacked.shape[1] == 0:
        return Subspace.zero(s1.ambient_dim)
    return Subspace(_orthonormal_columns(stacked, tol.tol_rank * max(1.0, np.linalg.norm(stacked, 2))))


def intersection(s1: Subspace, s2: Subspace, tol: Optional[ToleranceConfig] = None) -> Subspace:
    """S1 intersected with S2, via the kernel of [B1, -B2]."""
    tol = _tol(tol)
    _check_same_ambient(s1, s2)
    if s1.dim == 0 or s2.dim == 0:
        return Subspace.zero(s1.ambient_dim)
    coupled = np.hstack([s1.basis, -s2.basis])
    coeffs = _null_space(coupled, tol.tol_rank * np.linalg.norm(coupled, 2))
    if coeffs.shape[1] == 0:
        return Subspace.zero(s1.ambient_dim)
    return Subspace.from_columns(s1.basis @ coeffs[:s1.dim], tol)


def orthogonal_complement(s: Subspace, within: Optional[Subspace] = None,
                          tol: Optional[ToleranceConfig] = None) -> Subspace:
    """Orthogonal complement of S inside ``within`` (default R^n); S must lie in ``within``."""
    tol = _tol(tol)
    n = s.ambient_dim
    w = within if within is not None else Subspace.ambient(n)
    _check_same_ambient(s, w)
    if s.dim == 0:
        return w
    coeffs = _null_space(s.basis.T @ w.basis, tol.tol_rank)
    return Subspace(w.basis @ coeffs)


def complement(s: Subspace, within: Optional[Subspace] = None,
               containing: Optional[Subspace] = None,
               tol: Optional[ToleranceConfig] = None) -> Subspace:
    """
    A complement C of S inside ``within`` with ``containing`` a subspace of C.

    The canonical choice is ``containing`` plus the orthogonal complement of
    S + containing within ``within``; without a constraint this is the plain
    orthogonal complement.

    Raises:
        ComplementError: when ``containing`` meets S nontrivially or
            either subspace is not inside ``within``
    """
    tol = _tol(tol)
    n = s.ambient_dim
    w = within if within is not None else Subspace.ambient(n)
    _check_same_ambient(s, w)
    if not w.contains(s, tol):
        raise ComplementError("Subspace is not contained in the requested ambient subspace")
    if containing is None or containing.dim == 0:
        return orthogonal_complement(s, w, tol)

    _check_same_ambient(s, containing)
    if not w.contains(containing, tol):
        raise ComplementError("Constraint subspace is not contained in the requested ambient subspace")
    joint = subspace_sum(s, containing, tol)
    if joint.dim != s.dim + containing.dim:
        raise ComplementError(
            f"Constraint subspace meets S nontrivially "
            f"(dim S + dim C = {s.dim + containing.dim}, dim(S + C) = {joint.dim})"
        )
    rest = orthogonal_complement(joint, w, tol)
    return subspace_sum(containing, rest, tol)


def make_projection(range_space: Subspace, nullspace: Subspace,
                    tol: Optional[ToleranceConfig] = None) -> np.ndarray:
    """
    The projection with the given range and nullspace.

    With R and N the two bases, P = [R 0] [R N]^-1.

    Raises:
        NotComplementary: when R + N is not the whole space
    """
    tol = _tol(tol)
    _check_same_ambient(range_space, nullspace)
    n = range_space.ambient_dim
    r = range_space.dim
    if r + nullspace.dim != n:
        raise NotComplementary(
            f"dim range + dim nullspace = {r} + {nullspace.dim} != {n}"
        )
    joint = np.hstack([range_space.basis, nullspace.basis])
    s = scipy.linalg.svdvals(joint)
    if n and s[-1] <= tol.tol_rank:
        raise NotComplementary(
            f"Range and nullspace are not transversal (smallest singular value {s[-1]:.3e})"
        )
    coords = scipy.linalg.solve(joint, np.eye(n))
    p = range_space.basis @ coords[:r]
    residual = float(np.linalg.norm(p @ p - p, 2))
    if residual > tol.tol_residual * max(1.0, float(np.linalg.norm(p, 2)) ** 2):
        logger.warning(f"Projection is ill-conditioned: idempotence residual {residual:.3e}, "
                       f"transversality {s[-1]:.3e}")
    return p


def projection_range(p, tol: Optional[ToleranceConfig] = None) -> Subspace:
    return range_of(p, tol)


def projection_nullspace(p, tol: Optional[ToleranceConfig] = None) -> Subspace:
    return kernel_of(p, tol)


def subspace_distance(s1: Subspace, s2: Subspace) -> float:
    """Gap metric: spectral norm of the difference of orthogonal projectors."""
    _check_same_ambient(s1, s2)
    return float(np.linalg.norm(s1.projector() - s2.projector(), 2))


def restricted_singular_values(a, s: Subspace) -> np.ndarray:
    """Singular values of A restricted to S (descending)."""
    a = as_matrix(a)
    if s.dim == 0:
        return np.zeros(0)
    return scipy.linalg.svdvals(a @ s.basis)


def restricted_norm(a, s: Subspace) -> float:
    sv = restricted_singular_values(a, s)
    return float(sv[0]) if sv.size else 0.0
