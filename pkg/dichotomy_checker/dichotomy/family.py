"""
Projection families and dichotomy certificates.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Union

import numpy as np

from ..config import ToleranceConfig, get_tolerances
from ..errors import ProjectionUndefined, RankMismatch
from ..linalg import Subspace, as_matrix, kernel_of, range_of, rank_of
from ..system.sequence import CoefficientSequence, Interval

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ProjectionFamily:
    """
    Projections P(k) of constant rank on an interval.

    ``projections`` holds the explicitly computed window; ``left_constant``
    and ``right_constant`` (when set) extend the family below and above it.
    A family with no explicit entries and a constant is constant everywhere.
    """
    interval: Interval
    projections: Mapping[int, np.ndarray]
    rank: int
    left_constant: Optional[np.ndarray] = None
    right_constant: Optional[np.ndarray] = None
    _subspaces: Dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        frozen = {}
        for k, p in self.projections.items():
            arr = np.array(p, dtype=float)
            arr.setflags(write=False)
            frozen[int(k)] = arr
        object.__setattr__(self, 'projections', frozen)
        for name in ('left_constant', 'right_constant'):
            value = getattr(self, name)
            if value is not None:
                arr = np.array(value, dtype=float)
                arr.setflags(write=False)
                object.__setattr__(self, name, arr)

    @classmethod
    def build(cls, interval: Interval, projections: Mapping[int, np.ndarray],
              left_constant=None, right_constant=None,
              tol: Optional[ToleranceConfig] = None) -> "ProjectionFamily":
        """Create a family, checking idempotence and constant rank."""
        tol = tol if tol is not None else get_tolerances()
        mats = list(projections.values())
        mats += [m for m in (left_constant, right_constant) if m is not None]
        if not mats:
            raise ProjectionUndefined("A projection family needs at least one projection")
        ranks = set()
        for p in mats:
            p = as_matrix(p, "projection")
            ranks.add(rank_of(p, tol) if np.any(p) else 0)
            residual = float(np.linalg.norm(p @ p - p, 2))
            if residual > tol.tol_residual * max(1.0, float(np.linalg.norm(p, 2)) ** 2):
                logger.warning(f"Projection fails idempotence by {residual:.3e}")
        if len(ranks) != 1:
            raise RankMismatch(f"Projection family has mixed ranks {sorted(ranks)}")
        return cls(interval=interval, projections=dict(projections), rank=ranks.pop(),
                   left_constant=left_constant, right_constant=right_constant)

    @classmethod
    def constant(cls, projection, interval: Interval,
                 tol: Optional[ToleranceConfig] = None) -> "ProjectionFamily":
        return cls.build(interval, {}, left_constant=projection, right_constant=projection, tol=tol)

    @property
    def n(self) -> int:
        for p in self.projections.values():
            return p.shape[0]
        return (self.left_constant if self.left_constant is not None else self.right_constant).shape[0]

    @property
    def window(self) -> Optional[Interval]:
        """The explicitly stored indices as a finite interval."""
        if not self.projections:
            return None
        return Interval.finite(min(self.projections), max(self.projections))

    def is_defined(self, k: int) -> bool:
        try:
            self.at(k)
            return True
        except ProjectionUndefined:
            return False

    def at(self, k: int) -> np.ndarray:
        if not self.interval.contains(k):
            raise ProjectionUndefined(f"P({k}) requested outside {self.interval}")
        p = self.projections.get(k)
        if p is not None:
            return p
        if not self.projections:
            p = self.left_constant if self.left_constant is not None else self.right_constant
        elif k < min(self.projections):
            p = self.left_constant
        elif k > max(self.projections):
            p = self.right_constant
        if p is None:
            raise ProjectionUndefined(f"P({k}) has not been computed")
        return p

    def __call__(self, k: int) -> np.ndarray:
        return self.at(k)

    def _subspace(self, kind: str, k: int) -> Subspace:
        key = (kind, k)
        cached = self._subspaces.get(key)
        if cached is None:
            p = self.at(k)
            if kind == "range":
                cached = range_of(p)
            else:
                cached = kernel_of(p)
            self._subspaces[key] = cached
        return cached

    def range_space(self, k: int) -> Subspace:
        """R P(k), the stable subspace at k."""
        return self._subspace("range", k)

    def nullspace(self, k: int) -> Subspace:
        """N P(k), the unstable subspace at k."""
        return self._subspace("null", k)

    def restricted_to(self, window: Interval, interval: Optional[Interval] = None) -> "ProjectionFamily":
        """Explicit copy on a finite window."""
        return ProjectionFamily(
            interval=interval if interval is not None else window,
            projections={k: self.at(k) for k in window.indices()},
            rank=self.rank,
        )

    def with_projections(self, updates: Mapping[int, np.ndarray],
                         interval: Optional[Interval] = None) -> "ProjectionFamily":
        """Copy with some projections replaced or added; tails are kept."""
        merged = dict(self.projections)
        merged.update(updates)
        return ProjectionFamily(
            interval=interval if interval is not None else self.interval,
            projections=merged,
            rank=self.rank,
            left_constant=self.left_constant,
            right_constant=self.right_constant,
        )


@dataclass(frozen=True)
class FormA:
    """|Phi(k,m)P(m)| <= L e^{-alpha(k-m)} and |Phi(m,k)(I-P(k))| <= L e^{-alpha(k-m)}."""
    L: float
    alpha: float

    def __post_init__(self):
        if not self.L >= 1:
            raise ValueError(f"L must be >= 1, got {self.L}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")

    name = "A"

    def as_dict(self) -> Dict[str, float]:
        return {"form": "A", "L": self.L, "alpha": self.alpha}


@dataclass(frozen=True)
class FormB:
    """|P|, |I-P| <= M; decay K e^{-alpha t} on ranges; growth K^-1 e^{alpha t} on nullspaces."""
    M: float
    K: float
    alpha: float

    def __post_init__(self):
        if not self.M >= 1:
            raise ValueError(f"M must be >= 1, got {self.M}")
        if not self.K >= 1:
            raise ValueError(f"K must be >= 1, got {self.K}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")

    name = "B"

    def as_dict(self) -> Dict[str, float]:
        return {"form": "B", "M": self.M, "K": self.K, "alpha": self.alpha}


DichotomyForm = Union[FormA, FormB]


def as_form_b(form: DichotomyForm) -> FormB:
    """Form B view of any form (M = K = L for Form A)."""
    if isinstance(form, FormB):
        return form
    return FormB(M=form.L, K=form.L, alpha=form.alpha)


def as_form_a(form: DichotomyForm) -> FormA:
    """Form A view of any form (L = K M for Form B)."""
    if isinstance(form, FormA):
        return form
    return FormA(L=form.K * form.M, alpha=form.alpha)


@dataclass(frozen=True, eq=False)
class DichotomyCertificate:
    """
    A projection family with dichotomy constants, claimed on a finite window.

    ``guaranteed`` holds constants that follow from a construction's proof
    bounds; ``form`` holds the (usually tighter) measured ones.
    """
    seq: CoefficientSequence
    family: ProjectionFamily
    form: DichotomyForm
    verified_window: Interval
    guaranteed: Optional[DichotomyForm] = None
    notes: List[str] = field(default_factory=list)

    @property
    def alpha(self) -> float:
        return self.form.alpha

    @property
    def rank(self) -> int:
        return self.family.rank

    @property
    def K(self) -> float:
        """Single dichotomy constant (L of Form A, K M of Form B)."""
        return as_form_a(self.form).L

    def replace(self, **changes) -> "DichotomyCertificate":
        values = {
            "seq": self.seq,
            "family": self.family,
            "form": self.form,
            "verified_window": self.verified_window,
            "guaranteed": self.guaranteed,
            "notes": list(self.notes),
        }
        values.update(changes)
        return DichotomyCertificate(**values)

    def as_dict(self) -> Dict:
        data = {
            "sequence": self.seq.label,
            "rank": self.rank,
            "constants": self.form.as_dict(),
            "verified_window": self.verified_window.as_dict(),
        }
        if self.guaranteed is not None:
            data["guaranteed_constants"] = self.guaranteed.as_dict()
        if self.notes:
            data["notes"] = list(self.notes)
        return data


def decay(alpha: float, t: int) -> float:
    return math.exp(-alpha * t)
