"""
Coefficient sequences A(k) of x(k+1) = A(k) x(k) on integer intervals.
"""

import logging
import threading
from dataclasses import dataclass, field
from typing import Dict, Iterator, Mapping, Optional, Tuple

import numpy as np

from ..errors import DimensionMismatch, IndexOutsideInterval, InvalidMatrix
from ..linalg import as_matrix

logger = logging.getLogger(__name__)

WHOLE = "whole"
HALF_PLUS = "half_plus"
HALF_MINUS = "half_minus"
FINITE = "finite"
INTERVAL_KINDS = (WHOLE, HALF_PLUS, HALF_MINUS, FINITE)


@dataclass(frozen=True)
class Interval:
    """
    An integer interval: the whole line, [a, inf), (-inf, b] or [a, b].

    Steps A(k) are needed for k in J' = {k : k, k+1 in J}.
    """
    kind: str
    start: Optional[int] = None
    end: Optional[int] = None

    def __post_init__(self):
        if self.kind not in INTERVAL_KINDS:
            raise ValueError(f"Unknown interval kind '{self.kind}'")
        if self.kind in (HALF_PLUS, FINITE) and self.start is None:
            raise ValueError(f"{self.kind} interval needs a start")
        if self.kind in (HALF_MINUS, FINITE) and self.end is None:
            raise ValueError(f"{self.kind} interval needs an end")
        if self.kind == FINITE and self.start > self.end:
            raise ValueError(f"Empty interval [{self.start}, {self.end}]")

    @classmethod
    def whole(cls) -> "Interval":
        return cls(WHOLE)

    @classmethod
    def half_plus(cls, a: int) -> "Interval":
        return cls(HALF_PLUS, start=a)

    @classmethod
    def half_minus(cls, b: int) -> "Interval":
        return cls(HALF_MINUS, end=b)

    @classmethod
    def finite(cls, a: int, b: int) -> "Interval":
        return cls(FINITE, start=a, end=b)

    @classmethod
    def parse(cls, text: str) -> "Interval":
        """Parse ``a:b`` into a finite interval."""
        try:
            a, b = (int(part) for part in text.split(':'))
        except ValueError:
            raise ValueError(f"Window must look like 'a:b', got '{text}'")
        return cls.finite(a, b)

    @property
    def lower(self) -> float:
        return self.start if self.start is not None else -np.inf

    @property
    def upper(self) -> float:
        return self.end if self.end is not None else np.inf

    @property
    def is_finite(self) -> bool:
        return self.kind == FINITE

    def contains(self, k: int) -> bool:
        return self.lower <= k <= self.upper

    def step_contains(self, k: int) -> bool:
        """True when A(k) belongs to the equation, i.e. k in J'."""
        return self.lower <= k <= self.upper - 1

    def contains_interval(self, other: "Interval") -> bool:
        return self.lower <= other.lower and other.upper <= self.upper

    def indices(self) -> Iterator[int]:
        if not self.is_finite:
            raise ValueError(f"Cannot enumerate infinite interval {self}")
        return iter(range(self.start, self.end + 1))

    def steps(self) -> Iterator[int]:
        """The step indices k in J' of a finite interval."""
        if not self.is_finite:
            raise ValueError(f"Cannot enumerate infinite interval {self}")
        return iter(range(self.start, self.end))

    @property
    def length(self) -> int:
        if not self.is_finite:
            raise ValueError(f"Infinite interval {self} has no length")
        return self.end - self.start + 1

    def as_dict(self) -> Dict:
        return {"kind": self.kind, "start": self.start, "end": self.end}

    def __str__(self) -> str:
        lo = "-inf" if self.start is None else str(self.start)
        hi = "inf" if self.end is None else str(self.end)
        return f"[{lo}, {hi}]"


@dataclass(frozen=True, eq=False)
class TailRule:
    """How A(k) is generated outside the explicit window."""
    kind: str = "none"
    matrices: Tuple[np.ndarray, ...] = ()

    def __post_init__(self):
        if self.kind not in ("constant", "periodic", "none"):
            raise ValueError(f"Unknown tail rule '{self.kind}'")
        if self.kind == "constant" and len(self.matrices) != 1:
            raise ValueError("Constant tail rule needs exactly one matrix")
        if self.kind == "periodic" and not self.matrices:
            raise ValueError("Periodic tail rule needs at least one matrix")
        for mat in self.matrices:
            mat.setflags(write=False)

    @classmethod
    def constant(cls, matrix) -> "TailRule":
        return cls("constant", (as_matrix(matrix, "tail matrix").copy(),))

    @classmethod
    def periodic(cls, matrices) -> "TailRule":
        return cls("periodic", tuple(as_matrix(m, "tail matrix").copy() for m in matrices))

    def resolve(self, k: int) -> Optional[np.ndarray]:
        if self.kind == "constant":
            return self.matrices[0]
        if self.kind == "periodic":
            return self.matrices[k % len(self.matrices)]
        return None


class TransitionCache:
    """Thread-safe store of transition products keyed by (m, k)."""

    def __init__(self, max_entries: int = 200_000):
        self._lock = threading.Lock()
        self._products: Dict[Tuple[int, int], np.ndarray] = {}
        self._max_entries = max_entries

    def get(self, m: int, k: int) -> Optional[np.ndarray]:
        with self._lock:
            return self._products.get((m, k))

    def put(self, m: int, k: int, product: np.ndarray):
        with self._lock:
            if len(self._products) >= self._max_entries:
                self._products.clear()
            product.setflags(write=False)
            self._products[(m, k)] = product

    def clear(self):
        with self._lock:
            self._products.clear()

    def __len__(self) -> int:
        with self._lock:
            return len(self._products)


@dataclass(frozen=True, eq=False)
class CoefficientSequence:
    """
    The matrices A(k) on an interval.

    Explicit matrices take precedence; outside the explicit window the tail
    rule applies, with ``left_tail_rule`` (when given) used below the window.
    """
    n: int
    interval: Interval
    explicit_window: Mapping[int, np.ndarray] = field(default_factory=dict)
    tail_rule: TailRule = field(default_factory=TailRule)
    left_tail_rule: Optional[TailRule] = None
    norm_bound: Optional[float] = None
    label: str = ""
    cache: TransitionCache = field(default_factory=TransitionCache, compare=False, repr=False)

    def __post_init__(self):
        frozen = {}
        for k, mat in self.explicit_window.items():
            arr = as_matrix(mat, f"A({k})").copy()
            if arr.shape != (self.n, self.n):
                raise DimensionMismatch(f"A({k}) has shape {arr.shape}, expected ({self.n}, {self.n})")
            arr.setflags(write=False)
            frozen[int(k)] = arr
        object.__setattr__(self, 'explicit_window', frozen)
        for rule in (self.tail_rule, self.left_tail_rule):
            if rule is None:
                continue
            for mat in rule.matrices:
                if mat.shape != (self.n, self.n):
                    raise DimensionMismatch(f"Tail matrix has shape {mat.shape}, expected ({self.n}, {self.n})")

    @classmethod
    def constant(cls, matrix, interval: Interval, overrides: Optional[Mapping[int, np.ndarray]] = None,
                 label: str = "", norm_bound: Optional[float] = None) -> "CoefficientSequence":
        """A constant sequence with optional single-index overrides."""
        mat = as_matrix(matrix)
        return cls(
            n=mat.shape[0],
            interval=interval,
            explicit_window=dict(overrides or {}),
            tail_rule=TailRule.constant(mat),
            norm_bound=norm_bound,
            label=label,
        )

    @property
    def window_start(self) -> Optional[int]:
        return min(self.explicit_window) if self.explicit_window else None

    def matrix(self, k: int) -> np.ndarray:
        """Resolve A(k)."""
        if not self.interval.step_contains(k):
            raise IndexOutsideInterval(f"A({k}) is not defined on {self.interval}")
        mat = self.explicit_window.get(k)
        if mat is not None:
            return mat
        start = self.window_start
        if self.left_tail_rule is not None and start is not None and k < start:
            mat = self.left_tail_rule.resolve(k)
        else:
            mat = self.tail_rule.resolve(k)
        if mat is None:
            raise IndexOutsideInterval(f"A({k}) lies outside the explicit window and no tail rule is set")
        return mat

    def __call__(self, k: int) -> np.ndarray:
        return self.matrix(k)

    def max_norm(self, window: Interval) -> Tuple[float, Optional[int]]:
        """Largest |A(k)| over the steps of a finite window and where it occurs."""
        worst, where = 0.0, None
        for k in window.steps():
            value = float(np.linalg.norm(self.matrix(k), 2))
            if value > worst:
                worst, where = value, k
        return worst, where

    def check_norm_bound(self, window: Interval) -> bool:
        """Spot-check |A(k)| <= norm_bound on a window (vacuous without a bound)."""
        if self.norm_bound is None:
            return True
        worst, where = self.max_norm(window)
        if worst > self.norm_bound:
            logger.warning(f"|A({where})| = {worst:.6g} exceeds the declared bound {self.norm_bound}")
            return False
        return True

    def with_overrides(self, overrides: Mapping[int, np.ndarray], label: Optional[str] = None) -> "CoefficientSequence":
        """Copy with some explicit matrices replaced."""
        merged = dict(self.explicit_window)
        merged.update(overrides)
        return CoefficientSequence(
            n=self.n,
            interval=self.interval,
            explicit_window=merged,
            tail_rule=self.tail_rule,
            left_tail_rule=self.left_tail_rule,
            norm_bound=self.norm_bound,
            label=label if label is not None else self.label,
        )

    def restricted_to(self, interval: Interval) -> "CoefficientSequence":
        """Same matrices viewed on a sub-interval."""
        if not self.interval.contains_interval(interval):
            raise IndexOutsideInterval(f"{interval} is not inside {self.interval}")
        return CoefficientSequence(
            n=self.n,
            interval=interval,
            explicit_window=self.explicit_window,
            tail_rule=self.tail_rule,
            left_tail_rule=self.left_tail_rule,
            norm_bound=self.norm_bound,
            label=self.label,
        )


def zero_sequence(n: int, interval: Interval, explicit: Optional[Mapping[int, np.ndarray]] = None,
                  label: str = "") -> CoefficientSequence:
    """A sequence that vanishes outside ``explicit`` (used for perturbations B(k))."""
    return CoefficientSequence(
        n=n,
        interval=interval,
        explicit_window=dict(explicit or {}),
        tail_rule=TailRule.constant(np.zeros((n, n))),
        label=label,
    )


def validate_square(mat, n: int, name: str) -> np.ndarray:
    arr = as_matrix(mat, name)
    if arr.shape != (n, n):
        raise InvalidMatrix(f"{name} has shape {arr.shape}, expected ({n}, {n})")
    return arr
