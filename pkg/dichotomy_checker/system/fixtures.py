"""
Registry of named example systems with known dichotomy projections.
"""

import math
from dataclasses import dataclass
from typing import Callable, Dict, Optional

import numpy as np

from ..dichotomy.family import DichotomyCertificate, FormA, ProjectionFamily
from ..errors import ProblemFileError
from .sequence import CoefficientSequence, Interval, TailRule

LN2 = math.log(2.0)


@dataclass(frozen=True, eq=False)
class NamedFixture:
    label: str
    sequence: CoefficientSequence
    known_projection: Optional[ProjectionFamily] = None
    description: str = ""
    L: float = 1.0
    alpha: float = LN2

    def certificate(self, window: Interval) -> DichotomyCertificate:
        """The known projection with the fixture's constants, claimed on ``window``."""
        if self.known_projection is None:
            raise ProblemFileError(f"Fixture {self.label} has no known projection", field="fixture")
        return DichotomyCertificate(
            seq=self.sequence,
            family=self.known_projection,
            form=FormA(L=self.L, alpha=self.alpha),
            verified_window=window,
        )


def _diag(*entries) -> np.ndarray:
    return np.diag(np.array(entries, dtype=float))


def _s1() -> NamedFixture:
    seq = CoefficientSequence.constant(_diag(0.5, 2.0), Interval.whole(), label="S1")
    return NamedFixture(
        label="S1",
        sequence=seq,
        known_projection=ProjectionFamily.constant(_diag(1.0, 0.0), Interval.whole()),
        description="constant diag(1/2, 2) on Z",
    )


def _s2(label: str, a0: np.ndarray, description: str) -> NamedFixture:
    seq = CoefficientSequence.constant(_diag(0.5, 2.0), Interval.whole(), overrides={0: a0}, label=label)
    return NamedFixture(
        label=label,
        sequence=seq,
        known_projection=ProjectionFamily.constant(_diag(1.0, 0.0), Interval.half_plus(1)),
        description=description,
    )


def _s3(label: str, a_minus_one: Optional[np.ndarray], description: str,
        projection_end: int = 0) -> NamedFixture:
    overrides = {} if a_minus_one is None else {-1: a_minus_one}
    seq = CoefficientSequence.constant(_diag(2.0, 0.5), Interval.half_minus(0), overrides=overrides, label=label)
    return NamedFixture(
        label=label,
        sequence=seq,
        known_projection=ProjectionFamily.constant(_diag(0.0, 1.0), Interval.half_minus(projection_end)),
        description=description,
    )


def alternating_blocks(block_length: int, label: str = "ALT") -> NamedFixture:
    """diag(2, 1/2) and diag(1/2, 2) alternating in blocks of ``block_length`` steps."""
    period = [_diag(2.0, 0.5)] * block_length + [_diag(0.5, 2.0)] * block_length
    seq = CoefficientSequence(
        n=2,
        interval=Interval.whole(),
        tail_rule=TailRule.periodic(period),
        norm_bound=2.0,
        label=label,
    )
    return NamedFixture(label=label, sequence=seq,
                        description=f"diag(2,1/2)/diag(1/2,2) blocks of length {block_length}")


_BUILDERS: Dict[str, Callable[[], NamedFixture]] = {
    "S1": _s1,
    "S2a": lambda: _s2("S2a", _diag(0.5, 0.0), "S1 with A(0) = diag(1/2, 0)"),
    "S2b": lambda: _s2("S2b", _diag(0.0, 2.0), "S1 with A(0) = diag(0, 2)"),
    "S3": lambda: _s3("S3", _diag(2.0, 0.0), "diag(2, 1/2) on Z- with A(-1) = diag(2, 0)"),
    "S3tail": lambda: _s3("S3tail", None, "constant diag(2, 1/2) on Z-"),
    "S3v": lambda: _s3("S3v", _diag(0.0, 0.5), "diag(2, 1/2) on Z- with A(-1) = diag(0, 1/2)",
                       projection_end=-1),
    "S3x": lambda: _s3("S3x", np.array([[2.0, -2.0], [0.0, 0.0]]),
                       "diag(2, 1/2) on Z- with A(-1) killing e1 + e2", projection_end=-1),
    "ALT": lambda: alternating_blocks(20),
}


def fixture_labels():
    return sorted(_BUILDERS)


def get_fixture(label: str) -> NamedFixture:
    """
    Build a fresh fixture by label.

    Raises:
        ProblemFileError: for an unknown label
    """
    builder = _BUILDERS.get(label)
    if builder is None:
        raise ProblemFileError(f"Unknown fixture '{label}' (known: {', '.join(fixture_labels())})",
                               field="fixture")
    return builder()
