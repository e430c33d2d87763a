import math

import pytest

from dichotomy_checker.finitetime import (
    DENSITY,
    GLOBAL,
    NORM_BOUND,
    WINDOWS,
    FiniteTimeHypothesis,
    finite_time_check,
    largest_gap,
)
from dichotomy_checker.system.fixtures import get_fixture
from dichotomy_checker.system.sequence import Interval

LN2 = math.log(2.0)


def hypothesis(**overrides):
    values = dict(N=10, density=5, K=1.0, alpha=LN2, M=2.0, Kbar=5.0, beta_bar=0.6)
    values.update(overrides)
    return FiniteTimeHypothesis(**values)


def test_constant_system_passes_every_stage():
    report = finite_time_check(get_fixture("S1").sequence, hypothesis(), Interval.finite(0, 30))
    assert report.hypotheses_hold
    assert report.conclusion_observed
    assert report.passed
    assert report.base_points == list(range(0, 31))
    assert report.as_dict()["conclusion"] == "empirical"
    assert report.stage(GLOBAL).details["rank"] == 1


def test_alternating_blocks_are_not_relatively_dense():
    report = finite_time_check(get_fixture("ALT").sequence, hypothesis(), Interval.finite(0, 40))
    density = report.stage(DENSITY)
    assert not density.passed
    assert density.failure == "NotRelativelyDense"
    assert density.details["longest_run"] == 9
    assert not report.passed


def test_norm_bound_violation():
    report = finite_time_check(get_fixture("S1").sequence, hypothesis(M=1.5), Interval.finite(0, 20))
    stage = report.stage(NORM_BOUND)
    assert not stage.passed
    assert stage.failure == "NormBoundExceeded"
    assert stage.details["max_norm"] == pytest.approx(2.0)
    assert not report.hypotheses_hold


def test_given_base_points_must_all_pass():
    hyp = hypothesis(base_points=[0, 4, 8, 12, 16, 20])
    report = finite_time_check(get_fixture("S1").sequence, hyp, Interval.finite(0, 20))
    assert report.stage(WINDOWS).passed
    assert report.stage(DENSITY).passed
    assert report.base_points == [0, 4, 8, 12, 16, 20]


def test_largest_gap():
    scan = Interval.finite(0, 10)
    assert largest_gap([0, 3, 10], scan) == {"longest_run": 6, "starts_at": 4}
    assert largest_gap([], scan) == {"longest_run": 11, "starts_at": 0}
    assert largest_gap(range(0, 11), scan) == {"longest_run": 0, "starts_at": None}


def test_parameter_violations():
    assert hypothesis().parameter_violations() == []
    problems = hypothesis(K=1.2, beta_bar=0.8).parameter_violations()
    assert len(problems) == 2
    assert any("Kbar" in p for p in problems)


def test_invalid_hypothesis():
    with pytest.raises(ValueError):
        hypothesis(N=0)
    with pytest.raises(ValueError):
        finite_time_check(get_fixture("S1").sequence, hypothesis(), Interval.half_plus(0))


def test_window_stage_keeps_passing_as_windows_grow():
    seq = get_fixture("S1").sequence
    base_points = [0, 5, 10, 15, 20]
    outcomes = []
    for N in (10, 20, 40):
        report = finite_time_check(seq, hypothesis(N=N, base_points=base_points), Interval.finite(0, 20))
        outcomes.append(report.stage(WINDOWS).passed)
    assert outcomes == [True, True, True]
