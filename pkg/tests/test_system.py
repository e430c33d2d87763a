import numpy as np
import pytest

from dichotomy_checker.dichotomy import ProjectionFamily
from dichotomy_checker.errors import (
    DimensionMismatch,
    IndexOutsideInterval,
    NotInjectiveOnNullspace,
    OverflowDetected,
    ProblemFileError,
)
from dichotomy_checker.system.fixtures import alternating_blocks, fixture_labels, get_fixture
from dichotomy_checker.system.sequence import CoefficientSequence, Interval, TailRule, zero_sequence
from dichotomy_checker.system.transition import perturb_sequence, restricted_backward, transition_matrix


class TestInterval:
    def test_parse_window(self):
        interval = Interval.parse("-3:4")
        assert interval == Interval.finite(-3, 4)
        assert interval.length == 8
        assert list(interval.steps()) == list(range(-3, 4))

    @pytest.mark.parametrize("text", ["3", "a:b", "1:2:3"])
    def test_parse_rejects_malformed_windows(self, text):
        with pytest.raises(ValueError):
            Interval.parse(text)

    def test_empty_interval_is_rejected(self):
        with pytest.raises(ValueError):
            Interval.finite(5, 2)

    def test_half_lines(self):
        plus, minus = Interval.half_plus(1), Interval.half_minus(0)
        assert plus.contains(10**6) and not plus.contains(0)
        assert minus.step_contains(-1) and not minus.step_contains(0)
        assert Interval.whole().contains_interval(plus)
        with pytest.raises(ValueError):
            plus.length


class TestCoefficientSequence:
    def test_overrides_take_precedence(self):
        seq = get_fixture("S2a").sequence
        np.testing.assert_array_equal(seq.matrix(0), np.diag([0.5, 0.0]))
        np.testing.assert_array_equal(seq.matrix(7), np.diag([0.5, 2.0]))

    def test_periodic_tail(self):
        seq = alternating_blocks(2).sequence
        assert [seq.matrix(k)[0, 0] for k in range(5)] == [2.0, 2.0, 0.5, 0.5, 2.0]

    def test_left_tail_rule_applies_below_explicit_window(self):
        seq = CoefficientSequence(
            n=1,
            interval=Interval.whole(),
            explicit_window={0: [[3.0]]},
            tail_rule=TailRule.constant([[2.0]]),
            left_tail_rule=TailRule.constant([[0.5]]),
        )
        assert seq.matrix(-4)[0, 0] == 0.5
        assert seq.matrix(0)[0, 0] == 3.0
        assert seq.matrix(4)[0, 0] == 2.0

    def test_matrix_outside_interval(self):
        seq = get_fixture("S3").sequence
        with pytest.raises(IndexOutsideInterval):
            seq.matrix(0)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            CoefficientSequence(n=2, interval=Interval.whole(), explicit_window={0: np.eye(3)})

    def test_norm_bound_check(self):
        seq = alternating_blocks(3).sequence
        assert seq.check_norm_bound(Interval.finite(0, 12))
        worst, _ = seq.max_norm(Interval.finite(0, 12))
        assert worst == pytest.approx(2.0)


class TestTransitions:
    def test_transition_of_constant_system(self):
        seq = get_fixture("S1").sequence
        np.testing.assert_allclose(transition_matrix(seq, 5, 2), np.diag([0.125, 8.0]))
        np.testing.assert_array_equal(transition_matrix(seq, 3, 3), np.eye(2))
        assert len(seq.cache) > 0

    def test_transition_needs_forward_order(self):
        seq = get_fixture("S1").sequence
        with pytest.raises(IndexOutsideInterval):
            transition_matrix(seq, 1, 2)

    def test_overflow_is_detected(self):
        seq = CoefficientSequence.constant([[1e200]], Interval.whole())
        with pytest.raises(OverflowDetected):
            transition_matrix(seq, 3, 0)

    def test_restricted_backward_inverts_on_unstable_subspace(self):
        fixture = get_fixture("S1")
        back = restricted_backward(fixture.sequence, fixture.known_projection, 0, 3)
        np.testing.assert_allclose(back, np.diag([0.0, 0.125]), atol=1e-15)

    def test_restricted_backward_fails_when_unstable_direction_collapses(self):
        fixture = get_fixture("S2a")
        family = ProjectionFamily.constant(np.diag([1.0, 0.0]), Interval.whole())
        with pytest.raises(NotInjectiveOnNullspace):
            restricted_backward(fixture.sequence, family, 0, 1)

    def test_restricted_backward_fails_on_half_line_with_singular_step(self):
        fixture = get_fixture("S3")
        family = ProjectionFamily.constant(np.diag([1.0, 0.0]), Interval.half_minus(0))
        with pytest.raises(NotInjectiveOnNullspace):
            restricted_backward(fixture.sequence, family, -1, 0)

    def test_perturb_sequence_multiplies_on_the_right(self):
        seq = get_fixture("S1").sequence
        b = zero_sequence(2, Interval.whole(), explicit={0: np.array([[0.0, 0.1], [0.0, 0.0]])})
        perturbed = perturb_sequence(seq, b)
        np.testing.assert_allclose(perturbed.matrix(0), np.diag([0.5, 2.0]) @ np.array([[1.0, 0.1], [0.0, 1.0]]))
        np.testing.assert_allclose(perturbed.matrix(5), np.diag([0.5, 2.0]))


def test_fixture_registry():
    labels = fixture_labels()
    assert {"S1", "S2a", "S2b", "S3", "ALT"} <= set(labels)
    with pytest.raises(ProblemFileError):
        get_fixture("nope")
