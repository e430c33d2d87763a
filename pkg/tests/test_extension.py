import math

import numpy as np
import pytest

from dichotomy_checker.dichotomy import verify_certificate
from dichotomy_checker.errors import ExtensionObstructed
from dichotomy_checker.extension import (
    DIMENSION_MISMATCH,
    KERNEL_NOT_IN_STABLE,
    NOT_INJECTIVE,
    can_extend_minus,
    can_extend_plus,
    embed_in_Z,
    extend_minus,
    extend_plus,
    tail_matrix,
)
from dichotomy_checker.linalg import Subspace
from dichotomy_checker.system.fixtures import get_fixture
from dichotomy_checker.system.sequence import Interval

LN2 = math.log(2.0)
DIAGONAL = Subspace.from_columns([[1.0], [1.0]])


class TestPlusSide:
    def test_collapsed_unstable_direction_blocks_extension(self):
        cert = get_fixture("S2a").certificate(Interval.finite(1, 50))
        verdict = can_extend_plus(cert, to=0)
        assert not verdict.extendable
        assert verdict.preimage_dim == 2
        assert verdict.obstruction == DIMENSION_MISMATCH
        with pytest.raises(ExtensionObstructed) as excinfo:
            extend_plus(cert, to=0)
        assert excinfo.value.index == 0
        assert excinfo.value.obstruction == DIMENSION_MISMATCH

    def test_collapsed_stable_direction_extends(self, s2b_cert):
        verdict = can_extend_plus(s2b_cert, to=0)
        assert verdict.extendable and verdict.projection_preserved
        assert verdict.preimage_dim == 1

        extended = extend_plus(s2b_cert, to=0)
        assert extended.verified_window == Interval.finite(0, 50)
        np.testing.assert_allclose(extended.family.at(0), np.diag([1.0, 0.0]), atol=1e-12)
        for k in (1, 10, 50):
            np.testing.assert_allclose(extended.family.at(k), np.diag([1.0, 0.0]), atol=1e-15)
        assert extended.guaranteed.L == pytest.approx(4.0)
        report = verify_certificate(extended)
        assert report.passed
        assert report.worst_margin >= 0
        guaranteed = extended.replace(form=extended.guaranteed)
        assert verify_certificate(guaranteed).passed

    @pytest.mark.parametrize("label", ["S2a", "S2b"])
    def test_criterion_holds_for_every_intermediate_target(self, label):
        cert = get_fixture(label).certificate(Interval.finite(6, 50))
        to_zero = can_extend_plus(cert, to=0)
        assert to_zero.extendable == (label == "S2b")
        for j in range(1, 6):
            assert can_extend_plus(cert, to=j).extendable
        if to_zero.extendable:
            assert all(can_extend_plus(cert, to=j).extendable for j in range(0, 6))

    def test_criterion_needs_target_below_start(self, s2b_cert):
        with pytest.raises(ValueError):
            can_extend_plus(s2b_cert, m=1, to=1)


class TestMinusSide:
    def test_unstable_direction_killed(self):
        cert = get_fixture("S3v").certificate(Interval.finite(-20, -1))
        verdict = can_extend_minus(cert, to=0)
        assert not verdict.extendable
        assert verdict.obstruction == NOT_INJECTIVE
        with pytest.raises(ExtensionObstructed) as excinfo:
            extend_minus(cert, to=0)
        assert excinfo.value.obstruction == NOT_INJECTIVE

    def test_kernel_outside_stable_subspace(self):
        cert = get_fixture("S3x").certificate(Interval.finite(-20, -1))
        verdict = can_extend_minus(cert, to=0)
        assert verdict.extendable
        assert not verdict.projection_preserved

        strict = can_extend_minus(cert, to=0, preserve_projection=True)
        assert not strict.extendable
        assert strict.obstruction == KERNEL_NOT_IN_STABLE

    def test_extension_rechooses_the_range(self):
        cert = get_fixture("S3x").certificate(Interval.finite(-20, -1))
        extended = extend_minus(cert, to=0)
        assert extended.verified_window == Interval.finite(-20, 0)
        assert extended.family.range_space(-1).contains(DIAGONAL)
        assert any("projection_preserved=false" in note for note in extended.notes)
        assert verify_certificate(extended).passed

    def test_tail_without_obstruction_keeps_projection(self):
        cert = get_fixture("S3tail").certificate(Interval.finite(-20, -1))
        assert can_extend_minus(cert, to=0).projection_preserved
        extended = extend_minus(cert, to=0)
        np.testing.assert_allclose(extended.family.at(0), np.diag([0.0, 1.0]), atol=1e-12)
        assert any("projection_preserved=true" in note for note in extended.notes)


class TestEmbedding:
    def test_tail_matrix_of_coordinate_projection(self):
        np.testing.assert_allclose(tail_matrix(np.diag([1.0, 0.0]), LN2), np.diag([0.5, 2.0]))

    def test_interval_dichotomy_embeds_with_same_constants(self, s1_cert):
        window = Interval.finite(0, 10)
        restricted = s1_cert.replace(family=s1_cert.family.restricted_to(window), verified_window=window)
        seq, embedded = embed_in_Z(restricted)
        assert seq.interval.kind == "whole"
        for k in (-30, -1, 0, 5, 10, 39):
            np.testing.assert_allclose(seq.matrix(k), np.diag([0.5, 2.0]), atol=1e-14)
            np.testing.assert_allclose(embedded.family.at(k), np.diag([1.0, 0.0]), atol=1e-14)
        report = verify_certificate(embedded, Interval.finite(-30, 40))
        assert report.passed
        assert report.worst_margin >= -1e-12
        assert embedded.form == restricted.form

    def test_whole_line_certificate_is_returned_unchanged(self, s1_cert):
        seq, embedded = embed_in_Z(s1_cert, Interval.whole())
        assert seq is s1_cert.seq
        assert embedded is s1_cert
