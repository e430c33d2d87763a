import math

import numpy as np
import pytest

from dichotomy_checker.dichotomy import ProjectionFamily, verify_certificate
from dichotomy_checker.errors import ComplementConstraintViolated, NotComplementary, RankMismatch
from dichotomy_checker.extension import extend_plus
from dichotomy_checker.linalg import Subspace, subspace_distance
from dichotomy_checker.projections import (
    MINUS,
    PLUS,
    change_complement_minus,
    change_complement_plus,
    glue_half_lines,
    nonuniqueness_witness,
    rebase_at_m,
)
from dichotomy_checker.system.fixtures import get_fixture
from dichotomy_checker.system.sequence import Interval

LN2 = math.log(2.0)
DIAGONAL = Subspace.from_columns([[1.0], [1.0]])


def s1_on(a, b):
    return get_fixture("S1").certificate(Interval.finite(a, b))


class TestComplementChange:
    def test_plus_side_difference_decays_at_twice_the_rate(self):
        cert = s1_on(0, 30)
        changed = change_complement_plus(cert, DIAGONAL)
        differences = [np.linalg.norm(changed.family.at(k) - cert.family.at(k), 2) for k in range(31)]
        # 4^-k drops below double precision resolution past k = 20
        slope = np.polyfit(np.arange(21), np.log(differences[:21]), 1)[0]
        assert slope <= -2 * LN2 + 0.05
        assert max(differences[21:]) < 1e-12
        assert verify_certificate(changed).passed
        assert changed.guaranteed is not None

    def test_plus_side_keeps_the_stable_subspace(self):
        cert = s1_on(0, 20)
        changed = change_complement_plus(cert, DIAGONAL)
        for k in (0, 5, 20):
            assert subspace_distance(changed.family.range_space(k), cert.family.range_space(k)) < 1e-12
        assert subspace_distance(changed.family.nullspace(0), DIAGONAL) < 1e-12

    def test_minus_side_range_follows_the_preimage(self):
        cert = get_fixture("S3tail").certificate(Interval.finite(-10, 0))
        changed = change_complement_minus(cert, DIAGONAL)
        for k in (-5, -2, 0):
            expected = Subspace.from_columns([[2.0 ** k], [2.0 ** -k]])
            assert subspace_distance(changed.family.range_space(k), expected) < 1e-10
            assert subspace_distance(changed.family.nullspace(k), cert.family.nullspace(k)) < 1e-12
        assert verify_certificate(changed).passed

    def test_complement_must_be_transversal(self):
        cert = s1_on(0, 10)
        with pytest.raises(NotComplementary):
            change_complement_plus(cert, Subspace.coordinate(2, 0))


class TestRebase:
    def test_plus_side_prescribes_complement_at_interior_point(self):
        cert = s1_on(0, 20)
        rebased = rebase_at_m(cert, 5, DIAGONAL, PLUS)
        assert subspace_distance(rebased.family.nullspace(5), DIAGONAL) < 1e-10
        assert verify_certificate(rebased).passed

    def test_minus_side_requires_kernel_inside_the_subspace(self):
        # Phi(0, -3) = diag(8, 0) kills e2, which W = span(e1 + e2) misses
        cert = get_fixture("S3").certificate(Interval.finite(-10, 0))
        with pytest.raises(ComplementConstraintViolated):
            rebase_at_m(cert, -3, DIAGONAL, MINUS)

    def test_minus_side_accepts_subspace_holding_the_kernel(self):
        cert = get_fixture("S3").certificate(Interval.finite(-10, 0))
        rebased = rebase_at_m(cert, -3, Subspace.coordinate(2, 1), MINUS)
        assert subspace_distance(rebased.family.range_space(-3), Subspace.coordinate(2, 1)) < 1e-10
        assert verify_certificate(rebased).passed


class TestGlue:
    def test_regluing_s1_reproduces_the_projection(self):
        cert = s1_on(-40, 40)
        plus = cert.replace(verified_window=Interval.finite(0, 40))
        minus = cert.replace(verified_window=Interval.finite(-40, 0))
        glued = glue_half_lines(plus, minus)
        assert np.linalg.norm(glued.family.at(0) - cert.family.at(0), 2) < 1e-10
        assert subspace_distance(glued.family.range_space(0), cert.family.range_space(0)) < 1e-10
        assert verify_certificate(glued, Interval.finite(-40, 40)).passed

    def test_ranks_must_agree(self):
        cert = s1_on(-10, 10)
        plus = cert.replace(family=ProjectionFamily.constant(np.eye(2), Interval.whole()),
                            verified_window=Interval.finite(0, 10))
        minus = cert.replace(verified_window=Interval.finite(-10, 0))
        with pytest.raises(RankMismatch):
            glue_half_lines(plus, minus)


class TestWitness:
    def test_two_projections_agree_at_m_and_differ_at_base(self, s2b_cert):
        extended = extend_plus(s2b_cert, to=0)
        witness = nonuniqueness_witness(extended, 1, PLUS)
        assert witness.found
        first, second = witness.certificates
        assert witness.agreement_at_m < 1e-10
        assert np.linalg.norm(first.family.at(1) - second.family.at(1), 2) < 1e-10
        assert witness.gap > 0.1
        for cert in witness.certificates:
            assert verify_certificate(cert, Interval.finite(0, 50)).passed

    def test_no_witness_for_invertible_transition(self):
        witness = nonuniqueness_witness(s1_on(0, 10), 5, PLUS)
        assert not witness.found
        assert "invertible" in witness.reason
