import math

import numpy as np
import pytest

from dichotomy_checker.dichotomy import (
    DichotomyCertificate,
    FormA,
    FormB,
    ProjectionFamily,
    bounded_solution_oracle,
    check_invariance,
    check_subspace_identities,
    convert_certificate,
    estimate_constants,
    estimate_stable_subspace,
    estimate_unstable_subspace,
    form_from_dict,
    projected_flow,
    verify_certificate,
)
from dichotomy_checker.errors import NoDecay, NotInjectiveOnNullspace, RankMismatch
from dichotomy_checker.linalg import Subspace, subspace_distance
from dichotomy_checker.system.fixtures import get_fixture
from dichotomy_checker.system.sequence import CoefficientSequence, Interval

LN2 = math.log(2.0)


def conjugated_system(rng, rank_deficient):
    """Constant A = S diag(lambda) S^-1 with stable and unstable eigenvalues, P from the same basis."""
    basis = np.eye(3) + 0.3 * rng.standard_normal((3, 3))
    stable = rng.uniform(0.3, 0.5, size=2)
    if rank_deficient:
        stable[0] = 0.0
    eigenvalues = np.array([stable[0], stable[1], rng.uniform(1.5, 2.5)])
    inverse = np.linalg.inv(basis)
    a = basis @ np.diag(eigenvalues) @ inverse
    p = basis @ np.diag([1.0, 1.0, 0.0]) @ inverse
    seq = CoefficientSequence.constant(a, Interval.whole(), label="conjugated")
    family = ProjectionFamily.constant(p, Interval.whole())
    return seq, family


class TestVerification:
    def test_s1_exact_constants_are_tight(self, s1_cert):
        cert = s1_cert.replace(form=FormA(L=1.0, alpha=LN2))
        report = verify_certificate(cert, Interval.finite(0, 50))
        assert report.passed
        assert abs(report.worst_margin) <= 1e-12
        assert report.invariance.passed
        assert report.pairs_checked == 2 * 51 * 52 // 2

    def test_too_fast_exponent_fails_with_witness(self, s1_cert):
        cert = s1_cert.replace(form=FormA(L=1.0, alpha=0.8))
        report = verify_certificate(cert, Interval.finite(0, 20))
        assert not report.passed
        assert report.worst_margin < 0
        assert report.worst_pair == (20, 0)
        assert report.failures

    def test_form_b_certificate(self, s1_cert):
        cert = s1_cert.replace(form=FormB(M=1.0, K=1.0, alpha=LN2))
        report = verify_certificate(cert, Interval.finite(0, 30))
        assert report.passed

    def test_non_invariant_family_fails(self):
        seq = get_fixture("S1").sequence
        rotated = np.array([[1.0, 1.0], [0.0, 0.0]])
        family = ProjectionFamily.constant(rotated, Interval.whole())
        cert = DichotomyCertificate(seq=seq, family=family, form=FormA(L=10.0, alpha=0.1),
                                    verified_window=Interval.finite(0, 10))
        report = verify_certificate(cert)
        assert not report.invariance.passed
        assert not report.passed

    @pytest.mark.parametrize("form_name", ["A", "B"])
    def test_non_diagonal_hyperbolic_system_on_long_window(self, form_name):
        basis = np.array([[1.0, 0.3], [0.2, 1.0]])
        inverse = np.linalg.inv(basis)
        cond = float(np.linalg.cond(basis))
        seq = CoefficientSequence.constant(basis @ np.diag([0.5, 2.0]) @ inverse, Interval.whole())
        family = ProjectionFamily.constant(basis @ np.diag([1.0, 0.0]) @ inverse, Interval.whole())
        alpha = LN2 - 0.01
        form = FormA(L=3.0 * cond, alpha=alpha) if form_name == "A" else FormB(M=3.0 * cond, K=1.5, alpha=alpha)
        cert = DichotomyCertificate(seq=seq, family=family, form=form, verified_window=Interval.finite(0, 50))
        report = verify_certificate(cert)
        assert report.passed, report.failures[:3]
        assert report.worst_margin > 0.0

    def test_projected_flow_matches_transition_on_short_lags(self, s1_cert):
        flow = dict(projected_flow(s1_cert.seq, s1_cert.family, 2, 6))
        assert sorted(flow) == [2, 3, 4, 5, 6]
        np.testing.assert_allclose(flow[6], np.diag([0.5 ** 4, 0.0]), atol=1e-15)

    def test_invariance_residual(self, s1_cert):
        window = Interval.finite(0, 10)
        exact = check_invariance(s1_cert.seq, s1_cert.family, window)
        assert exact.passed
        assert exact.max_residual == 0.0
        assert exact.worst_k is None

        rotated = ProjectionFamily.constant(np.array([[1.0, 1.0], [0.0, 0.0]]), Interval.whole())
        report = check_invariance(s1_cert.seq, rotated, window)
        assert not report.passed
        assert report.max_residual == pytest.approx(0.75)
        assert report.worst_k == 0

    def test_rank_n_family_makes_unstable_checks_vacuous(self):
        seq = CoefficientSequence.constant(np.diag([0.5, 0.25]), Interval.whole())
        family = ProjectionFamily.constant(np.eye(2), Interval.whole())
        cert = DichotomyCertificate(seq=seq, family=family, form=FormA(L=1.0, alpha=LN2),
                                    verified_window=Interval.finite(0, 15))
        report = verify_certificate(cert)
        assert report.passed
        assert report.unstable_vacuous

    def test_collapsing_unstable_direction_raises(self):
        seq = get_fixture("S2a").sequence
        family = ProjectionFamily.constant(np.diag([1.0, 0.0]), Interval.whole())
        cert = DichotomyCertificate(seq=seq, family=family, form=FormA(L=1.0, alpha=LN2),
                                    verified_window=Interval.finite(-2, 3))
        with pytest.raises(NotInjectiveOnNullspace):
            verify_certificate(cert)

    def test_mixed_ranks_are_rejected(self):
        with pytest.raises(RankMismatch):
            ProjectionFamily.build(Interval.finite(0, 1), {0: np.diag([1.0, 0.0]), 1: np.eye(2)})


class TestEstimation:
    def test_s1_constant_for_given_exponent(self, s1_cert):
        cert = estimate_constants(s1_cert.seq, s1_cert.family, Interval.finite(0, 50), alpha=LN2)
        assert cert.form.L == pytest.approx(1.0, abs=1e-12)

    def test_fitted_exponent_beats_true_rate(self, s1_cert):
        cert = estimate_constants(s1_cert.seq, s1_cert.family, Interval.finite(0, 30))
        assert cert.alpha >= LN2
        assert verify_certificate(cert).passed

    def test_no_decay_for_neutral_system(self):
        seq = CoefficientSequence.constant(np.eye(2), Interval.whole())
        family = ProjectionFamily.constant(np.diag([1.0, 0.0]), Interval.whole())
        with pytest.raises(NoDecay):
            estimate_constants(seq, family, Interval.finite(0, 20))


class TestConversion:
    def test_round_trip_squares_the_constant(self, s1_cert):
        cert = s1_cert.replace(form=FormA(L=2.0, alpha=LN2))
        as_b = convert_certificate(cert, "B")
        assert (as_b.form.M, as_b.form.K) == (2.0, 2.0)
        back = convert_certificate(as_b, "A")
        assert back.form.L == 4.0
        assert any("constant inflation" in note for note in back.notes)

    def test_unknown_target(self, s1_cert):
        with pytest.raises(ValueError):
            convert_certificate(s1_cert, "C")

    def test_form_from_dict(self):
        assert form_from_dict({"form": "B", "M": 2, "K": 3, "alpha": 0.5}) == FormB(M=2.0, K=3.0, alpha=0.5)
        assert form_from_dict({"L": 1, "alpha": 0.5}) == FormA(L=1.0, alpha=0.5)
        with pytest.raises(ValueError):
            FormA(L=0.5, alpha=1.0)


class TestSubspaceEstimation:
    def test_stable_and_unstable_subspaces_of_s1(self):
        seq = get_fixture("S1").sequence
        stable = estimate_stable_subspace(seq, 0)
        unstable = estimate_unstable_subspace(seq, 0)
        assert subspace_distance(stable.subspace, Subspace.coordinate(2, 0)) < 1e-10
        assert subspace_distance(unstable.subspace, Subspace.coordinate(2, 1)) < 1e-10
        assert stable.growth_rates[0] > 0 > stable.growth_rates[1]

    def test_forward_oracle(self):
        seq = get_fixture("S1").sequence
        assert bounded_solution_oracle(seq, 0, [1.0, 0.0], horizon=30).bounded
        assert not bounded_solution_oracle(seq, 0, [0.0, 1.0], horizon=30).bounded

    def test_backward_oracle_on_unstable_subspace(self):
        fixture = get_fixture("S1")
        verdict = bounded_solution_oracle(fixture.sequence, 0, [0.0, 1.0], horizon=20,
                                          family_hint=fixture.known_projection, side="backward")
        assert verdict.bounded and verdict.in_unstable_subspace
        assert verdict.uniqueness_gap < 1e-12
        assert verdict.forward_residual < 1e-12
        outside = bounded_solution_oracle(fixture.sequence, 0, [1.0, 0.0], horizon=20,
                                          family_hint=fixture.known_projection, side="backward")
        assert outside.in_unstable_subspace is False


@pytest.mark.parametrize("seed", range(50))
def test_subspace_identities_on_random_systems(seed):
    rng = np.random.default_rng(seed)
    seq, family = conjugated_system(rng, rank_deficient=seed % 2 == 0)
    window = Interval.finite(0, 6)
    cert = estimate_constants(seq, family, window, alpha=0.5)
    assert verify_certificate(cert).passed
    for m, k in [(0, 1), (0, 4), (2, 6)]:
        report = check_subspace_identities(cert, k, m)
        assert report.stable_preimage_gap < 1e-8
        assert report.unstable_preimage_gap < 1e-8
        assert report.kernel_outside_stable < 1e-8


def test_s1_identities_on_long_window(s1_cert):
    assert check_subspace_identities(s1_cert, 50, 0).passed
