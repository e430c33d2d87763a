import numpy as np
import pytest

from dichotomy_checker.errors import ComplementError, DimensionMismatch, InvalidMatrix, NotComplementary
from dichotomy_checker.linalg import (
    Subspace,
    as_matrix,
    complement,
    image,
    intersection,
    kernel_of,
    make_projection,
    orthogonal_complement,
    preimage,
    range_of,
    rank_of,
    restricted_norm,
    subspace_distance,
    subspace_sum,
)


def random_rank_deficient(rng, n, rank):
    left = rng.standard_normal((n, rank))
    right = rng.standard_normal((rank, n))
    return left @ right


def random_subspace(rng, n, dim):
    if dim == 0:
        return Subspace.zero(n)
    return Subspace.from_columns(rng.standard_normal((n, dim)))


def test_as_matrix_rejects_non_finite():
    with pytest.raises(InvalidMatrix):
        as_matrix([[1.0, np.nan], [0.0, 1.0]])


def test_rank_and_kernel_of_singular_matrix():
    a = np.array([[1.0, 2.0], [2.0, 4.0]])
    assert rank_of(a) == 1
    kernel = kernel_of(a)
    assert kernel.dim == 1
    np.testing.assert_allclose(a @ kernel.basis, 0.0, atol=1e-12)
    assert range_of(a).dim == 1


def test_zero_dimensional_subspaces_pass_through():
    zero = Subspace.zero(3)
    assert image(np.eye(3), zero).dim == 0
    assert subspace_sum(zero, zero).dim == 0
    assert orthogonal_complement(zero).dim == 3
    assert restricted_norm(np.eye(3), zero) == 0.0


def test_preimage_of_diagonal_maps():
    e1 = Subspace.coordinate(2, 0)
    assert preimage(np.diag([0.5, 0.0]), e1).dim == 2
    stable = preimage(np.diag([0.0, 2.0]), e1)
    assert stable.dim == 1
    assert subspace_distance(stable, e1) < 1e-12


def test_preimage_contains_kernel(rng):
    for _ in range(20):
        a = random_rank_deficient(rng, 4, 2)
        s = random_subspace(rng, 4, 1)
        assert preimage(a, s).contains(kernel_of(a))


def test_preimage_dimension_formula(rng):
    for _ in range(50):
        n = int(rng.integers(2, 6))
        a = random_rank_deficient(rng, n, int(rng.integers(1, n + 1)))
        s = random_subspace(rng, n, int(rng.integers(0, n + 1)))
        expected = intersection(s, range_of(a)).dim + kernel_of(a).dim
        assert preimage(a, s).dim == expected


def test_preimage_of_product_keeps_dimension(rng):
    checked, attempts = 0, 0
    while checked < 200:
        attempts += 1
        assert attempts <= 20000
        n = int(rng.integers(2, 6))
        a = random_rank_deficient(rng, n, int(rng.integers(1, n + 1)))
        b = random_rank_deficient(rng, n, int(rng.integers(1, n + 1)))
        s = random_subspace(rng, n, int(rng.integers(1, n + 1)))
        if preimage(a @ b, s).dim != s.dim:
            continue
        checked += 1
        assert preimage(a, s).dim == s.dim


def test_make_projection_has_requested_range_and_nullspace():
    r = Subspace.coordinate(2, 0)
    n = Subspace.from_columns([[1.0], [1.0]])
    p = make_projection(r, n)
    np.testing.assert_allclose(p @ p, p, atol=1e-12)
    np.testing.assert_allclose(p, [[1.0, -1.0], [0.0, 0.0]], atol=1e-12)


def test_make_projection_rejects_overlapping_subspaces():
    e1 = Subspace.coordinate(2, 0)
    with pytest.raises(NotComplementary):
        make_projection(e1, e1)
    with pytest.raises(NotComplementary):
        make_projection(e1, Subspace.zero(2))


def test_complement_with_constraint():
    s = Subspace.coordinate(3, 0)
    w = Subspace.from_columns([[1.0], [1.0], [0.0]])
    c = complement(s, containing=w)
    assert c.dim == 2
    assert c.contains(w)
    assert subspace_sum(s, c).dim == 3


def test_complement_rejects_constraint_meeting_subspace():
    s = Subspace.coordinate(2, 0)
    with pytest.raises(ComplementError):
        complement(s, containing=s)


def test_mismatched_ambient_dimensions():
    with pytest.raises(DimensionMismatch):
        subspace_sum(Subspace.coordinate(2, 0), Subspace.coordinate(3, 0))


def test_from_columns_orthonormalizes(rng):
    s = Subspace.from_columns(rng.standard_normal((5, 3)))
    assert s.dim == 3
    assert s.orthonormality_defect() < 1e-12
