import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import random_system, relative_residual
from vwsim.solver import (
    SingularMatrixError,
    SparseMatrix,
    dense_oracle_solve,
    factor,
    gap_matrix,
    solve_with_plan,
    zero_gaps,
)


def test_sparse_rows_drop_zeros_and_sort():
    m = SparseMatrix(3, [[(2, 5.0), (0, 1.0), (1, 0.0)], [], [(1, -2.0)]])
    assert m.row(0) == [(0, 1.0), (2, 5.0)]
    assert m.nnz() == 3


def test_sparse_rejects_duplicate_columns():
    with pytest.raises(ValueError):
        SparseMatrix(2, [[(0, 1.0), (0, 2.0)]])


def test_zero_gaps_of_paper_row():
    # row ((0 . 1) (5 . 2)) in a 6-wide matrix
    assert zero_gaps([0, 5], 6) == [4, 0]
    mask = np.array([[1, 0, 0, 0, 0, 1]], dtype=bool)
    assert gap_matrix(mask).tolist() == [[4, -1, -1, -1, -1, 0]]


def test_identity():
    plan = factor(SparseMatrix.from_dense(np.eye(4)))
    assert solve_with_plan(plan, [1.0, 2.0, 3.0, 4.0]) == [1.0, 2.0, 3.0, 4.0]
    assert factor(SparseMatrix.from_dense(np.eye(2))).solve([5, 6]) == [5.0, 6.0]


def test_swap_requires_pivot():
    plan = factor(SparseMatrix.from_dense([[0, 1], [1, 0]]))
    assert plan.solve([2, 3]) == [3.0, 2.0]


def test_singular():
    with pytest.raises(SingularMatrixError) as err:
        factor(SparseMatrix.from_dense([[1, 2], [2, 4]]))
    assert err.value.column == 1
    with pytest.raises(SingularMatrixError):
        factor(SparseMatrix.from_dense([[1, 0], [0, 0]]))


def test_dimension_mismatch():
    plan = factor(SparseMatrix.from_dense(np.eye(3)))
    with pytest.raises(ValueError):
        plan.solve([1.0, 2.0])


def test_oracle_diagonal():
    assert dense_oracle_solve([[2, 0], [0, 4]], [2, 4]).tolist() == [1.0, 1.0]


def test_oracle_hilbert_like():
    a = np.array([[1 / (i + j + 1) for j in range(3)] for i in range(3)])
    b = np.array([1.0, 2.0, 3.0])
    assert np.max(np.abs(a @ dense_oracle_solve(a, b) - b)) <= 1e-8


def test_50x50_against_oracle():
    rng = np.random.default_rng(50)
    a, b = random_system(rng, 50, 0.1)
    x = factor(SparseMatrix.from_dense(a)).solve(b)
    want = dense_oracle_solve(a, b)
    assert np.max(np.abs(np.array(x) - want)) / np.max(np.abs(want)) <= 1e-9


def test_triangular_form_and_program():
    rng = np.random.default_rng(7)
    a, b = random_system(rng, 12, 0.3, pivoting=True)
    plan = factor(SparseMatrix.from_dense(a))
    tri = plan.triangular.to_dense()
    assert np.allclose(np.tril(tri, -1), 0.0)
    assert sorted(plan.perm) == list(range(12))
    assert len(plan.back) == 12


def test_replay_is_deterministic_and_matches_fresh_factor():
    rng = np.random.default_rng(3)
    a, _ = random_system(rng, 40, 0.08)
    m = SparseMatrix.from_dense(a)
    plan = factor(m)
    for _ in range(20):
        b = rng.uniform(-1, 1, 40)
        x1 = plan.solve(b)
        assert x1 == plan.solve(b)
        assert x1 == factor(m).solve(b)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 40), st.floats(0.01, 0.1), st.booleans(), st.integers(0, 2**32 - 1))
def test_random_systems_residual(n, density, pivoting, seed):
    a, b = random_system(np.random.default_rng(seed), n, density, pivoting)
    x = np.array(factor(SparseMatrix.from_dense(a), check_gaps=True).solve(b))
    assert relative_residual(a, x, b) <= 1e-9
    assert np.allclose(x, dense_oracle_solve(a, b), rtol=1e-9, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 25), st.integers(0, 2**32 - 1))
def test_gap_mirror_stays_consistent(n, seed):
    # check_gaps rebuilds the mirror from the rows after every pivot column
    a, _ = random_system(np.random.default_rng(seed), n, 0.2, True)
    factor(SparseMatrix.from_dense(a), check_gaps=True)


def test_zero_leading_entries_solve():
    a = np.array([[0.0, 2.0, 0.0], [0.0, 0.0, 3.0], [4.0, 0.0, 0.0]])
    x = factor(SparseMatrix.from_dense(a)).solve([2.0, 3.0, 4.0])
    assert x == [1.0, 1.0, 1.0]
