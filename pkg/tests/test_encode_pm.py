import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mrfsdp import (
    InfeasibleAssignmentError,
    InvalidInputError,
    MrfInstance,
    UnaryTerm,
    constraint_value,
    encode_pm,
    energy,
    labeling_to_pm,
    pm_to_labeling,
)

from conftest import all_labelings, random_instance


def dense_constraint_matrix(i, num_nodes, num_labels):
    """U_i materialized: last row carries the block indicator."""
    dim = num_nodes * num_labels + 1
    U = np.zeros((dim, dim))
    U[-1, i * num_labels:(i + 1) * num_labels] = 1.0
    return U


def test_empty_instance():
    enc = encode_pm(MrfInstance(2, 3))
    assert enc.L.nnz == 0
    assert enc.offset == 0.0
    assert enc.dim == 7
    assert enc.rhs == -1.0


def test_unary_coefficient_value():
    # a unary term of weight 2 at (node 0, label 1) lands as -1/2 in the
    # homogenizing column
    enc = encode_pm(MrfInstance(1, 3, (UnaryTerm(0, 1, 2.0),)))
    L = enc.L.toarray()
    assert L[1, enc.dim - 1] == pytest.approx(-0.5)
    assert L[enc.dim - 1, 1] == pytest.approx(-0.5)


def test_exhaustive_equivalence_n4_k3(rng):
    for _ in range(3):
        mrf = random_instance(rng, max_nodes=4, max_labels=3, min_nodes=4)
        enc = encode_pm(mrf)
        L = enc.L.toarray()
        for x in all_labelings(mrf.num_nodes, mrf.num_labels):
            y = labeling_to_pm(x, mrf.num_nodes, mrf.num_labels)
            assert y @ L @ y + enc.offset == pytest.approx(
                energy(mrf, x), abs=1e-12)


@given(seed=st.integers(0, 10_000))
@settings(max_examples=20, deadline=None)
def test_energy_equivalence_property(seed):
    rng = np.random.default_rng(seed)
    mrf = random_instance(rng, max_nodes=5, max_labels=4)
    enc = encode_pm(mrf)
    L = enc.L.toarray()
    for x in all_labelings(mrf.num_nodes, mrf.num_labels):
        y = labeling_to_pm(x, mrf.num_nodes, mrf.num_labels)
        assert abs(y @ L @ y + enc.offset - energy(mrf, x)) < 1e-10


def test_labeling_to_pm_single_node():
    assert np.array_equal(labeling_to_pm([0], 1, 2), [1.0, -1.0, 1.0])


def test_block_sums_equal_rhs(rng):
    n, k = 4, 4
    for _ in range(20):
        x = rng.integers(0, k, size=n)
        y = labeling_to_pm(x, n, k)
        blocks = y[:-1].reshape(n, k)
        assert np.all(blocks.sum(axis=1) == 2 - k)
        assert y[-1] == 1.0


def test_round_trip_identity(rng):
    for _ in range(100):
        n = int(rng.integers(1, 6))
        k = int(rng.integers(2, 5))
        x = rng.integers(0, k, size=n)
        assert np.array_equal(pm_to_labeling(labeling_to_pm(x, n, k), n, k), x)


def test_pm_to_labeling_infeasible():
    with pytest.raises(InfeasibleAssignmentError):
        pm_to_labeling(np.array([1.0, 1.0, 1.0]), 1, 2)  # two +1 in block
    with pytest.raises(InfeasibleAssignmentError):
        pm_to_labeling(np.array([-1.0, -1.0, 1.0]), 1, 2)  # no +1 in block
    with pytest.raises(InfeasibleAssignmentError):
        pm_to_labeling(np.array([0.5, -1.0, 1.0]), 1, 2)  # not a sign vector
    with pytest.raises(InvalidInputError):
        pm_to_labeling(np.array([1.0, -1.0]), 1, 2)  # wrong length


def test_constraint_value_feasible_vector(rng):
    n, k = 3, 4
    for _ in range(10):
        x = rng.integers(0, k, size=n)
        y = labeling_to_pm(x, n, k)
        Y = np.outer(y, y)
        for i in range(n):
            assert constraint_value(i, Y, k) == pytest.approx(2 - k)
            assert constraint_value(i, y, k) == pytest.approx(2 - k)


def test_constraint_value_identity_matrix():
    n, k = 3, 3
    Y = np.eye(n * k + 1)
    for i in range(n):
        assert constraint_value(i, Y, k) == 0.0


def test_constraint_value_dense_trace_oracle(rng):
    n, k = 3, 3
    dim = n * k + 1
    A = rng.standard_normal((dim, dim))
    Y = A @ A.T
    d = np.sqrt(np.diag(Y))
    Y = Y / np.outer(d, d)  # PSD with unit diagonal
    for i in range(n):
        expected = np.trace(dense_constraint_matrix(i, n, k) @ Y)
        assert constraint_value(i, Y, k) == pytest.approx(expected, abs=1e-12)


def test_nnz_audit(rng):
    for _ in range(5):
        mrf = random_instance(rng, min_nodes=2)
        enc = encode_pm(mrf)
        bound = 2 * mrf.num_labels ** 2 * len(mrf.binary) + 2 * len(mrf.unary)
        assert enc.L.nnz <= bound


def test_block_slices():
    enc = encode_pm(MrfInstance(3, 4))
    assert enc.block(0) == slice(0, 4)
    assert enc.block(2) == slice(8, 12)
