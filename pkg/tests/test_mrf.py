import decimal
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mrfsdp import (
    BinaryTerm,
    ConstantWeights,
    InvalidInputError,
    KernelWeights,
    MrfInstance,
    UnaryTerm,
    UniformWeights,
    binary_weight_from_features,
    energy,
    energy_batch,
    generate_grid_instance,
    grid_edges,
)
from mrfsdp.formats import dumps_instance

from conftest import all_labelings, random_instance


def energy_double_loop(mrf, x):
    """Independent oracle: literal double loop over terms and labels."""
    total = 0.0
    for t in mrf.unary:
        if x[t.node] != t.label:
            total = total + t.weight
    for t in mrf.binary:
        if x[t.i] != x[t.j]:
            total = total + t.weight
    return total


def test_energy_empty_instance():
    mrf = MrfInstance(3, 2)
    assert energy(mrf, [0, 1, 0]) == 0.0
    assert energy(mrf, [1, 1, 1]) == 0.0


def test_energy_single_unary_by_cases():
    mrf = MrfInstance(1, 2, (UnaryTerm(0, 0, 1.0),))
    assert energy(mrf, [0]) == 0.0
    assert energy(mrf, [1]) == 1.0


def test_energy_matches_double_loop_oracle():
    rng = np.random.default_rng(7)
    slots = [(0, 0), (1, 2), (2, 1), (3, 0), (4, 2), (5, 1), (0, 1), (1, 0)]
    unary = tuple(
        UnaryTerm(node, lab, float(rng.normal())) for node, lab in slots
    )
    pairs = [(0, 1), (0, 2), (1, 3), (2, 4), (3, 5), (4, 5), (1, 5)]
    binary = tuple(BinaryTerm(i, j, float(rng.normal())) for i, j in pairs)
    mrf = MrfInstance(6, 3, unary, binary)
    for _ in range(20):
        x = rng.integers(0, 3, size=6)
        assert energy(mrf, x) == pytest.approx(energy_double_loop(mrf, x), abs=1e-14)


def test_energy_term_order_invariance(rng):
    mrf = random_instance(rng, min_nodes=3)
    u = list(mrf.unary)
    b = list(mrf.binary)
    rng.shuffle(u)
    rng.shuffle(b)
    shuffled = MrfInstance(mrf.num_nodes, mrf.num_labels, tuple(u), tuple(b))
    for _ in range(10):
        x = rng.integers(0, mrf.num_labels, size=mrf.num_nodes)
        assert energy(mrf, x) == pytest.approx(energy(shuffled, x), abs=1e-12)


@given(seed=st.integers(0, 1000), perm_seed=st.integers(0, 1000))
@settings(max_examples=25, deadline=None)
def test_relabeling_symmetry(seed, perm_seed):
    rng = np.random.default_rng(seed)
    mrf = random_instance(rng, min_nodes=2)
    k = mrf.num_labels
    perm = np.random.default_rng(perm_seed).permutation(k)
    relabeled = MrfInstance(
        mrf.num_nodes, k,
        tuple(UnaryTerm(t.node, int(perm[t.label]), t.weight) for t in mrf.unary),
        mrf.binary,
    )
    for _ in range(5):
        x = rng.integers(0, k, size=mrf.num_nodes)
        assert energy(mrf, x) == pytest.approx(energy(relabeled, perm[x]), abs=1e-12)


def test_nonnegative_weights_energy_bounds():
    mrf = MrfInstance(
        2, 2,
        (UnaryTerm(0, 0, 0.5), UnaryTerm(1, 1, 0.25)),
        (BinaryTerm(0, 1, 0.75),),
    )
    for x in all_labelings(2, 2):
        assert energy(mrf, x) >= 0.0
    # all unary terms matched and the edge agrees: impossible here
    mrf2 = MrfInstance(2, 2, (UnaryTerm(0, 0, 0.5), UnaryTerm(1, 0, 0.25)),
                       (BinaryTerm(0, 1, 0.75),))
    assert energy(mrf2, [0, 0]) == 0.0


def test_energy_batch_matches_scalar(rng):
    mrf = random_instance(rng, min_nodes=3)
    xs = rng.integers(0, mrf.num_labels, size=(12, mrf.num_nodes))
    batch = energy_batch(mrf, xs)
    for row, val in zip(xs, batch):
        assert val == pytest.approx(energy(mrf, row), abs=1e-12)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(num_nodes=0, num_labels=2),
        dict(num_nodes=2, num_labels=1),
        dict(num_nodes=2, num_labels=2, unary=(UnaryTerm(2, 0, 1.0),)),
        dict(num_nodes=2, num_labels=2, unary=(UnaryTerm(0, 5, 1.0),)),
        dict(num_nodes=2, num_labels=2,
             unary=(UnaryTerm(0, 0, 1.0), UnaryTerm(0, 0, 2.0))),
        dict(num_nodes=2, num_labels=2, unary=(UnaryTerm(0, 0, math.inf),)),
        dict(num_nodes=2, num_labels=2, binary=(BinaryTerm(1, 0, 1.0),)),
        dict(num_nodes=2, num_labels=2, binary=(BinaryTerm(0, 0, 1.0),)),
        dict(num_nodes=3, num_labels=2,
             binary=(BinaryTerm(0, 1, 1.0), BinaryTerm(0, 1, 2.0))),
        dict(num_nodes=2, num_labels=2, binary=(BinaryTerm(0, 1, math.nan),)),
    ],
)
def test_instance_validation_errors(kwargs):
    with pytest.raises(InvalidInputError):
        MrfInstance(**kwargs)


def test_labeling_validation_errors():
    mrf = MrfInstance(2, 2)
    with pytest.raises(InvalidInputError):
        energy(mrf, [0])
    with pytest.raises(InvalidInputError):
        energy(mrf, [0, 2])
    with pytest.raises(InvalidInputError):
        energy(mrf, [0, -1])


def test_grid_1x1_degenerate():
    inst = generate_grid_instance(1, 1, 4, seed=3)
    assert inst.num_nodes == 1
    assert len(inst.binary) == 0
    assert len(inst.unary) == 1


def test_grid_2x2_has_four_edges():
    inst = generate_grid_instance(2, 2, 2, seed=0)
    assert len(inst.binary) == 4


@given(rows=st.integers(1, 5), cols=st.integers(1, 5))
@settings(max_examples=25, deadline=None)
def test_grid_edge_count_formula(rows, cols):
    edges = grid_edges(rows, cols)
    assert len(edges) == rows * (cols - 1) + cols * (rows - 1)
    assert all(i < j for i, j in edges)


def test_grid_determinism_byte_identical():
    a = generate_grid_instance(4, 4, 3, unary_noise=0.3, seed=7)
    b = generate_grid_instance(4, 4, 3, unary_noise=0.3, seed=7)
    assert dumps_instance(a) == dumps_instance(b)
    c = generate_grid_instance(4, 4, 3, unary_noise=0.3, seed=8)
    assert dumps_instance(a) != dumps_instance(c)


def test_grid_one_unary_per_node_and_truth():
    inst, truth = generate_grid_instance(3, 4, 3, unary_noise=0.0, seed=1,
                                         return_truth=True)
    assert len(inst.unary) == 12
    assert sorted(t.node for t in inst.unary) == list(range(12))
    measured = {t.node: t.label for t in inst.unary}
    assert all(measured[i] == truth[i] for i in range(12))


def test_grid_edge_weight_models():
    const = generate_grid_instance(2, 3, 2, seed=0,
                                   binary_weight_model=ConstantWeights(0.25))
    assert all(t.weight == 0.25 for t in const.binary)
    uni = generate_grid_instance(2, 3, 2, seed=0,
                                 binary_weight_model=UniformWeights(0.1, 0.2))
    assert all(0.1 <= t.weight <= 0.2 for t in uni.binary)
    ker = generate_grid_instance(2, 3, 2, seed=0,
                                 binary_weight_model=KernelWeights(0.02, 0.04))
    assert all(0.02 <= t.weight <= 0.06 + 1e-12 for t in ker.binary)


def test_kernel_weight_equal_features():
    # exponent vanishes, so the weight is the sum of the two coefficients
    assert binary_weight_from_features([1.0, 2.0], [1.0, 2.0],
                                       0.02, 0.04, 5.0) == pytest.approx(0.06)


def test_kernel_weight_lam2_zero():
    assert binary_weight_from_features([0.0], [9.0], 0.7, 0.0, 1.0) == \
        pytest.approx(0.7)


def test_kernel_weight_high_precision_oracle():
    # expected value from decimal arithmetic at 50 digits:
    # 0.02 + 0.04 * exp(-0.000173 * 1000)
    decimal.getcontext().prec = 50
    expected = decimal.Decimal("0.02") + decimal.Decimal("0.04") * (
        -decimal.Decimal("0.000173") * decimal.Decimal(1000)).exp()
    c_i = np.zeros(4)
    c_j = np.zeros(4)
    c_j[0] = math.sqrt(1000.0)
    got = binary_weight_from_features(c_i, c_j, 0.02, 0.04, 0.000173)
    assert got == pytest.approx(float(expected), rel=1e-12)


def test_kernel_weight_errors():
    with pytest.raises(InvalidInputError):
        binary_weight_from_features([1.0], [1.0, 2.0], 0.0, 1.0, 1.0)
    with pytest.raises(InvalidInputError):
        binary_weight_from_features([1.0], [1.0], 0.0, 1.0, -1.0)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(rows=0, cols=2, num_labels=2),
        dict(rows=2, cols=2, num_labels=1),
        dict(rows=2, cols=2, num_labels=2, unary_noise=1.5),
        dict(rows=2, cols=2, num_labels=2, unary_weight_range=(2.0, 1.0)),
        dict(rows=2, cols=2, num_labels=2, unary_weight_range=(0.0, math.inf)),
    ],
)
def test_generate_errors(kwargs):
    with pytest.raises(InvalidInputError):
        generate_grid_instance(**kwargs)
