import numpy as np
import pytest

from mrfsdp import (
    MrfInstance,
    UnaryTerm,
    brute_force,
    fuses_round,
    fuses_solve,
    generate_grid_instance,
    labeling_to_zo,
)


def test_unary_only_recovers_measured_labels():
    unary = tuple(UnaryTerm(i, (i + 1) % 3, 0.5 + 0.2 * i) for i in range(5))
    inst = MrfInstance(5, 3, unary)
    res = fuses_solve(inst, seed=0)
    assert res.certified
    assert np.array_equal(res.labeling, [t.label for t in unary])
    assert res.f_rounded == 0.0
    # the relaxation is tight here (optimum 0); the solver lands within its
    # relative-decrease tolerance of it
    assert abs(res.f_relaxed) <= 1e-5


def test_relaxed_value_matches_independent_sdp_oracle():
    # binary-matrix relaxation optimum (plus offset) for the dual-ascent
    # module's TEST_INSTANCE, computed offline by
    # scripts/standard_sdp_oracle.py --encoding zo (Douglas-Rachford with
    # exact projections; residuals < 1e-12)
    from test_dars import TEST_INSTANCE

    oracle = 0.13456934306300372
    res = fuses_solve(TEST_INSTANCE, seed=0)
    assert res.certified
    assert abs(res.f_relaxed - oracle) <= 0.005 * abs(oracle)


def test_certified_bounds_against_brute_force():
    for seed in range(5):
        inst = generate_grid_instance(3, 3, 3, unary_noise=0.3, seed=seed)
        res = fuses_solve(inst, seed=seed)
        assert res.certified
        exact = brute_force(inst)
        # lower bound up to the solver's relative-decrease tolerance
        assert res.f_relaxed <= exact.f_opt + 1e-5 * (1.0 + abs(exact.f_opt))
        assert res.f_rounded >= exact.f_opt - 1e-12
        assert res.f_rounded - exact.f_opt <= res.subopt_bound + 1e-9


def test_frustrated_complete_graph_bounds():
    # repulsive complete graph: all-different labels are impossible for
    # N > K, the relaxation gap is genuinely large, and the certified lower
    # bound must still hold
    import itertools
    from mrfsdp import BinaryTerm

    edges = tuple(BinaryTerm(i, j, -0.5)
                  for i, j in itertools.combinations(range(5), 2))
    unary = tuple(UnaryTerm(i, i % 2, 0.1) for i in range(5))
    inst = MrfInstance(5, 2, unary, edges)
    exact = brute_force(inst)
    res = fuses_solve(inst, seed=1)
    assert res.certified
    assert res.f_relaxed <= exact.f_opt + 1e-5 * (1.0 + abs(exact.f_opt))
    assert res.f_rounded >= exact.f_opt - 1e-12
    assert res.subopt_bound >= res.f_rounded - exact.f_opt - 1e-9


def test_certified_bounds_with_repulsive_weights(rng):
    # weights of any sign are in-contract; certificates must hold regardless
    from conftest import random_instance

    for t in range(10):
        inst = random_instance(rng, max_nodes=5, max_labels=3, min_nodes=2)
        res = fuses_solve(inst, seed=t)
        exact = brute_force(inst)
        if res.certified:
            assert res.f_relaxed <= exact.f_opt + 1e-5 * (1.0 + abs(exact.f_opt))
        assert res.f_rounded >= exact.f_opt - 1e-12


def test_round_exact_lift_round_trip(rng):
    n, k = 6, 3
    x = rng.integers(0, k, size=n)
    X = labeling_to_zo(x, n, k)
    V = np.vstack([X, np.eye(k)])
    R = np.hstack([V, np.zeros((n + k, 1))])
    assert np.array_equal(fuses_round(R, n, k), X)


def test_round_tie_break_lowest_label():
    # constant rows give ties everywhere; argmax must pick label 0
    n, k = 3, 3
    R = np.zeros((n + k, k))
    R[:n, :] = 1.0 / np.sqrt(k)
    R[n:, :] = np.eye(k)
    X = fuses_round(R, n, k)
    assert np.array_equal(X.argmax(axis=1), np.zeros(n, dtype=int))


def test_determinism_same_seed():
    inst = generate_grid_instance(3, 4, 3, unary_noise=0.25, seed=9)
    a = fuses_solve(inst, seed=5)
    b = fuses_solve(inst, seed=5)
    assert np.array_equal(a.labeling, b.labeling)
    assert a.f_relaxed == b.f_relaxed
    assert a.f_rounded == b.f_rounded
    assert a.rank_history == b.rank_history


def test_initial_rank_is_labels_plus_one():
    for k in (2, 3, 4):
        inst = generate_grid_instance(2, 2, k, unary_noise=0.3, seed=1)
        res = fuses_solve(inst, seed=1)
        assert res.rank_history[0][0] == k + 1


def test_unary_warm_start_mode():
    inst = generate_grid_instance(3, 3, 3, unary_noise=0.3, seed=4)
    cold = fuses_solve(inst, seed=4, init="random")
    warm = fuses_solve(inst, seed=4, init="unary")
    assert warm.certified
    assert warm.f_relaxed == pytest.approx(cold.f_relaxed, abs=1e-5)
    again = fuses_solve(inst, seed=4, init="unary")
    assert np.array_equal(warm.labeling, again.labeling)
    assert warm.f_relaxed == again.f_relaxed


def test_result_invariants():
    inst = generate_grid_instance(3, 3, 2, unary_noise=0.35, seed=6)
    res = fuses_solve(inst, seed=6)
    assert res.certified
    assert res.f_rounded >= res.f_relaxed - 1e-9
    assert res.subopt_bound == pytest.approx(res.f_rounded - res.f_relaxed)
    assert 0.0 <= res.min_singular_value_ratio <= 1.0
    assert res.timings["total_s"] >= 0.0
