import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import merged_chisquare
from qipm.kp_tree import MatrixStore, SamplingTree


def test_build_two_leaves():
    t = SamplingTree.build([0.6, 0.8])
    assert t.leaf(0) == (pytest.approx(0.36), 1)
    assert t.leaf(1) == (pytest.approx(0.64), 1)
    assert t.root == pytest.approx(1.0)


def test_build_zero_vector():
    assert SamplingTree.build(np.zeros(5)).root == 0


def test_build_single_negative_leaf():
    t = SamplingTree.build([-3.0])
    assert t.leaf(0) == (9.0, -1)
    assert t.root == 9.0
    assert t.value(0) == -3.0


def test_build_rejects_non_finite():
    with pytest.raises(ValueError):
        SamplingTree.build([1.0, np.inf])


def test_update_same_value_changes_nothing():
    t = SamplingTree.build([0.5, -1.5, 2.0])
    before = t.nodes.copy()
    t.update(1, -1.5)
    np.testing.assert_array_equal(t.nodes, before)


def test_updates_reproduce_fresh_build():
    rng = np.random.default_rng(0)
    v, w = rng.normal(size=13), rng.normal(size=13)
    t = SamplingTree.build(v)
    for i, value in enumerate(w):
        t.update(i, value)
    fresh = SamplingTree.build(w)
    np.testing.assert_allclose(t.nodes, fresh.nodes, rtol=1e-14, atol=1e-15)
    np.testing.assert_array_equal(t.signs, fresh.signs)


def test_update_touches_path_only():
    t = SamplingTree.build(np.ones(16))
    assert t.depth == 4
    assert t.update(5, 2.0) == 5


def test_update_out_of_range():
    with pytest.raises(IndexError):
        SamplingTree.build([1.0, 2.0]).update(2, 1.0)


def test_sample_point_mass():
    t = SamplingTree.build(np.eye(5)[3])
    rng = np.random.default_rng(1)
    assert set(t.sample(rng, size=1000).tolist()) == {3}
    assert t.sample(rng) == 3


def test_sample_zero_tree_rejected():
    with pytest.raises(ValueError):
        SamplingTree.build(np.zeros(3)).sample(np.random.default_rng(0))


def test_sample_two_leaf_distribution():
    t = SamplingTree.build([0.6, 0.8])
    draws = t.sample(np.random.default_rng(2), size=100_000)
    counts = np.bincount(draws, minlength=2)
    assert merged_chisquare(counts, [0.36, 0.64]) > 0.01


def test_sample_uniform_eight():
    t = SamplingTree.build(np.ones(8))
    draws = t.sample(np.random.default_rng(3), size=80_000)
    freq = np.bincount(draws, minlength=8) / draws.size
    sigma = np.sqrt(1 / 8 * 7 / 8 / draws.size)
    assert np.all(np.abs(freq - 1 / 8) <= 3 * sigma)


def test_sample_never_picks_zero_leaves():
    v = np.array([0.0, 1e-300, 0.0, 1.0, 0.0])
    draws = SamplingTree.build(v).sample(np.random.default_rng(4), size=50_000)
    assert set(draws.tolist()) <= {1, 3}


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31), size=st.integers(1, 40))
def test_sum_invariant_under_random_updates(seed, size):
    rng = np.random.default_rng(seed)
    t = SamplingTree.build(rng.normal(size=size))
    for _ in range(200):
        t.update(int(rng.integers(size)), float(rng.normal() * 10.0 ** rng.integers(-3, 3)))
    assert t.check_invariant(rtol=1e-12)
    np.testing.assert_allclose(t.root, np.sum(t.values() ** 2), rtol=1e-12)


def test_store_single_entry():
    M = np.zeros((4, 4))
    M[2, 1] = -5.0
    store = MatrixStore(M)
    rng = np.random.default_rng(0)
    rows, cols = store.row_sample(rng, size=100)
    assert set(rows.tolist()) == {2} and set(cols.tolist()) == {1}
    assert store.row_sample(rng) == (2, 1)


def test_store_zero_matrix_rejected():
    with pytest.raises(ValueError):
        MatrixStore(np.zeros((2, 2))).row_sample(np.random.default_rng(0))


def test_store_uniform_two_by_two():
    store = MatrixStore(np.ones((2, 2)))
    rows, cols = store.row_sample(np.random.default_rng(5), size=40_000)
    counts = np.bincount(rows * 2 + cols, minlength=4)
    assert merged_chisquare(counts, [0.25] * 4) > 0.01


def test_store_rank_one_joint_distribution():
    rng = np.random.default_rng(6)
    u, v = rng.normal(size=4), rng.normal(size=5)
    store = MatrixStore(np.outer(u, v))
    rows, cols = store.row_sample(np.random.default_rng(7), size=100_000)
    counts = np.bincount(rows * 5 + cols, minlength=20)
    probs = np.outer(u**2, v**2).ravel()
    assert merged_chisquare(counts, probs / probs.sum()) > 0.01


def test_store_bulk_update_tracks_dense_matrix():
    rng = np.random.default_rng(8)
    M = rng.normal(size=(6, 6))
    store = MatrixStore(M)
    entries = [(1, 2, 3.0), (1, 4, -1.0), (5, 0, 0.0)]
    assert store.bulk_update(entries) == 3
    for i, j, value in entries:
        M[i, j] = value
    np.testing.assert_allclose(store.to_dense(), M, rtol=1e-14)
    assert store.frobenius_squared == pytest.approx(np.sum(M * M), rel=1e-12)
    norm_leaves = np.array([store.norm_tree.leaf(i)[0] for i in range(6)])
    roots = np.array([t.root for t in store.row_trees])
    np.testing.assert_allclose(norm_leaves, roots, rtol=1e-14)
