import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from motorpm.forest import (
    RandomForest,
    best_gini_split,
    forest_fit,
    forest_predict,
    gini,
    splitmix64,
    tree_fit,
    tree_seed,
)


@pytest.mark.parametrize("counts,expected", [((5, 5, 0), 0.5), ((10, 0, 0), 0.0), ((1, 1, 1), 2 / 3)])
def test_gini_examples(counts, expected):
    assert gini(counts) == pytest.approx(expected)


def test_gini_empty():
    with pytest.raises(ValueError):
        gini((0, 0, 0))


@given(st.tuples(st.integers(0, 100), st.integers(0, 100), st.integers(0, 100)).filter(lambda c: sum(c) > 0))
def test_gini_range(c):
    assert 0.0 <= gini(c) <= 2 / 3 + 1e-12


def test_splitmix64_reference_vector():
    # first output of the reference generator seeded with 0
    assert splitmix64(0) == 0xE220A8397B1DCDAF


def test_tree_seeds_distinct():
    seeds = {tree_seed(42, t) for t in range(200)}
    assert len(seeds) == 200


def test_pure_node_is_leaf():
    t = tree_fit(np.arange(6.0)[:, None], np.zeros(6, dtype=int))
    assert t.n_nodes == 1 and t.feature[0] == -1


def test_root_split_midpoint():
    X = np.array([[5.0], [5.0], [10.0], [10.0]])
    y = np.array([0, 0, 1, 1])
    t = tree_fit(X, y)
    assert t.feature[0] == 0 and t.threshold[0] == 7.5
    assert np.all(t.predict_proba(X).argmax(axis=1) == y)


def test_tie_goes_to_lower_channel():
    X = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 1.0], [1.0, 1.0]])
    y = np.array([0, 0, 1, 1])
    dec, f, thr = best_gini_split(X, y, np.arange(4), [0, 1])
    assert f == 0 and thr == 0.5 and dec == pytest.approx(0.5)


@pytest.fixture(scope="module")
def forest(motors_split):
    Xtr, ytr, _, _ = motors_split
    return forest_fit(Xtr, ytr, n_estimators=200, seed=42)


def test_tree_count(forest):
    assert len(forest.trees) == 200
    assert forest.m_try == 4


def test_forest_heldout_accuracy(forest, motors_split):
    _, _, Xte, yte = motors_split
    lab, p = forest_predict(forest, Xte)
    assert np.mean(lab == yte) >= 0.95
    assert np.all(np.abs(p.sum(axis=1) - 1) < 1e-9)


def test_training_points_reach_consistent_leaves(forest, motors_split):
    Xtr, ytr, _, _ = motors_split
    for tree, boot in list(zip(forest.trees, forest.bootstrap_indices))[:25]:
        leaves = tree.apply(Xtr[boot])
        assert np.all(tree.counts[leaves, ytr[boot]] > 0)
        internal = tree.feature >= 0
        assert np.all(tree.left[internal] > 0) and np.all(tree.right[internal] > 0)
        assert np.all(tree.counts.sum(axis=1) > 0)


def test_accepted_splits_decrease_gini(forest):
    for tree in forest.trees[:25]:
        for i in np.flatnonzero(tree.feature >= 0):
            c, l, r = tree.counts[i], tree.counts[tree.left[i]], tree.counts[tree.right[i]]
            child = (l.sum() * gini(l) + r.sum() * gini(r)) / c.sum()
            assert gini(c) - child > 0


def test_training_accuracy_beats_out_of_bag(forest, motors_split):
    Xtr, ytr, _, _ = motors_split
    train_acc = np.mean(forest_predict(forest, Xtr)[0] == ytr)
    tree, boot = forest.trees[0], forest.bootstrap_indices[0]
    oob = np.setdiff1d(np.arange(len(ytr)), boot)
    oob_acc = np.mean(tree.predict_proba(Xtr[oob]).argmax(axis=1) == ytr[oob])
    assert train_acc >= oob_acc


def test_single_class_forest(rng):
    X = rng.normal(size=(20, 3))
    clf = RandomForest(n_estimators=10).fit(X, np.full(20, 1))
    p = clf.predict_proba(rng.normal(size=(5, 3)))
    np.testing.assert_array_equal(p, np.tile([0.0, 1.0, 0.0], (5, 1)))


def test_forest_deterministic(motors_split, rng):
    Xtr, ytr, _, _ = motors_split
    probe = rng.uniform(Xtr.min(axis=0), Xtr.max(axis=0), (100, Xtr.shape[1]))
    a = RandomForest(n_estimators=20).fit(Xtr, ytr).predict_proba(probe)
    b = RandomForest(n_estimators=20).fit(Xtr, ytr).predict_proba(probe)
    np.testing.assert_array_equal(a, b)
