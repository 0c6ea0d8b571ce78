import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qkclassify import trees
from qkclassify.svm import DegenerateLabelsError
from qkclassify.trees import ForestConfig, TreeConfig
from oracles import best_single_split


def _separable():
    X = np.array([[-3.0], [-2.0], [-0.5], [0.5], [1.0], [4.0]])
    y = np.array([-1, -1, -1, 1, 1, 1])
    return X, y


def _one_informative(n=100, d=5, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    y = np.where(X[:, 0] > 0, 1, -1)
    return X, y


def test_stump_on_separable_data():
    X, y = _separable()
    tree = trees.cart_train(X, y)
    assert tree.depth == 1
    assert tree.threshold[0] == 0.0
    np.testing.assert_array_equal(trees.cart_predict(tree, X), y)


def test_threshold_point_goes_left():
    X, y = _separable()
    tree = trees.cart_train(X, y)
    assert trees.cart_predict(tree, [[0.0]])[0] == -1


def test_single_class_is_leaf():
    tree = trees.cart_train(np.arange(6.0).reshape(-1, 1), np.ones(6, dtype=int))
    assert tree.node_count == 1
    np.testing.assert_array_equal(trees.cart_predict(tree, [[100.0], [-5.0]]), [1, 1])


def test_empty_and_width_errors():
    with pytest.raises(ValueError):
        trees.cart_train(np.zeros((0, 2)), np.zeros(0))
    tree = trees.cart_train(*_separable())
    with pytest.raises(ValueError):
        trees.cart_predict(tree, np.zeros((2, 3)))


def test_tie_breaks_on_lowest_feature():
    X = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
    y = np.array([-1, -1, 1, 1])
    tree = trees.cart_train(X, y)
    assert tree.feature[0] == 0


def test_gini_range():
    assert trees.gini([1, 1, 1]) == 0
    assert trees.gini([1, -1]) == 0.5
    assert trees.gini([]) == 0


def test_matches_exhaustive_root_split():
    X, y = _one_informative(seed=3)
    gain, f, t = best_single_split(X, y)
    tree = trees.cart_train(X, y, TreeConfig(max_depth=1))
    assert tree.feature[0] == f
    assert tree.threshold[0] == pytest.approx(t)


def test_config_validation():
    with pytest.raises(ValueError):
        TreeConfig(max_depth=0)
    with pytest.raises(ValueError):
        ForestConfig(n_trees=0)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(4, 40), d=st.integers(1, 4))
def test_training_accuracy_at_least_majority(seed, n, d):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    y = rng.choice([-1, 1], size=n)
    tree = trees.cart_train(X, y, TreeConfig(max_depth=3))
    acc = np.mean(trees.cart_predict(tree, X) == y)
    assert acc >= max(np.mean(y == 1), np.mean(y == -1)) - 1e-12
    for frac in tree.positive_fraction:
        assert 0 <= 2 * frac * (1 - frac) <= 0.5


def test_forest_importance_constant_feature_zero():
    X, y = _one_informative(seed=1)
    X[:, 2] = 4.2
    imp = trees.forest_importance(X, y, ForestConfig(n_trees=20))
    assert imp[2] == 0
    assert imp.sum() == pytest.approx(1.0, abs=1e-10)


def test_forest_importance_finds_predictive_feature():
    X, y = _one_informative(seed=5)
    imp = trees.forest_importance(X, y, ForestConfig(n_trees=50, tree=TreeConfig(seed=11)))
    _, oracle_feature, _ = best_single_split(X, y)
    assert oracle_feature == 0
    assert int(np.argmax(imp)) == oracle_feature


def test_forest_deterministic_and_column_equivariant():
    X, y = _one_informative(n=60, d=4, seed=8)
    cfg = ForestConfig(n_trees=15, features_per_split=4, tree=TreeConfig(seed=2))
    a = trees.forest_importance(X, y, cfg)
    np.testing.assert_array_equal(a, trees.forest_importance(X, y, cfg))
    perm = np.array([2, 0, 3, 1])
    np.testing.assert_allclose(trees.forest_importance(X[:, perm], y, cfg), a[perm], atol=1e-12)


def test_forest_rejects_single_class():
    with pytest.raises(DegenerateLabelsError):
        trees.forest_importance(np.zeros((4, 2)), np.ones(4))


def test_scores_sign_matches_predictions():
    X, y = _one_informative(n=40, d=3, seed=4)
    tree = trees.cart_train(X, y, TreeConfig(max_depth=2))
    s = trees.cart_scores(tree, X)
    np.testing.assert_array_equal(np.where(s >= 0, 1, -1), trees.cart_predict(tree, X))
