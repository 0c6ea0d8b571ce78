import numpy as np
import pytest

from qkclassify import featselect
from qkclassify.featselect import LassoConfig, SelectionReport
from qkclassify.trees import ForestConfig, TreeConfig
from oracles import lasso_objective


def _problem(seed, n=40, d=6):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    w = rng.normal(size=d) * (rng.random(d) < 0.6)
    y = X @ w + 0.1 * rng.normal(size=n)
    return X, y


def test_lambda_zero_is_ols():
    X, y = _problem(0)
    w = featselect.lasso_fit(X, y, LassoConfig(lam=0.0)).weights
    np.testing.assert_allclose(w, np.linalg.solve(X.T @ X, X.T @ y), atol=1e-6)


def test_kill_condition():
    X, y = _problem(1)
    lam = 2 * np.abs(X.T @ y).max()
    w = featselect.lasso_fit(X, y, LassoConfig(lam=lam)).weights
    assert np.all(w == 0)


def test_two_point_example():
    w = featselect.lasso_fit([[1.0], [-1.0]], [1.0, -1.0], LassoConfig(lam=1.0)).weights
    assert w[0] == pytest.approx(0.75, abs=1e-12)
    # subgradient check at the minimiser: d/dw [2(1-w)^2 + |w|] = -4(1-w) + 1 = 0
    assert -4 * (1 - w[0]) + 1 == pytest.approx(0.0, abs=1e-12)


def test_zero_column_weight_is_zero():
    X, y = _problem(2)
    X[:, 3] = 0
    assert featselect.lasso_fit(X, y, LassoConfig(lam=0.5)).weights[3] == 0


def test_non_finite_rejected():
    with pytest.raises(ValueError):
        featselect.lasso_fit([[np.nan]], [1.0])
    with pytest.raises(ValueError):
        LassoConfig(lam=-1)


@pytest.mark.parametrize("seed", range(8))
def test_subgradient_optimality_and_descent(seed):
    X, y = _problem(seed)
    lam = float(np.random.default_rng(seed).uniform(0.5, 20))
    res = featselect.lasso_fit(X, y, LassoConfig(lam=lam))
    assert res.converged
    assert featselect.subgradient_residual(X, y, res.weights, lam).max() <= 1e-6
    hist = np.array(res.objective_history)
    assert np.all(np.diff(hist) <= 1e-9 * max(1.0, hist[0]))
    assert hist[-1] == pytest.approx(lasso_objective(X, y, res.weights, lam))


def test_l1_norm_monotone_in_lambda():
    X, y = _problem(4)
    grid = [0.0, 0.5, 1, 2, 5, 10, 20, 50, 200]
    path = featselect.lasso_path(X, y, grid)
    l1 = np.abs(path).sum(axis=1)
    assert np.all(np.diff(l1) <= 1e-8)


def test_rfe_single_feature():
    ranks = featselect.rfe_rank(np.zeros((5, 1)), np.ones(5), lambda X, y: np.ones(X.shape[1]))
    np.testing.assert_array_equal(ranks, [1])


def test_rfe_index_oracle():
    est = lambda X, y: np.arange(X.shape[1], dtype=float)
    ranks = featselect.rfe_rank(np.zeros((3, 5)), np.ones(3), est)
    # feature 0 goes first (worst rank), feature 4 survives
    np.testing.assert_array_equal(ranks, [5, 4, 3, 2, 1])


def test_rfe_large_step_keeps_one():
    est = lambda X, y: np.arange(X.shape[1], dtype=float)
    ranks = featselect.rfe_rank(np.zeros((3, 5)), np.ones(3), est, step=10)
    np.testing.assert_array_equal(ranks, [2, 2, 2, 2, 1])


def test_rfe_predictive_feature_survives():
    rng = np.random.default_rng(9)
    X = rng.normal(size=(80, 5))
    y = np.where(X[:, 3] > 0.1, 1, -1)
    est = featselect.forest_estimator(ForestConfig(n_trees=20, tree=TreeConfig(seed=1)))
    ranks = featselect.rfe_rank(X, y, est)
    assert ranks[3] == 1


def _report(ranks, coeff):
    n = len(ranks)
    return SelectionReport([f"f{i}" for i in range(n)], np.array(ranks), np.array(ranks) == 1,
                           np.array(coeff, dtype=float), 1.0)


def test_select_features_rules():
    rep = _report([1, 1, 2], [0.0, 0.9, 0.5])
    assert featselect.select_features(rep, 1) == [1]
    assert sorted(featselect.select_features(rep, 3)) == [0, 1, 2]
    assert featselect.select_features(rep, 2) == [1, 0]
    with pytest.raises(ValueError):
        featselect.select_features(rep, 0)
    with pytest.raises(ValueError):
        featselect.select_features(rep, 4)


def test_select_features_negative_coefficients_use_magnitude():
    rep = _report([1, 1], [0.2, -0.7])
    assert featselect.select_features(rep, 1) == [1]


def test_selection_report_and_csv(tmp_path):
    rng = np.random.default_rng(0)
    X = rng.random((60, 6))
    y = np.where(X[:, 1] + 0.3 * X[:, 4] > 0.7, 1, -1)
    rep = featselect.build_selection_report(
        X, y, [f"w{i}" for i in range(6)], lasso=LassoConfig(lam=0.5),
        forest=ForestConfig(n_trees=10), n_keep=3, lambda_grid=[0.1, 1.0])
    assert rep.rfe_mask.sum() == 3
    assert sorted(rep.rfe_rank.tolist()) == list(range(1, 7))
    assert rep.preference[0] == 1
    assert len(rep.lasso_path) == 2
    path = tmp_path / "selection.csv"
    featselect.write_selection_csv(path, rep)
    lines = path.read_text().splitlines()
    assert lines[0] == "feature,rfe_mask,rfe_rank,lasso_coeff,selected_k"
    back = featselect.read_selection_csv(path)
    assert back.preference == rep.preference
    for k in range(1, 7):
        assert featselect.select_features(back, k) == featselect.select_features(rep, k)
