import numpy as np
import pytest

from tcpci.catalog import CATALOG
from tcpci.errors import CatalogMismatchError, NoFailedBuildsError, UnknownFeatureError
from tcpci.matrix import FeatureMatrix
from tcpci.ranker import (
    Hyperparams,
    RankModel,
    heuristic_rank,
    rank_tests,
    train_ranker,
)
from tcpci.trees import RegressionTree

HP = Hyperparams(n_bags=10, trees_per_bag=3, max_leaves=16)


def toy_data(n=200, seed=0, d=150):
    rng = np.random.default_rng(seed)
    X = rng.random((n, d))
    y = (X[:, 0] > 0.5).astype(float)
    return X, y


def matrix_of(values, tests=None, build=1):
    n = len(values)
    tests = tests or [f"t{i:02d}.java" for i in range(n)]
    X = np.zeros((n, 150))
    X[:, : np.shape(values)[1] if np.ndim(values) > 1 else 1] = np.reshape(values, (n, -1))
    return FeatureMatrix(build=build, tests=tuple(sorted(tests)), values=X)


def test_tree_fits_simple_threshold():
    X = np.array([[0.0], [1.0], [2.0], [3.0]])
    y = np.array([0.0, 0.0, 1.0, 1.0])
    tree = RegressionTree.fit(X, y, max_leaves=4)
    assert np.allclose(tree.predict(X), y)


def test_tree_json_round_trip():
    X, y = toy_data(d=5)
    tree = RegressionTree.fit(X[:, :5], y, max_leaves=8)
    again = RegressionTree.from_dict(tree.to_dict())
    assert np.allclose(tree.predict(X[:, :5]), again.predict(X[:, :5]))


def test_train_is_deterministic():
    X, y = toy_data()
    a = train_ranker(X, y, HP, seed=7)
    b = train_ranker(X, y, HP, seed=7)
    assert a.to_json() == b.to_json()
    c = train_ranker(X, y, HP, seed=8)
    assert c.to_json() != a.to_json()


def test_separable_toy_auc_one():
    X, y = toy_data()
    model = train_ranker(X, y, Hyperparams(n_bags=20, trees_per_bag=3, max_leaves=32), seed=0)
    scores = model.predict(X)
    pos = scores[y == 1]
    neg = scores[y == 0]
    # AUC 1.0: every positive scores above every negative
    assert pos.min() > neg.max()


def test_constant_labels_give_constant_model():
    X, _ = toy_data(n=50)
    model = train_ranker(X, np.ones(50), HP, seed=0)
    scores = model.predict(np.random.default_rng(1).random((10, 150)))
    assert np.allclose(scores, scores[0])
    assert model.feature_usage().sum() == 0


def test_empty_training_set_rejected():
    with pytest.raises(NoFailedBuildsError):
        train_ranker(np.zeros((0, 150)), np.zeros(0), HP)


def test_feature_usage_prefers_informative_feature():
    X, y = toy_data(seed=3)
    # stumps: a bag holding the informative feature always splits on it
    model = train_ranker(X, y, Hyperparams(n_bags=30, trees_per_bag=3, max_leaves=2), seed=3)
    usage = model.feature_usage()
    assert usage[0] > usage[1:].max()
    total_splits = sum(
        int((t.feature >= 0).sum()) for bag in model.bags for t in bag.trees
    )
    assert usage.sum() == total_splits


def test_constant_column_never_splits():
    X, y = toy_data()
    X[:, 10] = 3.14
    model = train_ranker(X, y, HP, seed=0)
    assert model.feature_usage()[10] == 0


def test_model_json_round_trip():
    X, y = toy_data(n=80)
    model = train_ranker(X, y, HP, seed=1)
    again = RankModel.from_json(model.to_json())
    probe = np.random.default_rng(0).random((20, 150))
    assert np.allclose(model.predict(probe), again.predict(probe))


def test_catalog_mismatch_rejected():
    X, y = toy_data(n=40)
    model = train_ranker(X, y, HP, seed=0)
    model.catalog_fingerprint = "deadbeef"
    with pytest.raises(CatalogMismatchError):
        model.predict(X)


def test_predict_tie_break_prefers_faster_then_lexicographic():
    X, y = toy_data(n=40)
    model = train_ranker(X, np.ones(40), HP, seed=0)  # constant scores
    values = np.zeros((3, 150))
    idx = CATALOG.index("TotalAvgExeTime")
    values[:, idx] = [5000.0, 2000.0, 2000.0]
    m = FeatureMatrix(build=1, tests=("a.java", "b.java", "c.java"), values=values)
    assert rank_tests(model, m) == ["b.java", "c.java", "a.java"]


def test_heuristic_rank_directions():
    values = np.zeros((3, 150))
    idx = CATALOG.index("TotalFailRate")
    values[:, idx] = [0.1, 0.9, 0.0]
    m = FeatureMatrix(build=1, tests=("a.java", "b.java", "c.java"), values=values)
    desc = heuristic_rank(m, "F_FailRate_Total:desc")
    assert desc == ["b.java", "a.java", "c.java"]
    asc = heuristic_rank(m, "F_FailRate_Total:asc")
    assert asc == list(reversed(desc))
    with pytest.raises(UnknownFeatureError):
        heuristic_rank(m, "NoSuchFeature:desc")
    with pytest.raises(UnknownFeatureError):
        heuristic_rank(m, "TotalFailRate:sideways")
