import numpy as np
import pytest

from hajjguard.classifiers import (RFModel, TreeNode, impurity, predict_rf,
                                   rf_feature_importance, train_rf)
from hajjguard.corpus import Label
from hajjguard.errors import TrainingError


def separable_data(n=40, d=4, key=2, seed=0):
    """Class is decided by feature ``key``; all other features constant."""
    rng = np.random.default_rng(seed)
    X = np.full((n, d), 7.0)
    y = rng.integers(0, 2, size=n)
    while len(set(y.tolist())) < 2:
        y = rng.integers(0, 2, size=n)
    X[:, key] = np.where(y == 1, rng.uniform(5, 6, n), rng.uniform(1, 2, n))
    return X, y.tolist()


def tree_depth(node):
    if node.is_leaf:
        return 0
    return 1 + max(tree_depth(node.left), tree_depth(node.right))


class TestImpurity:
    def test_pure_node_gini(self):
        assert impurity((10, 0), "gini") == 0.0

    def test_balanced_gini(self):
        assert impurity((5, 5), "gini") == pytest.approx(0.5)

    def test_balanced_entropy(self):
        assert impurity((5, 5), "entropy") == pytest.approx(1.0)

    def test_empty_node_rejected(self):
        with pytest.raises(ValueError):
            impurity((0, 0), "gini")

    def test_unknown_criterion(self):
        with pytest.raises(ValueError):
            impurity((1, 1), "mse")


class TestTraining:
    def test_separating_feature_used_by_every_tree(self):
        X, y = separable_data(key=2)
        model = train_rf(X, y, n_estimators=20, max_depth=None,
                         criterion="gini", seed=3)
        assert all(t.feature == 2 for t in model.trees)
        preds = [predict_rf(model, x)[0] for x in X]
        assert preds == [Label(v) for v in y]

    def test_pure_bootstrap_gives_leaf(self):
        X = np.array([[0.0], [1.0]])
        model = train_rf(X, [0, 1], n_estimators=12, max_depth=None,
                         criterion="gini", seed=1)
        # with 2 samples some bootstraps contain one class only
        assert any(t.is_leaf for t in model.trees)

    def test_paper_optimum_params_accepted(self, tiny_records, registry):
        from hajjguard.classifiers import ModelSpec, train_model
        spec = ModelSpec(algorithm="rf",
                         params={"n_estimators": 100, "max_depth": 20,
                                 "criterion": "entropy"},
                         watchlist=registry.high_risk_permissions, seed=5)
        tm = train_model(tiny_records, [r.label for r in tiny_records], spec)
        assert tm.model.n_estimators == 100
        assert tm.model.criterion == "entropy"

    def test_max_depth_respected(self):
        rng = np.random.default_rng(4)
        X = rng.uniform(0, 1, size=(60, 5))
        y = (X[:, 0] + X[:, 1] > 1).astype(int).tolist()
        model = train_rf(X, y, n_estimators=15, max_depth=2,
                         criterion="entropy", seed=9)
        assert all(tree_depth(t) <= 2 for t in model.trees)

    def test_deterministic_per_seed(self):
        X, y = separable_data(seed=6)
        a = train_rf(X, y, 10, 5, "gini", seed=11)
        b = train_rf(X, y, 10, 5, "gini", seed=11)
        assert a.tree_seeds == b.tree_seeds
        rng = np.random.default_rng(0)
        for _ in range(10):
            x = rng.uniform(0, 8, size=X.shape[1])
            assert predict_rf(a, x) == predict_rf(b, x)

    @pytest.mark.parametrize("kwargs", [
        dict(n_estimators=0, max_depth=5, criterion="gini", seed=0),
        dict(n_estimators=5, max_depth=0, criterion="gini", seed=0),
        dict(n_estimators=5, max_depth=5, criterion="bogus", seed=0),
    ])
    def test_invalid_params(self, kwargs):
        X, y = separable_data()
        with pytest.raises(TrainingError):
            train_rf(X, y, **kwargs)

    def test_single_class_rejected(self):
        X = np.zeros((4, 2))
        with pytest.raises(TrainingError):
            train_rf(X, [0, 0, 0, 0], 5, 5, "gini", seed=0)


class TestPrediction:
    def test_unanimous_vote(self):
        X, y = separable_data(key=0, d=1)
        model = train_rf(X, y, n_estimators=9, max_depth=None,
                         criterion="gini", seed=2)
        label, fraction = predict_rf(model, np.array([5.5]))
        assert label == Label.UNOFFICIAL
        assert fraction == 1.0

    def test_tie_goes_official(self):
        stump_official = TreeNode(counts=(1, 0))
        stump_unofficial = TreeNode(counts=(0, 1))
        model = RFModel(trees=(stump_official, stump_unofficial),
                        n_estimators=2, max_depth=None, criterion="gini",
                        features_per_split=1, tree_seeds=(0, 1), n_features=1,
                        importances=np.zeros(1))
        label, fraction = predict_rf(model, np.zeros(1))
        assert label == Label.OFFICIAL
        assert fraction == 0.5

    def test_winner_fraction_bounds(self):
        X, y = separable_data(seed=8)
        model = train_rf(X, y, n_estimators=11, max_depth=3, criterion="gini", seed=8)
        rng = np.random.default_rng(1)
        for _ in range(20):
            _, fraction = predict_rf(model, rng.uniform(0, 8, X.shape[1]))
            assert 0.5 <= fraction <= 1.0

    def test_invariant_to_tree_order(self):
        X, y = separable_data(seed=12)
        model = train_rf(X, y, n_estimators=10, max_depth=4, criterion="gini", seed=12)
        reversed_model = RFModel(trees=tuple(reversed(model.trees)),
                                 n_estimators=model.n_estimators,
                                 max_depth=model.max_depth,
                                 criterion=model.criterion,
                                 features_per_split=model.features_per_split,
                                 tree_seeds=model.tree_seeds,
                                 n_features=model.n_features,
                                 importances=model.importances)
        rng = np.random.default_rng(3)
        for _ in range(15):
            x = rng.uniform(0, 8, X.shape[1])
            assert predict_rf(model, x) == predict_rf(reversed_model, x)


class TestImportance:
    def test_sums_to_one(self):
        X, y = separable_data(seed=13)
        model = train_rf(X, y, 15, None, "entropy", seed=13)
        assert rf_feature_importance(model).sum() == pytest.approx(1.0, abs=1e-9)

    def test_unused_feature_zero(self):
        X, y = separable_data(key=1, seed=14)
        model = train_rf(X, y, 15, None, "gini", seed=14)
        weights = rf_feature_importance(model)
        assert weights[0] == 0.0
        assert weights[3] == 0.0

    def test_single_discriminator_gets_all_weight(self):
        X, y = separable_data(key=3, seed=15)
        model = train_rf(X, y, 20, None, "gini", seed=15)
        weights = rf_feature_importance(model)
        assert weights[3] == pytest.approx(1.0, abs=1e-9)
