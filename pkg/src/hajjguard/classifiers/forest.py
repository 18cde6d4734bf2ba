"""Random forest over impurity-split decision trees.

Each tree trains on a bootstrap resample and, at every node, considers a
random draw of ceil(sqrt(d)) features; scanning extends past that quota only
when none of the drawn features yields a positive impurity decrease, so a
usable split is never missed when one exists. Thresholds are midpoints of
adjacent observed values. All randomness flows from per-tree seeds derived
from the forest seed, which makes training order-independent and exactly
reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..corpus import Label
from ..errors import TrainingError


def impurity(class_counts, criterion: str) -> float:
    """Gini (1 - sum p_i^2) or entropy (-sum p_i log2 p_i, 0*log0 = 0)."""
    counts = np.asarray(class_counts, dtype=float)
    if np.any(counts < 0):
        raise ValueError("class counts must be non-negative")
    total = counts.sum()
    if total <= 0:
        raise ValueError("impurity undefined for an empty node")
    p = counts / total
    if criterion == "gini":
        return float(1.0 - np.sum(p ** 2))
    if criterion == "entropy":
        nz = p[p > 0]
        return float(-np.sum(nz * np.log2(nz)))
    raise ValueError(f"unknown criterion {criterion!r}")


@dataclass(frozen=True)
class TreeNode:
    """Leaf (``counts`` set) or internal split (feature/threshold/children)."""

    counts: tuple | None = None
    feature: int | None = None
    threshold: float | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.counts is not None


@dataclass(frozen=True)
class RFModel:
    trees: tuple
    n_estimators: int
    max_depth: int | None
    criterion: str
    features_per_split: int
    tree_seeds: tuple
    n_features: int
    importances: np.ndarray     # mean weighted impurity decrease per feature


def _impurity_arrays(c0, c1, criterion):
    total = c0 + c1
    p0 = c0 / total
    p1 = c1 / total
    if criterion == "gini":
        return 1.0 - p0 ** 2 - p1 ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        t0 = np.where(p0 > 0, p0 * np.log2(np.where(p0 > 0, p0, 1.0)), 0.0)
        t1 = np.where(p1 > 0, p1 * np.log2(np.where(p1 > 0, p1, 1.0)), 0.0)
    return -(t0 + t1)


def _feature_split(values, y, parent_impurity, criterion):
    """Best (decrease, threshold) for one feature, or None if the feature
    cannot reduce impurity. Candidate thresholds sit halfway between
    adjacent distinct observed values."""
    order = np.argsort(values, kind="stable")
    vs = values[order]
    ys = y[order]
    boundaries = np.nonzero(vs[1:] != vs[:-1])[0]
    if boundaries.size == 0:
        return None
    n = len(values)
    cum1 = np.cumsum(ys)
    n_left = boundaries + 1
    c1_left = cum1[boundaries]
    c0_left = n_left - c1_left
    n_right = n - n_left
    c1_right = cum1[-1] - c1_left
    c0_right = n_right - c1_right
    child = (n_left * _impurity_arrays(c0_left, c1_left, criterion)
             + n_right * _impurity_arrays(c0_right, c1_right, criterion)) / n
    decrease = parent_impurity - child
    best = int(np.argmax(decrease))
    if decrease[best] <= 0.0:
        return None
    i = boundaries[best]
    return float(decrease[best]), float((vs[i] + vs[i + 1]) / 2.0)


def _grow(X, y, depth, rng, max_depth, criterion, k_features, importance, n_root):
    counts = (int((y == 0).sum()), int((y == 1).sum()))
    if counts[0] == 0 or counts[1] == 0 or len(y) < 2:
        return TreeNode(counts=counts)
    if max_depth is not None and depth >= max_depth:
        return TreeNode(counts=counts)

    parent_impurity = impurity(counts, criterion)
    best = None
    for inspected, f in enumerate(rng.permutation(X.shape[1]), start=1):
        result = _feature_split(X[:, f], y, parent_impurity, criterion)
        if result is not None and (best is None or result[0] > best[0]):
            best = (result[0], int(f), result[1])
        if inspected >= k_features and best is not None:
            break
    if best is None:
        return TreeNode(counts=counts)

    decrease, feature, threshold = best
    importance[feature] += (len(y) / n_root) * decrease
    mask = X[:, feature] <= threshold
    left = _grow(X[mask], y[mask], depth + 1, rng, max_depth, criterion,
                 k_features, importance, n_root)
    right = _grow(X[~mask], y[~mask], depth + 1, rng, max_depth, criterion,
                  k_features, importance, n_root)
    return TreeNode(feature=feature, threshold=threshold, left=left, right=right)


def train_rf(X: np.ndarray, y, n_estimators: int, max_depth: int | None,
             criterion: str, seed: int) -> RFModel:
    X = np.asarray(X, dtype=float)
    y = np.asarray([int(v) for v in y])
    if n_estimators < 1:
        raise TrainingError(f"n_estimators must be >= 1, got {n_estimators}")
    if max_depth is not None and max_depth < 1:
        raise TrainingError(f"max_depth must be >= 1 or None, got {max_depth}")
    if criterion not in ("gini", "entropy"):
        raise TrainingError(f"criterion must be 'gini' or 'entropy', got {criterion!r}")
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise TrainingError("X and y shapes disagree")
    n, d = X.shape
    if n < 2:
        raise TrainingError("need at least 2 samples")
    if (y == 0).sum() == 0 or (y == 1).sum() == 0:
        raise TrainingError("both classes must be present in the training data")

    k_features = max(1, math.ceil(math.sqrt(d)))
    tree_seeds = tuple(int(s) for s in
                       np.random.SeedSequence(seed).generate_state(n_estimators))
    trees = []
    total_importance = np.zeros(d)
    for tree_seed in tree_seeds:
        rng = np.random.default_rng(tree_seed)
        idx = rng.integers(0, n, size=n)
        importance = np.zeros(d)
        trees.append(_grow(X[idx], y[idx], 0, rng, max_depth, criterion,
                           k_features, importance, n_root=n))
        total_importance += importance
    return RFModel(trees=tuple(trees), n_estimators=n_estimators,
                   max_depth=max_depth, criterion=criterion,
                   features_per_split=k_features, tree_seeds=tree_seeds,
                   n_features=d, importances=total_importance / n_estimators)


def _tree_vote(node: TreeNode, x) -> int:
    while not node.is_leaf:
        node = node.left if x[node.feature] <= node.threshold else node.right
    return 0 if node.counts[0] >= node.counts[1] else 1


def predict_rf(model: RFModel, x):
    """Majority vote over trees; (label, winning vote fraction). An exact
    tie goes to OFFICIAL."""
    x = np.asarray(x, dtype=float)
    unofficial = sum(_tree_vote(tree, x) for tree in model.trees)
    official = model.n_estimators - unofficial
    if official >= unofficial:
        return Label.OFFICIAL, official / model.n_estimators
    return Label.UNOFFICIAL, unofficial / model.n_estimators


def rf_feature_importance(model: RFModel) -> np.ndarray:
    """Mean impurity decrease per feature, normalized to sum to one.
    All-zero importances (no split anywhere) stay all-zero."""
    total = model.importances.sum()
    if total == 0:
        return np.zeros_like(model.importances)
    return model.importances / total
