"""Stratified k-fold cross-validation and exhaustive grid search.

Cross-validation refits the whole feature pipeline inside every fold, so no
vocabulary, idf or scaling statistic ever sees a held-out record; synonym
augmentation, when enabled, touches training folds only. Grid search
enumerates the full cartesian product in declared parameter order and keeps
a candidate only on strict improvement, so the first of tied maxima wins.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field

from .classifiers import ModelSpec, TrainedModel, train_model
from .corpus import Label, SynonymMap, augment_synonyms
from .errors import ConfigError, GridSearchError, TrainingError


@dataclass(frozen=True)
class FoldPlan:
    k: int
    assignments: tuple          # fold index per sample position
    seed: int

    def test_indices(self, fold: int):
        return [i for i, f in enumerate(self.assignments) if f == fold]

    def train_indices(self, fold: int):
        return [i for i, f in enumerate(self.assignments) if f != fold]


@dataclass(frozen=True)
class AugmentOptions:
    """Synonym augmentation applied to training folds during CV."""
    synonym_map: SynonymMap
    rate: float = 0.2
    copies: int = 1
    seed: int = 0
    stoplist: frozenset = frozenset()


@dataclass(frozen=True)
class CVResult:
    fold_scores: tuple
    mean: float
    std: float                  # population standard deviation
    predictions: tuple          # pooled held-out predictions, sample order


@dataclass(frozen=True)
class SearchResult:
    best_params: dict
    best_score: float
    candidates: tuple           # ((params, mean, std), ...) enumeration order
    model: TrainedModel         # trained on the full data with best_params


def stratified_k_fold(labels, k: int, seed: int) -> FoldPlan:
    """Shuffle within each class (derived RNG stream per class), then deal
    samples round-robin, carrying the dealing position across classes so
    both per-class and total fold sizes differ by at most one."""
    labels = [Label(int(v)) for v in labels]
    if k < 2:
        raise ConfigError(f"k must be >= 2, got {k}")
    by_class = {}
    for i, lab in enumerate(labels):
        by_class.setdefault(lab, []).append(i)
    for lab, idxs in sorted(by_class.items()):
        if len(idxs) < k:
            raise ConfigError(
                f"class {lab.name} has {len(idxs)} samples, fewer than k={k}")
    assignments = [0] * len(labels)
    position = 0
    for lab, idxs in sorted(by_class.items()):
        rng = random.Random(f"{seed}:class:{int(lab)}")
        shuffled = list(idxs)
        rng.shuffle(shuffled)
        for i in shuffled:
            assignments[i] = position % k
            position += 1
    return FoldPlan(k=k, assignments=tuple(assignments), seed=seed)


def _score(y_true, y_pred, metric: str) -> float:
    if metric == "accuracy":
        hits = sum(1 for t, p in zip(y_true, y_pred) if t == p)
        return hits / len(y_true)
    if metric == "f1":
        tp = sum(1 for t, p in zip(y_true, y_pred)
                 if t == Label.OFFICIAL and p == Label.OFFICIAL)
        fp = sum(1 for t, p in zip(y_true, y_pred)
                 if t == Label.UNOFFICIAL and p == Label.OFFICIAL)
        fn = sum(1 for t, p in zip(y_true, y_pred)
                 if t == Label.OFFICIAL and p == Label.UNOFFICIAL)
        if tp == 0:
            return 0.0
        precision = tp / (tp + fp)
        recall = tp / (tp + fn)
        return 2 * precision * recall / (precision + recall)
    raise ConfigError(f"unknown scoring metric {metric!r}")


def cross_validate(spec: ModelSpec, records, labels, plan: FoldPlan,
                   augment: AugmentOptions | None = None,
                   metric: str = "accuracy") -> CVResult:
    """Score ``spec`` across the fold plan.

    Per fold: fit pipeline and classifier on the k-1 training folds only
    (optionally augmented), score the held-out fold. Returns per-fold
    scores, their mean, the population std, and the pooled held-out
    predictions aligned with the input order.
    """
    records = list(records)
    labels = [Label(int(v)) for v in labels]
    if len(records) != len(labels):
        raise ConfigError("records and labels disagree in length")
    if len(plan.assignments) != len(records):
        raise ConfigError("fold plan does not cover this dataset")

    fold_scores = []
    predictions = [None] * len(records)
    for fold in range(plan.k):
        train_idx = plan.train_indices(fold)
        test_idx = plan.test_indices(fold)
        if not test_idx:
            raise ConfigError(f"fold {fold} holds no samples")
        train_records = [records[i] for i in train_idx]
        train_labels = [labels[i] for i in train_idx]
        if len(set(train_labels)) < 2:
            raise TrainingError(f"fold {fold}: training split has a single class")
        if augment is not None:
            combined = augment_synonyms(train_records, augment.synonym_map,
                                        augment.rate, augment.seed,
                                        stoplist=augment.stoplist,
                                        copies=augment.copies)
            copies = combined[len(train_records):]
            for copy in copies:
                if copy.label is None:
                    raise TrainingError("augmented record lost its label")
            train_records = combined
            train_labels = train_labels + [c.label for c in copies]
        tm = train_model(train_records, train_labels, spec)
        fold_pred = [tm.predict_label(records[i]) for i in test_idx]
        for i, pred in zip(test_idx, fold_pred):
            predictions[i] = pred
        fold_scores.append(_score([labels[i] for i in test_idx], fold_pred, metric))

    mean = sum(fold_scores) / len(fold_scores)
    var = sum((s - mean) ** 2 for s in fold_scores) / len(fold_scores)
    return CVResult(fold_scores=tuple(fold_scores), mean=mean,
                    std=math.sqrt(var), predictions=tuple(predictions))


def enumerate_grid(grid: dict):
    """Cartesian product of candidate dicts, in declared parameter order."""
    if not grid:
        raise ConfigError("parameter grid must not be empty")
    names = list(grid)
    for name in names:
        if not grid[name]:
            raise ConfigError(f"parameter {name!r} has no candidates")
    for combo in itertools.product(*(grid[name] for name in names)):
        yield dict(zip(names, combo))


def grid_search(spec: ModelSpec, grid: dict, records, labels, plan: FoldPlan,
                augment: AugmentOptions | None = None,
                metric: str = "accuracy") -> SearchResult:
    """Exhaustive search over ``grid``; ties keep the earlier candidate.

    Every candidate is cross-validated with the same fold plan. The final
    model is retrained on the full data with the winning parameters. A
    candidate that fails to train aborts the whole search, identifying the
    candidate.
    """
    best_params = None
    best_score = 0.0
    evaluated = []
    for candidate in enumerate_grid(grid):
        try:
            result = cross_validate(spec.with_params(candidate), records, labels,
                                    plan, augment=augment, metric=metric)
        except Exception as exc:
            raise GridSearchError(candidate, exc) from exc
        evaluated.append((candidate, result.mean, result.std))
        if result.mean > best_score:
            best_score = result.mean
            best_params = candidate
    if best_params is None:
        # Every candidate scored 0.0; keep the first one.
        best_params = evaluated[0][0]
        best_score = evaluated[0][1]
    final = train_model(records, labels, spec.with_params(best_params))
    return SearchResult(best_params=best_params, best_score=best_score,
                        candidates=tuple(evaluated), model=final)
