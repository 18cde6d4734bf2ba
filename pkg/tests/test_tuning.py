import random
from dataclasses import replace

import pytest

from hajjguard.classifiers import ModelSpec
from hajjguard.corpus import DEFAULT_SYNONYMS, Label
from hajjguard.errors import ConfigError, GridSearchError
from hajjguard.features import FeatureConfig, FeaturePipeline
from hajjguard.textprep import default_stoplist
from hajjguard.tuning import (AugmentOptions, cross_validate, enumerate_grid,
                              grid_search, stratified_k_fold)
from tests.test_corpus import make_record

RF_FAST = {"n_estimators": 5, "max_depth": 3, "criterion": "gini"}


class TestStratifiedKFold:
    def test_balanced_200_into_10(self, reference_labels):
        plan = stratified_k_fold(reference_labels, 10, seed=1)
        for fold in range(10):
            idx = plan.test_indices(fold)
            assert len(idx) == 20
            per_class = sum(1 for i in idx if reference_labels[i] == Label.OFFICIAL)
            assert per_class == 10

    def test_smallest_case(self):
        plan = stratified_k_fold([0, 0, 1, 1], 2, seed=0)
        for fold in range(2):
            idx = plan.test_indices(fold)
            assert len(idx) == 2
            assert len({plan.assignments[i] for i in idx}) == 1

    def test_deterministic(self, reference_labels):
        a = stratified_k_fold(reference_labels, 10, seed=5)
        b = stratified_k_fold(reference_labels, 10, seed=5)
        assert a.assignments == b.assignments

    def test_exact_partition(self, reference_labels):
        plan = stratified_k_fold(reference_labels, 7, seed=2)
        seen = sorted(i for f in range(7) for i in plan.test_indices(f))
        assert seen == list(range(len(reference_labels)))

    @pytest.mark.parametrize("n0,n1,k", [(11, 7, 3), (25, 26, 4), (9, 30, 5)])
    def test_size_bounds_on_unbalanced_data(self, n0, n1, k):
        rng = random.Random(3)
        labels = [0] * n0 + [1] * n1
        rng.shuffle(labels)
        plan = stratified_k_fold(labels, k, seed=9)
        sizes = [len(plan.test_indices(f)) for f in range(k)]
        assert max(sizes) - min(sizes) <= 1
        for klass in (0, 1):
            counts = [sum(1 for i in plan.test_indices(f) if labels[i] == klass)
                      for f in range(k)]
            assert max(counts) - min(counts) <= 1

    def test_class_smaller_than_k(self):
        with pytest.raises(ConfigError):
            stratified_k_fold([0, 1, 1, 1], 2, seed=0)

    def test_k_below_two(self):
        with pytest.raises(ConfigError):
            stratified_k_fold([0, 1], 1, seed=0)


def constant_feature_records(n):
    """Identical features with alternating labels; no model can beat chance."""
    out = []
    for i in range(n):
        out.append(make_record(app_id=f"c{i}", name=f"Constant {i}",
                               description="umrah paket hotel",
                               label=Label(i % 2)))
    return out


class TestCrossValidate:
    def test_uninformative_data_scores_half(self, registry):
        records = constant_feature_records(24)
        labels = [r.label for r in records]
        plan = stratified_k_fold(labels, 4, seed=0)
        spec = ModelSpec(algorithm="nb", watchlist=registry.high_risk_permissions)
        result = cross_validate(spec, records, labels, plan)
        assert result.fold_scores == (0.5, 0.5, 0.5, 0.5)
        assert result.std == 0.0

    def test_separable_data_scores_one(self, registry):
        # descriptions from disjoint vocabularies: any text model is perfect
        records, labels = [], []
        for i in range(24):
            official = i % 2 == 0
            desc = "resmi izin kemenag" if official else "murah promo diskon"
            records.append(make_record(app_id=f"s{i}", name=f"Sep {i}",
                                       description=desc))
            labels.append(Label.OFFICIAL if official else Label.UNOFFICIAL)
        plan = stratified_k_fold(labels, 4, seed=1)
        spec = ModelSpec(algorithm="nb",
                         feature_config=FeatureConfig(True, False, False),
                         watchlist=registry.high_risk_permissions, seed=2)
        result = cross_validate(spec, records, labels, plan)
        assert result.mean == 1.0

    def test_repeat_runs_identical(self, tiny_records, tiny_labels, registry):
        plan = stratified_k_fold(tiny_labels, 3, seed=4)
        spec = ModelSpec(algorithm="svm",
                         params={"kernel": "rbf", "C": 10.0, "gamma": 0.1},
                         watchlist=registry.high_risk_permissions, seed=4)
        a = cross_validate(spec, tiny_records, tiny_labels, plan)
        b = cross_validate(spec, tiny_records, tiny_labels, plan)
        assert a == b

    def test_pooled_predictions_cover_dataset(self, tiny_records, tiny_labels, registry):
        plan = stratified_k_fold(tiny_labels, 4, seed=5)
        spec = ModelSpec(algorithm="nb", watchlist=registry.high_risk_permissions)
        result = cross_validate(spec, tiny_records, tiny_labels, plan)
        assert len(result.predictions) == len(tiny_records)
        assert all(p is not None for p in result.predictions)

    def test_population_std(self, registry, tiny_records, tiny_labels):
        plan = stratified_k_fold(tiny_labels, 4, seed=6)
        spec = ModelSpec(algorithm="nb", watchlist=registry.high_risk_permissions)
        result = cross_validate(spec, tiny_records, tiny_labels, plan)
        mean = sum(result.fold_scores) / len(result.fold_scores)
        var = sum((s - mean) ** 2 for s in result.fold_scores) / len(result.fold_scores)
        assert result.std == pytest.approx(var ** 0.5, abs=1e-12)

    def test_sentinel_never_leaks_into_fold_vocabulary(self, tiny_records,
                                                       tiny_labels, registry):
        # plant a sentinel token in one record, then make sure the pipeline
        # fitted on the other folds never sees it
        records = list(tiny_records)
        records[0] = replace(records[0],
                             description=records[0].description + " zzsentinelzz")
        plan = stratified_k_fold(tiny_labels, 4, seed=7)
        fold = plan.assignments[0]
        train_records = [records[i] for i in plan.train_indices(fold)]
        pipeline = FeaturePipeline(config=FeatureConfig(),
                                   watchlist=registry.high_risk_permissions)
        pipeline.fit(train_records)
        assert "zzsentinelzz" not in pipeline.tfidf.vocabulary

    def test_augmentation_trains_clean(self, tiny_records, tiny_labels, registry):
        plan = stratified_k_fold(tiny_labels, 3, seed=8)
        spec = ModelSpec(algorithm="nb", watchlist=registry.high_risk_permissions)
        augment = AugmentOptions(synonym_map=DEFAULT_SYNONYMS, rate=0.3,
                                 copies=1, seed=8,
                                 stoplist=default_stoplist().words)
        result = cross_validate(spec, tiny_records, tiny_labels, plan,
                                augment=augment)
        again = cross_validate(spec, tiny_records, tiny_labels, plan,
                               augment=augment)
        assert result == again
        assert len(result.predictions) == len(tiny_records)


class TestGridSearch:
    def test_singleton_grid(self, tiny_records, tiny_labels, registry):
        plan = stratified_k_fold(tiny_labels, 3, seed=9)
        spec = ModelSpec(algorithm="nb", watchlist=registry.high_risk_permissions)
        result = grid_search(spec, {"alpha": [0.5]}, tiny_records, tiny_labels, plan)
        assert result.best_params == {"alpha": 0.5}
        assert result.best_score == pytest.approx(
            cross_validate(spec.with_params({"alpha": 0.5}), tiny_records,
                           tiny_labels, plan).mean)

    def test_tie_keeps_earlier_candidate(self, tiny_records, tiny_labels, registry):
        plan = stratified_k_fold(tiny_labels, 3, seed=10)
        spec = ModelSpec(algorithm="nb", watchlist=registry.high_risk_permissions)
        # identical candidates score identically; strict improvement keeps
        # the first one
        result = grid_search(spec, {"alpha": [0.7, 0.7, 0.5]},
                             tiny_records, tiny_labels, plan)
        tied = [params for params, mean, _ in result.candidates
                if mean == result.best_score]
        assert result.best_params == tied[0]

    def test_enumeration_order_and_count(self):
        grid = {"a": [1, 2], "b": ["x", "y", "z"]}
        combos = list(enumerate_grid(grid))
        assert len(combos) == 6
        assert combos[0] == {"a": 1, "b": "x"}
        assert combos[1] == {"a": 1, "b": "y"}
        assert combos[-1] == {"a": 2, "b": "z"}

    def test_matches_brute_force_oracle(self, tiny_records, tiny_labels, registry):
        plan = stratified_k_fold(tiny_labels, 3, seed=11)
        spec = ModelSpec(algorithm="rf", params={"criterion": "gini"},
                         watchlist=registry.high_risk_permissions, seed=11)
        grid = {"n_estimators": [1, 3], "max_depth": [1, 2, 3]}
        result = grid_search(spec, grid, tiny_records, tiny_labels, plan)

        best_params, best_score = None, 0.0
        for candidate in enumerate_grid(grid):
            mean = cross_validate(spec.with_params(candidate), tiny_records,
                                  tiny_labels, plan).mean
            if mean > best_score:
                best_params, best_score = candidate, mean
        assert result.best_params == best_params
        assert result.best_score == pytest.approx(best_score)
        assert len(result.candidates) == 6

    def test_failing_candidate_identified(self, tiny_records, tiny_labels, registry):
        plan = stratified_k_fold(tiny_labels, 3, seed=12)
        spec = ModelSpec(algorithm="rf", watchlist=registry.high_risk_permissions)
        grid = {"n_estimators": [2], "max_depth": [2], "criterion": ["bogus"]}
        with pytest.raises(GridSearchError) as err:
            grid_search(spec, grid, tiny_records, tiny_labels, plan)
        assert err.value.params["criterion"] == "bogus"

    def test_empty_grid_rejected(self, tiny_records, tiny_labels, registry):
        plan = stratified_k_fold(tiny_labels, 3, seed=13)
        spec = ModelSpec(algorithm="nb", watchlist=registry.high_risk_permissions)
        with pytest.raises(ConfigError):
            grid_search(spec, {}, tiny_records, tiny_labels, plan)
