import hashlib
import json

import pytest

from hajjguard.classifiers import load_model
from hajjguard.cli import main
from hajjguard.corpus import load_dataset


def sha(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    """Small generated dataset + registry shared by the CLI tests."""
    root = tmp_path_factory.mktemp("cli-data")
    data = root / "apps.jsonl"
    registry = root / "registry.json"
    code = main(["gen-data", "--seed", "7", "--n-official", "25",
                 "--n-unofficial", "25", "--out", str(data),
                 "--registry-out", str(registry)])
    assert code == 0
    return data, registry


class TestGenData:
    def test_writes_requested_records(self, tmp_path):
        out = tmp_path / "d.jsonl"
        assert main(["gen-data", "--seed", "42", "--out", str(out)]) == 0
        records = load_dataset(out)
        assert len(records) == 200

    def test_deterministic_bytes(self, tmp_path):
        a = tmp_path / "a.jsonl"
        b = tmp_path / "b.jsonl"
        main(["gen-data", "--seed", "5", "--out", str(a)])
        main(["gen-data", "--seed", "5", "--out", str(b)])
        assert a.read_bytes() == b.read_bytes()

    def test_missing_seed_is_usage_error(self, tmp_path):
        assert main(["gen-data", "--out", str(tmp_path / "x.jsonl")]) == 2

    def test_manifest_written(self, tmp_path):
        out = tmp_path / "d.jsonl"
        main(["gen-data", "--seed", "3", "--out", str(out)])
        manifest = json.loads((tmp_path / "run-manifest.json").read_text())
        assert manifest["command"] == "gen-data"
        assert manifest["seed"] == 3
        assert "hajjguard" in manifest["versions"]


class TestDefaultGrids:
    def test_svm_grid_enumerates_48_candidates(self):
        from hajjguard.cli import DEFAULT_GRIDS
        from hajjguard.tuning import enumerate_grid
        assert len(list(enumerate_grid(DEFAULT_GRIDS["svm"]))) == 48
        assert len(list(enumerate_grid(DEFAULT_GRIDS["rf"]))) == 24
        assert len(list(enumerate_grid(DEFAULT_GRIDS["nb"]))) == 3


class TestUsage:
    def test_unknown_subcommand(self):
        assert main(["frobnicate"]) == 2

    def test_no_subcommand(self):
        assert main([]) == 2

    def test_version_flag(self, capsys):
        assert main(["--version"]) == 0


class TestTrainPredict:
    def test_train_writes_loadable_model(self, dataset, tmp_path):
        data, registry = dataset
        out = tmp_path / "run"
        code = main(["train", "--dataset", str(data), "--registry", str(registry),
                     "--algorithm", "nb", "--seed", "1", "--out", str(out)])
        assert code == 0
        tm = load_model(out / "model.json")
        assert tm.algorithm == "nb"
        assert (out / "run-manifest.json").exists()

    def test_predict_one_line_per_record(self, dataset, tmp_path, capsys):
        data, registry = dataset
        out = tmp_path / "run"
        main(["train", "--dataset", str(data), "--registry", str(registry),
              "--algorithm", "nb", "--seed", "1", "--out", str(out)])
        pred_file = tmp_path / "preds.jsonl"
        code = main(["predict", "--model", str(out / "model.json"),
                     "--in", str(data), "--out", str(pred_file)])
        assert code == 0
        lines = pred_file.read_text().strip().splitlines()
        records = load_dataset(data)
        assert len(lines) == len(records)
        first = json.loads(lines[0])
        assert first["label"] in ("official", "unofficial")
        assert 0.5 <= first["confidence"] <= 1.0
        assert "top_features" in first

    def test_inputs_never_mutated(self, dataset, tmp_path):
        data, registry = dataset
        before = sha(data), sha(registry)
        out = tmp_path / "run"
        main(["train", "--dataset", str(data), "--registry", str(registry),
              "--algorithm", "nb", "--seed", "1", "--out", str(out)])
        assert (sha(data), sha(registry)) == before

    def test_missing_dataset_is_domain_error(self, tmp_path):
        code = main(["train", "--dataset", str(tmp_path / "nope.jsonl"),
                     "--seed", "1", "--out", str(tmp_path / "run")])
        assert code == 1


class TestEvaluate:
    def test_metrics_csv(self, dataset, tmp_path):
        data, registry = dataset
        out = tmp_path / "eval"
        code = main(["evaluate", "--dataset", str(data), "--registry", str(registry),
                     "--models", "nb", "--folds", "3", "--seed", "2",
                     "--out", str(out)])
        assert code == 0
        lines = (out / "metrics.csv").read_text().strip().splitlines()
        assert lines[0] == "model,accuracy,precision,recall,f1"
        assert lines[1].startswith("nb,")
        assert (out / "metrics.txt").exists()


class TestGridSearchCommand:
    def test_search_outputs(self, dataset, tmp_path, capsys):
        data, registry = dataset
        out = tmp_path / "gs"
        config = tmp_path / "run.json"
        config.write_text(json.dumps({
            "algorithm": "nb",
            "grid": {"alpha": [0.1, 0.5, 1.0]},
        }))
        code = main(["grid-search", "--dataset", str(data), "--registry",
                     str(registry), "--config", str(config), "--folds", "3",
                     "--seed", "4", "--out", str(out)])
        assert code == 0
        printed = capsys.readouterr().out
        assert "best params" in printed
        lines = (out / "search.csv").read_text().strip().splitlines()
        assert len(lines) == 4  # header + 3 candidates
        assert load_model(out / "model.json").algorithm == "nb"


class TestAblateImportance:
    def test_ablation_rows(self, dataset, tmp_path):
        data, registry = dataset
        out = tmp_path / "ablate"
        code = main(["ablate", "--dataset", str(data), "--registry", str(registry),
                     "--algorithm", "nb", "--folds", "3", "--seed", "5",
                     "--out", str(out)])
        assert code == 0
        lines = (out / "ablation.csv").read_text().strip().splitlines()
        assert len(lines) == 4
        assert lines[1].startswith("Metadata Only (Permissions),")

    def test_importance_csv(self, dataset, tmp_path):
        data, registry = dataset
        run = tmp_path / "run"
        config = tmp_path / "run.json"
        config.write_text(json.dumps(
            {"params": {"n_estimators": 10, "max_depth": 4, "criterion": "gini"},
             "algorithm": "rf"}))
        main(["train", "--dataset", str(data), "--registry", str(registry),
              "--config", str(config), "--seed", "6", "--out", str(run)])
        out = tmp_path / "imp"
        code = main(["importance", "--model", str(run / "model.json"),
                     "--out", str(out)])
        assert code == 0
        lines = (out / "importance.csv").read_text().strip().splitlines()
        assert lines[0] == "rank,feature,weight"
        assert len(lines) > 5
