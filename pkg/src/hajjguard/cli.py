"""Command-line entry point.

Subcommands map one-to-one onto library operations: gen-data, train,
evaluate, grid-search, ablate, importance, predict, serve. Every run writes
a ``run-manifest.json`` (resolved config, seed, versions) into its output
directory; reports are deterministic for a fixed seed, so reruns are
byte-identical. Exit codes: 0 success, 1 domain error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .classifiers import (DEFAULT_PARAMS, MODEL_FORMAT_VERSION, ModelSpec,
                          load_model, save_model, train_model)
from .corpus import (DEFAULT_SYNONYMS, Label, apply_labeling_criteria,
                     clean_dataset, default_generator_config, default_registry,
                     generate_synthetic, load_dataset, load_registry,
                     record_to_json, save_dataset, save_registry)
from .errors import ConfigError, HajjGuardError
from .evaluation import (ABLATION_CONFIGS, compute_metrics,
                         confusion_from_predictions, format_ablation_table,
                         format_confusion_table, format_importance_table,
                         format_metrics_table, rank_feature_importance,
                         run_ablation, write_ablation_csv, write_importance_csv,
                         write_metrics_csv)
from .features import FeatureConfig
from .textprep import default_stoplist
from .tuning import AugmentOptions, cross_validate, grid_search, stratified_k_fold
from .service import serve as serve_http

#: Default hyperparameter grids, mirroring the documented search spaces.
DEFAULT_GRIDS = {
    "svm": {"kernel": ["linear", "rbf", "poly"],
            "C": [0.1, 1.0, 10.0, 100.0],
            "gamma": ["scale", "auto", 0.1, 0.01]},
    "rf": {"n_estimators": [50, 100, 200],
           "max_depth": [None, 10, 20, 30],
           "criterion": ["gini", "entropy"]},
    "nb": {"alpha": [0.1, 0.5, 1.0]},
}


def _load_config(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc.msg}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    return cfg


def _merged(args, key, default=None):
    """Flag value if given, else config file value, else default."""
    name = key.replace("-", "_")
    value = getattr(args, name, None)
    if value is not None:
        return value
    return getattr(args, "_config", {}).get(name, default)


def _require_seed(args) -> int:
    seed = _merged(args, "seed")
    if seed is None:
        print("error: a --seed is required (no wall-clock defaults)", file=sys.stderr)
        raise SystemExit(2)
    return int(seed)


def _out_dir(args) -> Path:
    out = Path(_merged(args, "out", "out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _feature_config(args) -> FeatureConfig:
    cfg = getattr(args, "_config", {}).get("features", {})
    return FeatureConfig(use_text=cfg.get("use_text", True),
                         use_permissions=cfg.get("use_permissions", True),
                         use_metadata=cfg.get("use_metadata", True))


def _augment_options(args, seed) -> AugmentOptions | None:
    cfg = getattr(args, "_config", {}).get("augment", {})
    if not cfg.get("enabled", False):
        return None
    return AugmentOptions(synonym_map=DEFAULT_SYNONYMS,
                          rate=float(cfg.get("rate", 0.2)),
                          copies=int(cfg.get("copies", 1)),
                          seed=int(cfg.get("seed", seed)),
                          stoplist=default_stoplist().words)


def _write_manifest(out_dir: Path, command: str, resolved: dict, seed):
    manifest = {
        "command": command,
        "config": resolved,
        "seed": seed,
        "versions": {"hajjguard": __version__,
                     "model_format": MODEL_FORMAT_VERSION,
                     "python": ".".join(str(v) for v in sys.version_info[:3])},
    }
    with open(out_dir / "run-manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_labeled_dataset(args):
    dataset_path = _merged(args, "dataset")
    if dataset_path is None:
        raise ConfigError("a dataset path is required (--dataset or config)")
    records = clean_dataset(load_dataset(dataset_path))
    registry_path = _merged(args, "registry")
    registry = load_registry(registry_path) if registry_path else default_registry()
    labels = []
    for record in records:
        if record.label is not None:
            labels.append(record.label)
        else:
            labels.append(apply_labeling_criteria(record, registry).label)
    return records, labels, registry


def _model_spec(args, registry, algorithm=None) -> ModelSpec:
    cfg = getattr(args, "_config", {})
    algo = algorithm or _merged(args, "algorithm", "svm")
    # config params apply only to the algorithm they were written for
    params = {}
    if cfg.get("params") and cfg.get("algorithm", algo) == algo:
        params = dict(cfg["params"])
    seed = int(_merged(args, "seed", 0) or 0)
    return ModelSpec(algorithm=algo, params=params,
                     feature_config=_feature_config(args),
                     watchlist=registry.high_risk_permissions, seed=seed)


# ---------------------------------------------------------------------------
# Subcommands

def cmd_gen_data(args) -> int:
    seed = _require_seed(args)
    out_path = Path(_merged(args, "out", "dataset.jsonl"))
    out_path.parent.mkdir(parents=True, exist_ok=True)
    # only pass what the caller actually set; the generator owns the defaults
    overrides = {}
    for key, cast in (("n-official", int), ("n-unofficial", int),
                      ("p-highrisk-official", float),
                      ("p-highrisk-unofficial", float), ("noise-rate", float)):
        value = _merged(args, key)
        if value is not None:
            overrides[key.replace("-", "_")] = cast(value)
    config = default_generator_config(seed=seed, **overrides)
    records = generate_synthetic(config)
    save_dataset(records, out_path)
    if args.registry_out:
        save_registry(default_registry(), args.registry_out)
    _write_manifest(out_path.parent, "gen-data",
                    {"out": str(out_path), "n_official": config.n_official,
                     "n_unofficial": config.n_unofficial,
                     "p_highrisk_official": config.p_highrisk_official,
                     "p_highrisk_unofficial": config.p_highrisk_unofficial,
                     "noise_rate": config.noise_rate}, seed)
    print(f"wrote {len(records)} records to {out_path}")
    return 0


def cmd_train(args) -> int:
    seed = _require_seed(args)
    out_dir = _out_dir(args)
    records, labels, registry = _load_labeled_dataset(args)
    spec = _model_spec(args, registry)
    tm = train_model(records, labels, spec)
    model_path = out_dir / "model.json"
    save_model(tm, model_path)
    _write_manifest(out_dir, "train",
                    {"dataset": str(_merged(args, "dataset")),
                     "algorithm": spec.algorithm,
                     "params": tm.params}, seed)
    print(f"trained {spec.algorithm} on {len(records)} records -> {model_path}")
    return 0


def cmd_evaluate(args) -> int:
    seed = _require_seed(args)
    out_dir = _out_dir(args)
    folds = int(_merged(args, "folds", 10))
    records, labels, registry = _load_labeled_dataset(args)
    plan = stratified_k_fold(labels, folds, seed)
    augment = _augment_options(args, seed)

    models_arg = _merged(args, "models", "nb,rf,svm")
    names = [m.strip() for m in str(models_arg).split(",") if m.strip()]
    rows = []
    for name in names:
        spec = _model_spec(args, registry, algorithm=name)
        result = cross_validate(spec, records, labels, plan, augment=augment)
        cm = confusion_from_predictions(labels, result.predictions)
        metrics = compute_metrics(cm)
        rows.append((name, metrics))
        print(f"\n{name}: CV mean accuracy {result.mean:.4f} "
              f"(std {result.std:.4f}) over {folds} folds")
        print(format_confusion_table(cm))
    write_metrics_csv(rows, out_dir / "metrics.csv")
    table = format_metrics_table(rows)
    (out_dir / "metrics.txt").write_text(table + "\n", encoding="utf-8")
    print("\n" + table)
    _write_manifest(out_dir, "evaluate",
                    {"dataset": str(_merged(args, "dataset")),
                     "models": names, "folds": folds}, seed)
    return 0


def cmd_grid_search(args) -> int:
    seed = _require_seed(args)
    out_dir = _out_dir(args)
    folds = int(_merged(args, "folds", 10))
    records, labels, registry = _load_labeled_dataset(args)
    plan = stratified_k_fold(labels, folds, seed)
    spec = _model_spec(args, registry)
    grid = getattr(args, "_config", {}).get("grid") or DEFAULT_GRIDS[spec.algorithm]
    result = grid_search(spec, grid, records, labels, plan,
                         augment=_augment_options(args, seed))

    import csv
    with open(out_dir / "search.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["params", "mean", "std"])
        for params, mean, std in result.candidates:
            writer.writerow([json.dumps(params, sort_keys=True),
                             f"{mean:.6f}", f"{std:.6f}"])
    save_model(result.model, out_dir / "model.json")
    _write_manifest(out_dir, "grid-search",
                    {"dataset": str(_merged(args, "dataset")),
                     "algorithm": spec.algorithm, "grid": grid,
                     "folds": folds, "best_params": result.best_params,
                     "best_score": result.best_score}, seed)
    print(f"evaluated {len(result.candidates)} candidates")
    print(f"best params: {json.dumps(result.best_params, sort_keys=True)}")
    print(f"best CV score: {result.best_score:.4f}")
    return 0


def cmd_ablate(args) -> int:
    seed = _require_seed(args)
    out_dir = _out_dir(args)
    folds = int(_merged(args, "folds", 10))
    records, labels, registry = _load_labeled_dataset(args)
    plan = stratified_k_fold(labels, folds, seed)
    spec = _model_spec(args, registry)
    configs = [config for _, config in ABLATION_CONFIGS]
    rows = run_ablation(records, labels, spec, configs, plan,
                        augment=_augment_options(args, seed))
    write_ablation_csv(rows, out_dir / "ablation.csv")
    table = format_ablation_table(rows)
    (out_dir / "ablation.txt").write_text(table + "\n", encoding="utf-8")
    print(table)
    _write_manifest(out_dir, "ablate",
                    {"dataset": str(_merged(args, "dataset")),
                     "algorithm": spec.algorithm, "folds": folds}, seed)
    return 0


def cmd_importance(args) -> int:
    out_dir = _out_dir(args)
    tm = load_model(args.model)
    ranked = rank_feature_importance(tm)
    write_importance_csv(ranked, out_dir / "importance.csv")
    print(format_importance_table(ranked))
    _write_manifest(out_dir, "importance",
                    {"model": str(args.model)}, None)
    return 0


def cmd_predict(args) -> int:
    tm = load_model(args.model)
    records = load_dataset(args.infile)
    lines = []
    for record in records:
        prediction = tm.predict(record, top_k=5)
        lines.append(json.dumps({
            "app_id": record.app_id,
            "label": prediction.label.name.lower(),
            "confidence": prediction.confidence,
            "top_features": [[n, w] for n, w in prediction.top_features],
        }))
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text("\n".join(lines) + "\n", encoding="utf-8")
        print(f"wrote {len(lines)} predictions to {args.out}")
    else:
        for line in lines:
            print(line)
    return 0


def cmd_serve(args) -> int:
    tm = load_model(args.model)
    print(f"serving on {args.host}:{args.port} (model {tm.algorithm}, "
          f"format {tm.version})")
    serve_http(tm, args.host, args.port)
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hajjguard",
        description="Official/unofficial Hajj and Umrah travel-app classifier")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_dataset=True):
        p.add_argument("--config", help="run config JSON file")
        p.add_argument("--seed", type=int, help="RNG seed (required, no default)")
        p.add_argument("--folds", type=int, help="cross-validation fold count")
        p.add_argument("--out", help="output directory")
        if needs_dataset:
            p.add_argument("--dataset", help="JSON-lines dataset path")
            p.add_argument("--registry", help="registry snapshot JSON path")

    p = sub.add_parser("gen-data", help="generate the seeded synthetic dataset")
    p.add_argument("--config", help="run config JSON file")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output JSON-lines file")
    p.add_argument("--n-official", type=int, dest="n_official")
    p.add_argument("--n-unofficial", type=int, dest="n_unofficial")
    p.add_argument("--p-highrisk-official", type=float, dest="p_highrisk_official")
    p.add_argument("--p-highrisk-unofficial", type=float, dest="p_highrisk_unofficial")
    p.add_argument("--noise-rate", type=float, dest="noise_rate")
    p.add_argument("--registry-out", dest="registry_out",
                   help="also write the matching registry snapshot here")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="train one model on the full dataset")
    common(p)
    p.add_argument("--algorithm", choices=["nb", "rf", "svm"])
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="cross-validated metrics per model")
    common(p)
    p.add_argument("--models", help="comma-separated subset of nb,rf,svm")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("grid-search", help="exhaustive hyperparameter search")
    common(p)
    p.add_argument("--algorithm", choices=["nb", "rf", "svm"])
    p.set_defaults(func=cmd_grid_search)

    p = sub.add_parser("ablate", help="feature-block ablation study")
    common(p)
    p.add_argument("--algorithm", choices=["nb", "rf", "svm"])
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("importance", help="ranked feature importance report")
    p.add_argument("--model", required=True, help="trained model JSON file")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_importance)

    p = sub.add_parser("predict", help="label a JSON-lines file of records")
    p.add_argument("--model", required=True, help="trained model JSON file")
    p.add_argument("--in", dest="infile", required=True,
                   help="JSON-lines records to classify")
    p.add_argument("--out", help="output JSON-lines file (default stdout)")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("serve", help="run the HTTP verification service")
    p.add_argument("--model", required=True, help="trained model JSON file")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else int(exc.code)
    if getattr(args, "config", None):
        try:
            args._config = _load_config(args.config)
        except HajjGuardError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
    else:
        args._config = {}
    try:
        return args.func(args)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else int(exc.code)
    except HajjGuardError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
