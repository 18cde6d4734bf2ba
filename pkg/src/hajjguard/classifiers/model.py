"""Trained-model wrapper: classifier + fitted feature pipeline + versioned
JSON persistence.

The single-file model format carries the fitted pipeline (vocabulary, idf
table, watchlist, metadata stats, feature flags) next to the classifier
parameters, plus a sha256 checksum over the canonical payload so truncated
or edited files are rejected whole. Numbers round-trip at full float64
precision, which makes reloaded models predict bit-identically.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace

import numpy as np

from ..corpus import AppRecord, DEFAULT_WATCHLIST, Label
from ..errors import ModelFormatError, TrainingError, UnsupportedVersionError
from ..features import (FeatureConfig, FeaturePipeline, MetadataStats, TfIdfModel)
from .forest import RFModel, TreeNode, predict_rf, train_rf
from .nb import NBModel, predict_nb, train_nb
from .svm import KernelSpec, SVMModel, predict_svm, resolve_gamma, train_svm_smo

MODEL_FORMAT_VERSION = "hajjguard-model/1"
ALGORITHMS = ("nb", "rf", "svm")

#: Grid-search optima used as the default hyperparameters per algorithm.
DEFAULT_PARAMS = {
    "nb": {"alpha": 0.5},
    "rf": {"n_estimators": 100, "max_depth": 20, "criterion": "entropy"},
    "svm": {"kernel": "rbf", "C": 10.0, "gamma": 0.1},
}


@dataclass(frozen=True)
class ModelSpec:
    """What to train: algorithm, hyperparameters, feature blocks, seed."""

    algorithm: str
    params: dict = field(default_factory=dict)
    feature_config: FeatureConfig = field(default_factory=FeatureConfig)
    watchlist: tuple = DEFAULT_WATCHLIST
    seed: int = 0

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise TrainingError(f"unknown algorithm {self.algorithm!r}")

    def resolved_params(self) -> dict:
        merged = dict(DEFAULT_PARAMS[self.algorithm])
        merged.update(self.params)
        return merged

    def with_params(self, overrides: dict) -> "ModelSpec":
        merged = dict(self.params)
        merged.update(overrides)
        return replace(self, params=merged)


@dataclass(frozen=True)
class Prediction:
    label: Label
    confidence: float
    score: float                # svm margin, nb posterior, rf vote fraction
    top_features: tuple         # ((name, weight), ...) descending


@dataclass
class TrainedModel:
    algorithm: str
    model: object
    pipeline: FeaturePipeline
    params: dict
    version: str = MODEL_FORMAT_VERSION

    def predict(self, record: AppRecord, top_k: int = 5) -> Prediction:
        x = self.pipeline.transform(record).to_dense()
        if self.algorithm == "nb":
            label, posterior = predict_nb(self.model, x)
            confidence = float(posterior[int(label)])
            score = confidence
        elif self.algorithm == "rf":
            label, fraction = predict_rf(self.model, x)
            confidence = fraction
            score = fraction
        else:
            label, margin, confidence = predict_svm(self.model, x)
            score = margin
        top = _top_features(self, x, label, top_k)
        return Prediction(label=label, confidence=confidence, score=score,
                          top_features=top)

    def predict_label(self, record: AppRecord) -> Label:
        return self.predict(record, top_k=0).label


def _top_features(tm: TrainedModel, x: np.ndarray, label: Label, top_k: int):
    """Per-feature pull toward the predicted class. Exact for NB and linear
    SVM; for RF and non-linear kernels this is a saliency heuristic that
    weights the record's active features."""
    if top_k <= 0:
        return ()
    names = tm.pipeline.feature_names()
    if tm.algorithm == "nb":
        delta = tm.model.log_likelihood[int(label)] - tm.model.log_likelihood[1 - int(label)]
        contrib = x * delta
    elif tm.algorithm == "rf":
        contrib = np.where(x != 0, tm.model.importances, 0.0)
    else:
        pseudo_w = tm.model.dual_coefs @ tm.model.support_vectors
        sign = 1.0 if label == Label.UNOFFICIAL else -1.0
        contrib = sign * pseudo_w * x
    order = np.argsort(-contrib)[:top_k]
    return tuple((names[i], float(contrib[i])) for i in order if contrib[i] > 0)


def train_model(records, labels, spec: ModelSpec) -> TrainedModel:
    """Fit the feature pipeline and the classifier on the same split."""
    records = list(records)
    labels = list(labels)
    if len(records) != len(labels):
        raise TrainingError("records and labels disagree in length")
    pipeline = FeaturePipeline(config=spec.feature_config,
                               watchlist=tuple(spec.watchlist)).fit(records)
    X = pipeline.transform_matrix(records)
    params = spec.resolved_params()

    if spec.algorithm == "nb":
        model = train_nb(X, labels, alpha=float(params["alpha"]))
    elif spec.algorithm == "rf":
        max_depth = params["max_depth"]
        model = train_rf(X, labels,
                         n_estimators=int(params["n_estimators"]),
                         max_depth=None if max_depth is None else int(max_depth),
                         criterion=params["criterion"],
                         seed=int(params.get("seed", spec.seed)))
    else:
        kernel = _build_kernel(params, X)
        model = train_svm_smo(X, labels,
                              C=float(params["C"]),
                              kernel=kernel,
                              tol=float(params.get("tol", 1e-3)),
                              max_passes=int(params.get("max_passes", 10)),
                              seed=int(params.get("seed", spec.seed)))
    return TrainedModel(algorithm=spec.algorithm, model=model,
                        pipeline=pipeline, params=params)


def _build_kernel(params: dict, X: np.ndarray) -> KernelSpec:
    kind = params["kernel"]
    if kind == "linear":
        # Grid candidates may pair the linear kernel with gamma values; they
        # are simply not part of the kernel.
        return KernelSpec(kind="linear")
    gamma = resolve_gamma(params.get("gamma", "scale"), X)
    if kind == "rbf":
        return KernelSpec(kind="rbf", gamma=gamma)
    if kind == "poly":
        return KernelSpec(kind="poly", gamma=gamma,
                          degree=int(params.get("degree", 3)),
                          coef0=float(params.get("coef0", 1.0)))
    raise TrainingError(f"unknown kernel {kind!r}")


# ---------------------------------------------------------------------------
# Persistence

def _tree_to_json(node: TreeNode):
    if node.is_leaf:
        return {"counts": list(node.counts)}
    return {"feature": node.feature, "threshold": node.threshold,
            "left": _tree_to_json(node.left), "right": _tree_to_json(node.right)}


def _tree_from_json(obj) -> TreeNode:
    if "counts" in obj:
        return TreeNode(counts=tuple(obj["counts"]))
    return TreeNode(feature=int(obj["feature"]), threshold=float(obj["threshold"]),
                    left=_tree_from_json(obj["left"]),
                    right=_tree_from_json(obj["right"]))


def _model_to_json(tm: TrainedModel) -> dict:
    m = tm.model
    if tm.algorithm == "nb":
        return {"type": "nb", "alpha": m.alpha,
                "log_prior": m.log_prior.tolist(),
                "log_likelihood": m.log_likelihood.tolist()}
    if tm.algorithm == "rf":
        return {"type": "rf", "n_estimators": m.n_estimators,
                "max_depth": m.max_depth, "criterion": m.criterion,
                "features_per_split": m.features_per_split,
                "tree_seeds": list(m.tree_seeds), "n_features": m.n_features,
                "importances": m.importances.tolist(),
                "trees": [_tree_to_json(t) for t in m.trees]}
    return {"type": "svm", "C": m.C, "bias": m.bias,
            "kernel": {"kind": m.kernel.kind, "gamma": m.kernel.gamma,
                       "degree": m.kernel.degree, "coef0": m.kernel.coef0},
            "support_vectors": m.support_vectors.tolist(),
            "dual_coefs": m.dual_coefs.tolist()}


def _model_from_json(obj) -> tuple:
    kind = obj["type"]
    if kind == "nb":
        return kind, NBModel(alpha=float(obj["alpha"]),
                             log_prior=np.array(obj["log_prior"]),
                             log_likelihood=np.array(obj["log_likelihood"]))
    if kind == "rf":
        return kind, RFModel(trees=tuple(_tree_from_json(t) for t in obj["trees"]),
                             n_estimators=int(obj["n_estimators"]),
                             max_depth=obj["max_depth"],
                             criterion=obj["criterion"],
                             features_per_split=int(obj["features_per_split"]),
                             tree_seeds=tuple(obj["tree_seeds"]),
                             n_features=int(obj["n_features"]),
                             importances=np.array(obj["importances"]))
    if kind == "svm":
        k = obj["kernel"]
        kernel = KernelSpec(kind=k["kind"], gamma=k["gamma"], degree=k["degree"],
                            coef0=k["coef0"])
        return kind, SVMModel(support_vectors=np.array(obj["support_vectors"]),
                              dual_coefs=np.array(obj["dual_coefs"]),
                              bias=float(obj["bias"]), kernel=kernel,
                              C=float(obj["C"]))
    raise ModelFormatError(f"unknown model type {kind!r}")


def _pipeline_to_json(pipeline: FeaturePipeline) -> dict:
    cfg = pipeline.config
    out = {
        "feature_config": {"use_text": cfg.use_text,
                           "use_permissions": cfg.use_permissions,
                           "use_metadata": cfg.use_metadata},
        "watchlist": list(pipeline.watchlist),
        "vocabulary": None, "idf": None, "document_frequency": None,
        "n_documents": None, "meta_stats": None,
    }
    if pipeline.tfidf is not None:
        vocab = pipeline.tfidf.vocabulary
        out["vocabulary"] = sorted(vocab, key=vocab.get)
        out["idf"] = pipeline.tfidf.idf.tolist()
        out["document_frequency"] = pipeline.tfidf.document_frequency.tolist()
        out["n_documents"] = pipeline.tfidf.n_documents
    if pipeline.meta_stats is not None:
        out["meta_stats"] = {"mins": pipeline.meta_stats.mins.tolist(),
                             "maxs": pipeline.meta_stats.maxs.tolist(),
                             "means": pipeline.meta_stats.means.tolist()}
    return out


def _pipeline_from_json(obj) -> FeaturePipeline:
    cfg = obj["feature_config"]
    pipeline = FeaturePipeline(
        config=FeatureConfig(use_text=cfg["use_text"],
                             use_permissions=cfg["use_permissions"],
                             use_metadata=cfg["use_metadata"]),
        watchlist=tuple(obj["watchlist"]))
    if obj["vocabulary"] is not None:
        terms = obj["vocabulary"]
        pipeline.tfidf = TfIdfModel(
            vocabulary={t: i for i, t in enumerate(terms)},
            document_frequency=np.array(obj["document_frequency"]),
            n_documents=int(obj["n_documents"]),
            idf=np.array(obj["idf"]))
    if obj["meta_stats"] is not None:
        ms = obj["meta_stats"]
        pipeline.meta_stats = MetadataStats(mins=np.array(ms["mins"]),
                                            maxs=np.array(ms["maxs"]),
                                            means=np.array(ms["means"]))
    return pipeline


def _checksum(payload: dict) -> str:
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def save_model(tm: TrainedModel, path):
    payload = {
        "version": tm.version,
        "label_convention": {"positive_class": "official",
                             "classes": ["official", "unofficial"]},
        "params": tm.params,
        "pipeline": _pipeline_to_json(tm.pipeline),
        "model": _model_to_json(tm),
    }
    document = dict(payload)
    document["checksum"] = _checksum(payload)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(document, fh, sort_keys=True)
        fh.write("\n")


def load_model(path) -> TrainedModel:
    """Load a model file, verifying version then checksum before any state
    is constructed; a bad file never yields a partial model."""
    try:
        with open(path, encoding="utf-8") as fh:
            document = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"corrupt model file: {exc.msg}") from exc
    if not isinstance(document, dict):
        raise ModelFormatError("corrupt model file: not a JSON object")
    version = document.get("version")
    if version != MODEL_FORMAT_VERSION:
        raise UnsupportedVersionError(
            f"unsupported model format version {version!r}, "
            f"this build reads {MODEL_FORMAT_VERSION!r}")
    stored = document.get("checksum")
    payload = {k: v for k, v in document.items() if k != "checksum"}
    if stored != _checksum(payload):
        raise ModelFormatError("model file failed its checksum")
    algorithm, model = _model_from_json(payload["model"])
    pipeline = _pipeline_from_json(payload["pipeline"])
    return TrainedModel(algorithm=algorithm, model=model, pipeline=pipeline,
                        params=payload.get("params", {}), version=version)
