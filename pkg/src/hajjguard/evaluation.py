"""Confusion matrices, derived metrics, ablation harness, feature
importance ranking, and report emission (CSV plus aligned text tables).

Metrics are always computed from the confusion counts. Note that published
summary figures elsewhere do not always match their own confusion matrices;
e.g. a widely circulated benchmark table reports 92.3/91.5/92.6/92.0
(accuracy/precision/recall/F1) next to a matrix of TP=92 FN=8 FP=7 TN=93,
which actually yields 92.5/92.93/92.0/92.46. This module never copies
summary numbers; it derives everything from counts.

The positive class is OFFICIAL throughout. Degenerate ratios (empty
denominator) are reported as 0.0 and flagged rather than NaN, so reports
stay well-formed.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .classifiers import TrainedModel, rf_feature_importance
from .corpus import Label
from .errors import ConfigError, UnsupportedModelError
from .features import FeatureConfig, META_FIELDS
from .tuning import AugmentOptions, FoldPlan, ModelSpec, cross_validate


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int                     # official predicted official
    fn: int                     # official predicted unofficial
    fp: int                     # unofficial predicted official
    tn: int                     # unofficial predicted unofficial

    @property
    def total(self) -> int:
        return self.tp + self.fn + self.fp + self.tn


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    precision: float
    recall: float
    f1: float
    degenerate: tuple = ()      # names of metrics with empty denominators


@dataclass(frozen=True)
class AblationRow:
    label: str
    accuracy: float
    precision: float
    recall: float


def confusion_from_predictions(y_true, y_pred) -> ConfusionMatrix:
    y_true = [Label(int(v)) for v in y_true]
    y_pred = [Label(int(v)) for v in y_pred]
    if len(y_true) != len(y_pred):
        raise ConfigError("y_true and y_pred disagree in length")
    if not y_true:
        raise ConfigError("cannot build a confusion matrix from zero predictions")
    tp = fn = fp = tn = 0
    for t, p in zip(y_true, y_pred):
        if t == Label.OFFICIAL:
            if p == Label.OFFICIAL:
                tp += 1
            else:
                fn += 1
        else:
            if p == Label.OFFICIAL:
                fp += 1
            else:
                tn += 1
    return ConfusionMatrix(tp=tp, fn=fn, fp=fp, tn=tn)


def compute_metrics(cm: ConfusionMatrix) -> Metrics:
    """Accuracy, precision, recall, F1 from counts; degenerate ratios are
    0.0 with a flag instead of NaN."""
    if cm.total <= 0:
        raise ConfigError("confusion matrix is empty")
    degenerate = []
    accuracy = (cm.tp + cm.tn) / cm.total
    if cm.tp + cm.fp > 0:
        precision = cm.tp / (cm.tp + cm.fp)
    else:
        precision = 0.0
        degenerate.append("precision")
    if cm.tp + cm.fn > 0:
        recall = cm.tp / (cm.tp + cm.fn)
    else:
        recall = 0.0
        degenerate.append("recall")
    if precision + recall > 0:
        f1 = 2 * precision * recall / (precision + recall)
    else:
        f1 = 0.0
        degenerate.append("f1")
    return Metrics(accuracy=accuracy, precision=precision, recall=recall,
                   f1=f1, degenerate=tuple(degenerate))


#: The three standard ablation configurations, in report order.
ABLATION_CONFIGS = (
    ("Metadata Only (Permissions)", FeatureConfig(use_text=False,
                                                  use_permissions=True,
                                                  use_metadata=False)),
    ("Text Only (TF-IDF)", FeatureConfig(use_text=True, use_permissions=False,
                                         use_metadata=False)),
    ("Hybrid", FeatureConfig(use_text=True, use_permissions=True,
                             use_metadata=True)),
)


def config_label(config: FeatureConfig) -> str:
    for label, known in ABLATION_CONFIGS:
        if known == config:
            return label
    parts = [name for flag, name in ((config.use_text, "text"),
                                     (config.use_permissions, "permissions"),
                                     (config.use_metadata, "metadata")) if flag]
    return "+".join(parts)


def run_ablation(records, labels, spec: ModelSpec, configs, plan: FoldPlan,
                 augment: AugmentOptions | None = None) -> list:
    """Cross-validate ``spec`` once per feature configuration.

    Every configuration reuses the same fold plan and seeds, so rows are
    comparable. Row metrics come from the pooled held-out predictions.
    """
    if not configs:
        raise ConfigError("ablation needs at least one feature configuration")
    rows = []
    for config in configs:
        result = cross_validate(
            ModelSpec(algorithm=spec.algorithm, params=spec.params,
                      feature_config=config, watchlist=spec.watchlist,
                      seed=spec.seed),
            records, labels, plan, augment=augment)
        metrics = compute_metrics(confusion_from_predictions(labels, result.predictions))
        rows.append(AblationRow(label=config_label(config),
                                accuracy=metrics.accuracy,
                                precision=metrics.precision,
                                recall=metrics.recall))
    return rows


def rank_feature_importance(model: TrainedModel, vocabulary=None,
                            watchlist=None) -> list:
    """Descending (feature name, weight) pairs, weights normalized to sum
    to one.

    RF uses impurity importances, NB the absolute class log-likelihood ratio
    per feature, and a linear-kernel SVM its primal weight magnitudes.
    Non-linear SVM kernels have no per-feature weights and are rejected.
    """
    pipeline = model.pipeline
    if vocabulary is None and pipeline.config.use_text:
        vocab = pipeline.tfidf.vocabulary
        vocabulary = sorted(vocab, key=vocab.get)
    if watchlist is None:
        watchlist = pipeline.watchlist
    names = []
    if pipeline.config.use_text:
        names.extend(vocabulary)
    if pipeline.config.use_permissions:
        names.extend(watchlist)
    if pipeline.config.use_metadata:
        names.extend(META_FIELDS)
    if model.algorithm == "rf":
        weights = rf_feature_importance(model.model)
    elif model.algorithm == "nb":
        weights = np.abs(model.model.log_likelihood[0] - model.model.log_likelihood[1])
    elif model.algorithm == "svm":
        if model.model.kernel.kind != "linear":
            raise UnsupportedModelError(
                f"feature importance is undefined for the "
                f"{model.model.kernel.kind!r} kernel; use a linear kernel, "
                f"a random forest, or naive bayes")
        weights = np.abs(model.model.dual_coefs @ model.model.support_vectors)
    else:
        raise UnsupportedModelError(f"unknown algorithm {model.algorithm!r}")
    if len(names) != len(weights):
        raise ConfigError("feature names disagree with model width")
    total = float(weights.sum())
    if total > 0:
        weights = weights / total
    order = np.argsort(-weights, kind="stable")
    return [(names[i], float(weights[i])) for i in order]


# ---------------------------------------------------------------------------
# Report emission

def write_metrics_csv(rows, path):
    """rows: (model name, Metrics) pairs."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["model", "accuracy", "precision", "recall", "f1"])
        for name, m in rows:
            writer.writerow([name, f"{m.accuracy:.6f}", f"{m.precision:.6f}",
                             f"{m.recall:.6f}", f"{m.f1:.6f}"])


def write_ablation_csv(rows, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["feature_set", "accuracy", "precision", "recall"])
        for row in rows:
            writer.writerow([row.label, f"{row.accuracy:.6f}",
                             f"{row.precision:.6f}", f"{row.recall:.6f}"])


def write_importance_csv(ranked, path, limit=None):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rank", "feature", "weight"])
        for rank, (name, weight) in enumerate(ranked[:limit], start=1):
            writer.writerow([rank, name, f"{weight:.6f}"])


def format_table(headers, rows) -> str:
    """Aligned text table; numbers are rendered by the caller."""
    cells = [[str(c) for c in row] for row in rows]
    widths = [max(len(h), *(len(r[i]) for r in cells)) if cells else len(h)
              for i, h in enumerate(headers)]
    def line(parts):
        return "  ".join(p.ljust(w) for p, w in zip(parts, widths)).rstrip()
    out = [line(headers), line(["-" * w for w in widths])]
    out.extend(line(r) for r in cells)
    return "\n".join(out)


def format_metrics_table(rows) -> str:
    body = [(name, f"{m.accuracy:.4f}", f"{m.precision:.4f}",
             f"{m.recall:.4f}", f"{m.f1:.4f}") for name, m in rows]
    return format_table(["model", "accuracy", "precision", "recall", "f1"], body)


def format_confusion_table(cm: ConfusionMatrix) -> str:
    rows = [
        ("actual official", cm.tp, cm.fn),
        ("actual unofficial", cm.fp, cm.tn),
    ]
    return format_table(["", "pred official", "pred unofficial"], rows)


def format_ablation_table(rows) -> str:
    body = [(r.label, f"{r.accuracy:.4f}", f"{r.precision:.4f}",
             f"{r.recall:.4f}") for r in rows]
    return format_table(["feature set", "accuracy", "precision", "recall"], body)


def format_importance_table(ranked, limit=15) -> str:
    body = [(rank, name, f"{weight:.4f}")
            for rank, (name, weight) in enumerate(ranked[:limit], start=1)]
    return format_table(["rank", "feature", "weight"], body)
