"""Fitted feature pipeline: TF-IDF text block, binary watchlist-permission
block, and min-max scaled metadata block, concatenated in that order.

TF weighting is raw term count over total token count in the document, IDF
is the natural log of (corpus size / document frequency) with no smoothing;
document frequency can never be zero because the vocabulary is built from
the corpus itself. Out-of-vocabulary tokens still count toward the TF
denominator but emit no entry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .corpus import AppRecord
from .errors import ConfigError, TrainingError
from .textprep import Stoplist, StemmerRules, default_rules, default_stoplist, preprocess_text

#: Metadata block layout, fixed order.
META_FIELDS = ("download_count", "rating", "size_mb", "days_since_update",
               "permission_count")


@dataclass(frozen=True)
class FeatureConfig:
    use_text: bool = True
    use_permissions: bool = True
    use_metadata: bool = True

    def __post_init__(self):
        if not (self.use_text or self.use_permissions or self.use_metadata):
            raise ConfigError("at least one feature block must be enabled")


@dataclass(frozen=True)
class TfIdfModel:
    vocabulary: dict            # term -> dense column index, lexicographic
    document_frequency: np.ndarray
    n_documents: int
    idf: np.ndarray


@dataclass(frozen=True)
class MetadataStats:
    """Per-feature min/max/mean over the training split, in META_FIELDS
    order. Means back the service's defaults for absent optional fields."""
    mins: np.ndarray
    maxs: np.ndarray
    means: np.ndarray


@dataclass(frozen=True)
class FeatureVector:
    text: tuple                 # ((index, weight), ...) indices strictly increasing
    permissions: tuple          # 0/1 per watchlist slot
    metadata: tuple             # reals clamped to [0, 1]
    block_map: dict             # block name -> (offset, width)

    @property
    def width(self) -> int:
        return sum(w for _, w in self.block_map.values())

    def to_dense(self) -> np.ndarray:
        dense = np.zeros(self.width)
        off, w = self.block_map["text"]
        for idx, value in self.text:
            dense[off + idx] = value
        off, w = self.block_map["permissions"]
        if w:
            dense[off:off + w] = self.permissions
        off, w = self.block_map["metadata"]
        if w:
            dense[off:off + w] = self.metadata
        return dense


def fit_tfidf(token_docs) -> TfIdfModel:
    """Build vocabulary and IDF table from preprocessed token documents."""
    docs = list(token_docs)
    if not docs:
        raise TrainingError("cannot fit TF-IDF on an empty corpus")
    if all(not doc for doc in docs):
        raise TrainingError("cannot fit TF-IDF: every document is empty")
    terms = sorted({tok for doc in docs for tok in doc})
    vocabulary = {term: i for i, term in enumerate(terms)}
    df = np.zeros(len(terms))
    for doc in docs:
        for term in set(doc):
            df[vocabulary[term]] += 1
    n = len(docs)
    idf = np.array([math.log(n / d) for d in df])
    return TfIdfModel(vocabulary=vocabulary, document_frequency=df,
                      n_documents=n, idf=idf)


def transform_tfidf(model: TfIdfModel, tokens) -> tuple:
    """Sparse (index, weight) pairs for one document, index-sorted."""
    total = len(tokens)
    if total == 0:
        return ()
    counts = {}
    for tok in tokens:
        idx = model.vocabulary.get(tok)
        if idx is not None:
            counts[idx] = counts.get(idx, 0) + 1
    return tuple((idx, (counts[idx] / total) * model.idf[idx])
                 for idx in sorted(counts))


def encode_permissions(perms, watchlist) -> tuple:
    """Binary vector: slot k is 1 iff watchlist[k] is requested."""
    if not watchlist:
        raise ConfigError("permission watchlist must not be empty")
    return tuple(1 if p in perms else 0 for p in watchlist)


def fit_metadata_stats(records) -> MetadataStats:
    rows = np.array([_meta_raw(r) for r in records])
    return MetadataStats(mins=rows.min(axis=0), maxs=rows.max(axis=0),
                         means=rows.mean(axis=0))


def _meta_raw(record: AppRecord):
    return (float(record.download_count), record.rating, record.size_mb,
            float(record.days_since_update), float(len(record.permissions)))


def scale_metadata(record: AppRecord, stats: MetadataStats) -> tuple:
    """Min-max scale each metadata feature into [0, 1], clamping values
    outside the training range; a constant training feature maps to 0.5."""
    raw = _meta_raw(record)
    out = []
    for v, lo, hi in zip(raw, stats.mins, stats.maxs):
        if hi == lo:
            out.append(0.5)
        else:
            out.append(min(1.0, max(0.0, (v - lo) / (hi - lo))))
    return tuple(out)


@dataclass
class FeaturePipeline:
    """Everything needed to turn an AppRecord into a FeatureVector.

    Fit on training data only; immutable once fitted, so transform calls are
    safe from any number of threads. The text-prep rule tables are fixed
    package data and are not part of the fitted state.
    """

    config: FeatureConfig
    watchlist: tuple
    stoplist: Stoplist = field(default_factory=default_stoplist)
    rules: StemmerRules = field(default_factory=default_rules)
    tfidf: TfIdfModel | None = None
    meta_stats: MetadataStats | None = None

    def tokens(self, record: AppRecord):
        return preprocess_text(record.description, self.stoplist, self.rules)

    def fit(self, records) -> "FeaturePipeline":
        records = list(records)
        if not records:
            raise TrainingError("cannot fit feature pipeline on zero records")
        if self.config.use_text:
            self.tfidf = fit_tfidf([self.tokens(r) for r in records])
        if self.config.use_metadata:
            self.meta_stats = fit_metadata_stats(records)
        return self

    @property
    def fitted(self) -> bool:
        if self.config.use_text and self.tfidf is None:
            return False
        if self.config.use_metadata and self.meta_stats is None:
            return False
        return True

    def transform(self, record: AppRecord) -> FeatureVector:
        return assemble_features(record, self, self.config)

    def transform_matrix(self, records) -> np.ndarray:
        vectors = [self.transform(r).to_dense() for r in records]
        return np.array(vectors) if vectors else np.zeros((0, self.width))

    @property
    def width(self) -> int:
        text_w = len(self.tfidf.vocabulary) if self.config.use_text else 0
        perm_w = len(self.watchlist) if self.config.use_permissions else 0
        meta_w = len(META_FIELDS) if self.config.use_metadata else 0
        return text_w + perm_w + meta_w

    def feature_names(self) -> list:
        """Human-readable name per dense column, block order."""
        names = []
        if self.config.use_text:
            names.extend(sorted(self.tfidf.vocabulary, key=self.tfidf.vocabulary.get))
        if self.config.use_permissions:
            names.extend(self.watchlist)
        if self.config.use_metadata:
            names.extend(META_FIELDS)
        return names


def assemble_features(record: AppRecord, pipeline: FeaturePipeline,
                      config: FeatureConfig | None = None) -> FeatureVector:
    """Concatenate enabled blocks in text, permissions, metadata order.
    Disabled blocks contribute zero width; the block map records offsets."""
    if config is None:
        config = pipeline.config
    if not (config.use_text or config.use_permissions or config.use_metadata):
        raise ConfigError("at least one feature block must be enabled")
    if not pipeline.fitted:
        raise TrainingError("feature pipeline is not fitted")

    text = ()
    text_w = 0
    if config.use_text:
        text = transform_tfidf(pipeline.tfidf, pipeline.tokens(record))
        text_w = len(pipeline.tfidf.vocabulary)
    perms = ()
    perm_w = 0
    if config.use_permissions:
        perms = encode_permissions(record.permissions, pipeline.watchlist)
        perm_w = len(pipeline.watchlist)
    meta = ()
    meta_w = 0
    if config.use_metadata:
        meta = scale_metadata(record, pipeline.meta_stats)
        meta_w = len(META_FIELDS)

    block_map = {
        "text": (0, text_w),
        "permissions": (text_w, perm_w),
        "metadata": (text_w + perm_w, meta_w),
    }
    return FeatureVector(text=text, permissions=perms, metadata=meta,
                         block_map=block_map)
