"""Multinomial Naive Bayes over non-negative feature mass.

Likelihoods are class-conditional feature-mass fractions with additive
smoothing, which keeps the model well-defined on fractional inputs (TF-IDF
weights, binary permission slots, scaled metadata).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..corpus import Label
from ..errors import TrainingError


@dataclass(frozen=True)
class NBModel:
    alpha: float
    log_prior: np.ndarray       # shape (2,), classes ordered (official, unofficial)
    log_likelihood: np.ndarray  # shape (2, n_features)


def train_nb(X: np.ndarray, y, alpha: float) -> NBModel:
    """Fit priors and smoothed per-class feature-mass likelihoods.

    Requires alpha > 0, at least one sample of each class, and non-negative
    features.
    """
    if alpha <= 0:
        raise TrainingError(f"alpha must be positive, got {alpha}")
    X = np.asarray(X, dtype=float)
    y = np.asarray([int(v) for v in y])
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise TrainingError("X and y shapes disagree")
    if np.any(X < 0):
        raise TrainingError("naive bayes requires non-negative feature values")
    n, d = X.shape
    counts = np.array([(y == 0).sum(), (y == 1).sum()])
    if counts.min() == 0:
        raise TrainingError("both classes must be present in the training data")

    log_prior = np.log(counts / n)
    mass = np.vstack([X[y == 0].sum(axis=0), X[y == 1].sum(axis=0)])
    smoothed = mass + alpha
    log_likelihood = np.log(smoothed / smoothed.sum(axis=1, keepdims=True))
    return NBModel(alpha=alpha, log_prior=log_prior, log_likelihood=log_likelihood)


def predict_nb(model: NBModel, x: np.ndarray):
    """Return (label, posterior per class). Posterior is normalized to sum
    to one; an exact tie goes to OFFICIAL (the lower class index)."""
    x = np.asarray(x, dtype=float)
    joint = model.log_prior + model.log_likelihood @ x
    shifted = joint - joint.max()
    posterior = np.exp(shifted)
    posterior /= posterior.sum()
    label = Label.OFFICIAL if posterior[0] >= posterior[1] else Label.UNOFFICIAL
    return label, posterior
