"""Support vector machine trained with simplified SMO pair updates.

Classes map internally to y = -1 (official) and y = +1 (unofficial). The
optimizer sweeps the training set looking for KKT violations beyond ``tol``
and resolves each against a randomly chosen partner; it exits once
``max_passes`` consecutive sweeps change nothing AND the KKT conditions
verify against the final state. The bias is then re-estimated by averaging
the margin-vector conditions, kept only if the KKT check still holds.
A hard sweep cap turns pathological non-convergence into an explicit error
carrying the worst violation seen.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

import numpy as np

from ..corpus import Label
from ..errors import ConvergenceError, TrainingError


@dataclass(frozen=True)
class KernelSpec:
    kind: str                   # linear | rbf | poly
    gamma: float | None = None
    degree: int | None = None
    coef0: float | None = None

    def __post_init__(self):
        if self.kind == "linear":
            if any(v is not None for v in (self.gamma, self.degree, self.coef0)):
                raise TrainingError("linear kernel takes no parameters")
        elif self.kind == "rbf":
            if self.gamma is None or self.gamma <= 0:
                raise TrainingError("rbf kernel requires gamma > 0")
            if self.degree is not None or self.coef0 is not None:
                raise TrainingError("rbf kernel takes only gamma")
        elif self.kind == "poly":
            if self.gamma is None or self.gamma <= 0:
                raise TrainingError("poly kernel requires gamma > 0")
            if self.degree is None or self.degree < 2:
                raise TrainingError("poly kernel requires integer degree >= 2")
            if self.coef0 is None:
                raise TrainingError("poly kernel requires coef0")
        else:
            raise TrainingError(f"unknown kernel kind {self.kind!r}")


def resolve_gamma(gamma, X: np.ndarray) -> float:
    """Turn a gamma setting into a number: 'scale' is 1/(d*var(X)), 'auto'
    is 1/d, numbers pass through."""
    d = X.shape[1]
    if gamma == "scale":
        var = float(np.asarray(X, dtype=float).var())
        return 1.0 / (d * var) if var > 0 else 1.0 / d
    if gamma == "auto":
        return 1.0 / d
    value = float(gamma)
    if value <= 0:
        raise TrainingError(f"gamma must be positive, got {gamma}")
    return value


def kernel_eval(spec: KernelSpec, a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"kernel arguments disagree in shape: {a.shape} vs {b.shape}")
    if spec.kind == "linear":
        return float(a @ b)
    if spec.kind == "rbf":
        diff = a - b
        return float(math.exp(-spec.gamma * float(diff @ diff)))
    return float((spec.gamma * float(a @ b) + spec.coef0) ** spec.degree)


def kernel_matrix(spec: KernelSpec, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if spec.kind == "linear":
        return A @ B.T
    if spec.kind == "rbf":
        sq = (np.sum(A ** 2, axis=1)[:, None] + np.sum(B ** 2, axis=1)[None, :]
              - 2.0 * (A @ B.T))
        np.maximum(sq, 0.0, out=sq)
        return np.exp(-spec.gamma * sq)
    return (spec.gamma * (A @ B.T) + spec.coef0) ** spec.degree


@dataclass(frozen=True)
class SVMModel:
    support_vectors: np.ndarray  # dense feature rows, only alpha > 0 kept
    dual_coefs: np.ndarray       # alpha_i * y_i
    bias: float
    kernel: KernelSpec
    C: float


def _kkt_violation(alpha, yf, C, tol) -> float:
    """Worst violation of the tolerance-relaxed KKT conditions (<= 0 means
    every condition holds within tol)."""
    worst = 0.0
    low = (1.0 - yf) - tol      # applies while alpha can still grow
    high = (yf - 1.0) - tol     # applies while alpha can still shrink
    can_grow = alpha < C - 1e-9
    can_shrink = alpha > 1e-9
    if can_grow.any():
        worst = max(worst, float(low[can_grow].max()))
    if can_shrink.any():
        worst = max(worst, float(high[can_shrink].max()))
    return worst


def _bias_window(alpha, yv, margins, C, tol):
    """Feasible bias interval (lo, hi): the duals are optimal within tol
    exactly when some b satisfies every relaxed KKT condition, i.e. when
    lo <= hi. ``margins`` excludes the bias term."""
    lo, hi = -math.inf, math.inf
    can_grow = alpha < C - 1e-9
    can_shrink = alpha > 1e-9
    pos, neg = yv > 0, yv < 0
    m = margins
    sel = can_grow & pos        # need m + b >= 1 - tol
    if sel.any():
        lo = max(lo, float(((1.0 - tol) - m[sel]).max()))
    sel = can_shrink & neg      # need -(m + b) <= 1 + tol
    if sel.any():
        lo = max(lo, float((-(1.0 + tol) - m[sel]).max()))
    sel = can_shrink & pos      # need m + b <= 1 + tol
    if sel.any():
        hi = min(hi, float(((1.0 + tol) - m[sel]).min()))
    sel = can_grow & neg        # need -(m + b) >= 1 - tol
    if sel.any():
        hi = min(hi, float((-(1.0 - tol) - m[sel]).min()))
    return lo, hi


def train_svm_smo(X: np.ndarray, y, C: float, kernel: KernelSpec,
                  tol: float = 1e-3, max_passes: int = 10, seed: int = 0,
                  max_sweeps: int = 5000) -> SVMModel:
    """Solve the soft-margin dual with simplified SMO.

    Exit state guarantees: 0 <= alpha_i <= C, sum(alpha_i * y_i) ~ 0, and
    the complementarity conditions hold within ``tol`` for every training
    point. Raises :class:`ConvergenceError` if ``max_sweeps`` full sweeps do
    not reach that state.
    """
    X = np.asarray(X, dtype=float)
    labels = np.asarray([int(v) for v in y])
    if C <= 0:
        raise TrainingError(f"C must be positive, got {C}")
    if X.ndim != 2 or X.shape[0] != labels.shape[0]:
        raise TrainingError("X and y shapes disagree")
    if (labels == 0).sum() == 0 or (labels == 1).sum() == 0:
        raise TrainingError("both classes must be present in the training data")

    n = X.shape[0]
    yv = np.where(labels == 1, 1.0, -1.0)
    K = kernel_matrix(kernel, X, X)
    alpha = np.zeros(n)
    b = 0.0
    margins = np.zeros(n)       # (alpha * yv) @ K, updated incrementally
    rng = random.Random(seed)

    def try_pair(i, j, e_i):
        nonlocal b, margins
        if j == i:
            return False
        e_j = margins[j] + b - yv[j]
        a_i_old, a_j_old = alpha[i], alpha[j]
        if yv[i] != yv[j]:
            low = max(0.0, a_j_old - a_i_old)
            high = min(C, C + a_j_old - a_i_old)
        else:
            low = max(0.0, a_i_old + a_j_old - C)
            high = min(C, a_i_old + a_j_old)
        if low == high:
            return False
        eta = 2.0 * K[i, j] - K[i, i] - K[j, j]
        if eta >= 0:
            return False
        a_j = a_j_old - yv[j] * (e_i - e_j) / eta
        a_j = min(high, max(low, a_j))
        if abs(a_j - a_j_old) < 1e-5:
            return False
        a_i = a_i_old + yv[i] * yv[j] * (a_j_old - a_j)
        alpha[i], alpha[j] = a_i, a_j
        margins += (a_i - a_i_old) * yv[i] * K[i] + (a_j - a_j_old) * yv[j] * K[j]
        b1 = (b - e_i - yv[i] * (a_i - a_i_old) * K[i, i]
              - yv[j] * (a_j - a_j_old) * K[i, j])
        b2 = (b - e_j - yv[i] * (a_i - a_i_old) * K[i, j]
              - yv[j] * (a_j - a_j_old) * K[j, j])
        if 0 < a_i < C:
            b = b1
        elif 0 < a_j < C:
            b = b2
        else:
            b = (b1 + b2) / 2.0
        return True

    passes = 0
    sweeps = 0
    while True:
        sweeps += 1
        if sweeps > max_sweeps:
            margins = (alpha * yv) @ K
            lo, hi = _bias_window(alpha, yv, margins, C, tol)
            raise ConvergenceError("SMO failed to satisfy KKT conditions",
                                   violation=max(0.0, lo - hi))
        changed = 0
        for i in range(n):
            e_i = margins[i] + b - yv[i]
            r_i = yv[i] * e_i
            if not ((r_i < -tol and alpha[i] < C) or (r_i > tol and alpha[i] > 0)):
                continue
            # second-choice heuristic: the partner with the largest error
            # gap moves alpha furthest; fall back to a random partner
            errors = margins + b - yv
            j = int(np.argmax(np.abs(errors - e_i)))
            if try_pair(i, j, e_i):
                changed += 1
                continue
            j = rng.randrange(n - 1)
            if j >= i:
                j += 1
            if try_pair(i, j, e_i):
                changed += 1
        passes = passes + 1 if changed == 0 else 0
        if passes >= max_passes:
            # recompute margins exactly: incremental updates drift a little
            margins = (alpha * yv) @ K
            lo, hi = _bias_window(alpha, yv, margins, C, tol)
            if lo <= hi:
                break           # some bias satisfies every condition: optimal

    # Bias from averaged margin-support-vector conditions (0 < alpha < C),
    # clamped into the feasible window; the window midpoint covers the case
    # of no margin vectors.
    on_margin = (alpha > 1e-9) & (alpha < C - 1e-9)
    if on_margin.any():
        b = float(np.mean(yv[on_margin] - margins[on_margin]))
    else:
        b = (lo + hi) / 2.0 if math.isfinite(lo) and math.isfinite(hi) else b
    b = min(max(b, lo), hi)

    support = alpha > 1e-12
    return SVMModel(support_vectors=X[support].copy(),
                    dual_coefs=(alpha * yv)[support].copy(),
                    bias=b, kernel=kernel, C=C)


def decision_function(model: SVMModel, X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if model.support_vectors.shape[0] == 0:
        return np.full(X.shape[0], model.bias)
    K = kernel_matrix(model.kernel, X, model.support_vectors)
    return K @ model.dual_coefs + model.bias


def predict_svm(model: SVMModel, x):
    """(label, margin, confidence). Positive margin means unofficial; an
    exact zero goes to OFFICIAL. Confidence squashes |margin| through a
    logistic into [0.5, 1)."""
    margin = float(decision_function(model, np.asarray(x, dtype=float))[0])
    label = Label.UNOFFICIAL if margin > 0 else Label.OFFICIAL
    confidence = 1.0 / (1.0 + math.exp(-abs(margin)))
    return label, margin, confidence
