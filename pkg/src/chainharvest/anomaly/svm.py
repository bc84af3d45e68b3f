"""Supervised SVM trained on cluster labels, one-vs-rest.

Each binary subproblem is the soft-margin C-SVM dual

    min_a 1/2 a' Q a - e' a   s.t. 0 <= a_i <= C, sum(y_i a_i) = 0

solved by SMO with second-order working-set selection. The default
linear kernel collapses each class to a (weight vector, bias) pair; the
RBF option keeps support-vector sets. Prediction is the argmax of the
per-class scores, ties to the lowest class index.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from ..features import FeatureMatrix
from .metrics import ConfusionMatrix, confusion_and_agreement
from .ocsvm import DimensionMismatch, rbf_kernel


class SingleClass(Exception):
    pass


class BadSplit(Exception):
    pass


@dataclass
class _BinaryResult:
    alpha_y: np.ndarray  # alpha_i * y_i over training rows
    bias: float


@dataclass
class SvmModel:
    classes: list[int]
    kernel: str                      # "linear" or "rbf"
    C: float
    seed: int
    normal_class: int                # dominant training label
    weights: Optional[np.ndarray] = None    # (n_classes, d) for linear
    biases: Optional[np.ndarray] = None     # (n_classes,)
    sv_rows: Optional[np.ndarray] = None    # shared SV rows for rbf
    sv_coef: Optional[np.ndarray] = None    # (n_classes, n_sv) alpha*y
    gamma: float = 0.0
    n_features: int = 0

    def decision_scores(self, rows: np.ndarray) -> np.ndarray:
        rows = np.atleast_2d(np.asarray(rows, dtype=float))
        if rows.shape[1] != self.n_features:
            raise DimensionMismatch(
                f"rows have {rows.shape[1]} features, model trained on {self.n_features}"
            )
        if self.kernel == "linear":
            return rows @ self.weights.T + self.biases
        k = rbf_kernel(rows, self.sv_rows, self.gamma)
        return k @ self.sv_coef.T + self.biases

    def predict(self, rows: np.ndarray) -> np.ndarray:
        scores = self.decision_scores(rows)
        return np.array([self.classes[i] for i in np.argmax(scores, axis=1)])

    def to_doc(self) -> dict:
        doc = {
            "model": "svm",
            "kernel": self.kernel,
            "C": self.C,
            "seed": self.seed,
            "classes": self.classes,
            "normal_class": self.normal_class,
            "biases": [float(b) for b in self.biases],
            "n_features": self.n_features,
        }
        if self.kernel == "linear":
            doc["weights"] = [[float(v) for v in row] for row in self.weights]
        else:
            doc["gamma"] = self.gamma
            doc["sv_rows"] = [[float(v) for v in row] for row in self.sv_rows]
            doc["sv_coef"] = [[float(v) for v in row] for row in self.sv_coef]
        return doc

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_doc(), indent=1) + "\n", encoding="utf-8")

    @classmethod
    def from_doc(cls, doc: dict) -> "SvmModel":
        kernel = doc["kernel"]
        common = dict(
            classes=[int(c) for c in doc["classes"]], kernel=kernel,
            C=doc["C"], seed=doc.get("seed", 0),
            normal_class=int(doc["normal_class"]),
            biases=np.array(doc["biases"], dtype=float),
            n_features=int(doc["n_features"]),
        )
        if kernel == "linear":
            return cls(weights=np.array(doc["weights"], dtype=float), **common)
        return cls(
            sv_rows=np.array(doc["sv_rows"], dtype=float),
            sv_coef=np.array(doc["sv_coef"], dtype=float),
            gamma=doc["gamma"], **common,
        )


def _smo_binary(
    kernel: np.ndarray, y: np.ndarray, C: float,
    tol: float = 1e-4, max_passes: int = 200_000,
) -> _BinaryResult:
    """Solve one binary C-SVM dual over a precomputed kernel matrix."""
    n = len(y)
    alpha = np.zeros(n)
    grad = -np.ones(n)  # gradient of the dual objective: Q alpha - e
    tau = 1e-12
    yf = y.astype(float)

    for _ in range(max_passes):
        # I_up: coordinates that can move "up" in y-direction, I_low: down.
        up_mask = ((yf > 0) & (alpha < C - tau)) | ((yf < 0) & (alpha > tau))
        low_mask = ((yf < 0) & (alpha < C - tau)) | ((yf > 0) & (alpha > tau))
        if not up_mask.any() or not low_mask.any():
            break
        minus_y_grad = -yf * grad
        up_idx = np.flatnonzero(up_mask)
        i = up_idx[np.argmax(minus_y_grad[up_idx])]
        g_max = minus_y_grad[i]
        low_idx = np.flatnonzero(low_mask)
        g_min = minus_y_grad[low_idx].min()
        if g_max - g_min < tol:
            break
        b_vals = g_max + yf[low_idx] * grad[low_idx]
        mask = b_vals > 0
        if not mask.any():
            break
        cand = low_idx[mask]
        b_cand = b_vals[mask]
        qii = kernel[i, i]
        # Curvature along the paired direction is K_ii + K_tt - 2 K_it for
        # either label combination.
        a_cand = np.maximum(qii + kernel[cand, cand] - 2.0 * kernel[i, cand], tau)
        j = cand[np.argmin(-(b_cand * b_cand) / a_cand)]

        # Two-variable update preserving sum(y*alpha), clipped to the box.
        quad = max(qii + kernel[j, j] - 2.0 * kernel[i, j], tau)
        old_i, old_j = alpha[i], alpha[j]
        if yf[i] != yf[j]:
            delta = (-grad[i] - grad[j]) / quad
            diff = old_i - old_j  # invariant of this move
            ai, aj = old_i + delta, old_j + delta
            if diff > 0 and aj < 0:
                ai, aj = diff, 0.0
            elif diff <= 0 and ai < 0:
                ai, aj = 0.0, -diff
            if diff > 0 and ai > C:
                ai, aj = C, C - diff
            elif diff <= 0 and aj > C:
                ai, aj = C + diff, C
        else:
            delta = (grad[i] - grad[j]) / quad
            total = old_i + old_j  # invariant of this move
            ai, aj = old_i - delta, old_j + delta
            if total > C:
                if ai > C:
                    ai, aj = C, total - C
                elif aj > C:
                    ai, aj = total - C, C
            else:
                if aj < 0:
                    ai, aj = total, 0.0
                elif ai < 0:
                    ai, aj = 0.0, total
        d_i, d_j = ai - old_i, aj - old_j
        alpha[i], alpha[j] = ai, aj
        grad += yf[i] * d_i * yf * kernel[:, i] + yf[j] * d_j * yf * kernel[:, j]

    # Bias from the KKT conditions: average -y*grad over free vectors,
    # else the midpoint of the active bounds.
    free = (alpha > tau) & (alpha < C - tau)
    minus_y_grad = -yf * grad
    if free.any():
        bias = float(minus_y_grad[free].mean())
    else:
        up_mask = ((yf > 0) & (alpha < C - tau)) | ((yf < 0) & (alpha > tau))
        low_mask = ((yf < 0) & (alpha < C - tau)) | ((yf > 0) & (alpha > tau))
        hi = minus_y_grad[up_mask].max() if up_mask.any() else 0.0
        lo = minus_y_grad[low_mask].min() if low_mask.any() else 0.0
        bias = float((hi + lo) / 2.0)
    return _BinaryResult(alpha_y=alpha * yf, bias=bias)


def svm_fit(
    m: FeatureMatrix,
    labels: Sequence[int],
    C: float = 1.0,
    kernel: str = "linear",
    seed: int = 42,
    split: float = 0.8,
    gamma: Optional[float] = None,
) -> tuple[SvmModel, ConfusionMatrix]:
    """Train on a random split of the labeled rows, evaluate on the rest.

    Returns the fitted model and the held-out confusion matrix with SVM
    predictions on rows and the input labels on columns.
    """
    if kernel not in ("linear", "rbf"):
        raise ValueError(f"unknown kernel: {kernel}")
    if not 0.0 < split < 1.0:
        raise BadSplit(f"split must be in (0, 1), got {split}")
    if C <= 0:
        raise ValueError("C must be positive")
    rows = np.asarray(m.matrix, dtype=float)
    y_all = np.asarray(labels, dtype=int)
    if rows.shape[0] != y_all.shape[0]:
        raise ValueError("labels must align with matrix rows")
    classes = sorted(set(int(v) for v in y_all))
    if len(classes) < 2:
        raise SingleClass("need at least 2 distinct labels")

    rng = np.random.default_rng(seed)
    order = rng.permutation(len(rows))
    n_train = int(round(split * len(rows)))
    if n_train < 1 or n_train >= len(rows):
        raise BadSplit(f"split {split} leaves an empty partition")
    train_idx, test_idx = order[:n_train], order[n_train:]
    x_train, y_train = rows[train_idx], y_all[train_idx]
    if len(set(y_train.tolist())) < 2:
        raise SingleClass("train partition collapsed to a single label")

    if gamma is None:
        gamma = 1.0 / rows.shape[1]
    gram = (x_train @ x_train.T if kernel == "linear"
            else rbf_kernel(x_train, x_train, gamma))

    train_counts = np.bincount(y_train, minlength=max(classes) + 1)
    # Dominant label over the full labeling, per the largest-cluster rule.
    normal_class = int(np.argmax(np.bincount(y_all, minlength=max(classes) + 1)))

    alpha_y = np.zeros((len(classes), len(x_train)))
    biases = np.zeros(len(classes))
    for ci, c in enumerate(classes):
        if train_counts[c] == 0:
            # No positives landed in the training split: constant losing score.
            biases[ci] = -1.0
            continue
        y_bin = np.where(y_train == c, 1, -1)
        result = _smo_binary(gram, y_bin, C)
        alpha_y[ci] = result.alpha_y
        biases[ci] = result.bias

    if kernel == "linear":
        weights = alpha_y @ x_train
        model = SvmModel(
            classes=classes, kernel=kernel, C=C, seed=seed,
            normal_class=normal_class, weights=weights, biases=biases,
            n_features=rows.shape[1],
        )
    else:
        sv_mask = (np.abs(alpha_y) > 1e-12).any(axis=0)
        model = SvmModel(
            classes=classes, kernel=kernel, C=C, seed=seed,
            normal_class=normal_class, biases=biases,
            sv_rows=x_train[sv_mask].copy(), sv_coef=alpha_y[:, sv_mask].copy(),
            gamma=gamma, n_features=rows.shape[1],
        )

    predictions = model.predict(rows[test_idx])
    k = max(classes) + 1
    confusion, _, _ = confusion_and_agreement(predictions, y_all[test_idx], k)
    return model, confusion


def svm_outliers(model: SvmModel, m: FeatureMatrix) -> set[str]:
    """Addresses predicted into any class other than the dominant one."""
    predicted = model.predict(m.matrix)
    return {
        addr for addr, label in zip(m.addresses, predicted)
        if label != model.normal_class
    }
