"""One-class SVM novelty detection (RBF kernel, nu-parameterized dual).

Solves

    min_a  1/2 a' K a    s.t.  0 <= a_i <= 1/(nu*n),  sum(a) = 1

by SMO-style pairwise coordinate updates with second-order working-set
selection. The decision function is f(x) = sum_i a_i K(x_i, x) - rho;
f(x) < 0 marks an outlier. nu upper-bounds the training outlier fraction
and lower-bounds the support-vector fraction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from ..features import FeatureMatrix


class BadParam(Exception):
    pass


class DimensionMismatch(Exception):
    pass


def rbf_kernel(a: np.ndarray, b: np.ndarray, gamma: float) -> np.ndarray:
    """exp(-gamma * ||x - y||^2) for every row pair."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    d2 = (
        (a * a).sum(axis=1)[:, None]
        + (b * b).sum(axis=1)[None, :]
        - 2.0 * (a @ b.T)
    )
    np.maximum(d2, 0.0, out=d2)
    return np.exp(-gamma * d2)


@dataclass
class OcsvmModel:
    support_vectors: np.ndarray   # (n_sv, d)
    dual_coef: np.ndarray         # alpha over the support vectors, sums to 1
    rho: float
    gamma: float
    nu: float
    tolerance: float
    max_passes: int
    converged: bool
    n_train: int
    seed: int = 0

    @property
    def n_support(self) -> int:
        return len(self.support_vectors)

    def decision_function(self, rows: np.ndarray) -> np.ndarray:
        rows = np.atleast_2d(np.asarray(rows, dtype=float))
        if rows.shape[1] != self.support_vectors.shape[1]:
            raise DimensionMismatch(
                f"rows have {rows.shape[1]} features, model trained on "
                f"{self.support_vectors.shape[1]}"
            )
        k = rbf_kernel(self.support_vectors, rows, self.gamma)
        return self.dual_coef @ k - self.rho

    def predict(self, rows: np.ndarray) -> np.ndarray:
        """True per row where the point falls outside the learned boundary."""
        return self.decision_function(rows) < 0.0

    def to_doc(self) -> dict:
        return {
            "model": "ocsvm",
            "nu": self.nu,
            "gamma": self.gamma,
            "rho": self.rho,
            "tolerance": self.tolerance,
            "converged": self.converged,
            "n_train": self.n_train,
            "seed": self.seed,
            "dual_coef": [float(v) for v in self.dual_coef],
            "support_vectors": [[float(v) for v in row] for row in self.support_vectors],
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_doc(), indent=1) + "\n", encoding="utf-8")

    @classmethod
    def from_doc(cls, doc: dict) -> "OcsvmModel":
        return cls(
            support_vectors=np.array(doc["support_vectors"], dtype=float),
            dual_coef=np.array(doc["dual_coef"], dtype=float),
            rho=doc["rho"], gamma=doc["gamma"], nu=doc["nu"],
            tolerance=doc["tolerance"], max_passes=doc.get("max_passes", 0),
            converged=doc["converged"], n_train=doc["n_train"],
            seed=doc.get("seed", 0),
        )


def ocsvm_fit(
    m: FeatureMatrix | np.ndarray,
    nu: float,
    gamma: float,
    seed: int = 0,
    tolerance: float = 1e-6,
    max_passes: Optional[int] = None,
) -> OcsvmModel:
    """Fit the boundary on (scaled) feature rows.

    seed is recorded for provenance; the solver itself is deterministic.
    The default KKT tolerance is tight (1e-6): a looser gap leaves margin
    support vectors numerically below the boundary, spuriously inflating
    the flagged fraction past nu. If the gap has not closed after
    max_passes updates the model is returned with converged=False.
    """
    rows = m.matrix if isinstance(m, FeatureMatrix) else np.asarray(m, dtype=float)
    n = len(rows)
    if not 0.0 < nu <= 1.0:
        raise BadParam(f"nu must be in (0, 1], got {nu}")
    if gamma <= 0.0:
        raise BadParam(f"gamma must be positive, got {gamma}")
    if n < 2:
        raise BadParam("need at least 2 training rows")
    if max_passes is None:
        max_passes = max(20_000, 20 * n)

    cap = 1.0 / (nu * n)
    kernel = rbf_kernel(rows, rows, gamma)
    diag = np.diagonal(kernel).copy()

    # Feasible start: fill floor(nu*n) coordinates to the cap, give the
    # remainder of the unit budget to the next one.
    alpha = np.zeros(n)
    n_full = int(nu * n)
    alpha[:n_full] = cap
    if n_full < n:
        alpha[n_full] = 1.0 - n_full * cap
    grad = kernel @ alpha

    converged = False
    tau = 1e-12
    for _ in range(max_passes):
        can_up = alpha < cap - tau
        can_down = alpha > tau
        neg_grad = -grad
        up_idx = np.flatnonzero(can_up)
        down_idx = np.flatnonzero(can_down)
        if len(up_idx) == 0 or len(down_idx) == 0:
            # nu = 1 pins every coordinate at the cap; nothing can move.
            converged = True
            break
        i = up_idx[np.argmax(neg_grad[up_idx])]
        g_max = neg_grad[i]
        g_min = neg_grad[down_idx].min()
        if g_max - g_min < tolerance:
            converged = True
            break
        # Second-order selection of the partner coordinate.
        b_vals = g_max + grad[down_idx]
        mask = b_vals > 0
        if not mask.any():
            converged = True
            break
        cand = down_idx[mask]
        b_cand = b_vals[mask]
        a_cand = diag[i] + diag[cand] - 2.0 * kernel[i, cand]
        a_cand = np.maximum(a_cand, tau)
        j = cand[np.argmin(-(b_cand * b_cand) / a_cand)]

        quad = max(diag[i] + diag[j] - 2.0 * kernel[i, j], tau)
        delta = (grad[j] - grad[i]) / quad
        pair_sum = alpha[i] + alpha[j]
        ai = alpha[i] + delta
        # Clip into the box while preserving the pair sum.
        ai = min(max(ai, max(0.0, pair_sum - cap)), min(cap, pair_sum))
        aj = pair_sum - ai
        d_i = ai - alpha[i]
        d_j = aj - alpha[j]
        alpha[i] = ai
        alpha[j] = aj
        grad += kernel[:, i] * d_i + kernel[:, j] * d_j

    sv_mask = alpha > 1e-10 * cap
    margin = (alpha > 1e-8 * cap) & (alpha < cap * (1 - 1e-8))
    if margin.any():
        rho = float(grad[margin].mean())
    else:
        upper = grad[alpha >= cap * (1 - 1e-8)]
        lower = grad[alpha <= 1e-8 * cap]
        hi = upper.max() if len(upper) else grad.min()
        lo = lower.min() if len(lower) else grad.max()
        rho = float((hi + lo) / 2.0)

    return OcsvmModel(
        support_vectors=rows[sv_mask].copy(),
        dual_coef=alpha[sv_mask].copy(),
        rho=rho,
        gamma=gamma,
        nu=nu,
        tolerance=tolerance,
        max_passes=max_passes,
        converged=converged,
        n_train=n,
        seed=seed,
    )


def ocsvm_outliers(model: OcsvmModel, m: FeatureMatrix) -> set[str]:
    """Addresses whose rows fall outside the boundary."""
    flags = model.predict(m.matrix)
    return {addr for addr, f in zip(m.addresses, flags) if f}
