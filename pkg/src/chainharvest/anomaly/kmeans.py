"""K-Means clustering (k-means++ seeding, Lloyd iterations).

The detection rule on top of the clustering: the largest cluster is the
normal transaction profile, everything outside it is an outlier.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
import numpy as np

from ..features import FeatureMatrix


class BadK(Exception):
    pass


@dataclass
class KMeansModel:
    k: int
    centers: np.ndarray          # (k, d)
    seed: int
    assignments: np.ndarray      # per-training-row cluster index
    inertia: float
    inertia_history: list[float] = field(default_factory=list)
    n_iter: int = 0

    def predict(self, rows: np.ndarray) -> np.ndarray:
        return _nearest(np.asarray(rows, dtype=float), self.centers)[0]

    def cluster_sizes(self) -> list[int]:
        return np.bincount(self.assignments, minlength=self.k).tolist()

    def normal_cluster(self) -> int:
        """Largest cluster; ties break to the lower index."""
        return int(np.argmax(self.cluster_sizes()))

    def to_doc(self) -> dict:
        return {
            "model": "kmeans",
            "k": self.k,
            "seed": self.seed,
            "inertia": self.inertia,
            "n_iter": self.n_iter,
            "centers": [[float(v) for v in row] for row in self.centers],
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_doc(), indent=1) + "\n", encoding="utf-8")

    @classmethod
    def from_doc(cls, doc: dict) -> "KMeansModel":
        """Rebuild a predictor from its saved document (no assignments)."""
        centers = np.array(doc["centers"], dtype=float)
        return cls(
            k=doc["k"], centers=centers, seed=doc.get("seed", 0),
            assignments=np.zeros(0, dtype=int), inertia=doc.get("inertia", 0.0),
            n_iter=doc.get("n_iter", 0),
        )


def _nearest(rows: np.ndarray, centers: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Index of the closest center per row (ties to the lowest index)
    and the squared distance to it."""
    d2 = ((rows[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    idx = np.argmin(d2, axis=1)
    return idx, d2[np.arange(len(rows)), idx]


def _kmeanspp_init(rows: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(rows)
    centers = np.empty((k, rows.shape[1]), dtype=float)
    centers[0] = rows[rng.integers(n)]
    d2 = ((rows - centers[0]) ** 2).sum(axis=1)
    for i in range(1, k):
        total = d2.sum()
        if total <= 0:
            # All remaining mass sits on existing centers; pick uniformly.
            centers[i] = rows[rng.integers(n)]
        else:
            probs = d2 / total
            centers[i] = rows[rng.choice(n, p=probs)]
        d2 = np.minimum(d2, ((rows - centers[i]) ** 2).sum(axis=1))
    return centers


def kmeans_fit(
    m: FeatureMatrix,
    k: int = 4,
    seed: int = 42,
    max_iter: int = 300,
    tol: float = 1e-6,
) -> KMeansModel:
    """Lloyd iterations from a k-means++ start until centers stop moving.

    Inertia is checked to be non-increasing on every iteration; an empty
    cluster is repaired by reseeding its center to the point farthest
    from its current center.
    """
    rows = np.asarray(m.matrix, dtype=float)
    n = len(rows)
    if not 1 <= k <= n:
        raise BadK(f"k={k} must be in [1, {n}]")
    rng = np.random.default_rng(seed)
    centers = _kmeanspp_init(rows, k, rng)
    history: list[float] = []
    assignments = np.zeros(n, dtype=int)
    inertia = float("inf")
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        assignments, d2 = _nearest(rows, centers)
        inertia = float(d2.sum())
        if history and inertia > history[-1] + 1e-9 * max(1.0, history[-1]):
            raise AssertionError(
                f"inertia increased: {history[-1]} -> {inertia} at iteration {n_iter}"
            )
        history.append(inertia)
        new_centers = centers.copy()
        for c in range(k):
            members = rows[assignments == c]
            if len(members):
                new_centers[c] = members.mean(axis=0)
            else:
                # Reseed dead centers to the worst-served point.
                far = int(np.argmax(d2))
                new_centers[c] = rows[far]
                d2[far] = 0.0
        shift = np.sqrt(((new_centers - centers) ** 2).sum(axis=1)).max()
        centers = new_centers
        if shift < tol:
            break
    assignments, d2 = _nearest(rows, centers)
    inertia = float(d2.sum())
    history.append(inertia)
    return KMeansModel(
        k=k, centers=centers, seed=seed, assignments=assignments,
        inertia=inertia, inertia_history=history, n_iter=n_iter,
    )


def kmeans_outliers(model: KMeansModel, m: FeatureMatrix) -> set[str]:
    """Addresses outside the largest cluster."""
    normal = model.normal_cluster()
    return {
        addr for addr, label in zip(m.addresses, model.assignments) if label != normal
    }
