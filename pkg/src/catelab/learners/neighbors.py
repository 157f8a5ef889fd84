"""k-nearest-neighbor regression with a deterministic tie rule."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.spatial import cKDTree

from ..errors import InvalidDataError

__all__ = ["KnnModel", "knn", "Knn", "minimax_k"]


@dataclass
class KnnModel:
    """Fitted nearest-neighbor regressor: mean target of the k nearest points.

    Distance ties on the neighborhood boundary are resolved in favor of the
    lower training index, so predictions are a pure function of the training
    set and never depend on search-tree internals.
    """

    k: int
    train_features: np.ndarray
    train_targets: np.ndarray
    _tree: cKDTree = field(repr=False)

    @property
    def dim(self) -> int:
        return self.train_features.shape[1]

    def predict(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.dim:
            raise InvalidDataError(
                f"query has {x.shape[1]} columns, model was fit with {self.dim}"
            )
        n = self.train_features.shape[0]
        if self.k == n:
            return np.full(x.shape[0], float(self.train_targets.mean()))
        # one spare neighbor to detect ties that straddle the k-th position
        dist, idx = self._tree.query(x, k=self.k + 1, workers=-1)
        boundary_tied = dist[:, self.k] <= dist[:, self.k - 1]
        preds = self.train_targets[idx[:, : self.k]].mean(axis=1)
        if np.any(boundary_tied):
            for row in np.nonzero(boundary_tied)[0]:
                preds[row] = self._predict_exact(x[row])
        return preds

    def _predict_exact(self, point: np.ndarray) -> float:
        # exact tie handling: rank every candidate within the boundary radius
        # by (squared distance, training index) and keep the first k
        radius = float(np.atleast_1d(self._tree.query(point, k=self.k)[0])[-1])
        cand = self._tree.query_ball_point(point, r=radius * (1.0 + 1e-9) + 1e-300)
        cand = np.asarray(sorted(cand), dtype=np.int64)
        diffs = self.train_features[cand] - point
        d2 = np.einsum("ij,ij->i", diffs, diffs)
        order = np.lexsort((cand, d2))
        chosen = cand[order[: self.k]]
        return float(self.train_targets[chosen].mean())


def knn(features: np.ndarray, targets: np.ndarray, k: int) -> KnnModel:
    """Fit a k-nearest-neighbor regressor on Euclidean distance."""
    x = np.ascontiguousarray(np.atleast_2d(np.asarray(features, dtype=float)))
    y = np.asarray(targets, dtype=float)
    if x.shape[0] != y.shape[0]:
        raise InvalidDataError(f"{x.shape[0]} rows vs {y.shape[0]} targets")
    n = x.shape[0]
    if not 1 <= k <= n:
        raise InvalidDataError(f"k must satisfy 1 <= k <= {n}, got {k}")
    return KnnModel(k=int(k), train_features=x, train_targets=y, _tree=cKDTree(x))


def minimax_k(noise_var: float, lipschitz: float, d: int, n: int) -> int:
    """Neighborhood size balancing noise and smoothing bias.

    Computes ``ceil((noise_var / lipschitz^2)^(d/(2+d)) * n^(2/(d+2)))`` and
    clamps the result to ``[1, n]``.  This is the choice under which the
    nearest-neighbor regressor attains the ``n^(-2/(2+d))`` error rate for
    ``lipschitz``-smooth signals with noise variance ``noise_var``.
    """
    if lipschitz <= 0:
        raise InvalidDataError(f"lipschitz constant must be > 0, got {lipschitz}")
    if noise_var < 0:
        raise InvalidDataError(f"noise_var must be >= 0, got {noise_var}")
    if d < 1 or n < 1:
        raise InvalidDataError(f"need d >= 1 and n >= 1, got d={d}, n={n}")
    raw = (noise_var / lipschitz**2) ** (d / (2.0 + d)) * n ** (2.0 / (d + 2.0))
    return int(min(n, max(1, math.ceil(raw))))


@dataclass(frozen=True)
class Knn:
    """Base-learner factory: fixed ``k`` or a rule ``k = k_rule(n_train)``."""

    k: int | None = None
    k_rule: Callable[[int], int] | None = None

    def fit(self, features: np.ndarray, targets: np.ndarray) -> KnnModel:
        n = np.atleast_2d(features).shape[0]
        if self.k is not None:
            k = self.k
        elif self.k_rule is not None:
            k = self.k_rule(n)
        else:
            # default: unit noise-to-smoothness ratio rule
            d = np.atleast_2d(features).shape[1]
            k = minimax_k(1.0, 1.0, d, n)
        return knn(features, targets, min(int(k), n))
