"""Treatment-probability estimation with hard overlap clipping."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..errors import InvalidDataError
from .forest import ForestParams, honest_forest

__all__ = ["PropensityModel", "GivenPropensity", "fit_propensity"]


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass
class PropensityModel:
    """A fitted assignment-probability model, clipped into [clip, 1 - clip]."""

    method: str
    clip: float
    _raw: Callable[[np.ndarray], np.ndarray]

    def propensity(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        raw = np.asarray(self._raw(x), dtype=float)
        return np.clip(raw, self.clip, 1.0 - self.clip)


def GivenPropensity(e: float | Callable[[np.ndarray], np.ndarray]) -> PropensityModel:
    """Wrap a known assignment probability (constant or function) as a model.

    Used in experiments where the probability is known by design; no clipping
    is applied, the values are trusted as given.
    """
    if callable(e):
        raw = lambda x: np.asarray(e(x), dtype=float)
    else:
        e_val = float(e)
        if not 0.0 < e_val < 1.0:
            raise InvalidDataError(f"propensity must lie in (0, 1), got {e_val}")
        raw = lambda x: np.full(np.atleast_2d(x).shape[0], e_val)
    return PropensityModel(method="given", clip=0.0, _raw=raw)


def _logistic_raw(features: np.ndarray, treatment: np.ndarray) -> Callable:
    design = np.column_stack([np.ones(features.shape[0]), features])
    beta = np.zeros(design.shape[1])
    for _ in range(100):
        eta = design @ beta
        p = _sigmoid(eta)
        weight = np.maximum(p * (1.0 - p), 1e-10)
        z = eta + (treatment - p) / weight
        wd = design * weight[:, None]
        normal = design.T @ wd + 1e-10 * np.eye(design.shape[1])
        new_beta = np.linalg.solve(normal, wd.T @ z)
        if np.max(np.abs(new_beta - beta)) < 1e-10:
            beta = new_beta
            break
        beta = new_beta

    def raw(x, beta=beta):
        return _sigmoid(np.column_stack([np.ones(x.shape[0]), x]) @ beta)

    return raw


def fit_propensity(
    features: np.ndarray,
    treatment: np.ndarray,
    method: str = "logistic",
    clip: float = 0.025,
    forest_params: ForestParams | None = None,
) -> PropensityModel:
    """Estimate the assignment probability and clip it away from 0 and 1."""
    if not 0.0 < clip < 0.5:
        raise InvalidDataError(f"clip must lie in (0, 0.5), got {clip}")
    x = np.atleast_2d(np.asarray(features, dtype=float))
    w = np.asarray(treatment)
    if not np.isin(w, (0, 1)).all():
        raise InvalidDataError("treatment vector must be strictly binary")
    w = w.astype(float)
    if w.min() == w.max():
        raise InvalidDataError(
            "treatment vector contains a single class; cannot fit a propensity model"
        )

    if method == "logistic":
        raw = _logistic_raw(x, w)
    elif method == "forest":
        model = honest_forest(x, w, forest_params or ForestParams(n_trees=200))
        raw = model.predict
    else:
        raise InvalidDataError(f"unknown propensity method {method!r}")
    return PropensityModel(method=method, clip=clip, _raw=raw)
