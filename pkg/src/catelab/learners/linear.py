"""Ordinary least squares with an explicit rank check."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidDataError, SingularDesignError

__all__ = ["LinearModel", "ols", "Ols", "Mean", "MeanModel"]


@dataclass(frozen=True)
class LinearModel:
    """A fitted least-squares regression ``x -> x @ coefficients + intercept``."""

    coefficients: np.ndarray
    intercept: float = 0.0

    def predict(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.coefficients.shape[0]:
            raise InvalidDataError(
                f"query has {x.shape[1]} columns, model was fit with "
                f"{self.coefficients.shape[0]}"
            )
        return x @ self.coefficients + self.intercept


def ols(features: np.ndarray, targets: np.ndarray, with_intercept: bool = False) -> LinearModel:
    """Least squares via QR; refuses rank-deficient designs outright.

    A singular design raises :class:`SingularDesignError` rather than falling
    back to a pseudo-inverse, so degenerate simulated designs fail loudly.
    """
    x = np.atleast_2d(np.asarray(features, dtype=float))
    y = np.asarray(targets, dtype=float)
    if x.shape[0] != y.shape[0]:
        raise InvalidDataError(f"{x.shape[0]} rows vs {y.shape[0]} targets")
    d = x.shape[1]
    ncols = d + (1 if with_intercept else 0)
    if x.shape[0] < ncols:
        raise InvalidDataError(
            f"need at least {ncols} rows to fit {ncols} coefficients, got {x.shape[0]}"
        )
    design = np.column_stack([np.ones(x.shape[0]), x]) if with_intercept else x
    beta, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < ncols:
        raise SingularDesignError(
            f"design matrix has rank {rank} < {ncols}; refusing to fit"
        )
    if with_intercept:
        return LinearModel(coefficients=beta[1:], intercept=float(beta[0]))
    return LinearModel(coefficients=beta, intercept=0.0)


@dataclass(frozen=True)
class Ols:
    """Base-learner factory for :func:`ols`."""

    intercept: bool = True

    def fit(self, features: np.ndarray, targets: np.ndarray) -> LinearModel:
        return ols(features, targets, with_intercept=self.intercept)


@dataclass(frozen=True)
class MeanModel:
    """Predicts the training-target mean everywhere."""

    mean: float
    dim: int

    def predict(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.full(x.shape[0], self.mean)


@dataclass(frozen=True)
class Mean:
    """Base-learner factory for the constant-mean predictor."""

    def fit(self, features: np.ndarray, targets: np.ndarray) -> MeanModel:
        y = np.asarray(targets, dtype=float)
        if y.size == 0:
            raise InvalidDataError("cannot fit a mean on an empty target vector")
        return MeanModel(mean=float(y.mean()), dim=np.atleast_2d(features).shape[1])
