"""Self-contained regression base learners sharing a fit/predict capability.

Every learner here exposes ``fit(features, targets) -> model`` on a small
factory object, and every fitted model exposes ``predict(x) -> array``;
the meta-learners are written against that capability alone.
"""

from .forest import Forest, ForestParams, HonestForest, honest_forest
from .linear import LinearModel, Mean, MeanModel, Ols, ols
from .neighbors import Knn, KnnModel, knn, minimax_k
from .propensity import GivenPropensity, PropensityModel, fit_propensity

__all__ = [
    "Forest",
    "ForestParams",
    "HonestForest",
    "honest_forest",
    "LinearModel",
    "Mean",
    "MeanModel",
    "Ols",
    "ols",
    "Knn",
    "KnnModel",
    "knn",
    "minimax_k",
    "GivenPropensity",
    "PropensityModel",
    "fit_propensity",
]
