"""The five meta-learners: composing base regressors into effect estimators.

Each ``fit_*`` function assembles fitted base learners into an immutable
:class:`CateModel` whose ``predict`` returns pointwise treatment-effect
estimates.  Any object with ``fit(features, targets) -> model`` /
``model.predict(x)`` can serve as a base learner in any slot.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Protocol

import numpy as np

from .dgp import Dataset
from .errors import EmptyArmError, InvalidDataError
from .learners import (
    Forest,
    ForestParams,
    Knn,
    Mean,
    Ols,
    PropensityModel,
    fit_propensity,
)
from .rng import derive_seed

__all__ = [
    "BaseLearner",
    "ZeroWeight",
    "OneWeight",
    "ConstantWeight",
    "PropensityWeight",
    "ImputedEffects",
    "CateModel",
    "fit_t",
    "fit_s",
    "impute_effects",
    "fit_x",
    "fit_f",
    "fit_u",
    "predict_cate",
    "transformed_outcome",
    "LearnerConfig",
    "parse_learner_spec",
]


class BaseLearner(Protocol):
    def fit(self, features: np.ndarray, targets: np.ndarray): ...


# ---------------------------------------------------------------------------
# weight rules for combining the two second-stage effect estimates


@dataclass(frozen=True)
class ZeroWeight:
    """Use the treated-side estimate only."""

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        return np.zeros(np.atleast_2d(x).shape[0])


@dataclass(frozen=True)
class OneWeight:
    """Use the control-side estimate only."""

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        return np.ones(np.atleast_2d(x).shape[0])


@dataclass(frozen=True)
class ConstantWeight:
    c: float

    def __post_init__(self):
        if not 0.0 <= self.c <= 1.0:
            raise InvalidDataError(f"weight must lie in [0, 1], got {self.c}")

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        return np.full(np.atleast_2d(x).shape[0], self.c)


@dataclass(frozen=True)
class PropensityWeight:
    """Weight the control-side estimate by the assignment probability."""

    model: PropensityModel

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        return np.clip(self.model.propensity(x), 0.0, 1.0)


WeightRule = ZeroWeight | OneWeight | ConstantWeight | PropensityWeight


# ---------------------------------------------------------------------------
# the fitted model


@dataclass(frozen=True)
class CateModel:
    """A fitted meta-learner exposing pointwise effect prediction."""

    kind: str  # one of "S", "T", "X", "F", "U"
    dim: int
    mu0: object | None = None
    mu1: object | None = None
    mu: object | None = None  # single pooled regressor (S)
    tau0: object | None = None
    tau1: object | None = None
    tau: object | None = None  # direct effect regressor (F, U)
    obs: object | None = None  # observed-outcome regressor (U)
    weight_rule: WeightRule | None = None
    flooring_count: int = 0  # U-learner: clamped denominators

    def predict(self, xs: np.ndarray) -> np.ndarray:
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        if xs.shape[1] != self.dim:
            raise InvalidDataError(
                f"query has {xs.shape[1]} columns, model was fit with {self.dim}"
            )
        if self.kind == "T":
            return self.mu1.predict(xs) - self.mu0.predict(xs)
        if self.kind == "S":
            aug1 = np.column_stack([xs, np.ones(xs.shape[0])])
            aug0 = np.column_stack([xs, np.zeros(xs.shape[0])])
            return self.mu.predict(aug1) - self.mu.predict(aug0)
        if self.kind == "X":
            # degenerate weights skip the unused side entirely, so one-sided
            # fits (huge opposite arm) never have to evaluate it
            if isinstance(self.weight_rule, ZeroWeight):
                return self.tau1.predict(xs)
            if isinstance(self.weight_rule, OneWeight):
                return self.tau0.predict(xs)
            g = self.weight_rule.evaluate(xs)
            return g * self.tau0.predict(xs) + (1.0 - g) * self.tau1.predict(xs)
        if self.kind in ("F", "U"):
            return self.tau.predict(xs)
        raise InvalidDataError(f"unknown model kind {self.kind!r}")

    def with_weight(self, rule: WeightRule) -> "CateModel":
        """Same fitted parts, different combination rule (X-models only)."""
        if self.kind != "X":
            raise InvalidDataError("with_weight applies to X-models only")
        return replace(self, weight_rule=rule)


def predict_cate(model: CateModel, xs: np.ndarray) -> np.ndarray:
    """Vectorized, order-preserving pointwise prediction."""
    return model.predict(xs)


# ---------------------------------------------------------------------------
# arms


def _split_arms(ds: Dataset):
    treated = ds.treatment == 1
    x0, y0 = ds.features[~treated], ds.outcome[~treated]
    x1, y1 = ds.features[treated], ds.outcome[treated]
    if x0.shape[0] == 0:
        raise EmptyArmError("control arm is empty")
    if x1.shape[0] == 0:
        raise EmptyArmError("treated arm is empty")
    return x0, y0, x1, y1


# ---------------------------------------------------------------------------
# meta-learners


def fit_t(ds: Dataset, base_control: BaseLearner, base_treated: BaseLearner) -> CateModel:
    """Fit each arm's response separately; the effect is their difference."""
    x0, y0, x1, y1 = _split_arms(ds)
    return CateModel(
        kind="T",
        dim=ds.dim,
        mu0=base_control.fit(x0, y0),
        mu1=base_treated.fit(x1, y1),
    )


def fit_s(ds: Dataset, base: BaseLearner) -> CateModel:
    """Pool both arms, treating the assignment as one more feature."""
    if ds.n == 0:
        raise InvalidDataError("dataset is empty")
    aug = np.column_stack([ds.features, ds.treatment.astype(float)])
    return CateModel(kind="S", dim=ds.dim, mu=base.fit(aug, ds.outcome))


@dataclass(frozen=True)
class ImputedEffects:
    """Pseudo-effects from crossing observed outcomes with first-stage fits."""

    d_treated: np.ndarray  # observed treated outcome minus predicted control response
    d_control: np.ndarray  # predicted treated response minus observed control outcome


def impute_effects(ds: Dataset, mu0_hat, mu1_hat) -> ImputedEffects:
    x0, y0, x1, y1 = _split_arms(ds)
    return ImputedEffects(
        d_treated=y1 - mu0_hat.predict(x1),
        d_control=mu1_hat.predict(x0) - y0,
    )


def fit_x(
    ds: Dataset,
    base_mu0: BaseLearner,
    base_mu1: BaseLearner,
    base_tau0: BaseLearner,
    base_tau1: BaseLearner,
    weight: WeightRule,
) -> CateModel:
    """Two-stage crossover estimator.

    Stage 1 fits each arm's response; stage 2 regresses the imputed effects of
    each arm on its features; the prediction blends the two stage-2 estimates
    with the weight rule.
    """
    x0, y0, x1, y1 = _split_arms(ds)
    mu0_hat = base_mu0.fit(x0, y0)
    mu1_hat = base_mu1.fit(x1, y1)
    imputed = impute_effects(ds, mu0_hat, mu1_hat)
    return CateModel(
        kind="X",
        dim=ds.dim,
        mu0=mu0_hat,
        mu1=mu1_hat,
        tau0=base_tau0.fit(x0, imputed.d_control),
        tau1=base_tau1.fit(x1, imputed.d_treated),
        weight_rule=weight,
    )


def transformed_outcome(y: np.ndarray, w: np.ndarray, e: np.ndarray) -> np.ndarray:
    """Inverse-probability transformed outcome whose conditional mean is the effect."""
    e = np.asarray(e, dtype=float)
    if e.min() <= 0.0 or e.max() >= 1.0:
        raise InvalidDataError(
            "assignment probabilities must be strictly inside (0, 1) for the "
            "transformed outcome; clip the propensity model"
        )
    w = np.asarray(w, dtype=float)
    return np.asarray(y, dtype=float) * (w - e) / (e * (1.0 - e))


def fit_f(ds: Dataset, prop: PropensityModel, base_tau: BaseLearner) -> CateModel:
    """Regress the inverse-probability transformed outcome on the features."""
    e = prop.propensity(ds.features)
    y_star = transformed_outcome(ds.outcome, ds.treatment, e)
    return CateModel(kind="F", dim=ds.dim, tau=base_tau.fit(ds.features, y_star))


def fit_u(
    ds: Dataset,
    base_obs: BaseLearner,
    prop: PropensityModel,
    base_tau: BaseLearner,
    denom_floor: float = 0.05,
) -> CateModel:
    """Regress the residual ratio on the features.

    The ratio divides outcome residuals by assignment residuals ``w - e(x)``;
    denominators smaller than ``denom_floor`` in magnitude are clamped to the
    floor with their sign preserved, and the number of clamped units is
    recorded on the model.
    """
    if denom_floor <= 0:
        raise InvalidDataError(f"denom_floor must be > 0, got {denom_floor}")
    obs_hat = base_obs.fit(ds.features, ds.outcome)
    e = prop.propensity(ds.features)
    denom = ds.treatment.astype(float) - e
    floored = np.abs(denom) < denom_floor
    signs = np.where(denom >= 0, 1.0, -1.0)
    safe = np.where(floored, signs * denom_floor, denom)
    resid_ratio = (ds.outcome - obs_hat.predict(ds.features)) / safe
    return CateModel(
        kind="U",
        dim=ds.dim,
        obs=obs_hat,
        tau=base_tau.fit(ds.features, resid_ratio),
        flooring_count=int(floored.sum()),
    )


# ---------------------------------------------------------------------------
# learner-spec strings (the CLI surface): "<meta>-<base>[:slot=base,...]"


_BASE_TOKENS = ("rf", "ols", "ols0", "knn", "mean")

_SLOTS = {
    "t": ("mu0", "mu1"),
    "s": ("mu",),
    "x": ("mu0", "mu1", "tau0", "tau1", "mu", "tau"),
    "f": ("tau",),
    "u": ("obs", "tau"),
}


@dataclass(frozen=True)
class LearnerConfig:
    """A named recipe turning a dataset (plus a seed) into a fitted model."""

    name: str
    fit: Callable[[Dataset, int], CateModel]


def _base_factory(token: str, forest_params: ForestParams, knn_k: int | None):
    if token == "rf":
        return lambda seed: Forest(params=replace(forest_params, seed=seed))
    if token == "ols":
        return lambda seed: Ols(intercept=True)
    if token == "ols0":
        return lambda seed: Ols(intercept=False)
    if token == "knn":
        return lambda seed: Knn(k=knn_k)
    if token == "mean":
        return lambda seed: Mean()
    raise InvalidDataError(
        f"unknown base learner {token!r}; valid bases are {', '.join(_BASE_TOKENS)}"
    )


def parse_learner_spec(
    text: str,
    forest_params: ForestParams | None = None,
    knn_k: int | None = None,
    propensity: PropensityModel | None = None,
    denom_floor: float = 0.05,
    propensity_clip: float = 0.025,
) -> LearnerConfig:
    """Parse a learner-spec string like ``x-rf``, ``t-ols`` or ``x-rf:tau=ols``.

    The part before the dash picks the meta-learner (s, t, x, f, u), the part
    after it the default base learner for every slot; ``:slot=base`` entries
    override individual slots (e.g. ``x-rf:tau=ols`` uses forests in stage 1
    and least squares for both stage-2 effect regressions).

    When ``propensity`` is given it is used wherever an assignment-probability
    model is needed (the x-learner weight and the f/u transformations);
    otherwise one is estimated from the data with a logistic fit.
    """
    forest_params = forest_params or ForestParams()
    spec = text.strip().lower()
    head, _, overrides_part = spec.partition(":")
    meta, dash, default_base = head.partition("-")
    if not dash or meta not in _SLOTS or default_base not in _BASE_TOKENS:
        raise InvalidDataError(
            f"malformed learner spec {text!r}; expected <meta>-<base> with meta in "
            f"{{s,t,x,f,u}} and base in {{{', '.join(_BASE_TOKENS)}}}"
        )

    slot_tokens = dict.fromkeys(_SLOTS[meta], default_base)
    if overrides_part:
        for item in overrides_part.split(","):
            slot, eq, base_token = item.partition("=")
            slot = slot.strip()
            base_token = base_token.strip()
            if not eq or slot not in _SLOTS[meta]:
                raise InvalidDataError(
                    f"invalid override {item!r} for meta-learner {meta!r}; "
                    f"valid slots are {', '.join(_SLOTS[meta])}"
                )
            if base_token not in _BASE_TOKENS:
                raise InvalidDataError(f"unknown base learner {base_token!r} in {item!r}")
            if slot == "mu" and meta == "x":
                slot_tokens["mu0"] = slot_tokens["mu1"] = base_token
            elif slot == "tau" and meta == "x":
                slot_tokens["tau0"] = slot_tokens["tau1"] = base_token
            else:
                slot_tokens[slot] = base_token

    factories = {
        slot: _base_factory(token, forest_params, knn_k)
        for slot, token in slot_tokens.items()
        if slot not in ("mu", "tau") or meta != "x"
    }

    def _prop_for(ds: Dataset) -> PropensityModel:
        if propensity is not None:
            return propensity
        return fit_propensity(ds.features, ds.treatment, "logistic", propensity_clip)

    def fit(ds: Dataset, seed: int) -> CateModel:
        if meta == "t":
            return fit_t(
                ds,
                factories["mu0"](derive_seed(seed, 0)),
                factories["mu1"](derive_seed(seed, 1)),
            )
        if meta == "s":
            return fit_s(ds, factories["mu"](derive_seed(seed, 0)))
        if meta == "x":
            return fit_x(
                ds,
                factories["mu0"](derive_seed(seed, 0)),
                factories["mu1"](derive_seed(seed, 1)),
                factories["tau0"](derive_seed(seed, 2)),
                factories["tau1"](derive_seed(seed, 3)),
                weight=PropensityWeight(_prop_for(ds)),
            )
        if meta == "f":
            return fit_f(ds, _prop_for(ds), factories["tau"](derive_seed(seed, 0)))
        return fit_u(
            ds,
            factories["obs"](derive_seed(seed, 0)),
            _prop_for(ds),
            factories["tau"](derive_seed(seed, 1)),
            denom_floor=denom_floor,
        )

    return LearnerConfig(name=spec, fit=fit)
