"""Named, reproducible experiments: effect-recovery orderings and rate studies.

Rate experiments measure how a learner's effect-estimation error shrinks with
the treated-arm size and compare the fitted log-log slope against the decay
the theory predicts:

* ``linear-unbalanced``: linear effect, rough (kinked) control response,
  control arm of size n^2.  Nearest-neighbor first stage, least-squares second
  stage, treated side only.  Expected slope: -1 (parametric).
* ``lipschitz-knn``: kinked effect with only smoothness to exploit, equal
  arms, nearest-neighbor stages.  Expected slope: -2/(2+d) for both the
  crossover and the two-model learner.
* ``tlearner-lipschitz``: the two-model learner alone on the same process.
* ``semiparam``: effect and response driven by disjoint independent feature
  blocks, equal arms.  Expected slope: -1 despite m = n.
* ``passthrough``: synthetic errors exactly 1/n, for plumbing checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dgp import (
    DEFAULT_SPEC_SEED,
    Dataset,
    GaussianFeatures,
    SimulationSpec,
    builtin_spec,
    draw_dataset,
    lipschitz_spec,
    semiparam_spec,
)
from .errors import InvalidDataError
from .evaluation import (
    RateFit,
    ReplicationRecord,
    rate_fit,
    run_replications,
    run_replications_conditional,
)
from .inference import ci_normal, ci_smoothed
from .learners import ForestParams, GivenPropensity, knn, ols, minimax_k
from .meta import (
    CateModel,
    LearnerConfig,
    ZeroWeight,
    parse_learner_spec,
    transformed_outcome,
)
from .rng import child_rng, derive_seed

__all__ = [
    "RATE_EXPERIMENTS",
    "RateResult",
    "rate_experiment",
    "simulation_ordering",
    "linear_cate_spec",
    "linear_gaussian_spec",
    "bootstrap_coverage_study",
    "sigma_agreement_study",
    "transformed_outcome_ate_gap",
    "default_ordering_forest",
]

RATE_EXPERIMENTS = (
    "linear-unbalanced",
    "lipschitz-knn",
    "tlearner-lipschitz",
    "semiparam",
    "passthrough",
)


# ---------------------------------------------------------------------------
# processes used only by experiments


def linear_cate_spec(d: int = 5, L: float = 1.0, sd: float = 1.0) -> SimulationSpec:
    """Linear effect over a kinked (nowhere-linear) control response.

    Features are independent standard normal; ``mu0(x) = (L/sqrt(d)) sum |x_j|``
    is L-Lipschitz and even in every coordinate, so its smoothing bias is
    orthogonal to linear functions; the effect ``tau(x) = (L/sqrt(d)) sum x_j``
    is exactly linear.
    """
    if d < 1:
        raise InvalidDataError(f"d must be >= 1, got {d}")
    scale = L / math.sqrt(d)

    def mu0(x, scale=scale):
        return scale * np.abs(x).sum(axis=1)

    def mu1(x, scale=scale, mu0=mu0):
        return mu0(x) + scale * x.sum(axis=1)

    return SimulationSpec(
        name=f"linear-cate-d{d}",
        dim=d,
        propensity=lambda x: np.full(x.shape[0], 0.5),
        mu0=mu0,
        mu1=mu1,
        feature_law=GaussianFeatures(np.eye(d)),
        noise_sd=sd,
        constant_propensity=0.5,
    )


def linear_gaussian_spec(d: int = 2, sd: float = 1.0) -> SimulationSpec:
    """Small linear-Gaussian process for interval coverage studies."""
    rng = child_rng(DEFAULT_SPEC_SEED, 8, d)
    gamma = rng.uniform(-2.0, 2.0, size=d)
    beta = rng.uniform(-2.0, 2.0, size=d)

    def mu0(x, gamma=gamma):
        return x @ gamma

    def mu1(x, gamma=gamma, beta=beta):
        return x @ (gamma + beta)

    return SimulationSpec(
        name=f"linear-gaussian-d{d}",
        dim=d,
        propensity=lambda x: np.full(x.shape[0], 0.5),
        mu0=mu0,
        mu1=mu1,
        feature_law=GaussianFeatures(np.eye(d)),
        noise_sd=sd,
        constant_propensity=0.5,
    )


# ---------------------------------------------------------------------------
# one-sided crossover fitters for the rate experiments
#
# These fit exactly the estimator the rate theory analyzes: first-stage
# control response, imputed effects on the treated arm, second-stage
# regression, zero weight on the (never-evaluated) control side.


@dataclass(frozen=True)
class _Cols:
    """Restrict a fitted model to a column subset of the features."""

    inner: object
    cols: tuple[int, ...]

    def predict(self, x: np.ndarray) -> np.ndarray:
        return self.inner.predict(np.atleast_2d(x)[:, list(self.cols)])


def _arms(ds: Dataset):
    treated = ds.treatment == 1
    return (
        ds.features[~treated],
        ds.outcome[~treated],
        ds.features[treated],
        ds.outcome[treated],
    )


def _x_g0_knn_ols(noise_var: float, L: float) -> LearnerConfig:
    def fit(ds: Dataset, seed: int) -> CateModel:
        x0, y0, x1, y1 = _arms(ds)
        k0 = minimax_k(noise_var, L, ds.dim, x0.shape[0])
        mu0_hat = knn(x0, y0, k0)
        imputed = y1 - mu0_hat.predict(x1)
        tau1 = ols(x1, imputed, with_intercept=False)
        return CateModel(
            kind="X", dim=ds.dim, mu0=mu0_hat, tau1=tau1, weight_rule=ZeroWeight()
        )

    return LearnerConfig(name="x-knn-ols-g0", fit=fit)


def _x_g0_knn_knn(noise_var: float, L: float) -> LearnerConfig:
    def fit(ds: Dataset, seed: int) -> CateModel:
        x0, y0, x1, y1 = _arms(ds)
        k0 = minimax_k(noise_var, L, ds.dim, x0.shape[0])
        k1 = minimax_k(noise_var, L, ds.dim, x1.shape[0])
        mu0_hat = knn(x0, y0, k0)
        imputed = y1 - mu0_hat.predict(x1)
        tau1 = knn(x1, imputed, k1)
        return CateModel(
            kind="X", dim=ds.dim, mu0=mu0_hat, tau1=tau1, weight_rule=ZeroWeight()
        )

    return LearnerConfig(name="x-knn-g0", fit=fit)


def _t_knn(noise_var: float, L: float) -> LearnerConfig:
    def fit(ds: Dataset, seed: int) -> CateModel:
        x0, y0, x1, y1 = _arms(ds)
        k0 = minimax_k(noise_var, L, ds.dim, x0.shape[0])
        k1 = minimax_k(noise_var, L, ds.dim, x1.shape[0])
        return CateModel(
            kind="T", dim=ds.dim, mu0=knn(x0, y0, k0), mu1=knn(x1, y1, k1)
        )

    return LearnerConfig(name="t-knn", fit=fit)


def _x_g0_semiparam(noise_var: float, L: float, s: int) -> LearnerConfig:
    """First stage on the response block, second stage on the effect block."""

    def fit(ds: Dataset, seed: int) -> CateModel:
        x0, y0, x1, y1 = _arms(ds)
        rest = tuple(range(s, ds.dim))
        head = tuple(range(s))
        k0 = minimax_k(noise_var, L, len(rest), x0.shape[0])
        mu0_hat = _Cols(knn(x0[:, list(rest)], y0, k0), rest)
        imputed = y1 - mu0_hat.predict(x1)
        tau1 = _Cols(ols(x1[:, list(head)], imputed, with_intercept=False), head)
        return CateModel(
            kind="X", dim=ds.dim, mu0=mu0_hat, tau1=tau1, weight_rule=ZeroWeight()
        )

    return LearnerConfig(name="x-semiparam-g0", fit=fit)


# ---------------------------------------------------------------------------
# rate experiments


@dataclass(frozen=True)
class RateResult:
    experiment: str
    records: list[ReplicationRecord]
    fits: dict[str, RateFit]
    target_slope: float


def rate_experiment(
    name: str,
    n_grid: list[int] | None = None,
    reps: int = 20,
    test_size: int = 10_000,
    seed: int = 0,
    d: int | None = None,
    L: float = 1.0,
    sd: float = 1.0,
    threads: int = 1,
) -> RateResult:
    """Run one of the named convergence-rate experiments."""
    if name not in RATE_EXPERIMENTS:
        raise InvalidDataError(
            f"unknown experiment {name!r}; valid names: {', '.join(RATE_EXPERIMENTS)}"
        )

    if name == "passthrough":
        grid = n_grid or [100, 200, 400, 800]
        records = [
            ReplicationRecord(
                sim="passthrough",
                learner="passthrough",
                n_train=2 * n,
                n_treated=n,
                m_control=n,
                rep=0,
                seed=seed,
                mse=1.0 / n,
                wall_ms=0.0,
            )
            for n in grid
        ]
        return RateResult(
            experiment=name,
            records=records,
            fits={"passthrough": rate_fit(records)},
            target_slope=-1.0,
        )

    noise_var = sd * sd
    if name == "linear-unbalanced":
        dim = d or 5
        spec = linear_cate_spec(d=dim, L=L, sd=sd)
        grid = n_grid or [128, 256, 512, 1024, 2048]
        sizes = [(n, n * n) for n in grid]
        learners = [_x_g0_knn_ols(noise_var, L)]
        target = -1.0
    elif name == "lipschitz-knn":
        dim = d or 3
        spec = lipschitz_spec(d=dim, L=L, sd=sd)
        grid = n_grid or [256, 512, 1024, 2048, 4096, 8192]
        sizes = [(n, n) for n in grid]
        learners = [_x_g0_knn_knn(noise_var, L), _t_knn(noise_var, L)]
        target = -2.0 / (2.0 + dim)
    elif name == "tlearner-lipschitz":
        dim = d or 3
        spec = lipschitz_spec(d=dim, L=L, sd=sd)
        grid = n_grid or [256, 512, 1024, 2048, 4096, 8192]
        sizes = [(n, n) for n in grid]
        learners = [_t_knn(noise_var, L)]
        target = -2.0 / (2.0 + dim)
    else:  # semiparam
        dim = d or 4
        s = max(1, dim // 2)
        spec = semiparam_spec(d=dim, s=s, L=L, sd=sd)
        grid = n_grid or [256, 512, 1024, 2048, 4096, 8192]
        sizes = [(n, n) for n in grid]
        learners = [_x_g0_semiparam(noise_var, L, s)]
        target = -1.0

    records = run_replications_conditional(
        spec, learners, sizes, reps=reps, test_size=test_size,
        base_seed=seed, threads=threads,
    )
    fits = {
        learner.name: rate_fit([r for r in records if r.learner == learner.name])
        for learner in learners
    }
    return RateResult(experiment=name, records=records, fits=fits, target_slope=target)


# ---------------------------------------------------------------------------
# benchmark-simulation orderings


def default_ordering_forest(seed: int = 0, n_trees: int = 100) -> ForestParams:
    """Forest settings for the benchmark orderings (smaller than the library
    default of 500 trees; orderings stabilize well before that)."""
    return ForestParams(n_trees=n_trees, min_leaf=5, seed=seed)


def simulation_ordering(
    sim_id: int,
    learner_specs: tuple[str, ...] = ("s-rf", "t-rf", "x-rf"),
    n_total: int = 10_000,
    reps: int = 30,
    test_size: int = 10_000,
    seed: int = 0,
    forest_params: ForestParams | None = None,
    threads: int = 1,
) -> tuple[list[ReplicationRecord], dict[str, float]]:
    """Replicate one benchmark simulation and report mean error per learner.

    For constant-assignment benchmarks the exact assignment probability is
    supplied to the learners that need one (crossover weight, outcome
    transformations), as the probability is known by design there.
    """
    spec = builtin_spec(sim_id)
    prop = (
        GivenPropensity(spec.constant_propensity)
        if spec.constant_propensity is not None
        else None
    )
    params = forest_params or default_ordering_forest()
    learners = [
        parse_learner_spec(text, forest_params=params, propensity=prop)
        for text in learner_specs
    ]
    records = run_replications(
        spec, learners, [n_total], reps=reps, test_size=test_size,
        base_seed=seed, threads=threads,
    )
    summary = {}
    for learner in learners:
        mses = [r.mse for r in records if r.learner == learner.name and not r.failed]
        summary[learner.name] = float(np.mean(mses)) if mses else math.nan
    return records, summary


# ---------------------------------------------------------------------------
# interval studies on the linear-Gaussian process


def bootstrap_coverage_study(
    n_train: int = 200,
    n_datasets: int = 200,
    b: int = 500,
    alpha: float = 0.05,
    n_points: int = 4,
    seed: int = 0,
) -> dict:
    """Empirical pointwise coverage of the normal bootstrap interval.

    Draws ``n_datasets`` fresh samples from the linear-Gaussian process, fits
    a two-model least-squares learner on each, and checks how often the
    nominal ``1 - alpha`` interval covers the exact effect at a fixed set of
    query points.
    """
    spec = linear_gaussian_spec()
    learner = parse_learner_spec("t-ols")
    points = spec.sample_test_features(n_points, derive_seed(seed, 99))
    truths = spec.tau(points)
    hits = 0
    total = 0
    for i in range(n_datasets):
        ds, _ = draw_dataset(spec, n_train, derive_seed(seed, 3, i))
        ivs = ci_normal(ds, learner, points, b=b, alpha=alpha, seed=derive_seed(seed, 4, i))
        hits += sum(1 for iv, t in zip(ivs, truths) if iv.contains(t))
        total += len(ivs)
    return {
        "learner": learner.name,
        "nominal": 1.0 - alpha,
        "coverage": hits / total,
        "n_datasets": n_datasets,
        "n_points": n_points,
        "b": b,
    }


def sigma_agreement_study(
    n_train: int = 200,
    n_datasets: int = 20,
    b: int = 10_000,
    n_points: int = 4,
    seed: int = 0,
) -> dict:
    """Average spread of the two interval constructions on identical data.

    The smoothed construction needs a large replicate count to stabilize, so
    both methods are run at the same large ``b`` and their mean spreads
    compared.
    """
    spec = linear_gaussian_spec()
    learner = parse_learner_spec("t-ols")
    points = spec.sample_test_features(n_points, derive_seed(seed, 99))
    sig_n, sig_s = [], []
    for i in range(n_datasets):
        ds, _ = draw_dataset(spec, n_train, derive_seed(seed, 3, i))
        iv_seed = derive_seed(seed, 4, i)
        # same seed => both methods see the identical resample sequence
        sig_n.extend(iv.sigma for iv in ci_normal(ds, learner, points, b=b, seed=iv_seed))
        sig_s.extend(iv.sigma for iv in ci_smoothed(ds, learner, points, b=b, seed=iv_seed))
    mean_n = float(np.mean(sig_n))
    mean_s = float(np.mean(sig_s))
    return {
        "mean_sigma_normal": mean_n,
        "mean_sigma_smoothed": mean_s,
        "ratio": mean_s / mean_n,
        "b": b,
        "n_datasets": n_datasets,
    }


def transformed_outcome_ate_gap(sim_id: int, n: int = 100_000, seed: int = 0) -> dict:
    """Mean transformed outcome centered at the effect, with its standard error.

    With the exact assignment probability plugged in, the inverse-probability
    transformed outcome has conditional mean equal to the effect surface, so
    the sample mean of ``y* - tau(x)`` should sit within Monte Carlo noise of
    zero.  Returns the gap and its standard error.
    """
    spec = builtin_spec(sim_id)
    ds, gt = draw_dataset(spec, n, seed)
    y_star = transformed_outcome(ds.outcome, ds.treatment, gt.propensity_vals)
    diff = y_star - gt.tau
    return {
        "gap": float(diff.mean()),
        "se": float(diff.std(ddof=1) / math.sqrt(n)),
        "ate": float(gt.tau.mean()),
    }
