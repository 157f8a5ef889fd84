"""Bootstrap confidence intervals and bias diagnostics for pointwise effects.

Both interval constructions resample within treatment arms (every replicate
keeps the original arm sizes), refit the learner on each replicate, and pair a
center with a normal-quantile spread:

* :func:`ci_normal` centers at the full-data estimate and uses the sample
  standard deviation of the replicate estimates.
* :func:`ci_smoothed` centers at the replicate mean and derives the spread
  from the covariance between replicate estimates and per-unit resample
  counts (the infinitesimal-jackknife form), which needs a much larger
  replicate count to stabilize.

:func:`monte_carlo_bias` approximates estimator bias when both potential
outcomes are known (synthetic data only); :func:`bootstrap_bias` is its
observable-data counterpart, the bootstrap-mean shift.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .dgp import Dataset, GroundTruth, SimulationSpec
from .errors import InvalidDataError, ReplicateFailureError
from .meta import LearnerConfig
from .rng import child_rng, derive_seed

__all__ = [
    "IntervalEstimate",
    "BootstrapRecord",
    "ci_normal",
    "ci_smoothed",
    "monte_carlo_bias",
    "bootstrap_bias",
]

# fraction of replicates allowed to fail before the whole procedure errors out
MAX_FAILURE_FRACTION = 0.1


@dataclass(frozen=True)
class IntervalEstimate:
    point: float
    lower: float
    upper: float
    sigma: float
    b: int
    alpha: float

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper

    @property
    def width(self) -> float:
        return self.upper - self.lower


@dataclass(frozen=True)
class BootstrapRecord:
    """Raw replicate output: estimates (b x p) and resample counts (b x n)."""

    estimates: np.ndarray
    counts: np.ndarray | None
    n_failed: int


def _resample_plan(ds: Dataset):
    s0 = np.nonzero(ds.treatment == 0)[0]
    s1 = np.nonzero(ds.treatment == 1)[0]
    if len(s0) == 0 or len(s1) == 0:
        raise InvalidDataError("bootstrap requires both treatment arms to be nonempty")
    return s0, s1


def bootstrap_replicates(
    ds: Dataset,
    learner: LearnerConfig,
    points: np.ndarray,
    b: int,
    seed: int,
    with_counts: bool = False,
) -> BootstrapRecord:
    """Run ``b`` within-arm resample-and-refit replicates.

    Replicate ``i`` (1-based) draws its resample indices from the child stream
    ``(seed, i)``: control indices first, then treated, each uniform with
    replacement within the arm.  Failed fits are skipped and counted; more
    than ``MAX_FAILURE_FRACTION`` of them aborts.
    """
    if b < 2:
        raise InvalidDataError(f"need at least 2 replicates, got {b}")
    points = np.atleast_2d(np.asarray(points, dtype=float))
    s0, s1 = _resample_plan(ds)
    estimates = []
    counts = [] if with_counts else None
    n_failed = 0
    for i in range(1, b + 1):
        rng = child_rng(seed, i)
        idx = np.concatenate(
            [
                s0[rng.integers(0, len(s0), len(s0))],
                s1[rng.integers(0, len(s1), len(s1))],
            ]
        )
        sub = Dataset(
            features=ds.features[idx],
            treatment=ds.treatment[idx],
            outcome=ds.outcome[idx],
        )
        try:
            model = learner.fit(sub, derive_seed(seed, i, 1))
            estimates.append(model.predict(points))
        except Exception:
            n_failed += 1
            continue
        if with_counts:
            counts.append(np.bincount(idx, minlength=ds.n))
    if n_failed > MAX_FAILURE_FRACTION * b:
        raise ReplicateFailureError(
            f"{n_failed} of {b} bootstrap replicates failed to fit"
        )
    return BootstrapRecord(
        estimates=np.asarray(estimates, dtype=float),
        counts=np.asarray(counts, dtype=float) if with_counts else None,
        n_failed=n_failed,
    )


def _quantiles(alpha: float) -> tuple[float, float]:
    if not 0.0 < alpha < 1.0:
        raise InvalidDataError(f"alpha must lie in (0, 1), got {alpha}")
    return float(norm.ppf(alpha / 2.0)), float(norm.ppf(1.0 - alpha / 2.0))


def ci_normal(
    ds: Dataset,
    learner: LearnerConfig,
    points: np.ndarray,
    b: int = 1000,
    alpha: float = 0.05,
    seed: int = 0,
) -> list[IntervalEstimate]:
    """Normal-approximation bootstrap interval around the full-data estimate."""
    q_lo, q_hi = _quantiles(alpha)
    points = np.atleast_2d(np.asarray(points, dtype=float))
    full = learner.fit(ds, derive_seed(seed, 0)).predict(points)
    rec = bootstrap_replicates(ds, learner, points, b, seed)
    sigma = rec.estimates.std(axis=0, ddof=1)
    used = rec.estimates.shape[0]
    return [
        IntervalEstimate(
            point=float(full[p]),
            lower=float(full[p] + q_lo * sigma[p]),
            upper=float(full[p] + q_hi * sigma[p]),
            sigma=float(sigma[p]),
            b=used,
            alpha=alpha,
        )
        for p in range(points.shape[0])
    ]


def ci_smoothed(
    ds: Dataset,
    learner: LearnerConfig,
    points: np.ndarray,
    b: int = 10_000,
    alpha: float = 0.05,
    seed: int = 0,
) -> list[IntervalEstimate]:
    """Smoothed bootstrap interval around the replicate mean.

    The spread couples replicate estimates with per-unit resample counts:
    ``sigma = sqrt(sum_j cov_j^2)`` where ``cov_j`` is the replicate
    covariance between the estimate and unit ``j``'s resample count.
    """
    q_lo, q_hi = _quantiles(alpha)
    points = np.atleast_2d(np.asarray(points, dtype=float))
    rec = bootstrap_replicates(ds, learner, points, b, seed, with_counts=True)
    used = rec.estimates.shape[0]
    center = rec.estimates.mean(axis=0)
    resid = rec.estimates - center
    count_resid = rec.counts - rec.counts.mean(axis=0)
    cov = resid.T @ count_resid / used  # (p, n)
    sigma = np.sqrt((cov * cov).sum(axis=1))
    return [
        IntervalEstimate(
            point=float(center[p]),
            lower=float(center[p] + q_lo * sigma[p]),
            upper=float(center[p] + q_hi * sigma[p]),
            sigma=float(sigma[p]),
            b=used,
            alpha=alpha,
        )
        for p in range(points.shape[0])
    ]


def monte_carlo_bias(
    spec: SimulationSpec,
    ds: Dataset,
    truth: GroundTruth,
    learner: LearnerConfig,
    point: np.ndarray,
    reps: int = 1000,
    seed: int = 0,
    train_size: int | None = None,
) -> float:
    """Approximate the estimator's bias at a point by reassignment replication.

    Each replicate permutes the treatment vector, rebuilds the observed
    outcome from the known potential outcomes, optionally subsamples a
    training set, refits, and predicts at ``point``.  Returns the mean
    prediction minus the exact effect at the point.
    """
    if truth is None:
        raise InvalidDataError("monte_carlo_bias requires ground truth (synthetic data)")
    if reps < 1:
        raise InvalidDataError(f"reps must be >= 1, got {reps}")
    point = np.atleast_2d(np.asarray(point, dtype=float))
    tau_true = float(spec.tau(point)[0])
    n = ds.n
    size = n if train_size is None else min(train_size, n)
    preds = np.empty(reps)
    for r in range(reps):
        rng = child_rng(seed, r)
        w = rng.permutation(ds.treatment)
        yobs = np.where(w == 1, truth.potential_y1, truth.potential_y0)
        sub = rng.choice(n, size=size, replace=False) if size < n else np.arange(n)
        train = Dataset(features=ds.features[sub], treatment=w[sub], outcome=yobs[sub])
        model = learner.fit(train, derive_seed(seed, r, 1))
        preds[r] = float(model.predict(point)[0])
    return float(preds.mean() - tau_true)


def bootstrap_bias(
    ds: Dataset,
    learner: LearnerConfig,
    point: np.ndarray,
    b: int = 1000,
    seed: int = 0,
) -> float:
    """Bootstrap-mean shift: average replicate estimate minus full-data estimate."""
    point = np.atleast_2d(np.asarray(point, dtype=float))
    full = float(learner.fit(ds, derive_seed(seed, 0)).predict(point)[0])
    rec = bootstrap_replicates(ds, learner, point, b, seed)
    return float(rec.estimates[:, 0].mean() - full)
