"""Experiment orchestration: replication loops, scoring, and diagnostics.

The replication loop is the package's main parallelism site: every task's
randomness is derived from ``(base_seed, tag, ...)`` child streams, so results
are identical for any thread count and any execution order.  Records are
returned sorted by their natural key.
"""

from __future__ import annotations

import math
import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dgp import Dataset, SimulationSpec, draw_dataset, draw_dataset_arms
from .errors import InvalidDataError, UnsupportedModelError
from .inference import IntervalEstimate, ci_normal, ci_smoothed
from .learners import HonestForest
from .meta import CateModel, LearnerConfig
from .rng import child_rng, derive_seed

__all__ = [
    "ReplicationRecord",
    "RateFit",
    "emse",
    "run_replications",
    "run_replications_conditional",
    "rate_fit",
    "fit_loglog",
    "coverage_rate",
    "SplitDiagnostic",
    "s_split_fraction",
    "CoverageRow",
    "ci_simulation",
]

# seed-derivation tags
_TRAIN, _TEST, _FIT = 0, 1, 2


def _name_key(name: str) -> int:
    # fit seeds key on the learner's name, not its list position, so records
    # are invariant to learner execution order
    return zlib.crc32(name.encode())


@dataclass(frozen=True)
class ReplicationRecord:
    sim: str
    learner: str
    n_train: int
    n_treated: int
    m_control: int
    rep: int
    seed: int
    mse: float
    wall_ms: float
    failed: bool = False

    @property
    def key(self):
        return (self.sim, self.learner, self.n_train, self.n_treated, self.rep)


def emse(model: CateModel, test_features: np.ndarray, true_tau: np.ndarray) -> float:
    """Mean squared deviation of the model's effect estimates from the truth."""
    test_features = np.atleast_2d(np.asarray(test_features, dtype=float))
    true_tau = np.asarray(true_tau, dtype=float)
    if test_features.shape[0] == 0:
        raise InvalidDataError("test set is empty")
    if test_features.shape[0] != true_tau.shape[0]:
        raise InvalidDataError(
            f"{test_features.shape[0]} test rows vs {true_tau.shape[0]} effect values"
        )
    diff = model.predict(test_features) - true_tau
    return float(np.mean(diff * diff))


def _replicate_task(spec, learners, draw_train, n_label, rep, base_seed, test_x, test_tau):
    out = []
    train_seed = derive_seed(base_seed, _TRAIN, n_label, rep)
    ds, _ = draw_train(train_seed)
    for learner in learners:
        fit_seed = derive_seed(base_seed, _FIT, _name_key(learner.name), n_label, rep)
        t0 = time.perf_counter()
        try:
            model = learner.fit(ds, fit_seed)
            mse = emse(model, test_x, test_tau)
            failed = False
        except Exception:
            mse = math.nan
            failed = True
        wall_ms = (time.perf_counter() - t0) * 1000.0
        out.append(
            ReplicationRecord(
                sim=spec.name,
                learner=learner.name,
                n_train=ds.n,
                n_treated=ds.n_treated,
                m_control=ds.n_control,
                rep=rep,
                seed=train_seed,
                mse=mse,
                wall_ms=wall_ms,
                failed=failed,
            )
        )
    return out


def _run_tasks(spec, learners, draws, reps, test_size, base_seed, threads):
    """``draws``: list of (n_label, draw_fn) pairs; shared test draw per rep."""
    test_sets = {}
    for rep in range(reps):
        x = spec.sample_test_features(test_size, derive_seed(base_seed, _TEST, rep))
        test_sets[rep] = (x, spec.tau(x))

    tasks = [
        (n_label, draw_fn, rep)
        for (n_label, draw_fn) in draws
        for rep in range(reps)
    ]

    def run(task):
        n_label, draw_fn, rep = task
        x, tau = test_sets[rep]
        return _replicate_task(spec, learners, draw_fn, n_label, rep, base_seed, x, tau)

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(run, tasks))
    else:
        chunks = [run(t) for t in tasks]
    records = [rec for chunk in chunks for rec in chunk]
    records.sort(key=lambda r: r.key)
    return records


def run_replications(
    spec: SimulationSpec,
    learners: list[LearnerConfig],
    n_grid: list[int],
    reps: int,
    test_size: int = 10_000,
    base_seed: int = 0,
    threads: int = 1,
) -> list[ReplicationRecord]:
    """Replicated train/score loop over training sizes.

    For each replication a single test sample is shared by every learner and
    size, and for each ``(size, rep)`` all learners see the identical training
    draw, so learner comparisons are paired.
    """
    if reps < 1:
        raise InvalidDataError(f"reps must be >= 1, got {reps}")
    draws = [
        (n, (lambda seed, n=n: draw_dataset(spec, n, seed)))
        for n in n_grid
    ]
    return _run_tasks(spec, learners, draws, reps, test_size, base_seed, threads)


def run_replications_conditional(
    spec: SimulationSpec,
    learners: list[LearnerConfig],
    sizes: list[tuple[int, int]],
    reps: int,
    test_size: int = 10_000,
    base_seed: int = 0,
    threads: int = 1,
) -> list[ReplicationRecord]:
    """Same loop with exact ``(n_treated, m_control)`` arm sizes per draw."""
    if reps < 1:
        raise InvalidDataError(f"reps must be >= 1, got {reps}")
    draws = [
        (n, (lambda seed, n=n, m=m: draw_dataset_arms(spec, n, m, seed)))
        for (n, m) in sizes
    ]
    return _run_tasks(spec, learners, draws, reps, test_size, base_seed, threads)


# ---------------------------------------------------------------------------
# rate fitting


@dataclass(frozen=True)
class RateFit:
    sizes: np.ndarray
    mean_emse: np.ndarray
    slope: float
    intercept: float
    slope_stderr: float


def fit_loglog(sizes: np.ndarray, values: np.ndarray) -> RateFit:
    """Least-squares line through ``(log size, log value)``."""
    sizes = np.asarray(sizes, dtype=float)
    values = np.asarray(values, dtype=float)
    if sizes.shape[0] < 2:
        raise InvalidDataError("need at least 2 distinct sizes for a rate fit")
    if np.any(values <= 0.0):
        raise InvalidDataError(
            "nonpositive mean error encountered; log-log fit undefined "
            "(an exact-oracle learner leaks zero error)"
        )
    lx = np.log(sizes)
    ly = np.log(values)
    k = len(lx)
    sxx = float(np.sum((lx - lx.mean()) ** 2))
    slope = float(np.sum((lx - lx.mean()) * (ly - ly.mean())) / sxx)
    intercept = float(ly.mean() - slope * lx.mean())
    if k > 2:
        resid = ly - (intercept + slope * lx)
        stderr = math.sqrt(float(resid @ resid) / (k - 2) / sxx)
    else:
        stderr = 0.0
    return RateFit(
        sizes=sizes,
        mean_emse=values,
        slope=slope,
        intercept=intercept,
        slope_stderr=stderr,
    )


def rate_fit(records: list[ReplicationRecord], size_key: str = "n_treated") -> RateFit:
    """Aggregate records to mean error per size, then fit the log-log slope."""
    groups: dict[int, list[float]] = {}
    for rec in records:
        if rec.failed:
            continue
        groups.setdefault(getattr(rec, size_key), []).append(rec.mse)
    sizes = np.array(sorted(groups))
    means = np.array([np.mean(groups[s]) for s in sizes])
    return fit_loglog(sizes, means)


# ---------------------------------------------------------------------------
# interval scoring


def coverage_rate(intervals: list[IntervalEstimate], truths: list[float]) -> float:
    """Fraction of intervals containing the corresponding truth."""
    if len(intervals) != len(truths):
        raise InvalidDataError(
            f"{len(intervals)} intervals vs {len(truths)} truth values"
        )
    hits = sum(1 for iv, t in zip(intervals, truths) if iv.contains(t))
    return hits / len(intervals)


# ---------------------------------------------------------------------------
# pooled-regressor split diagnostic


@dataclass(frozen=True)
class SplitDiagnostic:
    """Per-tree share of probe paths that never test the treatment column."""

    fractions: np.ndarray
    hist_counts: np.ndarray
    bin_edges: np.ndarray

    @property
    def mean_fraction(self) -> float:
        return float(self.fractions.mean())


def s_split_fraction(
    model: CateModel, n_probes: int = 1000, bins: int = 10, probe_seed: int = 1905
) -> SplitDiagnostic:
    """How often a pooled-forest model ignores the treatment indicator.

    For a fixed probe grid spanning the training box, each tree's fraction of
    root-to-leaf paths that never split on the treatment column is computed;
    the histogram of those fractions shows whether the pooled regressor is
    treating assignment as signal or noise.
    """
    if model.kind != "S" or not isinstance(model.mu, HonestForest):
        raise UnsupportedModelError(
            "split diagnostic applies to pooled-forest models only"
        )
    forest = model.mu
    rng = child_rng(probe_seed)
    span = forest.feature_max - forest.feature_min
    probes = forest.feature_min + span * rng.random((n_probes, forest.dim))
    fractions = forest.fraction_paths_without_feature(probes, feat=forest.dim - 1)
    hist, edges = np.histogram(fractions, bins=bins, range=(0.0, 1.0))
    return SplitDiagnostic(fractions=fractions, hist_counts=hist, bin_edges=edges)


# ---------------------------------------------------------------------------
# interval coverage protocol


@dataclass(frozen=True)
class CoverageRow:
    learner: str
    method: str
    nominal: float
    coverage: float
    mean_length: float
    b: int
    n_points: int


def ci_simulation(
    ds: Dataset,
    tau_truth: np.ndarray,
    learners: list[LearnerConfig],
    train_size: int,
    test_size: int,
    seed: int = 0,
    b: int = 1000,
    alpha: float = 0.05,
    methods: tuple[str, ...] = ("normal", "smoothed"),
    reps: int = 1,
) -> list[CoverageRow]:
    """Interval coverage with an adopted effect surface as the ground truth.

    ``tau_truth`` assigns every row of ``ds`` its adopted effect (a fitted
    model's predictions, or the exact effect for synthetic data).  Each
    replication imputes the missing potential outcome from that truth,
    permutes the assignment vector, rebuilds the observed outcome, samples
    disjoint train/test subsets, and scores each learner/method pair's
    intervals at the test points against the adopted truth.
    """
    tau_truth = np.asarray(tau_truth, dtype=float)
    if tau_truth.shape != (ds.n,):
        raise InvalidDataError("tau_truth must assign one value per dataset row")
    if train_size + test_size > ds.n:
        raise InvalidDataError(
            f"train_size + test_size = {train_size + test_size} exceeds n = {ds.n}"
        )
    method_fns = {"normal": ci_normal, "smoothed": ci_smoothed}
    for m in methods:
        if m not in method_fns:
            raise InvalidDataError(f"unknown interval method {m!r}")

    w0 = ds.treatment.astype(float)
    y1_full = ds.outcome + tau_truth * (1.0 - w0)
    y0_full = ds.outcome - tau_truth * w0

    hits: dict[tuple[str, str], list[float]] = {}
    lengths: dict[tuple[str, str], list[float]] = {}
    for rep in range(reps):
        rng = child_rng(seed, rep)
        w_new = rng.permutation(ds.treatment)
        y_new = np.where(w_new == 1, y1_full, y0_full)
        order = rng.permutation(ds.n)
        train_idx = order[:train_size]
        test_idx = order[train_size : train_size + test_size]
        train = Dataset(
            features=ds.features[train_idx],
            treatment=w_new[train_idx],
            outcome=y_new[train_idx],
        )
        points = ds.features[test_idx]
        truths = tau_truth[test_idx]
        for learner in learners:
            for method in methods:
                ivs = method_fns[method](
                    train, learner, points, b=b, alpha=alpha,
                    seed=derive_seed(seed, rep, _name_key(learner.name), 7),
                )
                key = (learner.name, method)
                hits.setdefault(key, []).extend(
                    1.0 if iv.contains(t) else 0.0 for iv, t in zip(ivs, truths)
                )
                lengths.setdefault(key, []).extend(iv.width for iv in ivs)

    rows = []
    for learner in learners:
        for method in methods:
            key = (learner.name, method)
            rows.append(
                CoverageRow(
                    learner=learner.name,
                    method=method,
                    nominal=1.0 - alpha,
                    coverage=float(np.mean(hits[key])),
                    mean_length=float(np.mean(lengths[key])),
                    b=b,
                    n_points=len(hits[key]),
                )
            )
    return rows
