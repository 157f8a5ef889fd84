"""Synthetic data-generating processes with exact ground truth.

A :class:`SimulationSpec` bundles everything that defines a superpopulation:
a feature law, a propensity function ``e(x)``, response surfaces ``mu0``/``mu1``
and a noise scale.  Drawing from a spec yields both the observable
:class:`Dataset` (features, binary treatment, observed outcome) and the
:class:`GroundTruth` that only a simulation can know: both potential outcomes,
the individual effects, and the exact effect surface ``tau(x) = mu1(x) - mu0(x)``.

Six benchmark processes are available through :func:`builtin_spec`, covering
unbalanced assignment, complex and zero treatment effects, and confounded
assignment.  :func:`lipschitz_spec` and :func:`semiparam_spec` construct the
processes used by the convergence-rate experiments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import (
    FactorizationError,
    InvalidDataError,
    InvalidDimensionError,
    ResourceLimitError,
)
from .rng import child_rng, derive_seed

__all__ = [
    "Dataset",
    "GroundTruth",
    "GaussianFeatures",
    "UniformFeatures",
    "SimulationSpec",
    "vine_correlation",
    "validate_correlation",
    "sample_features",
    "builtin_spec",
    "lipschitz_spec",
    "semiparam_spec",
    "draw_dataset",
    "draw_dataset_conditional",
    "draw_dataset_arms",
    "example1_pair",
    "DEFAULT_SPEC_SEED",
    "BUILTIN_SIM_IDS",
]

# Spec-level seed: coefficient vectors and correlation matrices of the builtin
# processes are frozen functions of this value, so replications vary the data
# but never the process itself.
DEFAULT_SPEC_SEED = 90210

BUILTIN_SIM_IDS = (1, 2, 3, 4, 5, 6)

_EIGEN_TOL = 1e-8


# ---------------------------------------------------------------------------
# containers


@dataclass(frozen=True)
class Dataset:
    """Observed data: an ``(n, d)`` feature matrix, binary treatment, outcome."""

    features: np.ndarray
    treatment: np.ndarray
    outcome: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.features, dtype=float)
        w = np.asarray(self.treatment)
        y = np.asarray(self.outcome, dtype=float)
        if x.ndim != 2:
            raise InvalidDataError(f"features must be 2-D, got shape {x.shape}")
        n = x.shape[0]
        if w.shape != (n,) or y.shape != (n,):
            raise InvalidDataError(
                f"length mismatch: features {x.shape}, treatment {w.shape}, outcome {y.shape}"
            )
        if not np.all(np.isfinite(x)):
            raise InvalidDataError("features contain non-finite values")
        if not np.isin(w, (0, 1)).all():
            raise InvalidDataError("treatment vector must be strictly binary")
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "treatment", w.astype(np.int64))
        object.__setattr__(self, "outcome", y)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    @property
    def n_treated(self) -> int:
        return int(self.treatment.sum())

    @property
    def n_control(self) -> int:
        return self.n - self.n_treated


@dataclass(frozen=True)
class GroundTruth:
    """Quantities observable only inside a simulation."""

    tau: np.ndarray
    mu0_vals: np.ndarray
    mu1_vals: np.ndarray
    propensity_vals: np.ndarray
    potential_y0: np.ndarray
    potential_y1: np.ndarray
    ite: np.ndarray


# ---------------------------------------------------------------------------
# feature laws


@dataclass(frozen=True)
class GaussianFeatures:
    """Zero-mean correlated Gaussian features ``x ~ N(0, sigma)``."""

    correlation: np.ndarray

    def sample(self, n: int, dim: int, rng: np.random.Generator) -> np.ndarray:
        sigma = np.asarray(self.correlation, dtype=float)
        if sigma.shape != (dim, dim):
            raise InvalidDataError(
                f"correlation matrix shape {sigma.shape} does not match dim {dim}"
            )
        return _sample_gaussian(n, sigma, rng)


@dataclass(frozen=True)
class UniformFeatures:
    """Independent uniform features on the unit cube ``[0, 1]^d``."""

    def sample(self, n: int, dim: int, rng: np.random.Generator) -> np.ndarray:
        return rng.random((n, dim))


FeatureLaw = GaussianFeatures | UniformFeatures


# ---------------------------------------------------------------------------
# simulation specification


@dataclass(frozen=True)
class SimulationSpec:
    """A full data-generating process with computable ground truth.

    ``propensity``, ``mu0`` and ``mu1`` are vectorized maps from an ``(n, d)``
    feature matrix to length-``n`` arrays.  ``noise_sd`` scales a pair of
    standard-normal noise terms added to the two potential outcomes;
    ``noise_correlation`` couples them (the observable distribution does not
    depend on it, but individual effects do).
    """

    name: str
    dim: int
    propensity: Callable[[np.ndarray], np.ndarray]
    mu0: Callable[[np.ndarray], np.ndarray]
    mu1: Callable[[np.ndarray], np.ndarray]
    feature_law: FeatureLaw
    noise_sd: float = 1.0
    noise_correlation: float = 0.0
    constant_propensity: float | None = None

    def __post_init__(self):
        if self.dim < 1:
            raise InvalidDimensionError(f"dim must be >= 1, got {self.dim}")
        if self.noise_sd < 0:
            raise InvalidDataError(f"noise_sd must be >= 0, got {self.noise_sd}")
        if not -1.0 <= self.noise_correlation <= 1.0:
            raise InvalidDataError(
                f"noise_correlation must lie in [-1, 1], got {self.noise_correlation}"
            )

    def tau(self, x: np.ndarray) -> np.ndarray:
        """Exact treatment-effect surface ``mu1(x) - mu0(x)``."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.asarray(self.mu1(x), dtype=float) - np.asarray(self.mu0(x), dtype=float)

    def sample_test_features(self, n: int, seed: int) -> np.ndarray:
        """Draw a fresh feature sample (for held-out evaluation grids)."""
        return self.feature_law.sample(n, self.dim, child_rng(seed))


# ---------------------------------------------------------------------------
# correlation matrices


def validate_correlation(sigma: np.ndarray) -> np.ndarray:
    """Check symmetry, unit diagonal, off-diagonal range and near-PSD-ness."""
    sigma = np.asarray(sigma, dtype=float)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise InvalidDataError(f"correlation matrix must be square, got {sigma.shape}")
    if not np.allclose(sigma, sigma.T, atol=1e-12):
        raise InvalidDataError("correlation matrix is not symmetric")
    if not np.allclose(np.diag(sigma), 1.0, atol=1e-12):
        raise InvalidDataError("correlation matrix diagonal is not all ones")
    off = sigma[~np.eye(sigma.shape[0], dtype=bool)]
    if off.size and (off.min() < -1.0 - 1e-12 or off.max() > 1.0 + 1e-12):
        raise InvalidDataError("off-diagonal entries outside [-1, 1]")
    if sigma.shape[0] > 1:
        smallest = float(np.linalg.eigvalsh(sigma)[0])
        if smallest < -_EIGEN_TOL:
            raise InvalidDataError(f"smallest eigenvalue {smallest} below -{_EIGEN_TOL}")
    return sigma


def vine_correlation(d: int, concentration: float = 2.0, seed: int = 0) -> np.ndarray:
    """Random correlation matrix from partial correlations on a C-vine.

    Partial correlations are drawn from a symmetric ``Beta(concentration,
    concentration)`` law rescaled to ``(-1, 1)`` and composed layer by layer
    through the vine recursion, which guarantees a valid (positive
    semidefinite, unit-diagonal) correlation matrix for any draw.
    """
    if d < 1:
        raise InvalidDimensionError(f"d must be >= 1, got {d}")
    if concentration <= 0:
        raise InvalidDataError(f"concentration must be > 0, got {concentration}")
    if d == 1:
        return np.ones((1, 1))

    rng = child_rng(seed)
    partial = np.zeros((d, d))
    iu = np.triu_indices(d, 1)
    partial[iu] = 2.0 * rng.beta(concentration, concentration, size=len(iu[0])) - 1.0

    out = np.eye(d)
    for k in range(d - 1):
        for i in range(k + 1, d):
            rho = partial[k, i]
            # fold the conditioning set back out, innermost layer first
            for l in range(k - 1, -1, -1):
                rho = rho * math.sqrt(
                    (1.0 - partial[l, i] ** 2) * (1.0 - partial[l, k] ** 2)
                ) + partial[l, i] * partial[l, k]
            out[k, i] = out[i, k] = rho
    return validate_correlation(out)


def _sample_gaussian(n: int, sigma: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    try:
        chol = np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError as exc:
        # covariance may be numerically semidefinite; retry with a tiny ridge
        jitter = _EIGEN_TOL * np.eye(sigma.shape[0])
        try:
            chol = np.linalg.cholesky(sigma + jitter)
        except np.linalg.LinAlgError:
            raise FactorizationError(
                "covariance matrix is not positive semidefinite"
            ) from exc
    z = rng.standard_normal((n, sigma.shape[0]))
    return z @ chol.T


def sample_features(n: int, sigma: np.ndarray, seed: int = 0) -> np.ndarray:
    """Draw ``n`` iid zero-mean Gaussian rows with covariance ``sigma``."""
    if n < 1:
        raise InvalidDataError(f"n must be >= 1, got {n}")
    return _sample_gaussian(n, np.asarray(sigma, dtype=float), child_rng(seed))


# ---------------------------------------------------------------------------
# builtin benchmark processes


def _logistic_bump(u: np.ndarray) -> np.ndarray:
    return 2.0 / (1.0 + np.exp(-12.0 * (u - 0.5)))


def builtin_spec(sim_id: int, spec_seed: int = DEFAULT_SPEC_SEED) -> SimulationSpec:
    """Return one of the six benchmark data-generating processes.

    Coefficient vectors and the feature correlation matrix are drawn once,
    from ``spec_seed``, and then frozen into the returned spec.

    ====  ================  ====================================================
    id    name              summary
    ====  ================  ====================================================
    1     unbalanced        e = 0.01, d = 20, effect ``8 * 1{x2 > 0.1}``
    2     complex-linear    e = 0.5, two unrelated linear response surfaces
    3     complex-nonlinear e = 0.5, opposite-sign logistic-bump surfaces
    4     global-linear     e = 0.5, d = 5, zero effect, linear response
    5     piecewise-linear  e = 0.5, zero effect, locally linear response
    6     beta-confounded   uniform features, e driven by a Beta(2, 4) density
    ====  ================  ====================================================
    """
    if sim_id not in BUILTIN_SIM_IDS:
        raise InvalidDataError(f"unknown simulation id {sim_id}; valid ids are 1..6")

    coef_rng = child_rng(spec_seed, sim_id, 1)

    if sim_id == 1:
        d = 20
        sigma = vine_correlation(d, seed=derive_seed(spec_seed, sim_id, 0))
        beta = coef_rng.uniform(-5.0, 5.0, size=d)

        def mu0(x, beta=beta):
            return x @ beta + 5.0 * (x[:, 0] > 0.5)

        def mu1(x, mu0=mu0):
            return mu0(x) + 8.0 * (x[:, 1] > 0.1)

        return SimulationSpec(
            name="sim1-unbalanced",
            dim=d,
            propensity=_constant_propensity_fn(0.01),
            mu0=mu0,
            mu1=mu1,
            feature_law=GaussianFeatures(sigma),
            constant_propensity=0.01,
        )

    if sim_id == 2:
        d = 20
        sigma = vine_correlation(d, seed=derive_seed(spec_seed, sim_id, 0))
        beta0 = coef_rng.uniform(1.0, 30.0, size=d)
        beta1 = coef_rng.uniform(1.0, 30.0, size=d)
        return SimulationSpec(
            name="sim2-complex-linear",
            dim=d,
            propensity=_constant_propensity_fn(0.5),
            mu0=lambda x, b=beta0: x @ b,
            mu1=lambda x, b=beta1: x @ b,
            feature_law=GaussianFeatures(sigma),
            constant_propensity=0.5,
        )

    if sim_id == 3:
        d = 20
        sigma = vine_correlation(d, seed=derive_seed(spec_seed, sim_id, 0))

        def bump(x):
            return 0.5 * _logistic_bump(x[:, 0]) * _logistic_bump(x[:, 1])

        return SimulationSpec(
            name="sim3-complex-nonlinear",
            dim=d,
            propensity=_constant_propensity_fn(0.5),
            mu0=lambda x: -bump(x),
            mu1=bump,
            feature_law=GaussianFeatures(sigma),
            constant_propensity=0.5,
        )

    if sim_id == 4:
        d = 5
        sigma = vine_correlation(d, seed=derive_seed(spec_seed, sim_id, 0))
        beta = coef_rng.uniform(1.0, 30.0, size=d)

        def mu(x, beta=beta):
            return x @ beta

        return SimulationSpec(
            name="sim4-global-linear",
            dim=d,
            propensity=_constant_propensity_fn(0.5),
            mu0=mu,
            mu1=mu,
            feature_law=GaussianFeatures(sigma),
            constant_propensity=0.5,
        )

    if sim_id == 5:
        d = 20
        sigma = vine_correlation(d, seed=derive_seed(spec_seed, sim_id, 0))
        beta = coef_rng.uniform(-15.0, 15.0, size=d)
        beta_low = np.where(np.arange(d) < 5, beta, 0.0)
        beta_mid = np.where((np.arange(d) >= 5) & (np.arange(d) < 10), beta, 0.0)
        beta_high = np.where((np.arange(d) >= 10) & (np.arange(d) < 15), beta, 0.0)

        def mu(x, bl=beta_low, bm=beta_mid, bu=beta_high):
            pivot = x[:, 19]
            out = np.where(
                pivot < -0.4,
                x @ bl,
                # boundary points at exactly +-0.4 belong to the middle slab
                np.where(pivot <= 0.4, x @ bm, x @ bu),
            )
            return out

        return SimulationSpec(
            name="sim5-piecewise-linear",
            dim=d,
            propensity=_constant_propensity_fn(0.5),
            mu0=mu,
            mu1=mu,
            feature_law=GaussianFeatures(sigma),
            constant_propensity=0.5,
        )

    # sim_id == 6: assignment probability driven by the Beta(2, 4) density
    # 20 * u * (1 - u)^3 of the first feature, which keeps e(x) in (0.25, 0.83)
    d = 20

    def prop6(x):
        u = x[:, 0]
        return 0.25 * (1.0 + 20.0 * u * (1.0 - u) ** 3)

    def mu6(x):
        return 2.0 * x[:, 0] - 1.0

    return SimulationSpec(
        name="sim6-beta-confounded",
        dim=d,
        propensity=prop6,
        mu0=mu6,
        mu1=mu6,
        feature_law=UniformFeatures(),
    )


def _constant_propensity_fn(e: float) -> Callable[[np.ndarray], np.ndarray]:
    def prop(x, e=e):
        return np.full(x.shape[0], e)

    return prop


def lipschitz_spec(d: int, L: float, sd: float) -> SimulationSpec:
    """Uniform-cube process with Lipschitz response surfaces and a kinked effect.

    ``mu0(x) = (L/sqrt(d)) * sum_j x_j`` has gradient norm exactly ``L``; the
    effect surface ``tau(x) = (L/sqrt(d)) * sum_j |x_j - 1/2|`` is ``L``-Lipschitz
    but nowhere linear, so nothing beyond smoothness can be exploited.  The
    combined treated surface ``mu1 = mu0 + tau`` is ``2L``-Lipschitz.
    """
    if d <= 2:
        raise InvalidDimensionError(f"lipschitz_spec requires d > 2, got {d}")
    if L <= 0:
        raise InvalidDataError(f"L must be > 0, got {L}")
    if sd <= 0:
        raise InvalidDataError(f"sd must be > 0, got {sd}")
    scale = L / math.sqrt(d)

    def mu0(x, scale=scale):
        return scale * x.sum(axis=1)

    def mu1(x, scale=scale):
        return scale * (x.sum(axis=1) + np.abs(x - 0.5).sum(axis=1))

    return SimulationSpec(
        name=f"lipschitz-d{d}",
        dim=d,
        propensity=_constant_propensity_fn(0.5),
        mu0=mu0,
        mu1=mu1,
        feature_law=UniformFeatures(),
        noise_sd=sd,
        constant_propensity=0.5,
    )


def semiparam_spec(
    d: int, s: int, L: float, sd: float = 1.0, spec_seed: int = DEFAULT_SPEC_SEED
) -> SimulationSpec:
    """Process whose effect and response depend on disjoint feature blocks.

    The effect is linear in the first ``s`` coordinates, ``tau(x) = x_S' beta``,
    while ``mu0`` is a (nonlinear) Lipschitz function of the remaining
    coordinates only.  Features are independent standard normal, so the two
    blocks are independent and the effect coordinates have mean zero in every
    treatment arm.
    """
    if not 1 <= s < d:
        raise InvalidDimensionError(f"need 1 <= s < d, got s={s}, d={d}")
    if L <= 0:
        raise InvalidDataError(f"L must be > 0, got {L}")
    beta = child_rng(spec_seed, 7, s, d).uniform(-1.0, 1.0, size=s) * (L / math.sqrt(s))
    rest_scale = L / math.sqrt(d - s)

    def mu0(x, s=s, scale=rest_scale):
        return scale * np.abs(x[:, s:]).sum(axis=1)

    def mu1(x, s=s, beta=beta, mu0=mu0):
        return mu0(x) + x[:, :s] @ beta

    return SimulationSpec(
        name=f"semiparam-d{d}-s{s}",
        dim=d,
        propensity=_constant_propensity_fn(0.5),
        mu0=mu0,
        mu1=mu1,
        feature_law=GaussianFeatures(np.eye(d)),
        noise_sd=sd,
        constant_propensity=0.5,
    )


# ---------------------------------------------------------------------------
# sampling


def _draw_noise_pair(n: int, spec: SimulationSpec, rng: np.random.Generator):
    z = rng.standard_normal((n, 2))
    rho = spec.noise_correlation
    eps0 = z[:, 0]
    eps1 = rho * z[:, 0] + math.sqrt(max(0.0, 1.0 - rho * rho)) * z[:, 1]
    return spec.noise_sd * eps0, spec.noise_sd * eps1


def _check_propensity(e_vals: np.ndarray) -> np.ndarray:
    if e_vals.min() <= 0.0 or e_vals.max() >= 1.0:
        raise InvalidDataError(
            "propensity must be strictly inside (0, 1) "
            f"(range [{e_vals.min()}, {e_vals.max()}])"
        )
    return e_vals


def _assemble(spec, x, w, eps0, eps1) -> tuple[Dataset, GroundTruth]:
    mu0_vals = np.asarray(spec.mu0(x), dtype=float)
    mu1_vals = np.asarray(spec.mu1(x), dtype=float)
    e_vals = _check_propensity(np.asarray(spec.propensity(x), dtype=float))
    y0 = mu0_vals + eps0
    y1 = mu1_vals + eps1
    yobs = np.where(w == 1, y1, y0)
    ds = Dataset(features=x, treatment=w, outcome=yobs)
    gt = GroundTruth(
        tau=mu1_vals - mu0_vals,
        mu0_vals=mu0_vals,
        mu1_vals=mu1_vals,
        propensity_vals=e_vals,
        potential_y0=y0,
        potential_y1=y1,
        ite=y1 - y0,
    )
    return ds, gt


def draw_dataset(
    spec: SimulationSpec, n_total: int, seed: int = 0
) -> tuple[Dataset, GroundTruth]:
    """Draw ``n_total`` iid units: features, potential outcomes, then assignment.

    Pure function of ``(spec, n_total, seed)``.
    """
    if n_total < 1:
        raise InvalidDataError(f"n_total must be >= 1, got {n_total}")
    x = spec.feature_law.sample(n_total, spec.dim, child_rng(seed, 0))
    eps0, eps1 = _draw_noise_pair(n_total, spec, child_rng(seed, 1))
    e_vals = _check_propensity(np.asarray(spec.propensity(x), dtype=float))
    w = (child_rng(seed, 2).random(n_total) < e_vals).astype(np.int64)
    return _assemble(spec, x, w, eps0, eps1)


def draw_dataset_conditional(
    spec: SimulationSpec,
    n_treated: int,
    m_control: int,
    seed: int = 0,
    max_attempts: int = 1_000_000,
) -> tuple[Dataset, GroundTruth]:
    """Draw a dataset conditioned on exact arm sizes, by rejection.

    Joint draws of ``n_treated + m_control`` units are repeated until the
    realized treated count matches, which preserves the exact conditional law
    of the unconditional process given the arm sizes.  If the assignment
    probabilities make the target count too unlikely (estimated expected
    attempts beyond ``max_attempts``), a :class:`ResourceLimitError` is raised
    instead of looping indefinitely.
    """
    if n_treated < 1 or m_control < 1:
        raise InvalidDataError("n_treated and m_control must both be >= 1")
    n_total = n_treated + m_control

    # cheap feasibility probe: normal approximation to the treated-count pmf
    probe = spec.feature_law.sample(min(4096, 4 * n_total), spec.dim, child_rng(seed, 3))
    e_bar = float(np.mean(_check_propensity(np.asarray(spec.propensity(probe), dtype=float))))
    sd_count = math.sqrt(n_total * e_bar * (1.0 - e_bar))
    z = (n_treated - n_total * e_bar) / sd_count
    approx_accept = math.exp(-0.5 * z * z) / (sd_count * math.sqrt(2.0 * math.pi))
    if approx_accept <= 0 or 1.0 / approx_accept > max_attempts:
        raise ResourceLimitError(
            f"expected rejection count exceeds cap: acceptance probability "
            f"~{approx_accept:.3g} for treated count {n_treated} of {n_total} "
            f"(mean propensity {e_bar:.4f})"
        )

    for attempt in range(max_attempts):
        draw_rng = child_rng(seed, 4, attempt)
        x = spec.feature_law.sample(n_total, spec.dim, draw_rng)
        eps0, eps1 = _draw_noise_pair(n_total, spec, draw_rng)
        e_vals = np.asarray(spec.propensity(x), dtype=float)
        w = (draw_rng.random(n_total) < e_vals).astype(np.int64)
        if int(w.sum()) == n_treated:
            return _assemble(spec, x, w, eps0, eps1)
    raise ResourceLimitError(
        f"no draw with exactly {n_treated} treated units in {max_attempts} attempts"
    )


def draw_dataset_arms(
    spec: SimulationSpec, n_treated: int, m_control: int, seed: int = 0
) -> tuple[Dataset, GroundTruth]:
    """Draw exact arm sizes directly, for constant-propensity processes.

    With a constant propensity the treatment assignment is independent of the
    features, so conditionally on the assignment vector the within-arm tuples
    are iid draws from the unconditional arm laws.  This sampler constructs
    that law directly (control block first, then treated), which is what the
    conditional rejection sampler converges to but at O(n + m) cost -- the
    only practical route for the large size grids of the rate experiments.
    """
    if spec.constant_propensity is None:
        raise InvalidDataError(
            "draw_dataset_arms requires a constant-propensity spec; "
            "use draw_dataset_conditional for feature-dependent assignment"
        )
    if n_treated < 1 or m_control < 1:
        raise InvalidDataError("n_treated and m_control must both be >= 1")
    xc = spec.feature_law.sample(m_control, spec.dim, child_rng(seed, 0))
    ec0, ec1 = _draw_noise_pair(m_control, spec, child_rng(seed, 1))
    xt = spec.feature_law.sample(n_treated, spec.dim, child_rng(seed, 2))
    et0, et1 = _draw_noise_pair(n_treated, spec, child_rng(seed, 3))
    x = np.vstack([xc, xt])
    w = np.concatenate([np.zeros(m_control, dtype=np.int64), np.ones(n_treated, dtype=np.int64)])
    return _assemble(spec, x, w, np.concatenate([ec0, et0]), np.concatenate([ec1, et1]))


def example1_pair(
    n_total: int, seed: int = 0
) -> tuple[Dataset, GroundTruth, Dataset, GroundTruth]:
    """Two processes with identical observed laws but different individual effects.

    Both draw ``x ~ Unif[0, 1]``, a fair-coin assignment, and a Rademacher
    outcome under control.  The first sets ``y(1) = y(0)`` (every individual
    effect is zero); the second sets ``y(1) = -y(0)`` (every individual effect
    is -2 or +2).  No statistic of the observed data can tell them apart, and
    the effect surface is zero for both.
    """
    if n_total < 1:
        raise InvalidDataError(f"n_total must be >= 1, got {n_total}")

    def one(flip: bool, branch: int) -> tuple[Dataset, GroundTruth]:
        rng = child_rng(seed, branch)
        x = rng.random((n_total, 1))
        w = (rng.random(n_total) < 0.5).astype(np.int64)
        y0 = np.where(rng.random(n_total) < 0.5, 1.0, -1.0)
        y1 = -y0 if flip else y0.copy()
        yobs = np.where(w == 1, y1, y0)
        zeros = np.zeros(n_total)
        ds = Dataset(features=x, treatment=w, outcome=yobs)
        gt = GroundTruth(
            tau=zeros,
            mu0_vals=zeros,
            mu1_vals=zeros,
            propensity_vals=np.full(n_total, 0.5),
            potential_y0=y0,
            potential_y1=y1,
            ite=y1 - y0,
        )
        return ds, gt

    ds1, gt1 = one(flip=False, branch=0)
    ds2, gt2 = one(flip=True, branch=1)
    return ds1, gt1, ds2, gt2
