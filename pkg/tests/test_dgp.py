"""Data-generating process tests: exact values, statistical oracles, invariants."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import ks_2samp

from catelab.dgp import (
    GaussianFeatures,
    SimulationSpec,
    builtin_spec,
    draw_dataset,
    draw_dataset_arms,
    draw_dataset_conditional,
    example1_pair,
    lipschitz_spec,
    sample_features,
    semiparam_spec,
    validate_correlation,
    vine_correlation,
)
from catelab.errors import (
    FactorizationError,
    InvalidDataError,
    InvalidDimensionError,
    ResourceLimitError,
)


def constant_e_spec(e: float, dim: int = 1, noise_sd: float = 1.0) -> SimulationSpec:
    return SimulationSpec(
        name=f"const-e{e}",
        dim=dim,
        propensity=lambda x: np.full(x.shape[0], e),
        mu0=lambda x: x[:, 0],
        mu1=lambda x: x[:, 0] + 1.0,
        feature_law=GaussianFeatures(np.eye(dim)),
        noise_sd=noise_sd,
        constant_propensity=e,
    )


class TestVineCorrelation:
    def test_single_variable(self):
        assert np.array_equal(vine_correlation(1, seed=123), [[1.0]])

    def test_two_by_two_structure(self):
        m = vine_correlation(2, seed=7)
        assert m.shape == (2, 2)
        assert m[0, 0] == m[1, 1] == 1.0
        assert m[0, 1] == m[1, 0]
        assert abs(m[0, 1]) < 1.0

    def test_d5_positive_definite(self):
        # oracle: eigen-decomposition of the emitted matrix
        eigs = np.linalg.eigvalsh(vine_correlation(5, seed=3))
        assert np.all(eigs > 0)

    def test_zero_dimension_rejected(self):
        with pytest.raises(InvalidDimensionError):
            vine_correlation(0, seed=1)

    def test_deterministic(self):
        assert np.array_equal(vine_correlation(6, seed=9), vine_correlation(6, seed=9))

    @settings(max_examples=40, deadline=None)
    @given(
        d=st.integers(min_value=1, max_value=8),
        seed=st.integers(min_value=0, max_value=10**6),
        conc=st.floats(min_value=0.5, max_value=4.0),
    )
    def test_always_valid_correlation(self, d, seed, conc):
        m = vine_correlation(d, concentration=conc, seed=seed)
        validate_correlation(m)  # symmetry, unit diagonal, range, PSD at 1e-8


class TestSampleFeatures:
    def test_identity_two_sample_covariance(self):
        x = sample_features(100_000, np.eye(2), seed=5)
        cov = np.cov(x.T)
        assert np.max(np.abs(cov - np.eye(2))) < 0.02

    def test_single_draw_reproducible(self):
        a = sample_features(1, np.array([[1.0]]), seed=11)
        b = sample_features(1, np.array([[1.0]]), seed=11)
        assert a.shape == (1, 1)
        assert np.array_equal(a, b)

    def test_identity_three_mean(self):
        n = 50_000
        x = sample_features(n, np.eye(3), seed=2)
        assert np.max(np.abs(x.mean(axis=0))) < 3.0 / math.sqrt(n)

    def test_non_psd_rejected(self):
        with pytest.raises(FactorizationError):
            sample_features(10, np.array([[1.0, 2.0], [2.0, 1.0]]), seed=0)

    def test_correlated_covariance_recovered(self):
        sigma = np.array([[1.0, 0.6], [0.6, 1.0]])
        x = sample_features(200_000, sigma, seed=8)
        assert np.max(np.abs(np.cov(x.T) - sigma)) < 0.02


class TestBuiltinSpecs:
    def test_sim1_shape(self):
        spec = builtin_spec(1)
        assert spec.dim == 20
        x = spec.sample_test_features(500, seed=0)
        assert np.all(spec.propensity(x) == 0.01)
        tau = spec.tau(x)
        expected = 8.0 * (x[:, 1] > 0.1)
        assert np.allclose(tau, expected, atol=1e-9)

    def test_sim3_logistic_midpoint(self):
        spec = builtin_spec(3)
        x = np.full((1, 20), 0.5)
        assert spec.mu1(x)[0] == pytest.approx(0.5)
        assert spec.mu0(x)[0] == pytest.approx(-0.5)
        assert spec.tau(x)[0] == pytest.approx(1.0)

    def test_sim6_beta_density_propensity(self):
        # oracle: direct evaluation of 20u(1-u)^3 at u = 1/3
        spec = builtin_spec(6)
        x = np.zeros((1, 20))
        x[0, 0] = 1.0 / 3.0
        expected = 0.25 * (1.0 + 20.0 * (1.0 / 3.0) * (2.0 / 3.0) ** 3)
        assert spec.propensity(x)[0] == pytest.approx(expected, abs=1e-12)
        assert expected == pytest.approx(0.7438271604938272, abs=1e-12)

    def test_sim6_overlap_range(self):
        spec = builtin_spec(6)
        u = np.linspace(0.0, 1.0, 2001)
        x = np.zeros((u.size, 20))
        x[:, 0] = u
        e = spec.propensity(x)
        assert e.min() >= 0.25 - 1e-12
        assert e.max() < 0.83

    def test_unknown_id_rejected(self):
        with pytest.raises(InvalidDataError):
            builtin_spec(9)

    def test_spec_frozen_across_calls(self):
        a, b = builtin_spec(2), builtin_spec(2)
        x = a.sample_test_features(50, seed=1)
        assert np.array_equal(a.mu1(x), b.mu1(x))

    def test_sim5_boundary_points_use_middle_block(self):
        # the middle block only weights coordinates 6..10, so within that slab
        # the response is constant in the pivot coordinate; boundary points at
        # exactly +-0.4 must match the interior middle-slab value
        spec = builtin_spec(5)
        x = np.zeros((4, 20))
        x[:, 2] = 1.0   # low-block coordinate
        x[:, 7] = 1.0   # middle-block coordinate
        x[:, 12] = 1.0  # high-block coordinate
        x[:, 19] = [-0.4, 0.0, 0.4, -0.41]
        vals = spec.mu0(x)
        assert vals[0] == pytest.approx(vals[1], abs=1e-12)
        assert vals[2] == pytest.approx(vals[1], abs=1e-12)
        assert vals[3] != pytest.approx(vals[1], abs=1e-6)


class TestLipschitzSpec:
    def test_kink_point_zero_effect(self):
        spec = lipschitz_spec(d=4, L=2.0, sd=1.0)
        x = np.full((1, 4), 0.5)
        assert spec.tau(x)[0] == pytest.approx(0.0, abs=1e-15)

    def test_origin_effect_value(self):
        # direct formula: (L/sqrt(d)) * sum |0 - 1/2| = (2/2) * (4 * 1/2) = 2
        spec = lipschitz_spec(d=4, L=2.0, sd=1.0)
        x = np.zeros((1, 4))
        assert spec.tau(x)[0] == pytest.approx(2.0, abs=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(min_value=0, max_value=10**6))
    def test_mu0_lipschitz_bound(self, seed):
        spec = lipschitz_spec(d=3, L=1.5, sd=1.0)
        rng = np.random.default_rng(seed)
        x, z = rng.random((2, 1, 3))
        lhs = abs(spec.mu0(x)[0] - spec.mu0(z)[0])
        assert lhs <= 1.5 * np.linalg.norm(x - z) + 1e-12

    @settings(max_examples=50, deadline=None)
    @given(st.integers(min_value=0, max_value=10**6))
    def test_mu1_lipschitz_bound(self, seed):
        # the treated surface adds the kinked effect: constant doubles
        spec = lipschitz_spec(d=3, L=1.5, sd=1.0)
        rng = np.random.default_rng(seed)
        x, z = rng.random((2, 1, 3))
        lhs = abs(spec.mu1(x)[0] - spec.mu1(z)[0])
        assert lhs <= 2 * 1.5 * np.linalg.norm(x - z) + 1e-12

    def test_low_dimension_rejected(self):
        with pytest.raises(InvalidDimensionError):
            lipschitz_spec(d=2, L=1.0, sd=1.0)


class TestSemiparamSpec:
    def test_zero_effect_block_zero_effect(self):
        spec = semiparam_spec(d=5, s=2, L=1.0)
        x = np.ones((1, 5))
        x[0, :2] = 0.0
        assert spec.tau(x)[0] == pytest.approx(0.0, abs=1e-15)

    def test_effect_ignores_response_block(self):
        spec = semiparam_spec(d=5, s=2, L=1.0)
        rng = np.random.default_rng(3)
        x = rng.standard_normal((10, 5))
        x2 = x.copy()
        x2[:, 2:] = rng.standard_normal((10, 3))
        assert np.allclose(spec.tau(x), spec.tau(x2), atol=1e-12)

    def test_treated_effect_coordinates_centered(self):
        spec = semiparam_spec(d=4, s=2, L=1.0)
        n = 100_000
        ds, _ = draw_dataset(spec, n, seed=5)
        xs = ds.features[ds.treatment == 1][:, :2]
        bound = 3.0 / math.sqrt(xs.shape[0])
        assert np.max(np.abs(xs.mean(axis=0))) < bound

    def test_invalid_split_rejected(self):
        with pytest.raises(InvalidDimensionError):
            semiparam_spec(d=3, s=3, L=1.0)


class TestDrawDataset:
    def test_sim4_zero_effect_exact(self):
        ds, gt = draw_dataset(builtin_spec(4), 500, seed=1)
        assert np.all(gt.tau == 0.0)

    def test_unbalanced_treated_count(self):
        n = 100_000
        ds, _ = draw_dataset(builtin_spec(1), n, seed=3)
        sd = math.sqrt(n * 0.01 * 0.99)
        assert abs(ds.n_treated - n * 0.01) < 3 * sd

    def test_outcome_reconstruction_bitwise(self):
        ds, gt = draw_dataset(builtin_spec(2), 2000, seed=9)
        rebuilt = np.where(ds.treatment == 1, gt.potential_y1, gt.potential_y0)
        assert np.array_equal(ds.outcome, rebuilt)

    def test_pure_function_of_seed(self):
        a, ga = draw_dataset(builtin_spec(3), 300, seed=42)
        b, gb = draw_dataset(builtin_spec(3), 300, seed=42)
        assert np.array_equal(a.features, b.features)
        assert np.array_equal(a.treatment, b.treatment)
        assert np.array_equal(a.outcome, b.outcome)
        assert np.array_equal(ga.ite, gb.ite)

    def test_tau_identity(self):
        _, gt = draw_dataset(builtin_spec(5), 400, seed=2)
        assert np.array_equal(gt.tau, gt.mu1_vals - gt.mu0_vals)


class TestConditionalSampling:
    def test_exact_arm_sizes(self):
        spec = constant_e_spec(0.1)
        ds, _ = draw_dataset_conditional(spec, 10, 90, seed=4)
        assert ds.n_treated == 10
        assert ds.n_control == 90

    def test_extreme_propensity_resource_error(self):
        spec = constant_e_spec(0.01)
        with pytest.raises(ResourceLimitError):
            draw_dataset_conditional(spec, 500, 500, seed=0, max_attempts=2000)

    def test_treated_arm_matches_unconditional_law(self):
        # two-sample KS between conditional treated features and direct
        # treated-arm draws; identical laws => no rejection at alpha = 0.01
        spec = constant_e_spec(0.5)
        n_per, n_sets = 50, 100
        cond = []
        for i in range(n_sets):
            ds, _ = draw_dataset_conditional(spec, n_per, n_per, seed=1000 + i)
            cond.append(ds.features[ds.treatment == 1, 0])
        cond = np.concatenate(cond)
        ref, _ = draw_dataset_arms(spec, cond.size, 1, seed=77)
        ref_x = ref.features[ref.treatment == 1, 0]
        assert ks_2samp(cond, ref_x).pvalue > 0.01

    def test_treated_arm_outcomes_match_too(self):
        spec = constant_e_spec(0.5)
        cond = []
        for i in range(100):
            ds, _ = draw_dataset_conditional(spec, 50, 50, seed=3000 + i)
            cond.append(ds.outcome[ds.treatment == 1])
        cond = np.concatenate(cond)
        ref, _ = draw_dataset_arms(spec, cond.size, 1, seed=78)
        ref_y = ref.outcome[ref.treatment == 1]
        assert ks_2samp(cond, ref_y).pvalue > 0.01

    def test_consecutive_treated_draws_uncorrelated(self):
        spec = constant_e_spec(0.5)
        ds, _ = draw_dataset_conditional(spec, 2000, 2000, seed=6)
        x = ds.features[ds.treatment == 1, 0]
        a, b = x[:-1], x[1:]
        corr = np.corrcoef(a, b)[0, 1]
        assert abs(corr) < 3.0 / math.sqrt(x.size)

    def test_arm_sampler_requires_constant_propensity(self):
        with pytest.raises(InvalidDataError):
            draw_dataset_arms(builtin_spec(6), 10, 10, seed=0)


class TestExample1:
    def test_first_process_zero_individual_effects(self):
        _, gt1, _, _ = example1_pair(5000, seed=0)
        assert np.all(gt1.ite == 0.0)

    def test_second_process_pm_two(self):
        _, _, _, gt2 = example1_pair(5000, seed=0)
        assert set(np.unique(gt2.ite)) == {-2.0, 2.0}

    def test_both_effect_surfaces_zero(self):
        _, gt1, _, gt2 = example1_pair(1000, seed=1)
        assert np.all(gt1.tau == 0.0)
        assert np.all(gt2.tau == 0.0)

    def test_observed_laws_indistinguishable(self):
        n = 100_000
        ds1, gt1, ds2, gt2 = example1_pair(n, seed=12)
        # features overall and within each (treatment, outcome) cell
        assert ks_2samp(ds1.features[:, 0], ds2.features[:, 0]).pvalue > 0.01
        for w in (0, 1):
            for y in (-1.0, 1.0):
                a = ds1.features[(ds1.treatment == w) & (ds1.outcome == y), 0]
                b = ds2.features[(ds2.treatment == w) & (ds2.outcome == y), 0]
                assert ks_2samp(a, b).pvalue > 0.01
        # while the individual-effect magnitudes differ by exactly 2
        assert np.mean(np.abs(gt1.ite)) == 0.0
        assert np.mean(np.abs(gt2.ite)) == 2.0
