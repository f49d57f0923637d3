"""Chaotic benchmark integration and synthetic classification tasks."""

import numpy as np
import pytest

from spikeres.datasets import (
    ChaoticConfig,
    ClassTaskSpec,
    generate_lorenz63,
    generate_series,
    lorenz63_derivative,
    lorenz96_derivative,
    make_classification_task,
    normalize_series,
    rossler_derivative,
)
from spikeres.errors import ConfigurationError


class TestDerivatives:
    def test_origin_is_a_fixed_point(self):
        np.testing.assert_allclose(lorenz63_derivative(np.zeros(3)), 0.0)

    def test_known_equilibrium(self):
        # C+ fixed point: x = y = sqrt(beta (rho - 1)), z = rho - 1
        beta = 8.0 / 3.0
        c = np.sqrt(beta * 27.0)
        np.testing.assert_allclose(
            lorenz63_derivative(np.array([c, c, 27.0])), 0.0, atol=1e-12
        )

    def test_divergence_is_constant(self):
        # trace of the Jacobian: -(sigma + 1 + beta) everywhere
        rng = np.random.default_rng(0)
        eps = 1e-6
        for _ in range(5):
            x = rng.standard_normal(3) * 10.0
            trace = 0.0
            for d in range(3):
                e = np.zeros(3)
                e[d] = eps
                trace += (lorenz63_derivative(x + e) - lorenz63_derivative(x - e))[d] / (2 * eps)
            np.testing.assert_allclose(trace, -(10.0 + 1.0 + 8.0 / 3.0), rtol=1e-6)

    def test_ring_derivative_cyclic(self):
        # the ring system treats every coordinate identically
        x = np.arange(6, dtype=float)
        d1 = lorenz96_derivative(x)
        d2 = lorenz96_derivative(np.roll(x, 1))
        np.testing.assert_allclose(np.roll(d1, 1), d2)

    def test_uniform_forcing_state_is_stationary(self):
        np.testing.assert_allclose(lorenz96_derivative(np.full(8, 8.0)), 0.0)

    def test_rossler_hand_value(self):
        got = rossler_derivative(np.array([1.0, 2.0, 3.0]))
        np.testing.assert_allclose(got, [-5.0, 1.4, 0.2 + 3.0 * (1.0 - 5.7)])


class TestGenerateSeries:
    def test_shape_and_determinism(self):
        cfg = ChaoticConfig("lorenz63", dt=0.01, n_steps=250, washout=50)
        s1 = generate_series(cfg, seed=3)
        s2 = generate_series(cfg, seed=3)
        assert s1.shape == (250, 3)
        np.testing.assert_array_equal(s1, s2)
        assert not np.array_equal(s1, generate_series(cfg, seed=4))

    def test_washout_drops_the_front(self):
        base = ChaoticConfig("lorenz63", dt=0.01, n_steps=300, washout=0)
        cut = ChaoticConfig("lorenz63", dt=0.01, n_steps=200, washout=100)
        full = generate_lorenz63(base, seed=1)
        trimmed = generate_lorenz63(cut, seed=1)
        np.testing.assert_allclose(trimmed, full[100:300])

    def test_step_refinement_converges(self):
        # halving dt changes the first time unit by less than 1e-3
        coarse = generate_series(ChaoticConfig("lorenz63", dt=0.01, n_steps=101), seed=0)
        fine = generate_series(ChaoticConfig("lorenz63", dt=0.005, n_steps=201), seed=0)
        diff = np.max(np.abs(coarse[:101] - fine[::2]))
        assert diff < 1e-3

    def test_trajectory_stays_bounded(self):
        series = generate_series(ChaoticConfig("lorenz63", dt=0.01, n_steps=2000), seed=5)
        assert np.all(np.isfinite(series))
        assert np.max(np.abs(series)) < 100.0

    def test_all_systems_run(self):
        for name, dim in (("lorenz63", 3), ("rossler", 3)):
            series = generate_series(ChaoticConfig(name, dt=0.01, n_steps=50), seed=0)
            assert series.shape == (50, dim)
        series = generate_series(
            ChaoticConfig("lorenz96", dt=0.01, n_steps=50, params={"k": 6}), seed=0
        )
        assert series.shape == (50, 6)

    def test_config_validation(self):
        with pytest.raises(ConfigurationError):
            ChaoticConfig("henon")
        with pytest.raises(ConfigurationError):
            ChaoticConfig("lorenz63", dt=0.0)
        with pytest.raises(ConfigurationError):
            ChaoticConfig("lorenz63", washout=-1)
        with pytest.raises(ConfigurationError):
            generate_series(ChaoticConfig("lorenz96", params={"k": 3}), seed=0)


class TestNormalizeSeries:
    def test_zero_mean_unit_sigma(self):
        rng = np.random.default_rng(6)
        series = rng.random((200, 3)) * np.array([1.0, 5.0, 0.1]) + np.array([2.0, -3.0, 0.0])
        normed, mean, sigma = normalize_series(series)
        np.testing.assert_allclose(normed.mean(axis=0), 0.0, atol=1e-12)
        np.testing.assert_allclose(normed.std(axis=0), 1.0, rtol=1e-12)
        np.testing.assert_allclose(normed * sigma + mean, series)

    def test_constant_dimension_rejected(self):
        series = np.column_stack([np.arange(10.0), np.ones(10)])
        with pytest.raises(ConfigurationError):
            normalize_series(series)


class TestClassificationTask:
    def spec(self):
        return ClassTaskSpec(n_classes=3, n_encoders=4, trials_per_class=10,
                             noise=0.05, train_fraction=0.7)

    def test_shapes_and_labels(self):
        data = make_classification_task(self.spec(), seed=0)
        assert data.templates.shape == (3, 4)
        assert data.inputs.shape == (30, 4)
        np.testing.assert_array_equal(np.bincount(data.labels), [10, 10, 10])

    def test_templates_and_inputs_in_range(self):
        data = make_classification_task(self.spec(), seed=1)
        assert np.all(data.templates >= 0.1) and np.all(data.templates <= 0.9)
        assert np.all(data.inputs >= 0.0) and np.all(data.inputs <= 1.0)

    def test_trials_cluster_around_their_template(self):
        data = make_classification_task(self.spec(), seed=2)
        for c in range(3):
            rows = data.inputs[data.labels == c]
            np.testing.assert_allclose(rows.mean(axis=0), data.templates[c], atol=0.1)

    def test_split_is_stratified(self):
        data = make_classification_task(self.spec(), seed=3)
        train_labels = data.labels[data.train_idx]
        test_labels = data.labels[data.test_idx]
        np.testing.assert_array_equal(np.bincount(train_labels), [7, 7, 7])
        np.testing.assert_array_equal(np.bincount(test_labels), [3, 3, 3])
        assert len(set(data.train_idx) & set(data.test_idx)) == 0

    def test_deterministic(self):
        d1 = make_classification_task(self.spec(), seed=4)
        d2 = make_classification_task(self.spec(), seed=4)
        np.testing.assert_array_equal(d1.inputs, d2.inputs)

    def test_spec_validation(self):
        with pytest.raises(ConfigurationError):
            ClassTaskSpec(n_classes=1)
        with pytest.raises(ConfigurationError):
            ClassTaskSpec(trials_per_class=1)
        with pytest.raises(ConfigurationError):
            ClassTaskSpec(train_fraction=1.0)
