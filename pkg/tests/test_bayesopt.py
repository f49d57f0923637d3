"""Distribution distances, the Matern surrogate on them, and the search loop."""

import itertools
from dataclasses import replace

import numpy as np
import pytest

from spikeres.bayesopt import (
    KernelHyper,
    ParamDistributionSet,
    SearchSpace,
    bo_loop,
    default_search_space,
    distance_matrix,
    expected_improvement,
    gp_fit,
    gp_predict,
    matern_gram,
    matern_w_kernel,
    set_distance,
    sinkhorn_distance,
    wasserstein_1d,
)
from spikeres.distributions import GammaSpec, PointMass
from spikeres.errors import ConfigurationError, NumericError


def random_set(rng):
    fields = {}
    for name in ("tau_m_exc", "tau_m_inh", "gain_plus", "gain_minus", "tau_plus", "tau_minus"):
        fields[name] = GammaSpec(rng.uniform(1.0, 10.0), rng.uniform(0.1, 5.0))
    return ParamDistributionSet(**fields)


class TestWasserstein1d:
    def test_self_distance_is_zero(self):
        assert wasserstein_1d(GammaSpec(2.0, 1.5), GammaSpec(2.0, 1.5)) == 0.0
        assert wasserstein_1d(PointMass(3.0), PointMass(3.0)) == 0.0

    def test_point_masses_transport_directly(self):
        assert wasserstein_1d(PointMass(1.0), PointMass(4.5)) == pytest.approx(3.5)

    def test_scale_family_closed_form(self):
        # same shape k: quantiles scale linearly, so W1 = k * |scale difference|
        d = wasserstein_1d(GammaSpec(3.0, 1.0), GammaSpec(3.0, 2.5))
        assert d == pytest.approx(3.0 * 1.5, rel=1e-6)

    def test_matches_sorted_sample_estimate(self):
        rng = np.random.default_rng(0)
        n = 10**6
        xs = np.sort(GammaSpec(2.0, 1.0).sample(rng, n))
        ys = np.sort(GammaSpec(2.0, 3.0).sample(rng, n))
        empirical = float(np.mean(np.abs(xs - ys)))
        assert wasserstein_1d(GammaSpec(2.0, 1.0), GammaSpec(2.0, 3.0)) == pytest.approx(
            empirical, rel=0.01
        )

    def test_node_count_floor(self):
        with pytest.raises(ConfigurationError):
            wasserstein_1d(PointMass(0.0), PointMass(1.0), n_nodes=4)


class TestSetDistance:
    def test_identity(self):
        x = ParamDistributionSet()
        assert set_distance(x, x) == 0.0

    def test_single_marginal_difference(self):
        x = ParamDistributionSet()
        y = replace(x, tau_m_exc=GammaSpec(4.0, 4.0))
        want = wasserstein_1d(x.tau_m_exc, y.tau_m_exc)
        assert set_distance(x, y) == pytest.approx(want)

    def test_symmetry_and_triangle_inequality(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            a, b, c = (random_set(rng) for _ in range(3))
            ab = set_distance(a, b)
            assert ab == pytest.approx(set_distance(b, a))
            assert set_distance(a, c) <= ab + set_distance(b, c) + 1e-9

    def test_unknown_mode(self):
        x = ParamDistributionSet()
        with pytest.raises(ConfigurationError):
            set_distance(x, x, mode="energy")


def exact_transport(xs, ys):
    """Uniform-weight optimal transport by exhaustive assignment (equal sizes)."""
    cost = np.sqrt(np.sum((xs[:, None, :] - ys[None, :, :]) ** 2, axis=-1))
    n = len(xs)
    best = np.inf
    for perm in itertools.permutations(range(n)):
        best = min(best, float(np.mean(cost[np.arange(n), perm])))
    return best


class TestSinkhorn:
    def test_close_to_exact_transport(self):
        rng = np.random.default_rng(2)
        for n in (4, 5, 6):
            xs = rng.random((n, 3)) * 4.0
            ys = rng.random((n, 3)) * 4.0 + 1.0
            exact = exact_transport(xs, ys)
            approx = sinkhorn_distance(xs, ys)
            assert abs(approx - exact) <= 0.05 * exact

    def test_identical_clouds_cost_nothing(self):
        xs = np.arange(12, dtype=float).reshape(4, 3)
        assert sinkhorn_distance(xs, xs) == pytest.approx(0.0, abs=1e-6)

    def test_dimension_mismatch(self):
        with pytest.raises(ConfigurationError):
            sinkhorn_distance(np.zeros((3, 2)), np.zeros((3, 4)))

    def test_set_distance_sinkhorn_mode_runs(self):
        x = ParamDistributionSet()
        y = replace(x, tau_m_exc=GammaSpec(4.0, 4.0))
        d = set_distance(x, y, mode="sinkhorn", n_samples=16, seed=3)
        assert np.isfinite(d) and d > 0.0


class TestMaternKernel:
    def test_distance_zero_returns_variance(self):
        for rho in (0.5, 1.5, 2.5, 3.7):
            hyper = KernelHyper(variance=2.0, length_scale=1.3, smoothness=rho)
            assert matern_w_kernel(0.0, hyper) == pytest.approx(2.0)

    def test_exponential_closed_form(self):
        hyper = KernelHyper(variance=1.7, length_scale=2.0, smoothness=0.5)
        w = np.array([0.0, 0.5, 1.0, 3.0])
        np.testing.assert_allclose(matern_w_kernel(w, hyper), 1.7 * np.exp(-w / 2.0))

    def test_bessel_route_matches_half_integer_forms(self):
        # nudging the order off 1.5 switches to the Bessel branch
        w = np.linspace(0.01, 5.0, 40)
        closed = matern_w_kernel(w, KernelHyper(smoothness=1.5))
        bessel = matern_w_kernel(w, KernelHyper(smoothness=1.5 + 1e-9))
        np.testing.assert_allclose(bessel, closed, rtol=1e-6)

    def test_monotone_decay(self):
        hyper = KernelHyper(smoothness=2.5)
        vals = matern_w_kernel(np.linspace(0.0, 10.0, 50), hyper)
        assert np.all(np.diff(vals) < 0.0)

    def test_negative_distance_rejected(self):
        with pytest.raises(ConfigurationError):
            matern_w_kernel(-0.1, KernelHyper())

    def test_hyper_validation(self):
        with pytest.raises(ConfigurationError):
            KernelHyper(variance=0.0)


class TestGramMatrix:
    def test_symmetric_exactly_and_near_psd(self):
        rng = np.random.default_rng(4)
        hyper = KernelHyper(variance=1.0, length_scale=10.0, smoothness=2.5)
        for _ in range(10):
            points = [random_set(rng) for _ in range(6)]
            gram = matern_gram(points, hyper)
            np.testing.assert_array_equal(gram, gram.T)
            assert np.min(np.linalg.eigvalsh(gram)) >= -1e-8

    def test_distance_matrix_zero_diagonal(self):
        rng = np.random.default_rng(5)
        points = [random_set(rng) for _ in range(4)]
        d = distance_matrix(points)
        np.testing.assert_array_equal(np.diag(d), 0.0)
        assert np.all(d >= 0.0)


def point_mass_sets(values):
    base = ParamDistributionSet()
    return [replace(base, tau_m_exc=PointMass(float(v))) for v in values]


class TestGp:
    def test_interpolates_observations(self):
        points = point_mass_sets([0.0, 1.0, 2.5, 4.0])
        values = np.array([0.3, -1.0, 2.0, 0.5])
        gp = gp_fit(points, values, KernelHyper(length_scale=1.0, smoothness=0.5))
        mean, std = gp_predict(gp, points)
        np.testing.assert_allclose(mean, values, atol=1e-6)
        assert np.all(std**2 <= gp.jitter * 10.0)

    def test_far_query_reverts_to_prior(self):
        points = point_mass_sets([0.0, 1.0])
        gp = gp_fit(points, np.array([5.0, -5.0]),
                    KernelHyper(variance=2.0, length_scale=1.0, smoothness=0.5))
        mean, std = gp_predict(gp, point_mass_sets([500.0]))
        assert abs(mean[0]) < 1e-8
        assert std[0] == pytest.approx(np.sqrt(2.0))

    def test_matches_hand_computed_conditional(self):
        # three observations, exponential kernel: closed-form GP conditional
        locs = np.array([0.0, 1.0, 3.0])
        values = np.array([1.0, 0.0, -2.0])
        hyper = KernelHyper(variance=1.5, length_scale=2.0, smoothness=0.5)
        gp = gp_fit(point_mass_sets(locs), values, hyper, jitter=1e-8)

        q = 1.7
        k = 1.5 * np.exp(-np.abs(locs[:, None] - locs[None, :]) / 2.0)
        k_star = 1.5 * np.exp(-np.abs(q - locs) / 2.0)
        solve = np.linalg.solve(k + 1e-8 * np.eye(3), np.eye(3))
        want_mean = k_star @ solve @ values
        want_std = np.sqrt(1.5 - k_star @ solve @ k_star)
        mean, std = gp_predict(gp, point_mass_sets([q]))
        np.testing.assert_allclose(mean[0], want_mean, atol=1e-9)
        np.testing.assert_allclose(std[0], want_std, atol=1e-9)

    def test_input_validation(self):
        with pytest.raises(ConfigurationError):
            gp_fit([], np.array([]), KernelHyper())
        with pytest.raises(ConfigurationError):
            gp_fit(point_mass_sets([0.0]), np.array([1.0, 2.0]), KernelHyper())


class TestExpectedImprovement:
    def test_zero_variance_cases(self):
        assert expected_improvement(1.0, 0.0, 2.0) == 0.0
        assert expected_improvement(2.0, 0.0, 2.0) == 0.0
        assert expected_improvement(2.7, 0.0, 2.0) == pytest.approx(0.7)

    def test_matches_monte_carlo(self):
        mu, sigma, f_best = 1.0, 0.5, 0.8
        rng = np.random.default_rng(6)
        draws = np.maximum(rng.normal(mu, sigma, size=10**7) - f_best, 0.0)
        se = draws.std() / np.sqrt(len(draws))
        assert abs(expected_improvement(mu, sigma, f_best) - draws.mean()) <= 3.0 * se

    def test_non_negative_everywhere(self):
        rng = np.random.default_rng(7)
        mean = rng.normal(size=200)
        std = rng.random(200) * 2.0
        ei = expected_improvement(mean, std, 0.3)
        assert np.all(ei >= 0.0)

    def test_monotone_in_std(self):
        sigmas = np.linspace(0.01, 3.0, 30)
        ei = expected_improvement(np.full(30, 1.0), sigmas, 0.5)
        assert np.all(np.diff(ei) > 0.0)

    def test_negative_std_rejected(self):
        with pytest.raises(ConfigurationError):
            expected_improvement(1.0, -0.1, 0.0)


class TestSearchSpace:
    def test_canonical_name_order(self):
        space = default_search_space()
        assert space.names == ("tau_m_exc", "tau_m_inh", "gain_plus",
                               "gain_minus", "tau_plus", "tau_minus")
        assert space.dim == 12

    def test_vector_round_trip(self):
        space = default_search_space()
        vec = space.base_vector()
        point = space.to_set(vec)
        for i, name in enumerate(space.names):
            spec = getattr(point, name)
            assert spec.shape == pytest.approx(vec[2 * i])
            assert spec.scale == pytest.approx(vec[2 * i + 1])

    def test_base_vector_respects_bounds(self):
        space = SearchSpace(bounds={"tau_m_exc": ((2.0, 4.0), (0.5, 1.0))})
        lo, hi = space.lows_highs()
        vec = space.base_vector()
        assert np.all(vec >= lo) and np.all(vec <= hi)

    def test_validation(self):
        with pytest.raises(ConfigurationError):
            SearchSpace(bounds={"tau_m_mid": ((1.0, 2.0), (1.0, 2.0))})
        with pytest.raises(ConfigurationError):
            SearchSpace(bounds={"tau_m_exc": ((2.0, 1.0), (1.0, 2.0))})


class TestBoLoop:
    def space(self):
        return SearchSpace(bounds={"tau_m_exc": ((2.0, 20.0), (0.5, 6.0))})

    def test_constant_objective_returns_first_point(self):
        result = bo_loop(lambda p: 1.25, self.space(), budget=8, seed=0,
                         n_init=4, n_candidates=32)
        assert result.best_value == 1.25
        assert result.best_point == result.trace[0].point
        assert all(step.value == 1.25 for step in result.trace)

    def test_same_seed_same_trace(self):
        target = replace(ParamDistributionSet(), tau_m_exc=GammaSpec(4.0, 4.0))
        runs = [
            bo_loop(lambda p: -set_distance(p, target), self.space(), budget=10,
                    seed=3, n_init=4, n_candidates=32)
            for _ in range(2)
        ]
        assert len(runs[0].trace) == len(runs[1].trace)
        for a, b in zip(runs[0].trace, runs[1].trace):
            assert a.point == b.point
            assert a.value == b.value
            assert a.stage == b.stage

    def test_initial_design_stages(self):
        result = bo_loop(lambda p: 0.0, self.space(), budget=8, seed=1,
                         n_init=4, n_candidates=16)
        stages = [s.stage for s in result.trace]
        assert stages[:4] == ["init"] * 4
        assert all(s in ("ei", "random") for s in stages[4:])

    def test_failures_recorded_and_skipped(self):
        calls = {"n": 0}

        def flaky(point):
            calls["n"] += 1
            if calls["n"] % 3 == 0:
                raise ValueError("probe blew up")
            return float(point.tau_m_exc.mean)

        result = bo_loop(flaky, self.space(), budget=9, seed=2,
                         n_init=4, n_candidates=16)
        assert len(result.failures) == 3
        assert len(result.trace) == 6
        assert all("blew up" in msg for _, msg in result.failures)

    def test_all_evaluations_failing_raises(self):
        with pytest.raises(NumericError):
            bo_loop(lambda p: float("nan"), self.space(), budget=5, seed=0,
                    n_init=2, n_candidates=8)

    def test_budget_floor(self):
        with pytest.raises(ConfigurationError):
            bo_loop(lambda p: 0.0, self.space(), budget=4, seed=0)

    def test_improves_on_self_distance(self):
        target = replace(ParamDistributionSet(), tau_m_exc=GammaSpec(4.0, 4.0))
        result = bo_loop(lambda p: -set_distance(p, target), self.space(), budget=25,
                         seed=0, n_init=6, n_candidates=128)
        init_best = max(s.value for s in result.trace[:6])
        assert result.best_value >= init_best
        assert result.best_value > -2.0
