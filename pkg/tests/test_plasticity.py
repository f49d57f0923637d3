"""Trace dynamics and the pair-based weight update rule."""

import numpy as np
import pytest

from spikeres.distributions import GammaSpec
from spikeres.errors import ConfigurationError
from spikeres.neurons import NetworkGraph, NeuronParams, simulate
from spikeres.plasticity import (
    StdpParams,
    StdpProfile,
    TraceState,
    apply_stdp,
    bump_traces,
    decay_traces,
    sample_stdp_params,
    step_plasticity,
)


def pair_params(**kw):
    defaults = dict(gain_plus=0.01, gain_minus=0.012, trace_plus=1.0,
                    trace_minus=1.0, tau_plus=20.0, tau_minus=20.0)
    defaults.update(kw)
    return StdpParams(**defaults)


SYN = (0, 1)


class TestStdpParams:
    def test_rejects_bad_values(self):
        with pytest.raises(ConfigurationError):
            pair_params(gain_plus=-0.1)
        with pytest.raises(ConfigurationError):
            pair_params(tau_plus=0.0)
        with pytest.raises(ConfigurationError):
            pair_params(w_min=1.0, w_max=1.0)


class TestTraces:
    def test_decay_is_exponential(self):
        params = {SYN: pair_params(tau_plus=10.0, tau_minus=40.0)}
        traces = TraceState(synapses=(SYN,), t_pre=np.array([2.0]), t_post=np.array([3.0]))
        out = decay_traces(traces, params, dt=1.0)
        assert out.t_pre[0] == pytest.approx(2.0 * np.exp(-1.0 / 10.0))
        assert out.t_post[0] == pytest.approx(3.0 * np.exp(-1.0 / 40.0))

    def test_bump_adds_per_spike_increment(self):
        params = {SYN: pair_params(trace_plus=0.7, trace_minus=0.4)}
        traces = TraceState.zeros([SYN])
        out = bump_traces(traces, params, pre_spikes={0}, post_spikes={1})
        assert out.t_pre[0] == pytest.approx(0.7)
        assert out.t_post[0] == pytest.approx(0.4)

    def test_missing_params_rejected(self):
        traces = TraceState.zeros([SYN])
        with pytest.raises(ConfigurationError):
            decay_traces(traces, {}, dt=0.5)


class TestPairRule:
    """Isolated spike pairs reproduce the exponential timing curve."""

    def pair_update(self, delta_t, dt=0.5, pre_first=True, **kw):
        """Drive one synapse with a pre spike and a post spike delta_t apart."""
        params = {SYN: pair_params(**kw)}
        weights = {SYN: 1.0}
        traces = TraceState.zeros([SYN])
        n_steps = int(round(delta_t / dt))
        first = ({0}, set()) if pre_first else (set(), {1})
        second = (set(), {1}) if pre_first else ({0}, set())
        weights, traces = step_plasticity(weights, traces, params, *first, dt=dt)
        for _ in range(n_steps - 1):
            weights, traces = step_plasticity(weights, traces, params, set(), set(), dt=dt)
        weights, traces = step_plasticity(weights, traces, params, *second, dt=dt)
        return weights[SYN] - 1.0

    def test_potentiation_curve(self):
        # post after pre by delta_t: dw = gain_plus * trace_plus * exp(-dt/tau_plus)
        for delta_t in (5.0, 10.0, 20.0):
            dw = self.pair_update(delta_t, gain_plus=0.02, trace_plus=0.9, tau_plus=17.0)
            want = 0.02 * 0.9 * np.exp(-delta_t / 17.0)
            np.testing.assert_allclose(dw, want, rtol=1e-9)

    def test_depression_curve(self):
        # pre after post by delta_t: dw = -gain_minus * trace_minus * exp(-dt/tau_minus)
        for delta_t in (5.0, 10.0, 20.0):
            dw = self.pair_update(delta_t, pre_first=False,
                                  gain_minus=0.03, trace_minus=0.8, tau_minus=25.0)
            want = -0.03 * 0.8 * np.exp(-delta_t / 25.0)
            np.testing.assert_allclose(dw, want, rtol=1e-9)

    def test_simultaneous_spikes_read_pre_bump_traces(self):
        # both spikes in one step see zero traces: no update either way
        params = {SYN: pair_params()}
        weights, _ = step_plasticity({SYN: 1.0}, TraceState.zeros([SYN]), params, {0}, {1}, dt=0.5)
        assert weights[SYN] == 1.0


class TestWeightClipping:
    def test_upper_clip(self):
        params = {SYN: pair_params(gain_plus=10.0, w_max=1.2)}
        traces = TraceState(synapses=(SYN,), t_pre=np.array([1.0]), t_post=np.zeros(1))
        weights = apply_stdp({SYN: 1.0}, traces, params, set(), {1})
        assert weights[SYN] == 1.2

    def test_lower_clip(self):
        params = {SYN: pair_params(gain_minus=10.0, w_min=0.3)}
        traces = TraceState(synapses=(SYN,), t_pre=np.zeros(1), t_post=np.array([1.0]))
        weights = apply_stdp({SYN: 1.0}, traces, params, {0}, set())
        assert weights[SYN] == 0.3

    def test_inhibitory_weight_keeps_sign(self):
        # updates move the magnitude; an inhibitory synapse stays negative
        params = {SYN: pair_params(gain_plus=0.5)}
        traces = TraceState(synapses=(SYN,), t_pre=np.array([1.0]), t_post=np.zeros(1))
        weights = apply_stdp({SYN: -1.0}, traces, params, set(), {1})
        assert weights[SYN] == pytest.approx(-1.5)


class TestSampling:
    def graph(self):
        return NetworkGraph(
            positions={i: (i, 0, 0) for i in range(4)},
            sign={i: 1 for i in range(4)},
            edges={(0, 1): 1.0, (1, 2): 1.0, (2, 3): 1.0},
            input_edges={(0, 0): 1.0, (1, 1): 1.0},
            n_encoders=2,
        )

    def test_every_edge_gets_parameters(self):
        table = sample_stdp_params(StdpProfile(), self.graph(), seed=0)
        assert set(table) == {(0, 1), (1, 2), (2, 3)}

    def test_input_set_selectable(self):
        table = sample_stdp_params(StdpProfile(), self.graph(), seed=0, which="input")
        assert set(table) == {(0, 0), (1, 1)}
        with pytest.raises(ConfigurationError):
            sample_stdp_params(StdpProfile(), self.graph(), seed=0, which="both")

    def test_deterministic_and_canonical_order(self):
        profile = StdpProfile(gain_plus=GammaSpec(4.0, 0.0025), tau_plus=GammaSpec(8.0, 2.5))
        t1 = sample_stdp_params(profile, self.graph(), seed=5)
        t2 = sample_stdp_params(profile, self.graph(), seed=5)
        assert t1 == t2

    def test_tau_floor_applied(self):
        profile = StdpProfile(tau_plus=GammaSpec(0.1, 0.5), tau_floor=1.0)
        table = sample_stdp_params(profile, self.graph(), seed=7)
        assert all(p.tau_plus >= 1.0 for p in table.values())


class TestEngineAgreement:
    """The array engine inside simulate matches the functional rule."""

    def test_driven_pair_matches_step_plasticity(self):
        graph = NetworkGraph(
            positions={0: (0, 0, 0), 1: (1, 0, 0)},
            sign={0: 1, 1: 1},
            edges={(0, 1): 0.5},
        )
        params = {nid: NeuronParams(tau_m=20.0) for nid in (0, 1)}
        stdp = {(0, 1): pair_params()}
        # alternate strong pulses so both neurons spike at staggered times
        n_steps = 200
        ext = np.zeros((n_steps, 2))
        ext[::20, 0] = 1000.0
        ext[8::20, 1] = 1000.0
        result = simulate(graph, params, duration=n_steps * 0.5, dt=0.5,
                          external_current=ext, stdp_params=stdp)

        spikes0 = set(np.round(result.record.spikes_of(0) / 0.5).astype(int))
        spikes1 = set(np.round(result.record.spikes_of(1) / 0.5).astype(int))
        weights = {(0, 1): 0.5}
        traces = TraceState.zeros([(0, 1)])
        for k in range(1, n_steps + 1):
            pre = {0} if k in spikes0 else set()
            post = {1} if k in spikes1 else set()
            weights, traces = step_plasticity(weights, traces, stdp, pre, post, dt=0.5)
        assert result.weights[(0, 1)] == pytest.approx(weights[(0, 1)], rel=1e-12)
        assert result.weights[(0, 1)] != 0.5
