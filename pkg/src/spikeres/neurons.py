"""Leaky integrate-and-fire populations with heterogeneous parameters.

Membrane update per Euler step: v += dt * (v_rest + r_m * I - v) / tau_m with
threshold crossing, reset, and an absolute refractory hold. Spikes are stamped
at the end of the step in which the crossing is detected. Recurrent synaptic
current is an exponentially decaying sum of presynaptic spike impulses that
arrive one step after emission.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import engine
from .distributions import ParamDist, PointMass
from .errors import ConfigurationError
from .plasticity import StdpParams
from .topology import NetworkGraph


@dataclass(frozen=True)
class NeuronParams:
    tau_m: float
    r_m: float = 1.0
    v_rest: float = 0.0
    v_threshold: float = 20.0
    v_reset: float = 0.0
    refractory: float = 2.0

    def __post_init__(self):
        if self.tau_m <= 0.0:
            raise ConfigurationError(f"tau_m must be positive, got {self.tau_m}")
        if self.r_m <= 0.0:
            raise ConfigurationError("r_m must be positive")
        if not self.v_reset < self.v_threshold:
            raise ConfigurationError(
                f"v_reset must stay below v_threshold, got {self.v_reset} >= {self.v_threshold}"
            )
        if self.refractory < 0.0:
            raise ConfigurationError("refractory must be non-negative")


@dataclass(frozen=True)
class HeterogeneityProfile:
    """Population distributions for membrane parameters, split by neuron type.

    A homogeneous model is the point-mass case. Threshold distributions are
    optional; when absent every neuron keeps the base threshold. Sampled time
    constants are floored at tau_floor so the Euler stability guard holds at
    the intended step size. bio_inspired asserts the conventional ordering of
    excitatory vs inhibitory membrane time constants.
    """

    tau_m_exc: ParamDist = PointMass(20.0)
    tau_m_inh: ParamDist = PointMass(10.0)
    v_th_exc: ParamDist | None = None
    v_th_inh: ParamDist | None = None
    base: NeuronParams = NeuronParams(tau_m=20.0)
    tau_floor: float = 5.0
    bio_inspired: bool = True

    def __post_init__(self):
        if self.tau_floor <= 0.0:
            raise ConfigurationError("tau_floor must be positive")
        if self.bio_inspired and self.tau_m_exc.mean < self.tau_m_inh.mean:
            raise ConfigurationError(
                "bio-inspired profile expects excitatory tau_m mean >= inhibitory mean"
            )
        if (self.v_th_exc is None) != (self.v_th_inh is None):
            raise ConfigurationError("threshold distributions must be given for both populations")


def gamma_profile(
    mean_exc: float = 20.0,
    mean_inh: float = 10.0,
    shape: float = 8.0,
    v_th_mean: float | None = None,
    v_th_shape: float = 40.0,
    base: NeuronParams = NeuronParams(tau_m=20.0),
) -> HeterogeneityProfile:
    """Convenience constructor for a fully heterogeneous profile."""
    from .distributions import GammaSpec

    v_exc = v_inh = None
    if v_th_mean is not None:
        v_exc = GammaSpec(v_th_shape, v_th_mean / v_th_shape)
        v_inh = GammaSpec(v_th_shape, v_th_mean / v_th_shape)
    return HeterogeneityProfile(
        tau_m_exc=GammaSpec(shape, mean_exc / shape),
        tau_m_inh=GammaSpec(shape, mean_inh / shape),
        v_th_exc=v_exc,
        v_th_inh=v_inh,
        base=base,
    )


def homogeneous_profile(
    tau_exc: float = 20.0, tau_inh: float = 10.0, base: NeuronParams = NeuronParams(tau_m=20.0)
) -> HeterogeneityProfile:
    return HeterogeneityProfile(tau_m_exc=PointMass(tau_exc), tau_m_inh=PointMass(tau_inh), base=base)


def sample_params(profile: HeterogeneityProfile, graph: NetworkGraph, seed: int) -> dict[int, NeuronParams]:
    """Draw per-neuron parameters; one draw stream regardless of composition."""
    ids = graph.neuron_ids()
    n = len(ids)
    rng = np.random.default_rng(seed)
    tau_e = profile.tau_m_exc.sample(rng, n)
    tau_i = profile.tau_m_inh.sample(rng, n)
    if profile.v_th_exc is not None:
        vth_e = profile.v_th_exc.sample(rng, n)
        vth_i = profile.v_th_inh.sample(rng, n)
    out = {}
    for k, nid in enumerate(ids):
        exc = graph.sign[nid] > 0
        tau = max(tau_e[k] if exc else tau_i[k], profile.tau_floor)
        fields = {"tau_m": float(tau)}
        if profile.v_th_exc is not None:
            vth = vth_e[k] if exc else vth_i[k]
            fields["v_threshold"] = float(max(vth, profile.base.v_reset + 1.0))
        out[nid] = replace(profile.base, **fields)
    return out


@dataclass
class NetworkState:
    """Membrane state between steps; arrays aligned with the sorted id tuple."""

    ids: tuple[int, ...]
    v: np.ndarray
    syn_current: np.ndarray
    refrac_until: np.ndarray
    t_now: float

    def potential(self, nid: int) -> float:
        return float(self.v[self.ids.index(nid)])

    def as_dict(self) -> dict[int, float]:
        return {nid: float(self.v[k]) for k, nid in enumerate(self.ids)}


@dataclass
class EncoderSpikes:
    """Encoder spike counts per step, shape (n_steps, n_encoders)."""

    counts: np.ndarray
    dt: float

    def __post_init__(self):
        self.counts = np.asarray(self.counts)
        if self.counts.ndim != 2:
            raise ConfigurationError("encoder spike counts must be 2-D (steps, encoders)")
        if np.any(self.counts < 0):
            raise ConfigurationError("encoder spike counts must be non-negative")

    @property
    def n_steps(self) -> int:
        return self.counts.shape[0]

    @property
    def n_encoders(self) -> int:
        return self.counts.shape[1]

    @property
    def duration(self) -> float:
        return self.n_steps * self.dt

    def total(self) -> int:
        return int(self.counts.sum())


@dataclass
class SpikeRecord:
    """All spikes of a run, time-ordered, with the full id roster of the graph."""

    ids: tuple[int, ...]
    neuron: np.ndarray
    time: np.ndarray
    duration: float

    @property
    def n_spikes(self) -> int:
        return len(self.time)

    def counts(self) -> dict[int, int]:
        base = dict.fromkeys(self.ids, 0)
        uniq, cnt = np.unique(self.neuron, return_counts=True)
        for nid, c in zip(uniq.tolist(), cnt.tolist()):
            base[nid] = c
        return base

    def count_array(self) -> np.ndarray:
        idx = {nid: k for k, nid in enumerate(self.ids)}
        out = np.zeros(len(self.ids), dtype=np.int64)
        for nid in self.neuron:
            out[idx[int(nid)]] += 1
        return out

    def spikes_of(self, nid: int) -> np.ndarray:
        if nid not in self.ids:
            raise ConfigurationError(f"neuron {nid} is not part of this record")
        return self.time[self.neuron == nid]

    def restricted(self, until: float) -> "SpikeRecord":
        keep = self.time <= until
        return SpikeRecord(self.ids, self.neuron[keep], self.time[keep], self.duration)


@dataclass
class SimResult:
    record: SpikeRecord
    state: NetworkState
    weights: dict[tuple[int, int], float]
    input_weights: dict[tuple[int, int], float]


def compile_network(
    graph: NetworkGraph,
    params: dict[int, NeuronParams],
    dt: float,
    tau_syn: float = 5.0,
    stdp_params: dict[tuple[int, int], StdpParams] | None = None,
    input_stdp_params: dict[tuple[int, int], StdpParams] | None = None,
    v_floor_margin: float = 20.0,
) -> tuple[engine.CompiledNetwork, list[int]]:
    """Flatten graph + parameter maps into the array engine's layout."""
    ids = graph.neuron_ids()
    missing = [nid for nid in ids if nid not in params]
    if missing:
        raise ConfigurationError(f"missing neuron parameters for ids {missing[:5]}")
    index = {nid: k for k, nid in enumerate(ids)}
    n = len(ids)

    def column(attr):
        return np.array([getattr(params[nid], attr) for nid in ids], dtype=float)

    edge_keys = sorted(graph.edges)
    syn_pre = np.array([index[a] for a, _ in edge_keys], dtype=np.int64)
    syn_post = np.array([index[b] for _, b in edge_keys], dtype=np.int64)
    syn_w = np.array([graph.edges[k] for k in edge_keys], dtype=float)
    in_keys = sorted(graph.input_edges)
    in_enc = np.array([e for e, _ in in_keys], dtype=np.int64)
    in_post = np.array([index[p] for _, p in in_keys], dtype=np.int64)
    in_w = np.array([graph.input_edges[k] for k in in_keys], dtype=float)

    def stdp_arrays(keys, param_map):
        if param_map is None:
            return None
        missing = [k for k in keys if k not in param_map]
        if missing:
            raise ConfigurationError(f"missing plasticity parameters for synapses {missing[:5]}")
        ps = [param_map[k] for k in keys]
        return engine.StdpArrays(
            gain_plus=np.array([p.gain_plus for p in ps]),
            gain_minus=np.array([p.gain_minus for p in ps]),
            trace_plus=np.array([p.trace_plus for p in ps]),
            trace_minus=np.array([p.trace_minus for p in ps]),
            decay_pre=np.array([np.exp(-dt / p.tau_plus) for p in ps]),
            decay_post=np.array([np.exp(-dt / p.tau_minus) for p in ps]),
            w_min=np.array([p.w_min for p in ps]),
            w_max=np.array([p.w_max for p in ps]),
        )

    v_reset = column("v_reset")
    net = engine.CompiledNetwork(
        n=n,
        dt=dt,
        tau_m=column("tau_m"),
        r_m=column("r_m"),
        v_rest=column("v_rest"),
        v_th=column("v_threshold"),
        v_reset=v_reset,
        refrac=column("refractory"),
        v_floor=v_reset - v_floor_margin,
        syn_pre=syn_pre,
        syn_post=syn_post,
        syn_wmag=np.abs(syn_w),
        syn_sign=np.sign(syn_w) + (syn_w == 0.0),
        n_enc=graph.n_encoders,
        in_enc=in_enc,
        in_post=in_post,
        in_w=in_w,
        tau_syn=tau_syn,
        stdp=stdp_arrays(edge_keys, stdp_params),
        stdp_in=stdp_arrays(in_keys, input_stdp_params),
    )
    return net, ids


def initial_state(
    graph: NetworkGraph, params: dict[int, NeuronParams], seed: int = 0, mode: str = "rest"
) -> NetworkState:
    ids = graph.neuron_ids()
    if mode == "rest":
        v = np.array([params[nid].v_rest for nid in ids], dtype=float)
    elif mode == "uniform":
        rng = np.random.default_rng(seed)
        lo = np.array([params[nid].v_reset for nid in ids])
        hi = np.array([params[nid].v_threshold for nid in ids])
        v = lo + rng.random(len(ids)) * (hi - lo)
    else:
        raise ConfigurationError(f"unknown init mode {mode!r}")
    n = len(ids)
    return NetworkState(
        ids=tuple(ids),
        v=v,
        syn_current=np.zeros(n),
        refrac_until=np.full(n, -np.inf),
        t_now=0.0,
    )


def step(
    state: NetworkState,
    graph: NetworkGraph,
    params: dict[int, NeuronParams],
    input_current: dict[int, float] | None = None,
    dt: float = 0.5,
    tau_syn: float = 5.0,
) -> tuple[NetworkState, list[tuple[int, float]]]:
    """One Euler step from an explicit state; returns the new state and spikes."""
    net, ids = compile_network(graph, params, dt, tau_syn=tau_syn)
    if tuple(ids) != state.ids:
        raise ConfigurationError("state ids do not match the graph")
    ext = None
    if input_current:
        ext = np.zeros(len(ids))
        index = {nid: k for k, nid in enumerate(ids)}
        for nid, cur in input_current.items():
            ext[index[nid]] = cur
    v = state.v.copy()
    cur = state.syn_current.copy()
    ref = state.refrac_until.copy()
    sp_idx, sp_t, _ = engine.run_steps(net, v, cur, ref, state.t_now, 1, None, ext)
    new_state = NetworkState(state.ids, v, cur, ref, state.t_now + dt)
    spikes = [(ids[i], float(t)) for i, t in zip(sp_idx.tolist(), sp_t.tolist())]
    return new_state, spikes


def simulate(
    graph: NetworkGraph,
    params: dict[int, NeuronParams],
    input_spikes: EncoderSpikes | None = None,
    duration: float | None = None,
    dt: float = 0.5,
    seed: int = 0,
    stdp_params=None,
    input_stdp_params=None,
    external_current: np.ndarray | dict[int, float] | None = None,
    v_init: str = "rest",
    tau_syn: float = 5.0,
) -> SimResult:
    """Run the network for a duration and collect every spike.

    When plasticity parameter maps are given, weights evolve in place and the
    updated values are returned; otherwise the input weights pass through
    unchanged. Deterministic for fixed inputs and seed.
    """
    if input_spikes is not None:
        if abs(input_spikes.dt - dt) > 1e-12:
            raise ConfigurationError("encoder spike step size disagrees with simulation dt")
        if input_spikes.n_encoders != graph.n_encoders:
            raise ConfigurationError("encoder count disagrees with the graph")
        if duration is None:
            duration = input_spikes.duration
    if duration is None or duration <= 0.0:
        raise ConfigurationError("a positive duration is required")
    n_steps = int(round(duration / dt))
    if abs(n_steps * dt - duration) > 1e-9:
        raise ConfigurationError("duration must be an integer number of steps")
    if input_spikes is not None and input_spikes.n_steps < n_steps:
        raise ConfigurationError("encoder spikes cover fewer steps than the requested duration")

    net, ids = compile_network(
        graph, params, dt, tau_syn=tau_syn, stdp_params=stdp_params, input_stdp_params=input_stdp_params
    )
    state = initial_state(graph, params, seed=seed, mode=v_init)
    ext = None
    if external_current is not None:
        if isinstance(external_current, dict):
            index = {nid: k for k, nid in enumerate(ids)}
            ext = np.zeros(len(ids))
            for nid, cur in external_current.items():
                ext[index[nid]] = cur
        else:
            ext = np.asarray(external_current, dtype=float)
    enc = input_spikes.counts[:n_steps] if input_spikes is not None else None

    v = state.v
    cur = state.syn_current
    ref = state.refrac_until
    sp_idx, sp_t, _ = engine.run_steps(net, v, cur, ref, 0.0, n_steps, enc, ext)

    id_arr = np.asarray(ids, dtype=np.int64)
    record = SpikeRecord(
        ids=tuple(ids), neuron=id_arr[sp_idx], time=sp_t, duration=float(n_steps * dt)
    )
    final = NetworkState(tuple(ids), v, cur, ref, float(n_steps * dt))
    edge_keys = sorted(graph.edges)
    weights = {k: float(s * w) for k, s, w in zip(edge_keys, net.syn_sign, net.syn_wmag)}
    in_keys = sorted(graph.input_edges)
    input_weights = {k: float(w) for k, w in zip(in_keys, net.in_w)}
    return SimResult(record=record, state=final, weights=weights, input_weights=input_weights)


def firing_rates(record: SpikeRecord, window: float | None = None) -> dict[int, float]:
    """Spikes per second over the trailing window (default: the whole run)."""
    if window is None:
        window = record.duration
    if window <= 0.0:
        raise ConfigurationError("rate window must be positive")
    lo = record.duration - window
    out = dict.fromkeys(record.ids, 0.0)
    sel = record.time > lo
    uniq, cnt = np.unique(record.neuron[sel], return_counts=True)
    for nid, c in zip(uniq.tolist(), cnt.tolist()):
        out[nid] = c / window * 1000.0
    return out


@dataclass(frozen=True)
class SpikeStats:
    per_neuron: dict[int, int]
    s_tilde: float
    nu_bar: float


def spike_stats(record: SpikeRecord, until: float | None = None) -> SpikeStats:
    """Per-neuron spike counts with the population mean, optionally truncated."""
    rec = record if until is None else record.restricted(until)
    counts = rec.counts()
    n = len(record.ids)
    if n == 0:
        raise ConfigurationError("record covers no neurons")
    mean = sum(counts.values()) / n
    return SpikeStats(per_neuron=counts, s_tilde=mean, nu_bar=mean)
