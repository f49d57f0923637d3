"""Trace-based spike-timing plasticity: parameter types, sampling, functional ops.

A presynaptic trace decays with tau_plus and jumps by trace_plus on each pre
spike; the postsynaptic trace mirrors it with tau_minus / trace_minus. Weight
updates read the traces decayed to the current step but not yet bumped by the
step's own spikes: potentiation gain_plus * t_pre on a post spike, depression
gain_minus * t_post on a pre spike. Updates act on weight magnitude; the sign
stays with the presynaptic type.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distributions import ParamDist, PointMass
from .errors import ConfigurationError
from .topology import NetworkGraph


@dataclass(frozen=True)
class StdpParams:
    gain_plus: float
    gain_minus: float
    trace_plus: float
    trace_minus: float
    tau_plus: float
    tau_minus: float
    w_min: float = 0.0
    w_max: float = 2.0

    def __post_init__(self):
        if self.gain_plus < 0.0 or self.gain_minus < 0.0:
            raise ConfigurationError("plasticity gains must be non-negative")
        if self.tau_plus <= 0.0 or self.tau_minus <= 0.0:
            raise ConfigurationError("trace time constants must be positive")
        if not (0.0 <= self.w_min < self.w_max):
            raise ConfigurationError(f"need 0 <= w_min < w_max, got [{self.w_min}, {self.w_max}]")


@dataclass(frozen=True)
class StdpProfile:
    """Population-level distributions for per-synapse plasticity parameters."""

    gain_plus: ParamDist = PointMass(0.01)
    gain_minus: ParamDist = PointMass(0.012)
    tau_plus: ParamDist = PointMass(20.0)
    tau_minus: ParamDist = PointMass(20.0)
    trace_plus: float = 1.0
    trace_minus: float = 1.0
    w_min: float = 0.0
    w_max: float = 2.0
    tau_floor: float = 1.0

    def __post_init__(self):
        if not (0.0 <= self.w_min < self.w_max):
            raise ConfigurationError("need 0 <= w_min < w_max")
        if self.tau_floor <= 0.0:
            raise ConfigurationError("tau_floor must be positive")


def sample_stdp_params(
    profile: StdpProfile, graph: NetworkGraph, seed: int, which: str = "recurrent"
) -> dict[tuple[int, int], StdpParams]:
    """Draw per-synapse parameters in canonical sorted edge order.

    ``which`` selects the recurrent edge set or the encoder fan-in; both are
    plastic under the same profile. Time constants are floored at tau_floor.
    """
    if which == "recurrent":
        keys = sorted(graph.edges)
    elif which == "input":
        keys = sorted(graph.input_edges)
    else:
        raise ConfigurationError(f"unknown synapse set {which!r}")
    rng = np.random.default_rng(seed)
    n = len(keys)
    gp = profile.gain_plus.sample(rng, n)
    gm = profile.gain_minus.sample(rng, n)
    tp = np.maximum(profile.tau_plus.sample(rng, n), profile.tau_floor)
    tm = np.maximum(profile.tau_minus.sample(rng, n), profile.tau_floor)
    out = {}
    for i, key in enumerate(keys):
        out[key] = StdpParams(
            gain_plus=float(gp[i]),
            gain_minus=float(gm[i]),
            trace_plus=profile.trace_plus,
            trace_minus=profile.trace_minus,
            tau_plus=float(tp[i]),
            tau_minus=float(tm[i]),
            w_min=profile.w_min,
            w_max=profile.w_max,
        )
    return out


# --- functional per-step ops -------------------------------------------------


@dataclass
class TraceState:
    """Pre and post traces aligned with a fixed synapse tuple."""

    synapses: tuple[tuple[int, int], ...]
    t_pre: np.ndarray
    t_post: np.ndarray

    @classmethod
    def zeros(cls, synapses) -> "TraceState":
        syn = tuple(sorted(synapses))
        return cls(synapses=syn, t_pre=np.zeros(len(syn)), t_post=np.zeros(len(syn)))


def _param_arrays(traces: TraceState, params):
    missing = [s for s in traces.synapses if s not in params]
    if missing:
        raise ConfigurationError(f"plasticity parameters missing for synapses {missing[:3]}")
    return params


def decay_traces(traces: TraceState, params, dt: float) -> TraceState:
    """One step of exponential decay for every trace."""
    _param_arrays(traces, params)
    dp = np.array([np.exp(-dt / params[s].tau_plus) for s in traces.synapses])
    dm = np.array([np.exp(-dt / params[s].tau_minus) for s in traces.synapses])
    return TraceState(traces.synapses, traces.t_pre * dp, traces.t_post * dm)


def bump_traces(traces: TraceState, params, pre_spikes, post_spikes) -> TraceState:
    """Add the per-spike increments for this step's pre and post spikes."""
    _param_arrays(traces, params)
    t_pre = traces.t_pre.copy()
    t_post = traces.t_post.copy()
    for i, (pre, post) in enumerate(traces.synapses):
        if pre in pre_spikes:
            t_pre[i] += params[(pre, post)].trace_plus
        if post in post_spikes:
            t_post[i] += params[(pre, post)].trace_minus
    return TraceState(traces.synapses, t_pre, t_post)


def decay_and_bump_traces(traces: TraceState, params, pre_spikes, post_spikes, dt: float) -> TraceState:
    return bump_traces(decay_traces(traces, params, dt), params, pre_spikes, post_spikes)


def apply_stdp(weights, traces: TraceState, params, pre_spikes, post_spikes):
    """Weight updates for one step, reading pre-bump traces.

    Magnitudes move by gain_plus * t_pre per post spike and -gain_minus *
    t_post per pre spike, are clamped to [w_min, w_max], and keep the sign of
    the existing weight (zero weights count as excitatory).
    """
    _param_arrays(traces, params)
    out = dict(weights)
    for i, syn in enumerate(traces.synapses):
        if syn not in out:
            raise ConfigurationError(f"no weight for synapse {syn}")
        p = params[syn]
        dmag = 0.0
        if syn[1] in post_spikes:
            dmag += p.gain_plus * traces.t_pre[i]
        if syn[0] in pre_spikes:
            dmag -= p.gain_minus * traces.t_post[i]
        if dmag != 0.0:
            w = out[syn]
            sign = -1.0 if w < 0 else 1.0
            mag = np.clip(abs(w) + dmag, p.w_min, p.w_max)
            out[syn] = sign * mag
    return out


def step_plasticity(weights, traces: TraceState, params, pre_spikes, post_spikes, dt: float):
    """The full ordered step: decay, apply updates, then bump. Returns (weights, traces)."""
    decayed = decay_traces(traces, params, dt)
    new_w = apply_stdp(weights, decayed, params, pre_spikes, post_spikes)
    return new_w, bump_traces(decayed, params, pre_spikes, post_spikes)
