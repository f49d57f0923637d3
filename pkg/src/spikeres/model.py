"""A reservoir model bundles a graph with its sampled parameters and run settings."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigurationError
from .neurons import EncoderSpikes, NeuronParams, SimResult, simulate
from .plasticity import StdpParams
from .readout import select_readout_neurons
from .topology import NetworkGraph


@dataclass
class ReservoirModel:
    """Graph + per-neuron and per-synapse parameters + simulation settings.

    Also exposes a smooth firing-rate abstraction of the same network,
    x' = (-x + tanh(Wx + drive)) / tau, used by perturbation-growth analysis.
    """

    graph: NetworkGraph
    neuron_params: dict[int, NeuronParams]
    stdp_params: dict[tuple[int, int], StdpParams] | None = None
    input_stdp_params: dict[tuple[int, int], StdpParams] | None = None
    dt: float = 0.5
    tau_syn: float = 5.0
    readout_fraction: float = 0.1
    filter_tau: float = 20.0
    rate_drive: float = 0.1
    rate_dt_cap: float = 1.0

    def __post_init__(self):
        missing = [nid for nid in self.graph.neuron_ids() if nid not in self.neuron_params]
        if missing:
            raise ConfigurationError(f"neuron parameters missing for ids {missing[:5]}")

    # --- spiking side ---------------------------------------------------

    def simulate(
        self,
        input_spikes: EncoderSpikes | None = None,
        duration: float | None = None,
        seed: int = 0,
        plastic: bool = False,
        **kwargs,
    ) -> tuple[SimResult, "ReservoirModel"]:
        """Run the spiking network; with plasticity on, also return the updated model."""
        result = simulate(
            self.graph,
            self.neuron_params,
            input_spikes=input_spikes,
            duration=duration,
            dt=self.dt,
            seed=seed,
            stdp_params=self.stdp_params if plastic else None,
            input_stdp_params=self.input_stdp_params if plastic else None,
            tau_syn=self.tau_syn,
            **kwargs,
        )
        if not plastic:
            return result, self
        graph = self.graph.copy()
        graph.edges = dict(result.weights)
        graph.input_edges = dict(result.input_weights)
        return result, replace(self, graph=graph)

    def readout_neurons(self) -> list[int]:
        return select_readout_neurons(self.graph, self.readout_fraction)

    # --- rate-dynamics protocol ------------------------------------------

    @property
    def rate_ids(self) -> tuple[int, ...]:
        return tuple(self.graph.neuron_ids())

    @property
    def rate_dim(self) -> int:
        return self.graph.n_neurons

    @property
    def rate_dt(self) -> float:
        taus = [self.neuron_params[nid].tau_m for nid in self.graph.neuron_ids()]
        return min(min(taus) / 10.0, self.rate_dt_cap)

    def _rate_arrays(self):
        ids = self.graph.neuron_ids()
        index = {nid: k for k, nid in enumerate(ids)}
        n = len(ids)
        w = np.zeros((n, n))
        for (pre, post), weight in self.graph.edges.items():
            w[index[post], index[pre]] = weight
        tau = np.array([self.neuron_params[nid].tau_m for nid in ids])
        bias = np.array([self.rate_bias(nid) for nid in ids])
        return w, tau, bias

    def rate_bias(self, nid: int) -> float:
        """Dimensionless excitability: resting point relative to the firing gap.

        Zero at the default operating point (v_rest == v_reset), so excitability
        offsets written back by pruning shift the rate dynamics they came from.
        """
        p = self.neuron_params[nid]
        gap = p.v_threshold - p.v_reset
        return self.rate_drive + (p.v_rest - p.v_reset) / gap

    def rate_derivative(self, x: np.ndarray) -> np.ndarray:
        if not hasattr(self, "_rate_cache"):
            self._rate_cache = self._rate_arrays()
        w, tau, bias = self._rate_cache
        if x.ndim == 1:
            return (-x + np.tanh(w @ x + bias)) / tau
        return (-x + np.tanh(w @ x + bias[:, None])) / tau[:, None]

    def initial_rate_state(self, rng: np.random.Generator) -> np.ndarray:
        return 0.1 * rng.random(self.rate_dim)

    def invalidate_rate_cache(self):
        if hasattr(self, "_rate_cache"):
            del self._rate_cache


@dataclass
class LinearSystemModel:
    """Linear rate dynamics x' = Ax + b, mainly for analysis fixtures."""

    a: np.ndarray
    b: np.ndarray | None = None
    dt: float = 0.01
    ids: tuple[int, ...] = field(default=None)

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=float)
        if self.a.ndim != 2 or self.a.shape[0] != self.a.shape[1]:
            raise ConfigurationError("system matrix must be square")
        if self.b is None:
            self.b = np.zeros(self.a.shape[0])
        if self.ids is None:
            self.ids = tuple(range(self.a.shape[0]))

    @property
    def rate_ids(self) -> tuple[int, ...]:
        return self.ids

    @property
    def rate_dim(self) -> int:
        return self.a.shape[0]

    @property
    def rate_dt(self) -> float:
        return self.dt

    def rate_derivative(self, x: np.ndarray) -> np.ndarray:
        if x.ndim == 1:
            return self.a @ x + self.b
        return self.a @ x + self.b[:, None]

    def initial_rate_state(self, rng: np.random.Generator) -> np.ndarray:
        return rng.standard_normal(self.rate_dim)
